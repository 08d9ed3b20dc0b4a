#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <cstdint>

namespace gendetect {

struct Document {
  std::string id;
  std::string text;
};

enum class TaskKind { Binary, Multiclass };

// The two label vocabularies of the shared task. Binary is {"H","M"};
// multiclass is the fixed 14-name generator list (order matters and is part
// of every file format that mentions classes).
class LabelSpace {
 public:
  static LabelSpace binary();
  static LabelSpace multiclass();

  TaskKind kind() const { return kind_; }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t index) const { return names_.at(index); }

  // Exact, case-sensitive match after whitespace trimming.
  std::optional<int> index_of(std::string_view name) const;

  bool operator==(const LabelSpace& other) const {
    return kind_ == other.kind_ && names_ == other.names_;
  }

 private:
  LabelSpace(TaskKind kind, std::vector<std::string> names);

  TaskKind kind_;
  std::vector<std::string> names_;
};

// Immutable ordered collection of documents with optional parallel labels.
// Construction validates all invariants (unique non-empty ids, non-blank
// texts, labels in range).
class Dataset {
 public:
  Dataset(LabelSpace space, std::vector<Document> documents);
  Dataset(LabelSpace space, std::vector<Document> documents, std::vector<int> labels);

  const LabelSpace& space() const { return space_; }
  bool labeled() const { return has_labels_; }
  std::size_t size() const { return documents_.size(); }
  const std::vector<Document>& documents() const { return documents_; }
  const Document& document(std::size_t i) const { return documents_.at(i); }
  std::span<const int> labels() const { return labels_; }
  int label(std::size_t i) const { return labels_.at(i); }
  const std::string& label_name(std::size_t i) const { return space_.name(static_cast<std::size_t>(labels_.at(i))); }

  // Index of a document by id, if present.
  std::optional<std::size_t> index_of(std::string_view id) const;

 private:
  void validate();

  LabelSpace space_;
  std::vector<Document> documents_;
  std::vector<int> labels_;
  bool has_labels_ = false;
  std::unordered_map<std::string, std::size_t> index_;
};

// Headered TSV: `id<TAB>text[<TAB>label]`, UTF-8, LF endings with or without
// a trailing newline. Tabs inside text are rejected.
Dataset load_dataset(const std::filesystem::path& path, const LabelSpace& space, bool has_labels);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

// Documents of a followed by documents of b. Spaces and label presence must
// match; ids must stay unique.
Dataset concat(const Dataset& a, const Dataset& b);

struct FoldAssignment {
  int k = 0;
  std::uint64_t seed = 0;
  // (id, fold) in dataset document order; the map serves lookups.
  std::vector<std::pair<std::string, int>> entries;
  std::unordered_map<std::string, int> fold_of;

  int fold(std::string_view id) const;
};

// Stratified fold assignment: per-class seeded shuffle, then round-robin over
// folds with a rotation pointer carried across classes so fold sizes stay
// within one of each other globally.
FoldAssignment assign_folds(const Dataset& dataset, int k, std::uint64_t seed);

// CSV `id,fold` with header; bit-exact reproducible given (k, seed).
void save_folds(const FoldAssignment& folds, const std::filesystem::path& path);
FoldAssignment load_folds(const std::filesystem::path& path);

// Training-split / held-out-fold views used by cross-validation.
Dataset without_fold(const Dataset& dataset, const FoldAssignment& folds, int fold);
Dataset only_fold(const Dataset& dataset, const FoldAssignment& folds, int fold);

}  // namespace gendetect
