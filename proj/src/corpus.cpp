#include "gendetect/corpus.hpp"

#include <algorithm>
#include <numeric>

#include "gendetect/errors.hpp"
#include "gendetect/rng.hpp"
#include "gendetect/text.hpp"
#include "gendetect/util.hpp"

namespace gendetect {

LabelSpace::LabelSpace(TaskKind kind, std::vector<std::string> names)
    : kind_(kind), names_(std::move(names)) {}

LabelSpace LabelSpace::binary() { return LabelSpace(TaskKind::Binary, {"H", "M"}); }

LabelSpace LabelSpace::multiclass() {
  return LabelSpace(TaskKind::Multiclass,
                    {"M2M-100", "Human", "OPUS-MT", "M-BART50", "ruGPT3-Medium", "ruGPT3-Small",
                     "mT5-Large", "ruGPT3-Large", "ruT5-Base-Multitask", "mT5-Small", "ruT5-Base",
                     "ruGPT2-Large", "M-BART", "ruT5-Large"});
}

std::optional<int> LabelSpace::index_of(std::string_view name) const {
  const std::string_view trimmed = text::trim(name);
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == trimmed) return static_cast<int>(i);
  }
  return std::nullopt;
}

Dataset::Dataset(LabelSpace space, std::vector<Document> documents)
    : space_(std::move(space)), documents_(std::move(documents)), has_labels_(false) {
  validate();
}

Dataset::Dataset(LabelSpace space, std::vector<Document> documents, std::vector<int> labels)
    : space_(std::move(space)),
      documents_(std::move(documents)),
      labels_(std::move(labels)),
      has_labels_(true) {
  if (labels_.size() != documents_.size()) {
    throw InputError("labels length " + std::to_string(labels_.size()) +
                     " does not match document count " + std::to_string(documents_.size()));
  }
  validate();
}

void Dataset::validate() {
  auto& index = index_;
  index.clear();
  index.reserve(documents_.size());
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    const Document& doc = documents_[i];
    if (doc.id.empty()) throw InputError("empty document id at row " + std::to_string(i + 1));
    if (!text::is_valid_utf8(doc.text)) {
      throw InputError("document \"" + doc.id + "\" is not valid UTF-8");
    }
    if (text::trim(doc.text).empty()) {
      throw InputError("empty text for document \"" + doc.id + "\"");
    }
    if (!index.emplace(doc.id, i).second) {
      throw InputError("duplicate document id \"" + doc.id + "\"");
    }
  }
  for (int label : labels_) {
    if (label < 0 || static_cast<std::size_t>(label) >= space_.size()) {
      throw InputError("label index " + std::to_string(label) + " out of range");
    }
  }
}

std::optional<std::size_t> Dataset::index_of(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

constexpr std::string_view kHeaderUnlabeled = "id\ttext";
constexpr std::string_view kHeaderLabeled = "id\ttext\tlabel";

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, const LabelSpace& space, bool has_labels) {
  const std::string content = read_file(path);
  if (!text::is_valid_utf8(content)) {
    throw InputError("file is not valid UTF-8: " + path.string());
  }
  const std::vector<std::string> lines = split_lines(content);
  if (lines.empty()) {
    throw InputError("missing header line in " + path.string());
  }
  const std::string_view expected_header = has_labels ? kHeaderLabeled : kHeaderUnlabeled;
  if (lines[0] != expected_header) {
    throw InputError("missing column: expected header \"" + std::string(expected_header) +
                     "\", got \"" + lines[0] + "\" in " + path.string());
  }
  const std::size_t expected_fields = has_labels ? 3 : 2;

  std::vector<Document> documents;
  std::vector<int> labels;
  documents.reserve(lines.size() - 1);
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::vector<std::string> fields = split(lines[row], '\t');
    if (fields.size() != expected_fields) {
      throw InputError("row " + std::to_string(row + 1) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(expected_fields) + " (tabs inside text are not supported)");
    }
    Document doc{fields[0], fields[1]};
    if (text::trim(doc.text).empty()) {
      throw InputError("empty text for document \"" + doc.id + "\" at row " +
                       std::to_string(row + 1));
    }
    if (has_labels) {
      const auto idx = space.index_of(fields[2]);
      if (!idx) {
        throw InputError("unknown label \"" + fields[2] + "\" at row " + std::to_string(row + 1));
      }
      labels.push_back(*idx);
    }
    documents.push_back(std::move(doc));
  }
  if (has_labels) return Dataset(space, std::move(documents), std::move(labels));
  return Dataset(space, std::move(documents));
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::string out;
  out += dataset.labeled() ? kHeaderLabeled : kHeaderUnlabeled;
  out += '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Document& doc = dataset.document(i);
    if (doc.id.find('\t') != std::string::npos || doc.text.find('\t') != std::string::npos) {
      throw InputError("document \"" + doc.id + "\" contains a tab and cannot be written as TSV");
    }
    out += doc.id;
    out += '\t';
    out += doc.text;
    if (dataset.labeled()) {
      out += '\t';
      out += dataset.label_name(i);
    }
    out += '\n';
  }
  write_file(path, out);
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (!(a.space() == b.space())) {
    throw InputError("label space mismatch in concat");
  }
  if (a.labeled() != b.labeled()) {
    throw InputError("label space mismatch in concat: one dataset is labeled, the other is not");
  }
  std::vector<Document> documents;
  documents.reserve(a.size() + b.size());
  documents.insert(documents.end(), a.documents().begin(), a.documents().end());
  documents.insert(documents.end(), b.documents().begin(), b.documents().end());
  if (a.labeled()) {
    std::vector<int> labels;
    labels.reserve(a.size() + b.size());
    labels.insert(labels.end(), a.labels().begin(), a.labels().end());
    labels.insert(labels.end(), b.labels().begin(), b.labels().end());
    return Dataset(a.space(), std::move(documents), std::move(labels));
  }
  return Dataset(a.space(), std::move(documents));
}

int FoldAssignment::fold(std::string_view id) const {
  const auto it = fold_of.find(std::string(id));
  if (it == fold_of.end()) {
    throw InputError("document id \"" + std::string(id) + "\" has no fold assignment");
  }
  return it->second;
}

FoldAssignment assign_folds(const Dataset& dataset, int k, std::uint64_t seed) {
  if (k < 2) throw InputError("fold count must be at least 2, got " + std::to_string(k));
  if (!dataset.labeled()) throw InputError("fold assignment requires labels");
  if (dataset.size() < static_cast<std::size_t>(k)) {
    throw InputError("too few documents: " + std::to_string(dataset.size()) + " < k = " +
                     std::to_string(k));
  }

  // Row indices grouped by class, in class order.
  std::vector<std::vector<std::size_t>> by_class(dataset.space().size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    by_class[static_cast<std::size_t>(dataset.label(i))].push_back(i);
  }

  FoldAssignment folds;
  folds.k = k;
  folds.seed = seed;
  std::vector<int> fold_by_row(dataset.size(), 0);

  Rng rng(seed);
  int next_fold = 0;  // rotation pointer carried across classes
  for (auto& rows : by_class) {
    rng.shuffle(rows);
    for (std::size_t row : rows) {
      fold_by_row[row] = next_fold;
      next_fold = (next_fold + 1) % k;
    }
  }

  folds.entries.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    folds.entries.emplace_back(dataset.document(i).id, fold_by_row[i]);
    folds.fold_of.emplace(dataset.document(i).id, fold_by_row[i]);
  }
  return folds;
}

void save_folds(const FoldAssignment& folds, const std::filesystem::path& path) {
  std::string out = "id,fold\n";
  for (const auto& [id, fold] : folds.entries) {
    check_csv_field(id, "document id");
    out += id;
    out += ',';
    out += std::to_string(fold);
    out += '\n';
  }
  write_file(path, out);
}

FoldAssignment load_folds(const std::filesystem::path& path) {
  const std::vector<std::string> lines = split_lines(read_file(path));
  if (lines.empty() || lines[0] != "id,fold") {
    throw InputError("missing `id,fold` header in " + path.string());
  }
  FoldAssignment folds;
  int max_fold = -1;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::vector<std::string> fields = split(lines[row], ',');
    if (fields.size() != 2) {
      throw InputError("bad fold row " + std::to_string(row + 1) + " in " + path.string());
    }
    const int fold = static_cast<int>(parse_int(fields[1]));
    if (fold < 0) throw InputError("negative fold index at row " + std::to_string(row + 1));
    if (!folds.fold_of.emplace(fields[0], fold).second) {
      throw InputError("duplicate document id \"" + fields[0] + "\" in " + path.string());
    }
    folds.entries.emplace_back(fields[0], fold);
    max_fold = std::max(max_fold, fold);
  }
  folds.k = max_fold + 1;
  return folds;
}

namespace {

Dataset select_rows(const Dataset& dataset, const std::vector<std::size_t>& rows) {
  std::vector<Document> documents;
  documents.reserve(rows.size());
  for (std::size_t r : rows) documents.push_back(dataset.document(r));
  if (dataset.labeled()) {
    std::vector<int> labels;
    labels.reserve(rows.size());
    for (std::size_t r : rows) labels.push_back(dataset.label(r));
    return Dataset(dataset.space(), std::move(documents), std::move(labels));
  }
  return Dataset(dataset.space(), std::move(documents));
}

}  // namespace

Dataset without_fold(const Dataset& dataset, const FoldAssignment& folds, int fold) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (folds.fold(dataset.document(i).id) != fold) rows.push_back(i);
  }
  return select_rows(dataset, rows);
}

Dataset only_fold(const Dataset& dataset, const FoldAssignment& folds, int fold) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (folds.fold(dataset.document(i).id) == fold) rows.push_back(i);
  }
  return select_rows(dataset, rows);
}

}  // namespace gendetect
