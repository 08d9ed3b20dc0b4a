#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gendetect/corpus.hpp"
#include "gendetect/features.hpp"

namespace gendetect {

// Per-document predictions: ids, optional probability rows, and argmax
// labels (ties resolved toward the earlier label-space entry).
class PredictionSet {
 public:
  PredictionSet(LabelSpace space, std::vector<std::string> ids, std::vector<int> labels);
  // Derives labels by argmax over probability rows.
  static PredictionSet from_probabilities(const LabelSpace& space, const FeatureMatrix& probs);

  const LabelSpace& space() const { return space_; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::span<const int> labels() const { return labels_; }
  bool has_probabilities() const { return probabilities_.has_value(); }
  const FeatureMatrix& probabilities() const { return *probabilities_; }
  std::size_t size() const { return ids_.size(); }

 private:
  LabelSpace space_;
  std::vector<std::string> ids_;
  std::vector<int> labels_;
  std::optional<FeatureMatrix> probabilities_;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  // A metric is undefined (reported as 0, flagged) when its denominator is
  // empty: no predicted-as-class rows for precision, no gold rows for recall.
  bool precision_defined = true;
  bool recall_defined = true;
};

struct EvalReport {
  double accuracy = 0.0;
  std::vector<std::vector<std::int64_t>> confusion;  // [gold][predicted]
  std::vector<ClassMetrics> per_class;
  double macro_f1 = 0.0;
  std::int64_t n = 0;
};

// Fraction of exact matches; rows matched by id, so row order is irrelevant.
double accuracy(const PredictionSet& preds, const Dataset& gold);
std::vector<std::vector<std::int64_t>> confusion_matrix(const PredictionSet& preds,
                                                        const Dataset& gold);
EvalReport evaluate(const PredictionSet& preds, const Dataset& gold);

struct NamedReport {
  std::string name;
  EvalReport report;
  std::optional<double> fold_stddev;
};

enum class ReportFormat { Text, Csv };

// Comparison table in input order; accuracies at 5 decimals.
std::string compare_report(std::span<const NamedReport> runs, ReportFormat format);

// Full report rendering used by the `evaluate` command.
std::string render_report(const EvalReport& report, const LabelSpace& space);

// Submission-style files: `Id,Class` with class names, and the parallel
// `Id,<class probability columns>` table.
void save_predictions(const PredictionSet& preds, const std::filesystem::path& path);
PredictionSet load_predictions(const std::filesystem::path& path, const LabelSpace& space);
void save_probabilities(const PredictionSet& preds, const std::filesystem::path& path);

}  // namespace gendetect
