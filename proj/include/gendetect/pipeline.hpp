#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gendetect/corpus.hpp"
#include "gendetect/ngram_lm.hpp"
#include "gendetect/stacking.hpp"

namespace gendetect {

// Effective settings of a pipeline run, read from a flat `key = value` file
// with command-line overrides applied on top. Relative paths resolve against
// the config file's directory.
struct RunConfig {
  std::string task = "binary";  // binary | multiclass
  std::string mode;             // stacked | single; default depends on task
  std::filesystem::path train_path;
  std::optional<std::filesystem::path> validation_path;
  std::optional<std::filesystem::path> test_path;
  std::filesystem::path output_dir;
  int k = 5;
  std::uint64_t seed = 42;
  int threads = 1;
  std::vector<std::string> learners;  // preset names
  LmConfig lm;
  std::vector<int> bin_edges = {10, 100, 1000};
  TrainConfig logreg;
  double nb_add_k = 1.0;
  TrainConfig meta;

  LabelSpace space() const;
  std::vector<BaseLearnerSpec> learner_specs() const;
  // Sorted `key = value` rendering of the effective settings; its FNV-1a
  // fingerprint is the run's config hash.
  std::string canonical_text() const;
};

using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

RunConfig parse_run_config(const std::filesystem::path& path, const ConfigOverrides& overrides);
RunConfig parse_run_config_text(std::string_view text, const std::filesystem::path& base_dir,
                                const ConfigOverrides& overrides);

LabelSpace space_for_task(std::string_view task);

struct SplitFoldsArgs {
  std::filesystem::path input;
  std::string task = "binary";
  int k = 5;
  std::uint64_t seed = 42;
  std::filesystem::path output;
};
void run_split_folds(const SplitFoldsArgs& args, std::ostream& out);

struct TrainLmArgs {
  std::filesystem::path input;
  std::string task = "binary";
  bool labeled = false;
  std::optional<std::string> filter_label;
  LmConfig lm;
  std::filesystem::path output;
};
void run_train_lm(const TrainLmArgs& args, std::ostream& out);

struct FeaturizeArgs {
  std::filesystem::path input;
  std::string task = "binary";
  bool labeled = false;
  std::string features = "surface";  // surface | lm | both
  std::optional<std::filesystem::path> human_lm;
  std::optional<std::filesystem::path> machine_lm;
  std::vector<int> bin_edges = {10, 100, 1000};
  std::filesystem::path output;
};
void run_featurize(const FeaturizeArgs& args, std::ostream& out);

struct TrainResult {
  std::filesystem::path manifest_path;
  std::filesystem::path run_log_path;
};
// Full training pipeline: optional concat, folds, per-learner CV, meta
// model; writes manifest, models, OOF CSV, and a run log. Partial outputs
// are removed on failure.
TrainResult run_train(const RunConfig& config, std::ostream& out);

struct PredictArgs {
  std::filesystem::path manifest;
  std::filesystem::path test;
  std::filesystem::path predictions_out;
  std::optional<std::filesystem::path> probabilities_out;
};
void run_predict(const PredictArgs& args, std::ostream& out);

struct EvaluateArgs {
  std::filesystem::path predictions;
  std::filesystem::path gold;
  std::string task = "binary";
  std::optional<std::filesystem::path> csv_out;
};
void run_evaluate(const EvaluateArgs& args, std::ostream& out);

struct ReportArgs {
  std::vector<std::pair<std::string, std::filesystem::path>> runs;  // name -> predictions CSV
  std::filesystem::path gold;
  std::string task = "binary";
  std::string format = "text";  // text | csv
};
void run_report(const ReportArgs& args, std::ostream& out);

struct VerifyArgs {
  std::string task = "binary";
  bool labeled = false;
  std::optional<std::filesystem::path> dataset;
  std::optional<std::filesystem::path> folds;
  std::optional<std::filesystem::path> oof;
  std::optional<std::filesystem::path> probabilities;
  std::optional<std::filesystem::path> predictions;
  std::optional<std::filesystem::path> model;
  std::optional<std::filesystem::path> manifest;
};
// Invariant checker over artifact files; throws InputError on any violation.
void run_verify(const VerifyArgs& args, std::ostream& out);

}  // namespace gendetect
