#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gendetect/classifiers.hpp"
#include "gendetect/corpus.hpp"
#include "gendetect/eval.hpp"
#include "gendetect/features.hpp"
#include "gendetect/ngram_lm.hpp"

namespace gendetect {

enum class LearnerKind { Logreg, NaiveBayes, MeanLikelihood };
enum class FeatureConfig { Surface, Lm, Both, RawTokens };

std::string to_string(LearnerKind kind);
std::string to_string(FeatureConfig config);
LearnerKind learner_kind_from_string(std::string_view s);
FeatureConfig feature_config_from_string(std::string_view s);

struct BaseLearnerSpec {
  std::string name;
  LearnerKind kind = LearnerKind::Logreg;
  FeatureConfig features = FeatureConfig::Surface;
  TrainConfig trainer;                        // logreg learners
  double nb_add_k = 1.0;                      // naive Bayes
  LmConfig lm;                                // class-conditional / detector LMs
  std::vector<int> bin_edges = {10, 100, 1000};

  nlohmann::json to_json() const;
  static BaseLearnerSpec from_json(const nlohmann::json& j);
};

// The five stock specs (logreg over surface / LM / both features, token
// naive Bayes, mean-likelihood detector) standing in for the paper-style
// base model roster.
std::vector<BaseLearnerSpec> default_learner_roster();
BaseLearnerSpec preset_learner(std::string_view preset_name);

// A fold-local trainable unit: everything it fits (LMs, standardizer,
// classifier) comes from the dataset passed to fit(), nothing else.
class BaseLearner {
 public:
  virtual ~BaseLearner() = default;
  virtual const std::string& name() const = 0;
  virtual void fit(const Dataset& train) = 0;
  // One row per document; columns are the label-space class names.
  virtual FeatureMatrix predict_proba(const Dataset& docs) const = 0;
  // Deterministic parameter bundle; identical training data => identical bytes.
  virtual nlohmann::json to_json() const = 0;
};

std::unique_ptr<BaseLearner> make_learner(const BaseLearnerSpec& spec, const LabelSpace& space);
std::unique_ptr<BaseLearner> learner_from_json(const nlohmann::json& j);

// Out-of-fold prediction table: one row per training document, one block of
// C probability columns per base learner (named `<learner>.<class>`).
struct OofMatrix {
  FeatureMatrix columns;
  std::vector<std::string> learner_names;
  int k = 0;
  std::uint64_t fold_seed = 0;
};

void save_oof(const OofMatrix& oof, const std::filesystem::path& path);

struct CvResult {
  FeatureMatrix oof_block;  // ids in training order, columns = class names
  std::vector<std::unique_ptr<BaseLearner>> fold_models;
};

using LearnerFactory = std::function<std::unique_ptr<BaseLearner>()>;

// Fits one model per fold on the complement split and predicts the held-out
// fold; the assembled block covers every training row exactly once.
CvResult run_cv(const LearnerFactory& factory, const Dataset& train, const FoldAssignment& folds);
CvResult run_cv(const BaseLearnerSpec& spec, const Dataset& train, const FoldAssignment& folds);

// Arithmetic mean of the k fold models' probability rows per document.
FeatureMatrix average_test_predictions(std::span<const std::unique_ptr<BaseLearner>> fold_models,
                                       const Dataset& test);

// Logistic-regression meta-model over the stacked probability columns.
LinearModel train_meta(const OofMatrix& oof, std::span<const int> y, const TrainConfig& config);

struct EnsembleModel {
  LabelSpace space;
  std::vector<BaseLearnerSpec> specs;
  std::vector<std::vector<std::unique_ptr<BaseLearner>>> fold_models;  // [learner][fold]
  LinearModel meta;
  FoldAssignment folds;
  OofMatrix oof;
};

EnsembleModel train_ensemble(const std::vector<BaseLearnerSpec>& specs, const Dataset& train,
                             int k, std::uint64_t fold_seed, const TrainConfig& meta_config);
EnsembleModel train_ensemble(const std::vector<BaseLearnerSpec>& specs, const Dataset& train,
                             const FoldAssignment& folds, const TrainConfig& meta_config);

PredictionSet ensemble_predict(const EnsembleModel& ensemble, const Dataset& test);

// The no-cross-validation path used for the multiclass task.
std::unique_ptr<BaseLearner> train_single(const BaseLearnerSpec& spec, const Dataset& train);
PredictionSet predict_single(const BaseLearner& model, const LabelSpace& space,
                             const Dataset& test);

}  // namespace gendetect
