#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gendetect/corpus.hpp"
#include "gendetect/features.hpp"
#include "gendetect/ngram_lm.hpp"

namespace gendetect {

struct TrainConfig {
  double learning_rate = 0.1;
  double l2_strength = 1e-3;
  int max_epochs = 2000;
  int batch_size = 0;  // 0 = full batch
  double tolerance = 1e-8;
  std::uint64_t seed = 0;
};

// Multinomial (softmax) logistic regression.
class LinearModel {
 public:
  LinearModel(LabelSpace space, std::vector<std::string> feature_names);

  std::size_t class_count() const { return space_.size(); }
  std::size_t feature_count() const { return feature_names_.size(); }
  const LabelSpace& space() const { return space_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  std::span<const double> weights() const { return weights_; }  // C x D row-major
  std::span<const double> bias() const { return bias_; }
  std::span<double> mutable_weights() { return weights_; }
  std::span<double> mutable_bias() { return bias_; }

  // Simplex vector of length C.
  std::vector<double> predict_proba(std::span<const double> x) const;
  std::vector<double> predict_proba(const FeatureVector& x) const;
  FeatureMatrix predict_proba_matrix(const FeatureMatrix& x) const;

  nlohmann::json to_json() const;
  static LinearModel from_json(const nlohmann::json& j);

 private:
  LabelSpace space_;
  std::vector<std::string> feature_names_;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

// Mean cross-entropy + (l2/2)||W||^2 and its gradient. The default kernel
// accumulates per fixed 256-row chunk and reduces chunk partials in index
// order, so the result does not depend on the thread count. The serial
// variant is the single-pass reference kept for tests and the benchmark.
double logreg_loss_grad(std::span<const double> x, std::span<const int> y, std::size_t n,
                        std::size_t d, std::size_t c, std::span<const double> weights,
                        std::span<const double> bias, double l2, std::span<double> grad_w,
                        std::span<double> grad_b);
double logreg_loss_grad_serial(std::span<const double> x, std::span<const int> y, std::size_t n,
                               std::size_t d, std::size_t c, std::span<const double> weights,
                               std::span<const double> bias, double l2, std::span<double> grad_w,
                               std::span<double> grad_b);

LinearModel train_logreg(const FeatureMatrix& x, std::span<const int> y, const LabelSpace& space,
                         const TrainConfig& config);

// Multinomial naive Bayes over token counts with add-k smoothing.
class NaiveBayesModel {
 public:
  static NaiveBayesModel train(const Dataset& train, double add_k);

  const LabelSpace& space() const { return space_; }
  double add_k() const { return add_k_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  std::span<const double> log_priors() const { return log_priors_; }

  // log P(token | class), smoothed; token id per vocab order, 0 = <unk>.
  double token_log_likelihood(std::size_t cls, std::size_t token_id) const;

  std::vector<double> predict_proba(const Document& doc) const;
  std::vector<double> predict_proba_tokens(std::span<const std::string> tokens) const;

  nlohmann::json to_json() const;
  static NaiveBayesModel from_json(const nlohmann::json& j);

 private:
  NaiveBayesModel(LabelSpace space, double add_k) : space_(std::move(space)), add_k_(add_k) {}

  LabelSpace space_;
  double add_k_;
  std::vector<std::string> vocab_;  // <unk> first, then tokens in byte order
  std::unordered_map<std::string, std::size_t> vocab_index_;
  std::vector<double> log_priors_;
  std::vector<std::vector<std::int64_t>> class_counts_;  // C x V
  std::vector<std::int64_t> class_totals_;
};

// Nearest-mean-likelihood detector: classifies by which class's mean
// log-likelihood the document's own score is closer to, with soft
// probabilities softmax(-distance / temperature). For two classes this is
// exactly sigma((d_H - d_M) / tau).
class MeanLikelihoodDetector {
 public:
  static MeanLikelihoodDetector fit(const Dataset& train, const NGramModel& lm);

  const LabelSpace& space() const { return space_; }
  std::span<const double> class_means() const { return class_means_; }
  double temperature() const { return temperature_; }
  const NGramModel& lm() const { return lm_; }

  std::vector<double> predict_proba(const Document& doc) const;
  std::vector<double> predict_proba_score(double mean_log_likelihood) const;

  nlohmann::json to_json() const;
  static MeanLikelihoodDetector from_json(const nlohmann::json& j);

 private:
  MeanLikelihoodDetector(LabelSpace space, NGramModel lm)
      : space_(std::move(space)), lm_(std::move(lm)) {}

  LabelSpace space_;
  NGramModel lm_;
  std::vector<double> class_means_;
  double temperature_ = 1.0;
};

// Numerically stable softmax; output sums to 1.
std::vector<double> softmax(std::span<const double> logits);

// Argmax with ties resolved toward the lower index (label-space order).
std::size_t argmax_index(std::span<const double> values);

}  // namespace gendetect
