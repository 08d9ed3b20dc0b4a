#include "gendetect/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "gendetect/errors.hpp"
#include "gendetect/parallel.hpp"
#include "gendetect/rng.hpp"
#include "gendetect/text.hpp"
#include "gendetect/util.hpp"

namespace gendetect {

std::vector<double> softmax(std::span<const double> logits) {
  double max_logit = logits[0];
  for (double v : logits) max_logit = std::max(max_logit, v);
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - max_logit);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::size_t argmax_index(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

namespace {

nlohmann::json label_space_to_json(const LabelSpace& space) {
  nlohmann::json j;
  j["kind"] = space.kind() == TaskKind::Binary ? "binary" : "multiclass";
  j["names"] = space.names();
  return j;
}

LabelSpace label_space_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  LabelSpace space = kind == "binary" ? LabelSpace::binary() : LabelSpace::multiclass();
  if (j.at("names").get<std::vector<std::string>>() != space.names()) {
    throw InputError("label space names in model file do not match the " + kind + " space");
  }
  return space;
}

}  // namespace

LinearModel::LinearModel(LabelSpace space, std::vector<std::string> feature_names)
    : space_(std::move(space)),
      feature_names_(std::move(feature_names)),
      weights_(space_.size() * feature_names_.size(), 0.0),
      bias_(space_.size(), 0.0) {}

std::vector<double> LinearModel::predict_proba(std::span<const double> x) const {
  const std::size_t c = class_count();
  const std::size_t d = feature_count();
  if (x.size() != d) {
    throw InputError("feature vector has " + std::to_string(x.size()) + " values, model expects " +
                     std::to_string(d));
  }
  std::vector<double> logits(c);
  for (std::size_t k = 0; k < c; ++k) {
    double z = bias_[k];
    const double* w = weights_.data() + k * d;
    for (std::size_t j = 0; j < d; ++j) z += w[j] * x[j];
    logits[k] = z;
  }
  return softmax(logits);
}

std::vector<double> LinearModel::predict_proba(const FeatureVector& x) const {
  if (x.names != feature_names_) throw InputError("feature names do not match the model");
  return predict_proba(std::span<const double>(x.values));
}

FeatureMatrix LinearModel::predict_proba_matrix(const FeatureMatrix& x) const {
  if (x.names() != feature_names_) throw InputError("feature names do not match the model");
  FeatureMatrix out(space_.names());
  out.resize_rows(x.ids());
  parallel::for_each_index(x.rows(), [&](std::size_t r) {
    const std::vector<double> probs = predict_proba(x.row(r));
    out.set_row(r, probs);
  });
  return out;
}

nlohmann::json LinearModel::to_json() const {
  nlohmann::json j;
  j["version"] = 1;
  j["kind"] = "logreg";
  j["label_space"] = label_space_to_json(space_);
  j["feature_names"] = feature_names_;
  nlohmann::json params;
  nlohmann::json rows = nlohmann::json::array();
  const std::size_t d = feature_count();
  for (std::size_t k = 0; k < class_count(); ++k) {
    rows.push_back(std::vector<double>(weights_.begin() + static_cast<std::ptrdiff_t>(k * d),
                                       weights_.begin() + static_cast<std::ptrdiff_t>((k + 1) * d)));
  }
  params["weights"] = std::move(rows);
  params["bias"] = bias_;
  j["parameters"] = std::move(params);
  return j;
}

LinearModel LinearModel::from_json(const nlohmann::json& j) {
  if (!j.contains("version") || j.at("version").get<int>() != 1 ||
      j.at("kind").get<std::string>() != "logreg") {
    throw InputError("not a version-1 logreg model file");
  }
  LinearModel model(label_space_from_json(j.at("label_space")),
                    j.at("feature_names").get<std::vector<std::string>>());
  const auto rows = j.at("parameters").at("weights");
  const auto bias = j.at("parameters").at("bias").get<std::vector<double>>();
  if (rows.size() != model.class_count() || bias.size() != model.class_count()) {
    throw InputError("logreg parameter shape mismatch");
  }
  const std::size_t d = model.feature_count();
  for (std::size_t k = 0; k < model.class_count(); ++k) {
    const auto row = rows[k].get<std::vector<double>>();
    if (row.size() != d) throw InputError("logreg parameter shape mismatch");
    std::copy(row.begin(), row.end(), model.weights_.begin() + static_cast<std::ptrdiff_t>(k * d));
  }
  model.bias_ = bias;
  return model;
}

namespace {

constexpr std::size_t kGradChunk = 256;

// Accumulates unnormalized CE loss and gradient for rows [begin, end).
double accumulate_rows(std::span<const double> x, std::span<const int> y, std::size_t d,
                       std::size_t c, std::span<const double> weights,
                       std::span<const double> bias, std::size_t begin, std::size_t end,
                       std::span<double> grad_w, std::span<double> grad_b) {
  double loss = 0.0;
  std::vector<double> logits(c);
  for (std::size_t i = begin; i < end; ++i) {
    const double* xi = x.data() + i * d;
    for (std::size_t k = 0; k < c; ++k) {
      double z = bias[k];
      const double* w = weights.data() + k * d;
      for (std::size_t j = 0; j < d; ++j) z += w[j] * xi[j];
      logits[k] = z;
    }
    const std::vector<double> p = softmax(logits);
    const std::size_t label = static_cast<std::size_t>(y[i]);
    loss -= std::log(p[label]);
    for (std::size_t k = 0; k < c; ++k) {
      const double delta = p[k] - (k == label ? 1.0 : 0.0);
      double* gw = grad_w.data() + k * d;
      for (std::size_t j = 0; j < d; ++j) gw[j] += delta * xi[j];
      grad_b[k] += delta;
    }
  }
  return loss;
}

double finalize_loss_grad(std::span<const double> weights, double l2, std::size_t n,
                          double raw_loss, std::span<double> grad_w, std::span<double> grad_b) {
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& g : grad_w) g *= inv_n;
  for (double& g : grad_b) g *= inv_n;
  double reg = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    grad_w[i] += l2 * weights[i];
    reg += weights[i] * weights[i];
  }
  return raw_loss * inv_n + 0.5 * l2 * reg;
}

}  // namespace

double logreg_loss_grad_serial(std::span<const double> x, std::span<const int> y, std::size_t n,
                               std::size_t d, std::size_t c, std::span<const double> weights,
                               std::span<const double> bias, double l2, std::span<double> grad_w,
                               std::span<double> grad_b) {
  std::fill(grad_w.begin(), grad_w.end(), 0.0);
  std::fill(grad_b.begin(), grad_b.end(), 0.0);
  const double raw = accumulate_rows(x, y, d, c, weights, bias, 0, n, grad_w, grad_b);
  return finalize_loss_grad(weights, l2, n, raw, grad_w, grad_b);
}

double logreg_loss_grad(std::span<const double> x, std::span<const int> y, std::size_t n,
                        std::size_t d, std::size_t c, std::span<const double> weights,
                        std::span<const double> bias, double l2, std::span<double> grad_w,
                        std::span<double> grad_b) {
  const std::size_t chunks = parallel::chunk_count(n, kGradChunk);
  const std::size_t block = c * d + c + 1;  // grad_w, grad_b, loss per chunk
  std::vector<double> partials(chunks * block, 0.0);
  parallel::for_each_chunk(n, kGradChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    double* base = partials.data() + chunk * block;
    std::span<double> gw(base, c * d);
    std::span<double> gb(base + c * d, c);
    base[c * d + c] = accumulate_rows(x, y, d, c, weights, bias, begin, end, gw, gb);
  });

  std::fill(grad_w.begin(), grad_w.end(), 0.0);
  std::fill(grad_b.begin(), grad_b.end(), 0.0);
  double raw = 0.0;
  for (std::size_t chunk = 0; chunk < chunks; ++chunk) {
    const double* base = partials.data() + chunk * block;
    for (std::size_t i = 0; i < c * d; ++i) grad_w[i] += base[i];
    for (std::size_t i = 0; i < c; ++i) grad_b[i] += base[c * d + i];
    raw += base[c * d + c];
  }
  return finalize_loss_grad(weights, l2, n, raw, grad_w, grad_b);
}

LinearModel train_logreg(const FeatureMatrix& x, std::span<const int> y, const LabelSpace& space,
                         const TrainConfig& config) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const std::size_t c = space.size();
  if (n == 0) throw TrainError("empty training matrix");
  if (y.size() != n) throw InputError("label count does not match row count");
  if (!(config.learning_rate > 0.0)) throw InputError("learning rate must be > 0");
  if (config.l2_strength < 0.0) throw InputError("l2 strength must be >= 0");
  if (config.max_epochs < 1) throw InputError("max_epochs must be >= 1");

  std::unordered_set<int> distinct(y.begin(), y.end());
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= c) {
      throw InputError("label index out of range: " + std::to_string(label));
    }
  }
  if (distinct.size() < 2) throw TrainError("training data contains a single class");

  LinearModel model(space, x.names());
  std::span<double> w = model.mutable_weights();
  std::span<double> b = model.mutable_bias();
  std::vector<double> grad_w(w.size());
  std::vector<double> grad_b(b.size());

  Rng rng(config.seed);
  std::vector<std::size_t> indices;
  std::vector<double> batch_x;
  std::vector<int> batch_y;

  double prev_loss = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    double loss = 0.0;
    if (config.batch_size <= 0 || static_cast<std::size_t>(config.batch_size) >= n) {
      loss = logreg_loss_grad(std::span<const double>(x.values()), y, n, d, c, w, b,
                              config.l2_strength, grad_w, grad_b);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= config.learning_rate * grad_w[i];
      for (std::size_t i = 0; i < b.size(); ++i) b[i] -= config.learning_rate * grad_b[i];
    } else {
      if (indices.empty()) {
        indices.resize(n);
        for (std::size_t i = 0; i < n; ++i) indices[i] = i;
      }
      rng.shuffle(indices);
      const std::size_t batch = static_cast<std::size_t>(config.batch_size);
      double epoch_loss = 0.0;
      std::size_t steps = 0;
      for (std::size_t start = 0; start < n; start += batch) {
        const std::size_t stop = std::min(start + batch, n);
        batch_x.clear();
        batch_y.clear();
        for (std::size_t i = start; i < stop; ++i) {
          const auto row = x.row(indices[i]);
          batch_x.insert(batch_x.end(), row.begin(), row.end());
          batch_y.push_back(y[indices[i]]);
        }
        const double batch_loss = logreg_loss_grad(
            std::span<const double>(batch_x), std::span<const int>(batch_y), stop - start, d, c, w,
            b, config.l2_strength, grad_w, grad_b);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= config.learning_rate * grad_w[i];
        for (std::size_t i = 0; i < b.size(); ++i) b[i] -= config.learning_rate * grad_b[i];
        epoch_loss += batch_loss;
        ++steps;
      }
      loss = epoch_loss / static_cast<double>(steps);
    }
    if (!std::isfinite(loss)) {
      throw TrainError("non-finite loss at epoch " + std::to_string(epoch) +
                       " (learning rate too large?)");
    }
    if (std::abs(prev_loss - loss) < config.tolerance) break;
    prev_loss = loss;
  }
  return model;
}

NaiveBayesModel NaiveBayesModel::train(const Dataset& train, double add_k) {
  if (!(add_k > 0.0)) throw InputError("add_k must be > 0");
  if (!train.labeled()) throw InputError("naive Bayes requires a labeled dataset");
  if (train.size() == 0) throw TrainError("empty corpus");

  NaiveBayesModel model(train.space(), add_k);
  const std::size_t c = model.space_.size();

  std::vector<std::vector<std::string>> token_docs;
  token_docs.reserve(train.size());
  std::unordered_map<std::string, std::int64_t> freq;
  for (const Document& doc : train.documents()) {
    token_docs.push_back(tokenize(doc.text));
    for (const auto& tok : token_docs.back()) ++freq[tok];
  }
  std::vector<std::string> kept;
  kept.reserve(freq.size());
  for (const auto& [tok, cnt] : freq) {
    (void)cnt;
    kept.push_back(tok);
  }
  std::sort(kept.begin(), kept.end());
  model.vocab_ = {"<unk>"};
  model.vocab_.insert(model.vocab_.end(), kept.begin(), kept.end());
  for (std::size_t i = 0; i < model.vocab_.size(); ++i) {
    model.vocab_index_.emplace(model.vocab_[i], i);
  }

  std::vector<std::int64_t> docs_per_class(c, 0);
  model.class_counts_.assign(c, std::vector<std::int64_t>(model.vocab_.size(), 0));
  model.class_totals_.assign(c, 0);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto cls = static_cast<std::size_t>(train.label(i));
    ++docs_per_class[cls];
    for (const auto& tok : token_docs[i]) {
      const auto it = model.vocab_index_.find(tok);
      ++model.class_counts_[cls][it->second];
      ++model.class_totals_[cls];
    }
  }
  model.log_priors_.resize(c);
  for (std::size_t k = 0; k < c; ++k) {
    if (docs_per_class[k] == 0) {
      throw TrainError("empty class \"" + model.space_.name(k) + "\"");
    }
    model.log_priors_[k] = std::log(static_cast<double>(docs_per_class[k]) /
                                    static_cast<double>(train.size()));
  }
  return model;
}

double NaiveBayesModel::token_log_likelihood(std::size_t cls, std::size_t token_id) const {
  const double v = static_cast<double>(vocab_.size());
  const double num = static_cast<double>(class_counts_[cls][token_id]) + add_k_;
  const double den = static_cast<double>(class_totals_[cls]) + add_k_ * v;
  return std::log(num / den);
}

std::vector<double> NaiveBayesModel::predict_proba(const Document& doc) const {
  const std::vector<std::string> tokens = tokenize(doc.text);
  return predict_proba_tokens(tokens);
}

std::vector<double> NaiveBayesModel::predict_proba_tokens(
    std::span<const std::string> tokens) const {
  const std::size_t c = space_.size();
  std::vector<double> scores(log_priors_.begin(), log_priors_.end());
  for (const auto& tok : tokens) {
    const auto it = vocab_index_.find(tok);
    const std::size_t id = it == vocab_index_.end() ? 0 : it->second;
    for (std::size_t k = 0; k < c; ++k) scores[k] += token_log_likelihood(k, id);
  }
  return softmax(scores);
}

nlohmann::json NaiveBayesModel::to_json() const {
  nlohmann::json j;
  j["version"] = 1;
  j["kind"] = "naive_bayes";
  j["label_space"] = label_space_to_json(space_);
  j["feature_names"] = nlohmann::json::array();  // consumes raw tokens
  nlohmann::json params;
  params["add_k"] = add_k_;
  params["vocab"] = vocab_;
  params["log_priors"] = log_priors_;
  nlohmann::json counts = nlohmann::json::array();
  for (const auto& row : class_counts_) {
    nlohmann::json sparse = nlohmann::json::array();
    for (std::size_t t = 0; t < row.size(); ++t) {
      if (row[t] != 0) sparse.push_back({t, row[t]});
    }
    counts.push_back(std::move(sparse));
  }
  params["counts"] = std::move(counts);
  j["parameters"] = std::move(params);
  return j;
}

NaiveBayesModel NaiveBayesModel::from_json(const nlohmann::json& j) {
  if (!j.contains("version") || j.at("version").get<int>() != 1 ||
      j.at("kind").get<std::string>() != "naive_bayes") {
    throw InputError("not a version-1 naive_bayes model file");
  }
  const auto& params = j.at("parameters");
  NaiveBayesModel model(label_space_from_json(j.at("label_space")),
                        params.at("add_k").get<double>());
  model.vocab_ = params.at("vocab").get<std::vector<std::string>>();
  for (std::size_t i = 0; i < model.vocab_.size(); ++i) {
    model.vocab_index_.emplace(model.vocab_[i], i);
  }
  model.log_priors_ = params.at("log_priors").get<std::vector<double>>();
  if (model.log_priors_.size() != model.space_.size()) {
    throw InputError("naive Bayes prior shape mismatch");
  }
  model.class_counts_.assign(model.space_.size(),
                             std::vector<std::int64_t>(model.vocab_.size(), 0));
  model.class_totals_.assign(model.space_.size(), 0);
  const auto& counts = params.at("counts");
  if (counts.size() != model.space_.size()) throw InputError("naive Bayes count shape mismatch");
  for (std::size_t k = 0; k < counts.size(); ++k) {
    for (const auto& pair : counts[k]) {
      const auto t = pair.at(0).get<std::size_t>();
      const auto cnt = pair.at(1).get<std::int64_t>();
      if (t >= model.vocab_.size()) throw InputError("naive Bayes token id out of range");
      model.class_counts_[k][t] = cnt;
      model.class_totals_[k] += cnt;
    }
  }
  return model;
}

MeanLikelihoodDetector MeanLikelihoodDetector::fit(const Dataset& train, const NGramModel& lm) {
  if (!train.labeled()) throw InputError("mean-likelihood detector requires a labeled dataset");
  if (train.size() == 0) throw TrainError("empty corpus");

  MeanLikelihoodDetector detector(train.space(), lm);
  const std::size_t c = detector.space_.size();
  std::vector<double> sums(c, 0.0);
  std::vector<std::int64_t> counts(c, 0);
  std::vector<double> scores(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    scores[i] = lm.mean_log_likelihood(train.document(i).text);
    sums[static_cast<std::size_t>(train.label(i))] += scores[i];
    ++counts[static_cast<std::size_t>(train.label(i))];
  }
  detector.class_means_.resize(c);
  for (std::size_t k = 0; k < c; ++k) {
    if (counts[k] == 0) throw TrainError("empty class \"" + detector.space_.name(k) + "\"");
    detector.class_means_[k] = sums[k] / static_cast<double>(counts[k]);
  }

  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= static_cast<double>(scores.size());
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  detector.temperature_ = std::max(std::sqrt(var / static_cast<double>(scores.size())), 1e-6);
  return detector;
}

std::vector<double> MeanLikelihoodDetector::predict_proba(const Document& doc) const {
  return predict_proba_score(lm_.mean_log_likelihood(doc.text));
}

std::vector<double> MeanLikelihoodDetector::predict_proba_score(double score) const {
  std::vector<double> logits(class_means_.size());
  for (std::size_t k = 0; k < class_means_.size(); ++k) {
    logits[k] = -std::abs(score - class_means_[k]) / temperature_;
  }
  return softmax(logits);
}

nlohmann::json MeanLikelihoodDetector::to_json() const {
  nlohmann::json j;
  j["version"] = 1;
  j["kind"] = "mean_likelihood";
  j["label_space"] = label_space_to_json(space_);
  j["feature_names"] = nlohmann::json::array();  // consumes raw text
  nlohmann::json params;
  params["class_means"] = class_means_;
  params["temperature"] = temperature_;
  params["lm"] = nlohmann::json::parse(lm_.to_json_string());
  j["parameters"] = std::move(params);
  return j;
}

MeanLikelihoodDetector MeanLikelihoodDetector::from_json(const nlohmann::json& j) {
  if (!j.contains("version") || j.at("version").get<int>() != 1 ||
      j.at("kind").get<std::string>() != "mean_likelihood") {
    throw InputError("not a version-1 mean_likelihood model file");
  }
  const auto& params = j.at("parameters");
  MeanLikelihoodDetector detector(label_space_from_json(j.at("label_space")),
                                  NGramModel::from_json_string(params.at("lm").dump()));
  detector.class_means_ = params.at("class_means").get<std::vector<double>>();
  detector.temperature_ = params.at("temperature").get<double>();
  if (detector.class_means_.size() != detector.space_.size()) {
    throw InputError("mean-likelihood parameter shape mismatch");
  }
  return detector;
}

}  // namespace gendetect
