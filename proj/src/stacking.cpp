#include "gendetect/stacking.hpp"

#include <algorithm>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "gendetect/errors.hpp"
#include "gendetect/parallel.hpp"
#include "gendetect/util.hpp"

namespace gendetect {

std::string to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::Logreg: return "logreg";
    case LearnerKind::NaiveBayes: return "naive_bayes";
    case LearnerKind::MeanLikelihood: return "mean_likelihood";
  }
  throw InputError("bad learner kind");
}

std::string to_string(FeatureConfig config) {
  switch (config) {
    case FeatureConfig::Surface: return "surface";
    case FeatureConfig::Lm: return "lm";
    case FeatureConfig::Both: return "both";
    case FeatureConfig::RawTokens: return "raw_tokens";
  }
  throw InputError("bad feature config");
}

LearnerKind learner_kind_from_string(std::string_view s) {
  if (s == "logreg") return LearnerKind::Logreg;
  if (s == "naive_bayes") return LearnerKind::NaiveBayes;
  if (s == "mean_likelihood") return LearnerKind::MeanLikelihood;
  throw InputError("unknown learner kind \"" + std::string(s) + "\"");
}

FeatureConfig feature_config_from_string(std::string_view s) {
  if (s == "surface") return FeatureConfig::Surface;
  if (s == "lm") return FeatureConfig::Lm;
  if (s == "both") return FeatureConfig::Both;
  if (s == "raw_tokens") return FeatureConfig::RawTokens;
  throw InputError("unknown feature config \"" + std::string(s) + "\"");
}

nlohmann::json BaseLearnerSpec::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["kind"] = gendetect::to_string(kind);
  j["features"] = gendetect::to_string(features);
  j["trainer"] = {{"learning_rate", trainer.learning_rate}, {"l2_strength", trainer.l2_strength},
                  {"max_epochs", trainer.max_epochs},       {"batch_size", trainer.batch_size},
                  {"tolerance", trainer.tolerance},         {"seed", trainer.seed}};
  j["nb_add_k"] = nb_add_k;
  j["lm"] = {{"order", lm.order},
             {"add_k", lm.add_k},
             {"min_count", lm.min_count},
             {"interpolation_weights", lm.interpolation_weights}};
  j["bin_edges"] = bin_edges;
  return j;
}

BaseLearnerSpec BaseLearnerSpec::from_json(const nlohmann::json& j) {
  BaseLearnerSpec spec;
  spec.name = j.at("name").get<std::string>();
  spec.kind = learner_kind_from_string(j.at("kind").get<std::string>());
  spec.features = feature_config_from_string(j.at("features").get<std::string>());
  const auto& t = j.at("trainer");
  spec.trainer.learning_rate = t.at("learning_rate").get<double>();
  spec.trainer.l2_strength = t.at("l2_strength").get<double>();
  spec.trainer.max_epochs = t.at("max_epochs").get<int>();
  spec.trainer.batch_size = t.at("batch_size").get<int>();
  spec.trainer.tolerance = t.at("tolerance").get<double>();
  spec.trainer.seed = t.at("seed").get<std::uint64_t>();
  spec.nb_add_k = j.at("nb_add_k").get<double>();
  const auto& lm = j.at("lm");
  spec.lm.order = lm.at("order").get<int>();
  spec.lm.add_k = lm.at("add_k").get<double>();
  spec.lm.min_count = lm.at("min_count").get<int>();
  spec.lm.interpolation_weights = lm.at("interpolation_weights").get<std::vector<double>>();
  spec.bin_edges = j.at("bin_edges").get<std::vector<int>>();
  return spec;
}

BaseLearnerSpec preset_learner(std::string_view preset_name) {
  BaseLearnerSpec spec;
  spec.name = std::string(preset_name);
  if (preset_name == "surface_lr") {
    spec.kind = LearnerKind::Logreg;
    spec.features = FeatureConfig::Surface;
  } else if (preset_name == "lm_lr") {
    spec.kind = LearnerKind::Logreg;
    spec.features = FeatureConfig::Lm;
  } else if (preset_name == "both_lr") {
    spec.kind = LearnerKind::Logreg;
    spec.features = FeatureConfig::Both;
  } else if (preset_name == "tokens_nb") {
    spec.kind = LearnerKind::NaiveBayes;
    spec.features = FeatureConfig::RawTokens;
  } else if (preset_name == "mean_ll") {
    spec.kind = LearnerKind::MeanLikelihood;
    spec.features = FeatureConfig::RawTokens;
  } else {
    throw InputError("unknown learner preset \"" + std::string(preset_name) + "\"");
  }
  return spec;
}

std::vector<BaseLearnerSpec> default_learner_roster() {
  return {preset_learner("surface_lr"), preset_learner("lm_lr"), preset_learner("both_lr"),
          preset_learner("tokens_nb"), preset_learner("mean_ll")};
}

namespace {

// Splits a labeled dataset into the "human" side (class named H or Human)
// and everything else, for the class-conditional LM pair.
std::pair<Dataset, Dataset> split_human_machine(const Dataset& train) {
  const LabelSpace& space = train.space();
  int human_index = -1;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (space.name(i) == "H" || space.name(i) == "Human") {
      human_index = static_cast<int>(i);
      break;
    }
  }
  if (human_index < 0) {
    throw InputError("label space has no H/Human class for LM features");
  }
  std::vector<Document> human_docs;
  std::vector<int> human_labels;
  std::vector<Document> machine_docs;
  std::vector<int> machine_labels;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train.label(i) == human_index) {
      human_docs.push_back(train.document(i));
      human_labels.push_back(train.label(i));
    } else {
      machine_docs.push_back(train.document(i));
      machine_labels.push_back(train.label(i));
    }
  }
  if (human_docs.empty()) throw TrainError("empty class \"" + space.name(static_cast<std::size_t>(human_index)) + "\"");
  if (machine_docs.empty()) throw TrainError("no machine-side documents for LM features");
  return {Dataset(space, std::move(human_docs), std::move(human_labels)),
          Dataset(space, std::move(machine_docs), std::move(machine_labels))};
}

class FeatureLogregLearner : public BaseLearner {
 public:
  FeatureLogregLearner(BaseLearnerSpec spec, LabelSpace space)
      : spec_(std::move(spec)), space_(std::move(space)) {}

  const std::string& name() const override { return spec_.name; }

  void fit(const Dataset& train) override {
    if (!train.labeled()) throw InputError("base learner requires labels");
    if (spec_.features != FeatureConfig::Surface) {
      auto [human, machine] = split_human_machine(train);
      human_lm_ = std::make_unique<NGramModel>(NGramModel::train(human, spec_.lm));
      machine_lm_ = std::make_unique<NGramModel>(NGramModel::train(machine, spec_.lm));
    }
    const FeatureMatrix features = extract(train);
    standardizer_ = fit_standardizer(features);
    const FeatureMatrix standardized = apply_standardizer(standardizer_, features);
    const std::span<const int> y = train.labels();
    model_ = std::make_unique<LinearModel>(
        train_logreg(standardized, y, space_, spec_.trainer));
  }

  FeatureMatrix predict_proba(const Dataset& docs) const override {
    if (!model_) throw TrainError("learner \"" + spec_.name + "\" is not fitted");
    const FeatureMatrix features = extract(docs);
    return model_->predict_proba_matrix(apply_standardizer(standardizer_, features));
  }

  nlohmann::json to_json() const override {
    if (!model_) throw TrainError("learner \"" + spec_.name + "\" is not fitted");
    nlohmann::json j;
    j["version"] = 1;
    j["kind"] = "base_learner";
    j["spec"] = spec_.to_json();
    nlohmann::json params;
    if (human_lm_) {
      params["human_lm"] = nlohmann::json::parse(human_lm_->to_json_string());
      params["machine_lm"] = nlohmann::json::parse(machine_lm_->to_json_string());
    }
    params["standardizer"] = {{"names", standardizer_.names},
                              {"mean", standardizer_.mean},
                              {"stddev", standardizer_.stddev}};
    params["model"] = model_->to_json();
    j["parameters"] = std::move(params);
    return j;
  }

  void restore(const nlohmann::json& params) {
    if (params.contains("human_lm")) {
      human_lm_ = std::make_unique<NGramModel>(
          NGramModel::from_json_string(params.at("human_lm").dump()));
      machine_lm_ = std::make_unique<NGramModel>(
          NGramModel::from_json_string(params.at("machine_lm").dump()));
    }
    const auto& s = params.at("standardizer");
    standardizer_.names = s.at("names").get<std::vector<std::string>>();
    standardizer_.mean = s.at("mean").get<std::vector<double>>();
    standardizer_.stddev = s.at("stddev").get<std::vector<double>>();
    model_ = std::make_unique<LinearModel>(LinearModel::from_json(params.at("model")));
  }

 private:
  FeatureMatrix extract(const Dataset& docs) const {
    switch (spec_.features) {
      case FeatureConfig::Surface:
        return surface_feature_matrix(docs);
      case FeatureConfig::Lm:
        return lm_feature_matrix(docs, *human_lm_, *machine_lm_, spec_.bin_edges);
      case FeatureConfig::Both:
        return FeatureMatrix::hconcat(
            surface_feature_matrix(docs),
            lm_feature_matrix(docs, *human_lm_, *machine_lm_, spec_.bin_edges));
      case FeatureConfig::RawTokens:
        break;
    }
    throw InputError("logreg learner cannot consume raw tokens");
  }

  BaseLearnerSpec spec_;
  LabelSpace space_;
  std::unique_ptr<NGramModel> human_lm_;
  std::unique_ptr<NGramModel> machine_lm_;
  Standardizer standardizer_;
  std::unique_ptr<LinearModel> model_;
};

class NaiveBayesLearner : public BaseLearner {
 public:
  NaiveBayesLearner(BaseLearnerSpec spec, LabelSpace space)
      : spec_(std::move(spec)), space_(std::move(space)) {}

  const std::string& name() const override { return spec_.name; }

  void fit(const Dataset& train) override {
    model_ = std::make_unique<NaiveBayesModel>(NaiveBayesModel::train(train, spec_.nb_add_k));
  }

  FeatureMatrix predict_proba(const Dataset& docs) const override {
    if (!model_) throw TrainError("learner \"" + spec_.name + "\" is not fitted");
    FeatureMatrix out(space_.names());
    std::vector<std::string> ids;
    ids.reserve(docs.size());
    for (const Document& doc : docs.documents()) ids.push_back(doc.id);
    out.resize_rows(std::move(ids));
    parallel::for_each_index(docs.size(), [&](std::size_t i) {
      out.set_row(i, model_->predict_proba(docs.document(i)));
    });
    return out;
  }

  nlohmann::json to_json() const override {
    if (!model_) throw TrainError("learner \"" + spec_.name + "\" is not fitted");
    nlohmann::json j;
    j["version"] = 1;
    j["kind"] = "base_learner";
    j["spec"] = spec_.to_json();
    j["parameters"] = {{"model", model_->to_json()}};
    return j;
  }

  void restore(const nlohmann::json& params) {
    model_ = std::make_unique<NaiveBayesModel>(NaiveBayesModel::from_json(params.at("model")));
  }

 private:
  BaseLearnerSpec spec_;
  LabelSpace space_;
  std::unique_ptr<NaiveBayesModel> model_;
};

class MeanLikelihoodLearner : public BaseLearner {
 public:
  MeanLikelihoodLearner(BaseLearnerSpec spec, LabelSpace space)
      : spec_(std::move(spec)), space_(std::move(space)) {}

  const std::string& name() const override { return spec_.name; }

  void fit(const Dataset& train) override {
    // The scoring LM is fit on the whole training split; the class means
    // then summarize per-class likelihood under that one model.
    const NGramModel lm = NGramModel::train(train, spec_.lm);
    detector_ = std::make_unique<MeanLikelihoodDetector>(MeanLikelihoodDetector::fit(train, lm));
  }

  FeatureMatrix predict_proba(const Dataset& docs) const override {
    if (!detector_) throw TrainError("learner \"" + spec_.name + "\" is not fitted");
    FeatureMatrix out(space_.names());
    std::vector<std::string> ids;
    ids.reserve(docs.size());
    for (const Document& doc : docs.documents()) ids.push_back(doc.id);
    out.resize_rows(std::move(ids));
    parallel::for_each_index(docs.size(), [&](std::size_t i) {
      out.set_row(i, detector_->predict_proba(docs.document(i)));
    });
    return out;
  }

  nlohmann::json to_json() const override {
    if (!detector_) throw TrainError("learner \"" + spec_.name + "\" is not fitted");
    nlohmann::json j;
    j["version"] = 1;
    j["kind"] = "base_learner";
    j["spec"] = spec_.to_json();
    j["parameters"] = {{"model", detector_->to_json()}};
    return j;
  }

  void restore(const nlohmann::json& params) {
    detector_ = std::make_unique<MeanLikelihoodDetector>(
        MeanLikelihoodDetector::from_json(params.at("model")));
  }

 private:
  BaseLearnerSpec spec_;
  LabelSpace space_;
  std::unique_ptr<MeanLikelihoodDetector> detector_;
};

}  // namespace

std::unique_ptr<BaseLearner> make_learner(const BaseLearnerSpec& spec, const LabelSpace& space) {
  switch (spec.kind) {
    case LearnerKind::Logreg:
      return std::make_unique<FeatureLogregLearner>(spec, space);
    case LearnerKind::NaiveBayes:
      return std::make_unique<NaiveBayesLearner>(spec, space);
    case LearnerKind::MeanLikelihood:
      return std::make_unique<MeanLikelihoodLearner>(spec, space);
  }
  throw InputError("bad learner kind");
}

std::unique_ptr<BaseLearner> learner_from_json(const nlohmann::json& j) {
  if (!j.contains("version") || j.at("version").get<int>() != 1 ||
      j.at("kind").get<std::string>() != "base_learner") {
    throw InputError("not a version-1 base learner file");
  }
  const BaseLearnerSpec spec = BaseLearnerSpec::from_json(j.at("spec"));
  const auto& params = j.at("parameters");

  // The label space is recorded inside the wrapped model.
  const auto& inner_space = params.at("model").at("label_space");
  const LabelSpace model_space = inner_space.at("kind").get<std::string>() == "binary"
                                     ? LabelSpace::binary()
                                     : LabelSpace::multiclass();

  switch (spec.kind) {
    case LearnerKind::Logreg: {
      auto learner = std::make_unique<FeatureLogregLearner>(spec, model_space);
      learner->restore(params);
      return learner;
    }
    case LearnerKind::NaiveBayes: {
      auto learner = std::make_unique<NaiveBayesLearner>(spec, model_space);
      learner->restore(params);
      return learner;
    }
    case LearnerKind::MeanLikelihood: {
      auto learner = std::make_unique<MeanLikelihoodLearner>(spec, model_space);
      learner->restore(params);
      return learner;
    }
  }
  throw InputError("bad learner kind");
}

namespace {

void check_fold_coverage(const Dataset& train, const FoldAssignment& folds) {
  if (folds.k < 1) throw InputError("fold assignment is empty");
  std::vector<std::int64_t> sizes(static_cast<std::size_t>(folds.k), 0);
  for (const Document& doc : train.documents()) {
    const auto it = folds.fold_of.find(doc.id);
    if (it == folds.fold_of.end()) {
      throw InputError("fold mismatch: document \"" + doc.id + "\" has no fold");
    }
    if (it->second < 0 || it->second >= folds.k) {
      throw InputError("fold mismatch: fold index out of range for \"" + doc.id + "\"");
    }
    ++sizes[static_cast<std::size_t>(it->second)];
  }
  if (folds.fold_of.size() != train.size()) {
    throw InputError("fold mismatch: assignment covers " + std::to_string(folds.fold_of.size()) +
                     " ids, dataset has " + std::to_string(train.size()));
  }
  for (int f = 0; f < folds.k; ++f) {
    if (sizes[static_cast<std::size_t>(f)] == 0) {
      throw InputError("fold mismatch: fold " + std::to_string(f) + " is empty");
    }
  }
}

}  // namespace

CvResult run_cv(const LearnerFactory& factory, const Dataset& train, const FoldAssignment& folds) {
  check_fold_coverage(train, folds);

  CvResult result;
  result.oof_block = FeatureMatrix(train.space().names());
  std::vector<std::string> ids;
  ids.reserve(train.size());
  for (const Document& doc : train.documents()) ids.push_back(doc.id);
  result.oof_block.resize_rows(std::move(ids));

  for (int f = 0; f < folds.k; ++f) {
    const Dataset fit_split = without_fold(train, folds, f);
    const Dataset held_out = only_fold(train, folds, f);
    std::unique_ptr<BaseLearner> learner = factory();
    try {
      learner->fit(fit_split);
    } catch (const TrainError& e) {
      throw TrainError("fold " + std::to_string(f) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError("fold " + std::to_string(f) + ": " + e.what());
    }
    const FeatureMatrix fold_probs = learner->predict_proba(held_out);
    for (std::size_t r = 0; r < fold_probs.rows(); ++r) {
      const auto row_index = train.index_of(fold_probs.ids()[r]);
      if (!row_index) {
        throw InputError("fold prediction for unknown id \"" + fold_probs.ids()[r] + "\"");
      }
      result.oof_block.set_row(*row_index, fold_probs.row(r));
    }
    result.fold_models.push_back(std::move(learner));
  }
  return result;
}

CvResult run_cv(const BaseLearnerSpec& spec, const Dataset& train, const FoldAssignment& folds) {
  return run_cv([&]() { return make_learner(spec, train.space()); }, train, folds);
}

FeatureMatrix average_test_predictions(std::span<const std::unique_ptr<BaseLearner>> fold_models,
                                       const Dataset& test) {
  if (fold_models.empty()) throw InputError("no fold models to average");
  FeatureMatrix sum = fold_models[0]->predict_proba(test);
  std::vector<double> acc(sum.values());
  for (std::size_t m = 1; m < fold_models.size(); ++m) {
    const FeatureMatrix next = fold_models[m]->predict_proba(test);
    if (next.names() != sum.names() || next.ids() != sum.ids()) {
      throw InputError("fold model outputs have mismatched shapes");
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += next.values()[i];
  }
  const double inv = 1.0 / static_cast<double>(fold_models.size());
  for (double& v : acc) v *= inv;

  FeatureMatrix out(sum.names());
  out.resize_rows(sum.ids());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    out.set_row(r, std::span<const double>(acc.data() + r * out.cols(), out.cols()));
  }
  return out;
}

namespace {

FeatureMatrix rename_block(const FeatureMatrix& block, const std::string& learner_name) {
  std::vector<std::string> names;
  names.reserve(block.cols());
  for (const auto& cls : block.names()) names.push_back(learner_name + "." + cls);
  FeatureMatrix out(std::move(names));
  out.resize_rows(block.ids());
  for (std::size_t r = 0; r < block.rows(); ++r) out.set_row(r, block.row(r));
  return out;
}

}  // namespace

LinearModel train_meta(const OofMatrix& oof, std::span<const int> y, const TrainConfig& config) {
  // Probability columns are already bounded; no re-standardization.
  // The label space of the meta model comes from the learner columns.
  if (oof.columns.rows() != y.size()) {
    throw InputError("OOF rows do not align with labels");
  }
  if (oof.learner_names.empty() || oof.columns.cols() % oof.learner_names.size() != 0) {
    throw InputError("OOF matrix has malformed learner blocks");
  }
  const std::size_t c = oof.columns.cols() / oof.learner_names.size();
  LabelSpace space = LabelSpace::binary();
  if (c == LabelSpace::multiclass().size()) {
    space = LabelSpace::multiclass();
  } else if (c != 2) {
    throw InputError("OOF block width " + std::to_string(c) + " matches no label space");
  }
  return train_logreg(oof.columns, y, space, config);
}

EnsembleModel train_ensemble(const std::vector<BaseLearnerSpec>& specs, const Dataset& train,
                             int k, std::uint64_t fold_seed, const TrainConfig& meta_config) {
  return train_ensemble(specs, train, assign_folds(train, k, fold_seed), meta_config);
}

EnsembleModel train_ensemble(const std::vector<BaseLearnerSpec>& specs, const Dataset& train,
                             const FoldAssignment& folds, const TrainConfig& meta_config) {
  if (specs.empty()) throw InputError("ensemble needs at least one base learner");
  {
    std::unordered_set<std::string> names;
    for (const auto& spec : specs) {
      if (!names.insert(spec.name).second) {
        throw InputError("duplicate learner name \"" + spec.name + "\"");
      }
    }
  }
  if (!train.labeled()) throw InputError("ensemble training requires labels");

  OofMatrix oof;
  oof.k = folds.k;
  oof.fold_seed = folds.seed;
  std::vector<std::vector<std::unique_ptr<BaseLearner>>> fold_models;
  bool first = true;
  for (const auto& spec : specs) {
    CvResult cv = run_cv(spec, train, folds);
    const FeatureMatrix renamed = rename_block(cv.oof_block, spec.name);
    oof.columns = first ? renamed : FeatureMatrix::hconcat(oof.columns, renamed);
    first = false;
    oof.learner_names.push_back(spec.name);
    fold_models.push_back(std::move(cv.fold_models));
  }

  LinearModel meta = train_meta(oof, train.labels(), meta_config);
  return EnsembleModel{train.space(), specs,          std::move(fold_models),
                       std::move(meta), folds,          std::move(oof)};
}

PredictionSet ensemble_predict(const EnsembleModel& ensemble, const Dataset& test) {
  FeatureMatrix stacked;
  bool first = true;
  for (std::size_t l = 0; l < ensemble.specs.size(); ++l) {
    const FeatureMatrix averaged = average_test_predictions(
        std::span<const std::unique_ptr<BaseLearner>>(ensemble.fold_models[l]), test);
    const FeatureMatrix renamed = rename_block(averaged, ensemble.specs[l].name);
    stacked = first ? renamed : FeatureMatrix::hconcat(stacked, renamed);
    first = false;
  }
  const FeatureMatrix probs = ensemble.meta.predict_proba_matrix(stacked);
  return PredictionSet::from_probabilities(ensemble.space, probs);
}

std::unique_ptr<BaseLearner> train_single(const BaseLearnerSpec& spec, const Dataset& train) {
  std::unique_ptr<BaseLearner> learner = make_learner(spec, train.space());
  learner->fit(train);
  return learner;
}

PredictionSet predict_single(const BaseLearner& model, const LabelSpace& space,
                             const Dataset& test) {
  return PredictionSet::from_probabilities(space, model.predict_proba(test));
}

void save_oof(const OofMatrix& oof, const std::filesystem::path& path) {
  save_feature_matrix(oof.columns, path);
}

}  // namespace gendetect
