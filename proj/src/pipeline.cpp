#include "gendetect/pipeline.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>
#include <system_error>

#include <nlohmann/json.hpp>

#include "gendetect/classifiers.hpp"
#include "gendetect/errors.hpp"
#include "gendetect/eval.hpp"
#include "gendetect/features.hpp"
#include "gendetect/parallel.hpp"
#include "gendetect/rng.hpp"
#include "gendetect/text.hpp"
#include "gendetect/util.hpp"

namespace fs = std::filesystem;

namespace gendetect {

LabelSpace space_for_task(std::string_view task) {
  if (task == "binary") return LabelSpace::binary();
  if (task == "multiclass") return LabelSpace::multiclass();
  throw InputError("task must be `binary` or `multiclass`, got \"" + std::string(task) + "\"");
}

LabelSpace RunConfig::space() const { return space_for_task(task); }

std::vector<BaseLearnerSpec> RunConfig::learner_specs() const {
  std::vector<BaseLearnerSpec> specs;
  specs.reserve(learners.size());
  for (const auto& preset : learners) {
    BaseLearnerSpec spec = preset_learner(preset);
    spec.trainer = logreg;
    spec.nb_add_k = nb_add_k;
    spec.lm = lm;
    spec.bin_edges = bin_edges;
    specs.push_back(std::move(spec));
  }
  return specs;
}

namespace {

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string join_ints(const std::vector<int>& parts, char sep) {
  std::vector<std::string> s;
  s.reserve(parts.size());
  for (int v : parts) s.push_back(std::to_string(v));
  return join(s, sep);
}

std::vector<int> parse_int_list(std::string_view value) {
  std::vector<int> out;
  for (const auto& part : split(value, ',')) {
    out.push_back(static_cast<int>(parse_int(text::trim(part))));
  }
  return out;
}

}  // namespace

std::string RunConfig::canonical_text() const {
  // Only settings that determine artifact content participate: the output
  // directory and thread count are excluded (thread count must not change
  // any output bytes).
  std::map<std::string, std::string> kv;
  kv["task"] = task;
  kv["mode"] = mode;
  kv["train"] = train_path.generic_string();
  if (validation_path) kv["validation"] = validation_path->generic_string();
  if (test_path) kv["test"] = test_path->generic_string();
  kv["k"] = std::to_string(k);
  kv["seed"] = std::to_string(seed);
  kv["learners"] = join(learners, ',');
  kv["lm.order"] = std::to_string(lm.order);
  kv["lm.add_k"] = format_double(lm.add_k);
  kv["lm.min_count"] = std::to_string(lm.min_count);
  kv["lm.bins"] = join_ints(bin_edges, ',');
  kv["logreg.learning_rate"] = format_double(logreg.learning_rate);
  kv["logreg.l2"] = format_double(logreg.l2_strength);
  kv["logreg.max_epochs"] = std::to_string(logreg.max_epochs);
  kv["logreg.batch"] = std::to_string(logreg.batch_size);
  kv["logreg.tolerance"] = format_double(logreg.tolerance);
  kv["nb.add_k"] = format_double(nb_add_k);
  kv["meta.learning_rate"] = format_double(meta.learning_rate);
  kv["meta.l2"] = format_double(meta.l2_strength);
  kv["meta.max_epochs"] = std::to_string(meta.max_epochs);
  kv["meta.batch"] = std::to_string(meta.batch_size);
  kv["meta.tolerance"] = format_double(meta.tolerance);
  std::string out;
  for (const auto& [key, value] : kv) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

RunConfig parse_run_config(const fs::path& path, const ConfigOverrides& overrides) {
  return parse_run_config_text(read_file(path), path.parent_path(), overrides);
}

RunConfig parse_run_config_text(std::string_view content, const fs::path& base_dir,
                                const ConfigOverrides& overrides) {
  static const std::set<std::string> known_keys = {
      "task",          "mode",          "train",         "validation",
      "test",          "output",        "k",             "seed",
      "threads",       "learners",      "lm.order",      "lm.add_k",
      "lm.min_count",  "lm.bins",       "logreg.learning_rate",
      "logreg.l2",     "logreg.max_epochs", "logreg.batch", "logreg.tolerance",
      "nb.add_k",      "meta.learning_rate", "meta.l2",   "meta.max_epochs",
      "meta.batch",    "meta.tolerance"};

  std::map<std::string, std::string> kv;
  std::size_t line_no = 0;
  for (const auto& raw : split_lines(content)) {
    ++line_no;
    const std::string_view line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InputError("config line " + std::to_string(line_no) + " is not `key = value`");
    }
    const std::string key(text::trim(line.substr(0, eq)));
    const std::string value(text::trim(line.substr(eq + 1)));
    if (!known_keys.count(key)) {
      throw InputError("unknown config key \"" + key + "\" at line " + std::to_string(line_no));
    }
    kv[key] = value;
  }
  for (const auto& [key, value] : overrides) {
    if (!known_keys.count(key)) throw InputError("unknown config key \"" + key + "\"");
    kv[key] = value;
  }

  RunConfig config;
  const auto get = [&](const char* key) -> std::optional<std::string> {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  };
  const auto resolve = [&](const std::string& p) -> fs::path {
    const fs::path given(p);
    return given.is_absolute() || base_dir.empty() ? given : base_dir / given;
  };

  if (const auto v = get("task")) config.task = *v;
  (void)space_for_task(config.task);
  config.mode = config.task == "binary" ? "stacked" : "single";
  if (const auto v = get("mode")) config.mode = *v;
  if (config.mode != "stacked" && config.mode != "single") {
    throw InputError("mode must be `stacked` or `single`, got \"" + config.mode + "\"");
  }

  const auto train = get("train");
  if (!train) throw InputError("config key `train` is required");
  config.train_path = resolve(*train);
  if (const auto v = get("validation")) config.validation_path = resolve(*v);
  if (const auto v = get("test")) config.test_path = resolve(*v);
  const auto output = get("output");
  if (!output) throw InputError("config key `output` is required");
  config.output_dir = resolve(*output);

  if (const auto v = get("k")) config.k = static_cast<int>(parse_int(*v));
  if (const auto v = get("seed")) config.seed = static_cast<std::uint64_t>(parse_int(*v));
  if (const auto v = get("threads")) config.threads = static_cast<int>(parse_int(*v));
  if (const auto v = get("learners")) {
    config.learners.clear();
    for (const auto& part : split(*v, ',')) {
      config.learners.emplace_back(text::trim(part));
    }
  } else {
    config.learners = config.mode == "stacked"
                          ? std::vector<std::string>{"surface_lr", "lm_lr", "both_lr", "tokens_nb",
                                                     "mean_ll"}
                          : std::vector<std::string>{"tokens_nb"};
  }
  for (const auto& preset : config.learners) (void)preset_learner(preset);

  if (const auto v = get("lm.order")) config.lm.order = static_cast<int>(parse_int(*v));
  if (const auto v = get("lm.add_k")) config.lm.add_k = parse_double(*v);
  if (const auto v = get("lm.min_count")) config.lm.min_count = static_cast<int>(parse_int(*v));
  if (const auto v = get("lm.bins")) config.bin_edges = parse_int_list(*v);
  if (const auto v = get("logreg.learning_rate")) config.logreg.learning_rate = parse_double(*v);
  if (const auto v = get("logreg.l2")) config.logreg.l2_strength = parse_double(*v);
  if (const auto v = get("logreg.max_epochs")) config.logreg.max_epochs = static_cast<int>(parse_int(*v));
  if (const auto v = get("logreg.batch")) config.logreg.batch_size = static_cast<int>(parse_int(*v));
  if (const auto v = get("logreg.tolerance")) config.logreg.tolerance = parse_double(*v);
  if (const auto v = get("nb.add_k")) config.nb_add_k = parse_double(*v);
  if (const auto v = get("meta.learning_rate")) config.meta.learning_rate = parse_double(*v);
  if (const auto v = get("meta.l2")) config.meta.l2_strength = parse_double(*v);
  if (const auto v = get("meta.max_epochs")) config.meta.max_epochs = static_cast<int>(parse_int(*v));
  if (const auto v = get("meta.batch")) config.meta.batch_size = static_cast<int>(parse_int(*v));
  if (const auto v = get("meta.tolerance")) config.meta.tolerance = parse_double(*v);

  config.logreg.seed = config.seed;
  config.meta.seed = config.seed;

  // Validation.
  if (!fs::exists(config.train_path)) {
    throw InputError("train path does not exist: " + config.train_path.string());
  }
  if (config.validation_path && !fs::exists(*config.validation_path)) {
    throw InputError("validation path does not exist: " + config.validation_path->string());
  }
  if (config.test_path && !fs::exists(*config.test_path)) {
    throw InputError("test path does not exist: " + config.test_path->string());
  }
  if (config.mode == "stacked" && config.k < 2) {
    throw InputError("stacked runs need k >= 2, got " + std::to_string(config.k));
  }
  if (config.mode == "single" && config.learners.size() != 1) {
    throw InputError("single mode takes exactly one learner, got " +
                     std::to_string(config.learners.size()));
  }
  if (config.threads < 0) throw InputError("threads must be >= 0");
  for (std::size_t i = 0; i < config.bin_edges.size(); ++i) {
    if (config.bin_edges[i] < 1 || (i > 0 && config.bin_edges[i] <= config.bin_edges[i - 1])) {
      throw InputError("lm.bins must be strictly increasing positive integers");
    }
  }
  return config;
}

void run_split_folds(const SplitFoldsArgs& args, std::ostream& out) {
  const LabelSpace space = space_for_task(args.task);
  {
    const std::vector<std::string> lines = split_lines(read_file(args.input));
    if (!lines.empty() && lines[0] == "id\ttext") {
      throw InputError("fold assignment requires labels");
    }
  }
  const Dataset dataset = load_dataset(args.input, space, /*has_labels=*/true);
  const FoldAssignment folds = assign_folds(dataset, args.k, args.seed);
  save_folds(folds, args.output);

  // Per-fold class counts.
  std::vector<std::vector<std::int64_t>> counts(static_cast<std::size_t>(args.k),
                                                std::vector<std::int64_t>(space.size(), 0));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    ++counts[static_cast<std::size_t>(folds.fold(dataset.document(i).id))]
            [static_cast<std::size_t>(dataset.label(i))];
  }
  out << "wrote " << args.output.string() << "\n";
  for (int f = 0; f < args.k; ++f) {
    out << "fold " << f << ":";
    for (std::size_t c = 0; c < space.size(); ++c) {
      out << " " << space.name(c) << "=" << counts[static_cast<std::size_t>(f)][c];
    }
    out << "\n";
  }
}

void run_train_lm(const TrainLmArgs& args, std::ostream& out) {
  const LabelSpace space = space_for_task(args.task);
  const Dataset dataset = load_dataset(args.input, space, args.labeled);
  const Dataset* corpus = &dataset;
  std::optional<Dataset> filtered;
  if (args.filter_label) {
    if (!args.labeled) throw InputError("--filter-label requires labeled input");
    const auto idx = space.index_of(*args.filter_label);
    if (!idx) throw InputError("unknown label \"" + *args.filter_label + "\"");
    std::vector<Document> docs;
    std::vector<int> labels;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (dataset.label(i) == *idx) {
        docs.push_back(dataset.document(i));
        labels.push_back(dataset.label(i));
      }
    }
    filtered.emplace(space, std::move(docs), std::move(labels));
    corpus = &*filtered;
  }
  const NGramModel model = NGramModel::train(*corpus, args.lm);
  model.save(args.output);
  out << "trained order-" << model.order() << " LM on " << corpus->size() << " documents, vocab "
      << model.vocab_size() << "\n";
  out << "wrote " << args.output.string() << "\n";
}

void run_featurize(const FeaturizeArgs& args, std::ostream& out) {
  const LabelSpace space = space_for_task(args.task);
  const Dataset dataset = load_dataset(args.input, space, args.labeled);
  FeatureMatrix matrix;
  if (args.features == "surface") {
    matrix = surface_feature_matrix(dataset);
  } else if (args.features == "lm" || args.features == "both") {
    if (!args.human_lm || !args.machine_lm) {
      throw InputError("lm features need --human-lm and --machine-lm model files");
    }
    const NGramModel human = NGramModel::load(*args.human_lm);
    const NGramModel machine = NGramModel::load(*args.machine_lm);
    matrix = lm_feature_matrix(dataset, human, machine, args.bin_edges);
    if (args.features == "both") {
      matrix = FeatureMatrix::hconcat(surface_feature_matrix(dataset), matrix);
    }
  } else {
    throw InputError("features must be surface, lm, or both");
  }
  save_feature_matrix(matrix, args.output);
  out << "wrote " << matrix.rows() << " x " << matrix.cols() << " feature matrix to "
      << args.output.string() << "\n";
}

namespace {

// Removes everything this run created if it does not reach commit().
class OutputTracker {
 public:
  explicit OutputTracker(fs::path dir) : dir_(std::move(dir)) {
    created_dir_ = !fs::exists(dir_);
    fs::create_directories(dir_);
  }

  fs::path track(const fs::path& relative) {
    const fs::path full = dir_ / relative;
    fs::create_directories(full.parent_path());
    files_.push_back(full);
    return full;
  }

  void commit() { committed_ = true; }

  ~OutputTracker() {
    if (committed_) return;
    std::error_code ec;
    if (created_dir_) {
      fs::remove_all(dir_, ec);
      return;
    }
    for (const fs::path& f : files_) fs::remove(f, ec);
    fs::remove(dir_ / "models", ec);  // only removed when empty
  }

 private:
  fs::path dir_;
  bool created_dir_ = false;
  bool committed_ = false;
  std::vector<fs::path> files_;
};

}  // namespace

TrainResult run_train(const RunConfig& config, std::ostream& out) {
  parallel::set_threads(config.threads);
  const LabelSpace space = config.space();
  const std::string canonical = config.canonical_text();
  const std::string config_hash = to_hex(fnv1a64(canonical));

  OutputTracker tracker(config.output_dir);
  std::string log;
  log += "gendetect run log\n";
  log += "config_hash " + config_hash + "\n";
  log += "task " + config.task + "\n";
  log += "mode " + config.mode + "\n";
  log += "seed " + std::to_string(config.seed) + "\n";
  log += "threads " + std::to_string(config.threads) + "\n";
  log += "learners " + join(config.learners, ',') + "\n";

  Dataset train = load_dataset(config.train_path, space, /*has_labels=*/true);
  log += "train " + config.train_path.generic_string() + " (" + std::to_string(train.size()) +
         " docs)\n";
  if (config.validation_path) {
    const Dataset validation = load_dataset(*config.validation_path, space, /*has_labels=*/true);
    const std::size_t train_size = train.size();
    train = concat(train, validation);
    log += "validation " + config.validation_path->generic_string() + " (" +
           std::to_string(validation.size()) + " docs)\n";
    log += "combined_size " + std::to_string(train.size()) + " (train " +
           std::to_string(train_size) + " + validation " + std::to_string(validation.size()) +
           ")\n";
  }

  const std::vector<BaseLearnerSpec> specs = config.learner_specs();
  nlohmann::json manifest;
  manifest["version"] = 1;
  manifest["task"] = config.task;
  manifest["mode"] = config.mode;
  manifest["label_space"] = {{"kind", config.task}, {"names", space.names()}};
  manifest["seed"] = config.seed;
  manifest["config_hash"] = config_hash;

  if (config.mode == "stacked") {
    const FoldAssignment folds = assign_folds(train, config.k, config.seed);
    save_folds(folds, tracker.track("folds.csv"));
    manifest["k"] = config.k;
    manifest["folds"] = "folds.csv";

    const EnsembleModel ensemble = train_ensemble(specs, train, folds, config.meta);
    save_oof(ensemble.oof, tracker.track("oof.csv"));
    manifest["oof"] = "oof.csv";

    nlohmann::json learners = nlohmann::json::array();
    for (std::size_t l = 0; l < specs.size(); ++l) {
      nlohmann::json entry;
      entry["name"] = specs[l].name;
      entry["spec"] = specs[l].to_json();
      nlohmann::json paths = nlohmann::json::array();
      for (int f = 0; f < config.k; ++f) {
        const std::string rel =
            "models/" + specs[l].name + ".fold" + std::to_string(f) + ".json";
        write_file(tracker.track(rel),
                   ensemble.fold_models[l][static_cast<std::size_t>(f)]->to_json().dump());
        paths.push_back(rel);
      }
      entry["fold_models"] = std::move(paths);
      learners.push_back(std::move(entry));
    }
    manifest["learners"] = std::move(learners);
    write_file(tracker.track("models/meta.json"), ensemble.meta.to_json().dump());
    manifest["meta_model"] = "models/meta.json";

    // Per-learner out-of-fold accuracy, logged for the comparison report.
    for (std::size_t l = 0; l < specs.size(); ++l) {
      const std::size_t c = space.size();
      std::int64_t hits = 0;
      for (std::size_t r = 0; r < train.size(); ++r) {
        const auto row = ensemble.oof.columns.row(r);
        const std::span<const double> block(row.data() + l * c, c);
        if (static_cast<int>(argmax_index(block)) == train.label(r)) ++hits;
      }
      log += "oof_accuracy " + specs[l].name + " " +
             format_fixed(static_cast<double>(hits) / static_cast<double>(train.size()), 5) + "\n";
    }
  } else {
    const std::unique_ptr<BaseLearner> model = train_single(specs[0], train);
    nlohmann::json learners = nlohmann::json::array();
    nlohmann::json entry;
    entry["name"] = specs[0].name;
    entry["spec"] = specs[0].to_json();
    const std::string rel = "models/" + specs[0].name + ".json";
    write_file(tracker.track(rel), model->to_json().dump());
    entry["model"] = rel;
    learners.push_back(std::move(entry));
    manifest["learners"] = std::move(learners);
  }

  const std::string manifest_text = manifest.dump(2) + "\n";
  const fs::path manifest_path = tracker.track("manifest.json");
  write_file(manifest_path, manifest_text);
  log += "manifest_hash " + to_hex(fnv1a64(manifest_text)) + "\n";

  const fs::path log_path = tracker.track("run.log");
  write_file(log_path, log);
  tracker.commit();
  out << log;
  return TrainResult{manifest_path, log_path};
}

namespace {

nlohmann::json load_json_file(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("bad JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace

void run_predict(const PredictArgs& args, std::ostream& out) {
  const nlohmann::json manifest = load_json_file(args.manifest);
  if (!manifest.contains("version") || manifest.at("version").get<int>() != 1) {
    throw InputError("unsupported manifest version in " + args.manifest.string());
  }
  const fs::path base = args.manifest.parent_path();
  const LabelSpace space = space_for_task(manifest.at("task").get<std::string>());
  if (manifest.at("label_space").at("names").get<std::vector<std::string>>() != space.names()) {
    throw InputError("manifest label space does not match its task");
  }
  const Dataset test = load_dataset(args.test, space, /*has_labels=*/false);

  const std::string mode = manifest.at("mode").get<std::string>();
  PredictionSet preds = [&]() {
    if (mode == "single") {
      const auto& entry = manifest.at("learners").at(0);
      const std::unique_ptr<BaseLearner> model =
          learner_from_json(load_json_file(base / entry.at("model").get<std::string>()));
      return predict_single(*model, space, test);
    }
    FeatureMatrix stacked;
    bool first = true;
    for (const auto& entry : manifest.at("learners")) {
      std::vector<std::unique_ptr<BaseLearner>> fold_models;
      for (const auto& rel : entry.at("fold_models")) {
        fold_models.push_back(learner_from_json(load_json_file(base / rel.get<std::string>())));
      }
      const FeatureMatrix averaged = average_test_predictions(
          std::span<const std::unique_ptr<BaseLearner>>(fold_models), test);
      std::vector<std::string> names;
      for (const auto& cls : averaged.names()) {
        names.push_back(entry.at("name").get<std::string>() + "." + cls);
      }
      FeatureMatrix renamed(std::move(names));
      renamed.resize_rows(averaged.ids());
      for (std::size_t r = 0; r < averaged.rows(); ++r) renamed.set_row(r, averaged.row(r));
      stacked = first ? renamed : FeatureMatrix::hconcat(stacked, renamed);
      first = false;
    }
    const LinearModel meta =
        LinearModel::from_json(load_json_file(base / manifest.at("meta_model").get<std::string>()));
    return PredictionSet::from_probabilities(space, meta.predict_proba_matrix(stacked));
  }();

  save_predictions(preds, args.predictions_out);
  out << "wrote " << args.predictions_out.string() << " (" << preds.size() << " rows)\n";
  if (args.probabilities_out) {
    save_probabilities(preds, *args.probabilities_out);
    out << "wrote " << args.probabilities_out->string() << "\n";
  }
}

void run_evaluate(const EvaluateArgs& args, std::ostream& out) {
  const LabelSpace space = space_for_task(args.task);
  const PredictionSet preds = load_predictions(args.predictions, space);
  const Dataset gold = load_dataset(args.gold, space, /*has_labels=*/true);
  const EvalReport report = evaluate(preds, gold);
  out << render_report(report, space);

  if (args.csv_out) {
    std::string csv = "key,class,value\n";
    csv += "accuracy,," + format_fixed(report.accuracy, 5) + "\n";
    csv += "n,," + std::to_string(report.n) + "\n";
    for (std::size_t k = 0; k < report.per_class.size(); ++k) {
      const ClassMetrics& m = report.per_class[k];
      csv += "precision," + space.name(k) + "," + format_fixed(m.precision, 5) +
             (m.precision_defined ? "" : "*") + "\n";
      csv += "recall," + space.name(k) + "," + format_fixed(m.recall, 5) +
             (m.recall_defined ? "" : "*") + "\n";
    }
    csv += "macro_f1,," + format_fixed(report.macro_f1, 5) + "\n";
    for (std::size_t g = 0; g < report.confusion.size(); ++g) {
      for (std::size_t p = 0; p < report.confusion[g].size(); ++p) {
        csv += "confusion," + space.name(g) + ":" + space.name(p) + "," +
               std::to_string(report.confusion[g][p]) + "\n";
      }
    }
    write_file(*args.csv_out, csv);
    out << "wrote " << args.csv_out->string() << "\n";
  }
}

void run_report(const ReportArgs& args, std::ostream& out) {
  if (args.runs.empty()) throw InputError("report needs at least one --run");
  const LabelSpace space = space_for_task(args.task);
  const Dataset gold = load_dataset(args.gold, space, /*has_labels=*/true);
  std::vector<NamedReport> reports;
  reports.reserve(args.runs.size());
  for (const auto& [name, path] : args.runs) {
    const PredictionSet preds = load_predictions(path, space);
    reports.push_back(NamedReport{name, evaluate(preds, gold), std::nullopt});
  }
  const ReportFormat format =
      args.format == "csv" ? ReportFormat::Csv : ReportFormat::Text;
  if (args.format != "csv" && args.format != "text") {
    throw InputError("format must be `text` or `csv`");
  }
  out << compare_report(reports, format);
}

void run_verify(const VerifyArgs& args, std::ostream& out) {
  const LabelSpace space = space_for_task(args.task);
  std::optional<Dataset> dataset;
  if (args.dataset) {
    dataset.emplace(load_dataset(*args.dataset, space, args.labeled));
    out << "ok dataset: " << dataset->size() << " documents, invariants hold\n";
  }

  if (args.folds) {
    if (!dataset) throw InputError("--folds verification needs --dataset");
    if (!args.labeled) throw InputError("--folds verification needs labeled data");
    const FoldAssignment folds = load_folds(*args.folds);
    if (folds.fold_of.size() != dataset->size()) {
      throw InputError("folds cover " + std::to_string(folds.fold_of.size()) + " ids, dataset has " +
                       std::to_string(dataset->size()));
    }
    std::vector<std::int64_t> sizes(static_cast<std::size_t>(folds.k), 0);
    std::vector<std::vector<std::int64_t>> per_class(
        static_cast<std::size_t>(folds.k), std::vector<std::int64_t>(space.size(), 0));
    for (std::size_t i = 0; i < dataset->size(); ++i) {
      const int f = folds.fold(dataset->document(i).id);
      ++sizes[static_cast<std::size_t>(f)];
      ++per_class[static_cast<std::size_t>(f)][static_cast<std::size_t>(dataset->label(i))];
    }
    const auto [min_size, max_size] = std::minmax_element(sizes.begin(), sizes.end());
    if (*max_size - *min_size > 1) {
      throw InputError("fold sizes differ by more than 1");
    }
    for (std::size_t c = 0; c < space.size(); ++c) {
      std::int64_t lo = per_class[0][c];
      std::int64_t hi = per_class[0][c];
      for (int f = 1; f < folds.k; ++f) {
        lo = std::min(lo, per_class[static_cast<std::size_t>(f)][c]);
        hi = std::max(hi, per_class[static_cast<std::size_t>(f)][c]);
      }
      if (hi - lo > 1) {
        throw InputError("class \"" + space.name(c) + "\" is not stratified across folds");
      }
    }
    out << "ok folds: " << folds.k << " non-overlapping stratified folds\n";
  }

  const auto check_simplex_rows = [&](const FeatureMatrix& m, const std::string& what) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      double sum = 0.0;
      for (double v : m.row(r)) {
        if (v < 0.0) {
          throw InputError(what + " row \"" + m.ids()[r] + "\" has a negative probability");
        }
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw InputError(what + " row \"" + m.ids()[r] + "\" sums to " + format_double(sum));
      }
    }
  };

  if (args.oof) {
    const FeatureMatrix oof = load_feature_matrix(*args.oof);
    if (oof.cols() % space.size() != 0) {
      throw InputError("OOF column count is not a multiple of the class count");
    }
    const std::size_t blocks = oof.cols() / space.size();
    for (std::size_t b = 0; b < blocks; ++b) {
      FeatureMatrix block(std::vector<std::string>(
          oof.names().begin() + static_cast<std::ptrdiff_t>(b * space.size()),
          oof.names().begin() + static_cast<std::ptrdiff_t>((b + 1) * space.size())));
      block.resize_rows(oof.ids());
      for (std::size_t r = 0; r < oof.rows(); ++r) {
        block.set_row(r, oof.row(r).subspan(b * space.size(), space.size()));
      }
      check_simplex_rows(block, "OOF block " + std::to_string(b));
    }
    if (dataset) {
      if (oof.rows() != dataset->size()) {
        throw InputError("OOF has " + std::to_string(oof.rows()) + " rows, dataset has " +
                         std::to_string(dataset->size()));
      }
      for (const auto& id : oof.ids()) {
        if (!dataset->index_of(id)) throw InputError("OOF row \"" + id + "\" not in dataset");
      }
    }
    out << "ok oof: " << oof.rows() << " rows x " << blocks << " learner blocks on the simplex\n";
  }

  std::optional<FeatureMatrix> probs;
  if (args.probabilities) {
    probs.emplace(load_feature_matrix(*args.probabilities, "Id"));
    if (probs->names() != space.names()) {
      throw InputError("probability columns do not match the label space");
    }
    check_simplex_rows(*probs, "probability");
    out << "ok probabilities: " << probs->rows() << " simplex rows\n";
  }

  if (args.predictions) {
    const PredictionSet preds = load_predictions(*args.predictions, space);
    if (probs) {
      if (probs->rows() != preds.size()) {
        throw InputError("probabilities and predictions disagree on row count");
      }
      for (std::size_t r = 0; r < preds.size(); ++r) {
        if (probs->ids()[r] != preds.ids()[r]) {
          throw InputError("probabilities and predictions disagree on row order at \"" +
                           preds.ids()[r] + "\"");
        }
        if (static_cast<int>(argmax_index(probs->row(r))) != preds.labels()[r]) {
          throw InputError("argmax of probabilities row \"" + preds.ids()[r] +
                           "\" does not match its predicted class");
        }
      }
    }
    out << "ok predictions: " << preds.size() << " rows\n";
  }

  if (args.model) {
    const nlohmann::json j = load_json_file(*args.model);
    const std::string kind = j.contains("kind") ? j.at("kind").get<std::string>() : "";
    if (kind == "base_learner") {
      (void)learner_from_json(j);
    } else if (kind == "logreg") {
      (void)LinearModel::from_json(j);
    } else if (kind == "naive_bayes") {
      (void)NaiveBayesModel::from_json(j);
    } else if (kind == "mean_likelihood") {
      (void)MeanLikelihoodDetector::from_json(j);
    } else if (j.contains("vocab")) {
      const NGramModel lm = NGramModel::from_json_string(j.dump());
      // Spot-check normalization on a few contexts.
      Rng rng(7);
      for (int i = 0; i < 10; ++i) {
        std::vector<std::int32_t> ctx;
        for (int p = 0; p < lm.order() - 1; ++p) {
          ctx.push_back(static_cast<std::int32_t>(rng.below(lm.vocab_size())));
        }
        const std::vector<double> dist = lm.conditional_distribution(ctx);
        double sum = 0.0;
        for (double v : dist) sum += v;
        if (std::abs(sum - 1.0) > 1e-9) {
          throw InputError("LM distribution does not normalize: sum " + format_double(sum));
        }
      }
    } else {
      throw InputError("unrecognized model file " + args.model->string());
    }
    out << "ok model: " << args.model->string() << " loads and is consistent\n";
  }

  if (args.manifest) {
    const nlohmann::json manifest = load_json_file(*args.manifest);
    if (!manifest.contains("version") || manifest.at("version").get<int>() != 1) {
      throw InputError("unsupported manifest version");
    }
    const fs::path base = args.manifest->parent_path();
    std::size_t model_files = 0;
    for (const auto& entry : manifest.at("learners")) {
      if (entry.contains("fold_models")) {
        for (const auto& rel : entry.at("fold_models")) {
          const fs::path p = base / rel.get<std::string>();
          if (!fs::exists(p)) throw InputError("missing model file " + p.string());
          ++model_files;
        }
      } else {
        const fs::path p = base / entry.at("model").get<std::string>();
        if (!fs::exists(p)) throw InputError("missing model file " + p.string());
        ++model_files;
      }
    }
    if (manifest.contains("meta_model")) {
      const fs::path p = base / manifest.at("meta_model").get<std::string>();
      if (!fs::exists(p)) throw InputError("missing model file " + p.string());
      ++model_files;
    }
    out << "ok manifest: " << model_files << " model files present\n";
  }
}

}  // namespace gendetect
