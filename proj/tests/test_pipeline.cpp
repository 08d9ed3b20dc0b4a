#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gendetect/errors.hpp"
#include "gendetect/eval.hpp"
#include "gendetect/pipeline.hpp"
#include "gendetect/util.hpp"
#include "support/synthetic.hpp"

using namespace gendetect;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Dataset strip_labels(const Dataset& d) {
  std::vector<Document> docs(d.documents());
  return Dataset(d.space(), std::move(docs));
}

// Runs the real CLI binary; returns its exit code, captures stdout+stderr.
int run_cli(const std::string& args, std::string* output = nullptr) {
  const fs::path out_file = fs::temp_directory_path() / "gendetect_cli_out.txt";
  const std::string command =
      std::string(GENDETECT_CLI_PATH) + " " + args + " > " + out_file.string() + " 2>&1";
  const int status = std::system(command.c_str());
  if (output) *output = read_file(out_file);
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

struct E2eSetup {
  fs::path dir;
  fs::path train_tsv;
  fs::path validation_tsv;
  fs::path test_tsv;
  fs::path gold_tsv;
  fs::path config;
};

E2eSetup make_e2e_setup(const std::string& name) {
  E2eSetup setup;
  setup.dir = fresh_dir(name);
  const Dataset train = testing::make_binary_corpus(60, 501, "tr");
  const Dataset validation = testing::make_binary_corpus(20, 502, "va");
  const Dataset test = testing::make_binary_corpus(20, 503, "te");
  setup.train_tsv = setup.dir / "train.tsv";
  setup.validation_tsv = setup.dir / "validation.tsv";
  setup.test_tsv = setup.dir / "test.tsv";
  setup.gold_tsv = setup.dir / "gold.tsv";
  save_dataset(train, setup.train_tsv);
  save_dataset(validation, setup.validation_tsv);
  save_dataset(strip_labels(test), setup.test_tsv);
  save_dataset(test, setup.gold_tsv);
  setup.config = setup.dir / "run.conf";
  write_file(setup.config,
             "# end-to-end fixture\n"
             "task = binary\n"
             "train = train.tsv\n"
             "validation = validation.tsv\n"
             "output = run_out\n"
             "k = 5\n"
             "seed = 7\n"
             "learners = tokens_nb,mean_ll\n"
             "lm.order = 2\n"
             "meta.max_epochs = 500\n");
  return setup;
}

}  // namespace

TEST_CASE("run config parsing") {
  SUBCASE("defaults and overrides") {
    const fs::path dir = fresh_dir("gendetect_cfg");
    save_dataset(testing::make_binary_corpus(10, 1), dir / "t.tsv");
    const std::string text = "task = binary\ntrain = t.tsv\noutput = out\n";
    const RunConfig base = parse_run_config_text(text, dir, {});
    CHECK(base.mode == "stacked");
    CHECK(base.k == 5);
    CHECK(base.seed == 42);
    CHECK(base.learners.size() == 5);
    CHECK(base.train_path == dir / "t.tsv");

    const RunConfig overridden =
        parse_run_config_text(text, dir, {{"seed", "9"}, {"learners", "tokens_nb"}});
    CHECK(overridden.seed == 9);
    CHECK(overridden.learners == std::vector<std::string>{"tokens_nb"});
    CHECK(overridden.logreg.seed == 9);
  }
  SUBCASE("errors") {
    const fs::path dir = fresh_dir("gendetect_cfg2");
    save_dataset(testing::make_binary_corpus(10, 2), dir / "t.tsv");
    CHECK_THROWS_AS(parse_run_config_text("output = o\n", dir, {}), InputError);  // no train
    CHECK_THROWS_AS(parse_run_config_text("train = t.tsv\noutput = o\nbogus = 1\n", dir, {}),
                    InputError);
    CHECK_THROWS_AS(
        parse_run_config_text("train = missing.tsv\noutput = o\n", dir, {}), InputError);
    CHECK_THROWS_AS(
        parse_run_config_text("train = t.tsv\noutput = o\nk = 1\n", dir, {}), InputError);
    CHECK_THROWS_AS(
        parse_run_config_text("train = t.tsv\noutput = o\nmode = single\nlearners = a,b\n", dir,
                              {}),
        InputError);
  }
  SUBCASE("config hash is stable") {
    const fs::path dir = fresh_dir("gendetect_cfg3");
    save_dataset(testing::make_binary_corpus(10, 3), dir / "t.tsv");
    const std::string text = "task = binary\ntrain = t.tsv\noutput = out\nseed = 5\n";
    const RunConfig a = parse_run_config_text(text, dir, {});
    const RunConfig b = parse_run_config_text(text, dir, {});
    CHECK(a.canonical_text() == b.canonical_text());
    CHECK(to_hex(fnv1a64(a.canonical_text())) == to_hex(fnv1a64(b.canonical_text())));
  }
}

TEST_CASE("split-folds command") {
  const fs::path dir = fresh_dir("gendetect_split");
  std::vector<Document> docs;
  std::vector<int> labels;
  for (int i = 0; i < 10; ++i) {
    docs.push_back(Document{std::to_string(i), "текст номер " + std::to_string(i)});
    labels.push_back(i % 2);
  }
  const Dataset d(LabelSpace::binary(), std::move(docs), std::move(labels));
  save_dataset(d, dir / "train.tsv");

  SUBCASE("deterministic output and per-fold counts") {
    SplitFoldsArgs args;
    args.input = dir / "train.tsv";
    args.k = 5;
    args.seed = 42;
    args.output = dir / "f1.csv";
    std::ostringstream out1;
    run_split_folds(args, out1);
    args.output = dir / "f2.csv";
    std::ostringstream out2;
    run_split_folds(args, out2);
    CHECK(read_file(dir / "f1.csv") == read_file(dir / "f2.csv"));
    CHECK(out1.str().find("fold 0: H=1 M=1") != std::string::npos);
    CHECK(out1.str().find("fold 4: H=1 M=1") != std::string::npos);
  }
  SUBCASE("unlabeled input is rejected with the fold message") {
    save_dataset(strip_labels(d), dir / "unlabeled.tsv");
    SplitFoldsArgs args;
    args.input = dir / "unlabeled.tsv";
    args.output = dir / "f.csv";
    std::ostringstream out;
    try {
      run_split_folds(args, out);
      FAIL("expected InputError");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()) == "fold assignment requires labels");
    }
  }
}

TEST_CASE("end-to-end train/predict/evaluate/verify") {
  const E2eSetup setup = make_e2e_setup("gendetect_e2e");
  const RunConfig config = parse_run_config(setup.config, {});

  std::ostringstream train_log;
  const TrainResult result = run_train(config, train_log);
  CHECK(fs::exists(result.manifest_path));
  CHECK(fs::exists(setup.dir / "run_out" / "folds.csv"));
  CHECK(fs::exists(setup.dir / "run_out" / "oof.csv"));

  SUBCASE("run log records the concatenation arithmetic and hashes") {
    const std::string log = read_file(result.run_log_path);
    CHECK(log.find("combined_size 80 (train 60 + validation 20)") != std::string::npos);
    CHECK(log.find("config_hash ") != std::string::npos);
    CHECK(log.find("manifest_hash ") != std::string::npos);
    CHECK(log.find("seed 7") != std::string::npos);
    CHECK(log.find("oof_accuracy tokens_nb") != std::string::npos);
  }

  SUBCASE("rerunning the identical config reproduces every artifact byte") {
    const RunConfig second =
        parse_run_config(setup.config, {{"output", (setup.dir / "run_out2").string()}});
    std::ostringstream log2;
    run_train(second, log2);
    CHECK(read_file(setup.dir / "run_out" / "oof.csv") ==
          read_file(setup.dir / "run_out2" / "oof.csv"));
    // Manifests differ only through... nothing: output paths are relative.
    CHECK(read_file(setup.dir / "run_out" / "manifest.json") ==
          read_file(setup.dir / "run_out2" / "manifest.json"));
  }

  SUBCASE("predict, verify, evaluate") {
    PredictArgs predict_args;
    predict_args.manifest = result.manifest_path;
    predict_args.test = setup.test_tsv;
    predict_args.predictions_out = setup.dir / "predictions.csv";
    predict_args.probabilities_out = setup.dir / "probabilities.csv";
    std::ostringstream pred_out;
    run_predict(predict_args, pred_out);

    VerifyArgs verify_args;
    verify_args.labeled = true;
    verify_args.dataset = setup.gold_tsv;
    verify_args.probabilities = setup.dir / "probabilities.csv";
    verify_args.predictions = setup.dir / "predictions.csv";
    verify_args.manifest = result.manifest_path;
    verify_args.model = setup.dir / "run_out" / "models" / "meta.json";
    std::ostringstream verify_out;
    run_verify(verify_args, verify_out);
    CHECK(verify_out.str().find("ok probabilities") != std::string::npos);
    CHECK(verify_out.str().find("ok manifest") != std::string::npos);

    VerifyArgs folds_check;
    folds_check.labeled = true;
    folds_check.dataset = setup.dir / "combined.tsv";
    // The folds file covers train+validation; rebuild that dataset.
    save_dataset(concat(load_dataset(setup.train_tsv, LabelSpace::binary(), true),
                        load_dataset(setup.validation_tsv, LabelSpace::binary(), true)),
                 setup.dir / "combined.tsv");
    folds_check.folds = setup.dir / "run_out" / "folds.csv";
    std::ostringstream folds_out;
    run_verify(folds_check, folds_out);
    CHECK(folds_out.str().find("ok folds") != std::string::npos);

    EvaluateArgs eval_args;
    eval_args.predictions = setup.dir / "predictions.csv";
    eval_args.gold = setup.gold_tsv;
    eval_args.csv_out = setup.dir / "report.csv";
    std::ostringstream eval_out;
    run_evaluate(eval_args, eval_out);
    CHECK(eval_out.str().find("accuracy ") != std::string::npos);
    CHECK(fs::exists(setup.dir / "report.csv"));

    ReportArgs report_args;
    report_args.runs = {{"ensemble", setup.dir / "predictions.csv"}};
    report_args.gold = setup.gold_tsv;
    std::ostringstream report_out;
    run_report(report_args, report_out);
    CHECK(report_out.str().find("model accuracy\nensemble 0.") != std::string::npos);
  }

  SUBCASE("golden regression: the seeded run reproduces the committed prediction file") {
    PredictArgs predict_args;
    predict_args.manifest = result.manifest_path;
    predict_args.test = setup.test_tsv;
    predict_args.predictions_out = setup.dir / "golden_check.csv";
    std::ostringstream out;
    run_predict(predict_args, out);
    const fs::path golden = fs::path(GENDETECT_GOLDEN_DIR) / "e2e_predictions.csv";
    REQUIRE_MESSAGE(fs::exists(golden),
                    "golden file missing; regenerate from a seeded run and commit it");
    CHECK(read_file(setup.dir / "golden_check.csv") == read_file(golden));
  }
}

TEST_CASE("single mode writes no fold artifacts") {
  const fs::path dir = fresh_dir("gendetect_single");
  const LabelSpace space = LabelSpace::multiclass();
  std::vector<Document> docs;
  std::vector<int> labels;
  for (std::size_t c = 0; c < space.size(); ++c) {
    for (int rep = 0; rep < 2; ++rep) {
      docs.push_back(Document{"c" + std::to_string(c) + "r" + std::to_string(rep),
                              "tok" + std::to_string(c) + " slovo" + std::to_string(c)});
      labels.push_back(static_cast<int>(c));
    }
  }
  save_dataset(Dataset(space, std::move(docs), std::move(labels)), dir / "train.tsv");
  write_file(dir / "run.conf",
             "task = multiclass\nmode = single\ntrain = train.tsv\noutput = out\n"
             "learners = tokens_nb\n");
  const RunConfig config = parse_run_config(dir / "run.conf", {});
  std::ostringstream out;
  const TrainResult result = run_train(config, out);
  CHECK(fs::exists(result.manifest_path));
  CHECK_FALSE(fs::exists(dir / "out" / "folds.csv"));
  CHECK_FALSE(fs::exists(dir / "out" / "oof.csv"));

  // Predict through the single model.
  PredictArgs predict_args;
  predict_args.manifest = result.manifest_path;
  const Dataset test(space, {Document{"q1", "tok3 slovo3"}, Document{"q2", "tok11 slovo11"}});
  save_dataset(test, dir / "test.tsv");
  predict_args.test = dir / "test.tsv";
  predict_args.predictions_out = dir / "preds.csv";
  std::ostringstream pred_out;
  run_predict(predict_args, pred_out);
  const std::string preds = read_file(dir / "preds.csv");
  CHECK(preds.find("q1,M-BART50") != std::string::npos);
  CHECK(preds.find("q2,ruGPT2-Large") != std::string::npos);
}

TEST_CASE("failed training removes partial outputs") {
  const fs::path dir = fresh_dir("gendetect_fail");
  std::vector<Document> docs;
  std::vector<int> labels;
  for (int i = 0; i < 10; ++i) {
    docs.push_back(Document{std::to_string(i), "слово " + std::to_string(i)});
    labels.push_back(0);  // single class: training must fail
  }
  save_dataset(Dataset(LabelSpace::binary(), std::move(docs), std::move(labels)),
               dir / "train.tsv");
  write_file(dir / "run.conf",
             "task = binary\ntrain = train.tsv\noutput = out\nlearners = tokens_nb\n");
  const RunConfig config = parse_run_config(dir / "run.conf", {});
  std::ostringstream out;
  CHECK_THROWS(run_train(config, out));
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("evaluate output matches the committed golden sample") {
  const fs::path dir = fresh_dir("gendetect_goldeval");
  // Fixed fixture: gold H,H,H,M,M,M; predictions H,H,H,M,M,H.
  std::string gold_tsv = "id\ttext\tlabel\n";
  const char* gold_labels[] = {"H", "H", "H", "M", "M", "M"};
  for (int i = 0; i < 6; ++i) {
    gold_tsv += "d" + std::to_string(i) + "\tдокумент " + std::to_string(i) + "\t" +
                gold_labels[i] + "\n";
  }
  write_file(dir / "gold.tsv", gold_tsv);
  std::string preds_csv = "Id,Class\n";
  const char* pred_labels[] = {"H", "H", "H", "M", "M", "H"};
  for (int i = 0; i < 6; ++i) {
    preds_csv += "d" + std::to_string(i) + "," + pred_labels[i] + "\n";
  }
  write_file(dir / "preds.csv", preds_csv);

  EvaluateArgs args;
  args.predictions = dir / "preds.csv";
  args.gold = dir / "gold.tsv";
  std::ostringstream out;
  run_evaluate(args, out);
  CHECK(out.str() == read_file(fs::path(GENDETECT_GOLDEN_DIR) / "evaluate_output.txt"));
}

TEST_CASE("CLI binary exit codes") {
  const fs::path dir = fresh_dir("gendetect_cli");
  SUBCASE("input errors exit 2") {
    std::string output;
    const int code = run_cli("split-folds --input " + (dir / "missing.tsv").string() +
                                 " --output " + (dir / "f.csv").string(),
                             &output);
    CHECK(code == 2);
    CHECK(output.find("error:") != std::string::npos);
  }
  SUBCASE("training errors exit 3") {
    std::string tsv = "id\ttext\tlabel\n";
    for (int i = 0; i < 8; ++i) tsv += std::to_string(i) + "\tслово текст\tH\n";
    write_file(dir / "oneclass.tsv", tsv);
    write_file(dir / "bad.conf",
               "task = binary\ntrain = oneclass.tsv\noutput = out\nlearners = tokens_nb\n");
    std::string output;
    const int code = run_cli("train --config " + (dir / "bad.conf").string(), &output);
    CHECK(code == 3);
  }
  SUBCASE("a full seeded flow through the binary exits 0 everywhere") {
    const Dataset train = testing::make_binary_corpus(40, 601);
    save_dataset(train, dir / "train.tsv");
    const Dataset test = testing::make_binary_corpus(10, 602, "t");
    save_dataset(strip_labels(test), dir / "test.tsv");
    save_dataset(test, dir / "gold.tsv");
    write_file(dir / "run.conf",
               "task = binary\ntrain = train.tsv\noutput = out\nk = 5\nseed = 3\n"
               "learners = tokens_nb\nmeta.max_epochs = 300\n");
    std::string output;
    CHECK(run_cli("train --config " + (dir / "run.conf").string(), &output) == 0);
    CHECK(run_cli("predict --manifest " + (dir / "out" / "manifest.json").string() + " --test " +
                      (dir / "test.tsv").string() + " --output " + (dir / "p.csv").string() +
                      " --probabilities " + (dir / "pr.csv").string(),
                  &output) == 0);
    CHECK(run_cli("evaluate --predictions " + (dir / "p.csv").string() + " --gold " +
                      (dir / "gold.tsv").string(),
                  &output) == 0);
    CHECK(output.find("accuracy ") != std::string::npos);
    CHECK(run_cli("verify --probabilities " + (dir / "pr.csv").string() + " --predictions " +
                      (dir / "p.csv").string(),
                  &output) == 0);
    CHECK(run_cli("report --run nb=" + (dir / "p.csv").string() + " --gold " +
                      (dir / "gold.tsv").string() + " --format csv",
                  &output) == 0);
    CHECK(output.find("model,accuracy") != std::string::npos);
  }
}

TEST_CASE("train-lm and featurize commands") {
  const fs::path dir = fresh_dir("gendetect_lmcmd");
  const Dataset corpus = testing::make_binary_corpus(30, 701);
  save_dataset(corpus, dir / "train.tsv");

  TrainLmArgs lm_args;
  lm_args.input = dir / "train.tsv";
  lm_args.labeled = true;
  lm_args.filter_label = "H";
  lm_args.lm.order = 2;
  lm_args.output = dir / "human.json";
  std::ostringstream out1;
  run_train_lm(lm_args, out1);
  CHECK(fs::exists(dir / "human.json"));

  lm_args.filter_label = "M";
  lm_args.output = dir / "machine.json";
  std::ostringstream out2;
  run_train_lm(lm_args, out2);

  FeaturizeArgs feat_args;
  feat_args.input = dir / "train.tsv";
  feat_args.labeled = true;
  feat_args.features = "both";
  feat_args.human_lm = dir / "human.json";
  feat_args.machine_lm = dir / "machine.json";
  feat_args.output = dir / "features.csv";
  std::ostringstream out3;
  run_featurize(feat_args, out3);
  const FeatureMatrix m = load_feature_matrix(dir / "features.csv");
  CHECK(m.rows() == corpus.size());
  CHECK(m.cols() == 7 + 11);  // surface + lm block with default edges
}
