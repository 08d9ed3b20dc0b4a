#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gendetect/errors.hpp"
#include "gendetect/pipeline.hpp"
#include "gendetect/util.hpp"

namespace {

using namespace gendetect;

constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

ConfigOverrides parse_overrides(const std::vector<std::string>& sets) {
  ConfigOverrides overrides;
  for (const auto& s : sets) {
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw InputError("--set expects key=value, got \"" + s + "\"");
    }
    overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return overrides;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Machine-generated text detection toolkit"};
  app.require_subcommand(1);

  // split-folds
  SplitFoldsArgs split_args;
  auto* split = app.add_subcommand("split-folds", "Assign stratified cross-validation folds");
  split->add_option("--input", split_args.input, "Labeled TSV dataset")->required();
  split->add_option("--task", split_args.task, "binary | multiclass");
  split->add_option("--k", split_args.k, "Fold count");
  split->add_option("--seed", split_args.seed, "Shuffle seed");
  split->add_option("--output", split_args.output, "Output folds CSV")->required();

  // train-lm
  TrainLmArgs lm_args;
  std::string lm_weights;
  auto* train_lm = app.add_subcommand("train-lm", "Train an n-gram language model");
  train_lm->add_option("--input", lm_args.input, "TSV dataset")->required();
  train_lm->add_option("--task", lm_args.task, "binary | multiclass");
  train_lm->add_flag("--labeled", lm_args.labeled, "Input has a label column");
  train_lm->add_option("--filter-label", lm_args.filter_label,
                       "Train only on documents with this label");
  train_lm->add_option("--order", lm_args.lm.order, "n-gram order");
  train_lm->add_option("--add-k", lm_args.lm.add_k, "Smoothing constant");
  train_lm->add_option("--min-count", lm_args.lm.min_count, "Vocabulary count threshold");
  train_lm->add_option("--weights", lm_weights, "Comma-separated interpolation weights");
  train_lm->add_option("--output", lm_args.output, "Output model JSON")->required();

  // featurize
  FeaturizeArgs feat_args;
  std::string feat_bins;
  auto* featurize = app.add_subcommand("featurize", "Extract features to CSV");
  featurize->add_option("--input", feat_args.input, "TSV dataset")->required();
  featurize->add_option("--task", feat_args.task, "binary | multiclass");
  featurize->add_flag("--labeled", feat_args.labeled, "Input has a label column");
  featurize->add_option("--features", feat_args.features, "surface | lm | both");
  featurize->add_option("--human-lm", feat_args.human_lm, "Human-side LM model JSON");
  featurize->add_option("--machine-lm", feat_args.machine_lm, "Machine-side LM model JSON");
  featurize->add_option("--bins", feat_bins, "Comma-separated rank histogram edges");
  featurize->add_option("--output", feat_args.output, "Output feature CSV")->required();

  // train
  std::string train_config;
  std::vector<std::string> train_sets;
  auto* train = app.add_subcommand("train", "Run the training pipeline from a config file");
  train->add_option("--config", train_config, "key = value config file")->required();
  train->add_option("--set", train_sets, "Override a config key (key=value, repeatable)");

  // predict
  PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "Predict a test TSV with a trained manifest");
  predict->add_option("--manifest", predict_args.manifest, "manifest.json from train")->required();
  predict->add_option("--test", predict_args.test, "Unlabeled test TSV")->required();
  predict->add_option("--output", predict_args.predictions_out, "Predictions CSV (Id,Class)")
      ->required();
  predict->add_option("--probabilities", predict_args.probabilities_out,
                      "Optional probabilities CSV");

  // evaluate
  EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold labels");
  evaluate->add_option("--predictions", eval_args.predictions, "Predictions CSV")->required();
  evaluate->add_option("--gold", eval_args.gold, "Labeled gold TSV")->required();
  evaluate->add_option("--task", eval_args.task, "binary | multiclass");
  evaluate->add_option("--csv", eval_args.csv_out, "Optional CSV report output");

  // report
  ReportArgs report_args;
  std::vector<std::string> report_runs;
  auto* report = app.add_subcommand("report", "Comparison table over prediction files");
  report->add_option("--run", report_runs, "name=predictions.csv (repeatable)")->required();
  report->add_option("--gold", report_args.gold, "Labeled gold TSV")->required();
  report->add_option("--task", report_args.task, "binary | multiclass");
  report->add_option("--format", report_args.format, "text | csv");

  // verify
  VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify", "Check invariants of artifact files");
  verify->add_option("--task", verify_args.task, "binary | multiclass");
  verify->add_flag("--labeled", verify_args.labeled, "Dataset has a label column");
  verify->add_option("--dataset", verify_args.dataset, "TSV dataset");
  verify->add_option("--folds", verify_args.folds, "Folds CSV (needs --dataset)");
  verify->add_option("--oof", verify_args.oof, "OOF CSV");
  verify->add_option("--probabilities", verify_args.probabilities, "Probabilities CSV");
  verify->add_option("--predictions", verify_args.predictions, "Predictions CSV");
  verify->add_option("--model", verify_args.model, "Model JSON");
  verify->add_option("--manifest", verify_args.manifest, "Manifest JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (split->parsed()) {
      run_split_folds(split_args, std::cout);
    } else if (train_lm->parsed()) {
      if (!lm_weights.empty()) {
        for (const auto& part : gendetect::split(lm_weights, ',')) {
          lm_args.lm.interpolation_weights.push_back(parse_double(part));
        }
      }
      run_train_lm(lm_args, std::cout);
    } else if (featurize->parsed()) {
      if (!feat_bins.empty()) {
        feat_args.bin_edges.clear();
        for (const auto& part : gendetect::split(feat_bins, ',')) {
          feat_args.bin_edges.push_back(static_cast<int>(parse_int(part)));
        }
      }
      run_featurize(feat_args, std::cout);
    } else if (train->parsed()) {
      const RunConfig config = parse_run_config(train_config, parse_overrides(train_sets));
      run_train(config, std::cout);
    } else if (predict->parsed()) {
      run_predict(predict_args, std::cout);
    } else if (evaluate->parsed()) {
      run_evaluate(eval_args, std::cout);
    } else if (report->parsed()) {
      for (const auto& run : report_runs) {
        const std::size_t eq = run.find('=');
        if (eq == std::string::npos) {
          throw InputError("--run expects name=predictions.csv, got \"" + run + "\"");
        }
        report_args.runs.emplace_back(run.substr(0, eq), run.substr(eq + 1));
      }
      run_report(report_args, std::cout);
    } else if (verify->parsed()) {
      run_verify(verify_args, std::cout);
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const TrainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
