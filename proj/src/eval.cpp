#include "gendetect/eval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "gendetect/classifiers.hpp"
#include "gendetect/errors.hpp"
#include "gendetect/util.hpp"

namespace gendetect {

PredictionSet::PredictionSet(LabelSpace space, std::vector<std::string> ids,
                             std::vector<int> labels)
    : space_(std::move(space)), ids_(std::move(ids)), labels_(std::move(labels)) {
  if (ids_.size() != labels_.size()) throw InputError("prediction ids/labels length mismatch");
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& id : ids_) {
    if (!seen.emplace(id, seen.size()).second) {
      throw InputError("duplicate prediction id \"" + id + "\"");
    }
  }
  for (int label : labels_) {
    if (label < 0 || static_cast<std::size_t>(label) >= space_.size()) {
      throw InputError("prediction label index out of range");
    }
  }
}

PredictionSet PredictionSet::from_probabilities(const LabelSpace& space,
                                                const FeatureMatrix& probs) {
  if (probs.names() != space.names()) {
    throw InputError("probability columns do not match the label space");
  }
  std::vector<int> labels;
  labels.reserve(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const auto row = probs.row(r);
    double sum = 0.0;
    for (double v : row) {
      if (v < 0.0) throw InputError("negative probability in row \"" + probs.ids()[r] + "\"");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw InputError("probability row \"" + probs.ids()[r] + "\" sums to " + format_double(sum));
    }
    labels.push_back(static_cast<int>(argmax_index(row)));
  }
  PredictionSet preds(space, probs.ids(), std::move(labels));
  preds.probabilities_ = probs;
  return preds;
}

namespace {

// Gold row index for every prediction id; throws IdMismatch-style errors
// listing up to 10 offenders.
std::vector<std::size_t> align_ids(const PredictionSet& preds, const Dataset& gold) {
  std::vector<std::string> missing;   // in gold, absent from predictions
  std::vector<std::string> extra;     // predicted, absent from gold
  std::vector<std::size_t> gold_row(preds.size());
  std::unordered_map<std::string, std::size_t> pred_ids;
  for (std::size_t i = 0; i < preds.size(); ++i) pred_ids.emplace(preds.ids()[i], i);

  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto idx = gold.index_of(preds.ids()[i]);
    if (!idx) {
      extra.push_back(preds.ids()[i]);
    } else {
      gold_row[i] = *idx;
    }
  }
  for (const Document& doc : gold.documents()) {
    if (!pred_ids.count(doc.id)) missing.push_back(doc.id);
  }
  if (!missing.empty() || !extra.empty()) {
    // Up to 10 offenders, extras first so both kinds surface.
    std::string msg = "id mismatch between predictions and gold:";
    std::size_t listed = 0;
    for (const auto& id : extra) {
      if (listed++ >= 10) break;
      msg += " extra \"" + id + "\"";
    }
    for (const auto& id : missing) {
      if (listed++ >= 10) break;
      msg += " missing \"" + id + "\"";
    }
    throw InputError(msg);
  }
  return gold_row;
}

}  // namespace

double accuracy(const PredictionSet& preds, const Dataset& gold) {
  if (!gold.labeled()) throw InputError("gold dataset has no labels");
  const std::vector<std::size_t> gold_row = align_ids(preds, gold);
  if (preds.size() == 0) throw InputError("cannot score an empty prediction set");
  std::int64_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds.labels()[i] == gold.label(gold_row[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

std::vector<std::vector<std::int64_t>> confusion_matrix(const PredictionSet& preds,
                                                        const Dataset& gold) {
  if (!gold.labeled()) throw InputError("gold dataset has no labels");
  const std::vector<std::size_t> gold_row = align_ids(preds, gold);
  const std::size_t c = preds.space().size();
  std::vector<std::vector<std::int64_t>> confusion(c, std::vector<std::int64_t>(c, 0));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto g = static_cast<std::size_t>(gold.label(gold_row[i]));
    const auto p = static_cast<std::size_t>(preds.labels()[i]);
    ++confusion[g][p];
  }
  return confusion;
}

EvalReport evaluate(const PredictionSet& preds, const Dataset& gold) {
  if (preds.size() == 0) throw InputError("cannot score an empty prediction set");
  EvalReport report;
  report.confusion = confusion_matrix(preds, gold);
  report.n = static_cast<std::int64_t>(preds.size());

  const std::size_t c = report.confusion.size();
  std::int64_t trace = 0;
  std::vector<std::int64_t> gold_count(c, 0);
  std::vector<std::int64_t> pred_count(c, 0);
  for (std::size_t g = 0; g < c; ++g) {
    for (std::size_t p = 0; p < c; ++p) {
      gold_count[g] += report.confusion[g][p];
      pred_count[p] += report.confusion[g][p];
    }
    trace += report.confusion[g][g];
  }
  report.accuracy = static_cast<double>(trace) / static_cast<double>(report.n);

  report.per_class.resize(c);
  double f1_sum = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    ClassMetrics& m = report.per_class[k];
    const auto tp = static_cast<double>(report.confusion[k][k]);
    m.precision_defined = pred_count[k] > 0;
    m.recall_defined = gold_count[k] > 0;
    m.precision = m.precision_defined ? tp / static_cast<double>(pred_count[k]) : 0.0;
    m.recall = m.recall_defined ? tp / static_cast<double>(gold_count[k]) : 0.0;
    const double pr = m.precision + m.recall;
    f1_sum += pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
  }
  report.macro_f1 = f1_sum / static_cast<double>(c);
  return report;
}

std::string compare_report(std::span<const NamedReport> runs, ReportFormat format) {
  if (runs.empty()) throw InputError("compare_report needs at least one run");
  bool any_stddev = false;
  for (const auto& run : runs) any_stddev |= run.fold_stddev.has_value();

  std::string out;
  const char sep = format == ReportFormat::Csv ? ',' : ' ';
  out += "model";
  out += sep;
  out += "accuracy";
  if (any_stddev) {
    out += sep;
    out += "fold_stddev";
  }
  out += '\n';
  for (const auto& run : runs) {
    if (format == ReportFormat::Csv) check_csv_field(run.name, "run name");
    out += run.name;
    out += sep;
    out += format_fixed(run.report.accuracy, 5);
    if (any_stddev) {
      out += sep;
      out += run.fold_stddev ? format_fixed(*run.fold_stddev, 5) : std::string("-");
    }
    out += '\n';
  }
  return out;
}

std::string render_report(const EvalReport& report, const LabelSpace& space) {
  std::string out;
  out += "accuracy " + format_fixed(report.accuracy, 5) + "\n";
  out += "n " + std::to_string(report.n) + "\n";
  out += "confusion rows=gold cols=predicted\n";
  out += "labels";
  for (const auto& name : space.names()) out += " " + name;
  out += "\n";
  for (std::size_t g = 0; g < report.confusion.size(); ++g) {
    out += space.name(g);
    for (std::int64_t v : report.confusion[g]) out += " " + std::to_string(v);
    out += "\n";
  }
  for (std::size_t k = 0; k < report.per_class.size(); ++k) {
    const ClassMetrics& m = report.per_class[k];
    out += "class " + space.name(k);
    out += " precision " + format_fixed(m.precision, 5) + (m.precision_defined ? "" : "*");
    out += " recall " + format_fixed(m.recall, 5) + (m.recall_defined ? "" : "*");
    out += "\n";
  }
  out += "macro_f1 " + format_fixed(report.macro_f1, 5) + "\n";
  return out;
}

void save_predictions(const PredictionSet& preds, const std::filesystem::path& path) {
  std::string out = "Id,Class\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    check_csv_field(preds.ids()[i], "document id");
    out += preds.ids()[i];
    out += ',';
    out += preds.space().name(static_cast<std::size_t>(preds.labels()[i]));
    out += '\n';
  }
  write_file(path, out);
}

PredictionSet load_predictions(const std::filesystem::path& path, const LabelSpace& space) {
  const std::vector<std::string> lines = split_lines(read_file(path));
  if (lines.empty() || lines[0] != "Id,Class") {
    throw InputError("missing `Id,Class` header in " + path.string());
  }
  std::vector<std::string> ids;
  std::vector<int> labels;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::vector<std::string> fields = split(lines[row], ',');
    if (fields.size() != 2) {
      throw InputError("bad prediction row " + std::to_string(row + 1) + " in " + path.string());
    }
    const auto idx = space.index_of(fields[1]);
    if (!idx) {
      throw InputError("unknown label \"" + fields[1] + "\" at row " + std::to_string(row + 1));
    }
    ids.push_back(fields[0]);
    labels.push_back(*idx);
  }
  return PredictionSet(space, std::move(ids), std::move(labels));
}

void save_probabilities(const PredictionSet& preds, const std::filesystem::path& path) {
  if (!preds.has_probabilities()) throw InputError("prediction set has no probabilities");
  const FeatureMatrix& probs = preds.probabilities();
  std::string out = "Id";
  for (const auto& name : probs.names()) {
    check_csv_field(name, "class name");
    out += ',';
    out += name;
  }
  out += '\n';
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    check_csv_field(probs.ids()[r], "document id");
    out += probs.ids()[r];
    for (double v : probs.row(r)) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  write_file(path, out);
}

}  // namespace gendetect
