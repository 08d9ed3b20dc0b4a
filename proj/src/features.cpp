#include "gendetect/features.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "gendetect/errors.hpp"
#include "gendetect/parallel.hpp"
#include "gendetect/text.hpp"
#include "gendetect/util.hpp"

namespace gendetect {

void FeatureMatrix::append_row(std::string id, std::span<const double> values) {
  if (values.size() != names_.size()) {
    throw InputError("feature row for \"" + id + "\" has " + std::to_string(values.size()) +
                     " values, expected " + std::to_string(names_.size()));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw InputError("non-finite feature value for \"" + id + "\"");
  }
  ids_.push_back(std::move(id));
  values_.insert(values_.end(), values.begin(), values.end());
}

void FeatureMatrix::append_row(std::string id, const FeatureVector& fv) {
  if (fv.names != names_) {
    throw InputError("feature names mismatch for row \"" + id + "\"");
  }
  append_row(std::move(id), std::span<const double>(fv.values));
}

void FeatureMatrix::resize_rows(std::vector<std::string> ids) {
  ids_ = std::move(ids);
  values_.assign(ids_.size() * names_.size(), 0.0);
}

void FeatureMatrix::set_row(std::size_t r, std::span<const double> values) {
  std::copy(values.begin(), values.end(), values_.begin() + static_cast<std::ptrdiff_t>(r * cols()));
}

FeatureMatrix FeatureMatrix::hconcat(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.ids() != b.ids()) throw InputError("row ids differ in feature matrix concatenation");
  std::vector<std::string> names = a.names();
  names.insert(names.end(), b.names().begin(), b.names().end());
  FeatureMatrix out(std::move(names));
  out.ids_ = a.ids();
  out.values_.reserve(a.values_.size() + b.values_.size());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto ra = a.row(r);
    const auto rb = b.row(r);
    out.values_.insert(out.values_.end(), ra.begin(), ra.end());
    out.values_.insert(out.values_.end(), rb.begin(), rb.end());
  }
  return out;
}

const std::vector<std::string>& surface_feature_names() {
  static const std::vector<std::string> names = {
      "char_count",  "token_count",     "mean_token_len", "punctuation_ratio",
      "digit_ratio", "uppercase_ratio", "type_token_ratio"};
  return names;
}

FeatureVector surface_features(const Document& doc) {
  const std::vector<char32_t> cps = text::decode_utf8(doc.text);
  const std::vector<std::string> tokens = tokenize(doc.text);

  const double char_count = static_cast<double>(cps.size());
  const double token_count = static_cast<double>(tokens.size());

  double token_len_sum = 0.0;
  double punct_tokens = 0.0;
  std::unordered_set<std::string_view> distinct;
  for (const std::string& tok : tokens) {
    token_len_sum += static_cast<double>(text::codepoint_count(tok));
    const std::vector<char32_t> tok_cps = text::decode_utf8(tok);
    if (tok_cps.size() == 1 && text::is_punct(tok_cps[0])) punct_tokens += 1.0;
    distinct.insert(tok);
  }

  double digits = 0.0;
  double uppers = 0.0;
  for (char32_t cp : cps) {
    if (text::is_digit(cp)) digits += 1.0;
    if (text::is_upper(cp)) uppers += 1.0;
  }

  FeatureVector fv;
  fv.names = surface_feature_names();
  fv.values = {
      char_count,
      token_count,
      token_count > 0 ? token_len_sum / token_count : 0.0,
      token_count > 0 ? punct_tokens / token_count : 0.0,
      char_count > 0 ? digits / char_count : 0.0,
      char_count > 0 ? uppers / char_count : 0.0,
      token_count > 0 ? static_cast<double>(distinct.size()) / token_count : 0.0,
  };
  return fv;
}

std::vector<std::string> lm_feature_names(std::span<const int> bin_edges) {
  std::vector<std::string> names = {"mean_ll_human", "mean_ll_machine", "ll_diff"};
  for (const char* tag : {"human", "machine"}) {
    for (int edge : bin_edges) {
      names.push_back(std::string("rank_") + tag + "_le" + std::to_string(edge));
    }
    names.push_back(std::string("rank_") + tag + "_gt" +
                    (bin_edges.empty() ? "0" : std::to_string(bin_edges.back())));
  }
  return names;
}

FeatureVector lm_features(const Document& doc, const NGramModel& human_lm,
                          const NGramModel& machine_lm, std::span<const int> bin_edges) {
  const double ll_human = human_lm.mean_log_likelihood(doc.text);
  const double ll_machine = machine_lm.mean_log_likelihood(doc.text);
  const std::vector<double> hist_human = human_lm.rank_histogram(doc.text, bin_edges);
  const std::vector<double> hist_machine = machine_lm.rank_histogram(doc.text, bin_edges);

  FeatureVector fv;
  fv.names = lm_feature_names(bin_edges);
  fv.values = {ll_human, ll_machine, ll_human - ll_machine};
  fv.values.insert(fv.values.end(), hist_human.begin(), hist_human.end());
  fv.values.insert(fv.values.end(), hist_machine.begin(), hist_machine.end());
  return fv;
}

namespace {

std::vector<std::string> dataset_ids(const Dataset& dataset) {
  std::vector<std::string> ids;
  ids.reserve(dataset.size());
  for (const Document& doc : dataset.documents()) ids.push_back(doc.id);
  return ids;
}

template <class ExtractFn>
FeatureMatrix extract_parallel(const Dataset& dataset, std::vector<std::string> names,
                               ExtractFn&& extract) {
  FeatureMatrix m(std::move(names));
  m.resize_rows(dataset_ids(dataset));
  parallel::for_each_index(dataset.size(), [&](std::size_t i) {
    const FeatureVector fv = extract(dataset.document(i));
    m.set_row(i, fv.values);
  });
  return m;
}

}  // namespace

FeatureMatrix surface_feature_matrix(const Dataset& dataset) {
  return extract_parallel(dataset, surface_feature_names(),
                          [](const Document& d) { return surface_features(d); });
}

FeatureMatrix surface_feature_matrix_serial(const Dataset& dataset) {
  FeatureMatrix m(surface_feature_names());
  for (const Document& doc : dataset.documents()) {
    m.append_row(doc.id, surface_features(doc));
  }
  return m;
}

FeatureMatrix lm_feature_matrix(const Dataset& dataset, const NGramModel& human_lm,
                                const NGramModel& machine_lm, std::span<const int> bin_edges) {
  return extract_parallel(dataset, lm_feature_names(bin_edges), [&](const Document& d) {
    return lm_features(d, human_lm, machine_lm, bin_edges);
  });
}

FeatureMatrix lm_feature_matrix_serial(const Dataset& dataset, const NGramModel& human_lm,
                                       const NGramModel& machine_lm,
                                       std::span<const int> bin_edges) {
  FeatureMatrix m(lm_feature_names(bin_edges));
  for (const Document& doc : dataset.documents()) {
    m.append_row(doc.id, lm_features(doc, human_lm, machine_lm, bin_edges));
  }
  return m;
}

Standardizer fit_standardizer(const FeatureMatrix& m) {
  const std::size_t n = m.rows();
  const std::size_t d = m.cols();
  if (n == 0) throw InputError("cannot fit standardizer on an empty matrix");

  Standardizer s;
  s.names = m.names();
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < d; ++c) s.mean[c] += row[c];
  }
  for (std::size_t c = 0; c < d; ++c) s.mean[c] /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      const double delta = row[c] - s.mean[c];
      s.stddev[c] += delta * delta;
    }
  }
  for (std::size_t c = 0; c < d; ++c) {
    s.stddev[c] = std::sqrt(s.stddev[c] / static_cast<double>(n));
    if (s.stddev[c] < 1e-12) s.stddev[c] = 1.0;
  }
  return s;
}

FeatureMatrix apply_standardizer(const Standardizer& s, const FeatureMatrix& m) {
  if (s.names != m.names()) throw InputError("feature names mismatch in standardizer");
  FeatureMatrix out(m.names());
  out.resize_rows(m.ids());
  std::vector<double> row(m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto in = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) {
      row[c] = (in[c] - s.mean[c]) / s.stddev[c];
    }
    out.set_row(r, row);
  }
  return out;
}

void save_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
  std::string out = "id";
  for (const auto& name : m.names()) {
    check_csv_field(name, "feature name");
    out += ',';
    out += name;
  }
  out += '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    check_csv_field(m.ids()[r], "document id");
    out += m.ids()[r];
    for (double v : m.row(r)) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  write_file(path, out);
}

FeatureMatrix load_feature_matrix(const std::filesystem::path& path, std::string_view id_column) {
  const std::vector<std::string> lines = split_lines(read_file(path));
  if (lines.empty()) throw InputError("missing header in " + path.string());
  std::vector<std::string> header = split(lines[0], ',');
  if (header.empty() || header[0] != id_column) {
    throw InputError("feature CSV must start with an `" + std::string(id_column) +
                     "` column: " + path.string());
  }
  FeatureMatrix m(std::vector<std::string>(header.begin() + 1, header.end()));
  std::unordered_set<std::string> seen;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::vector<std::string> fields = split(lines[row], ',');
    if (fields.size() != header.size()) {
      throw InputError("row " + std::to_string(row + 1) + " has " + std::to_string(fields.size()) +
                       " fields, expected " + std::to_string(header.size()));
    }
    if (!seen.insert(fields[0]).second) {
      throw InputError("duplicate row id \"" + fields[0] + "\" in " + path.string());
    }
    std::vector<double> values;
    values.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) values.push_back(parse_double(fields[i]));
    m.append_row(fields[0], std::span<const double>(values));
  }
  return m;
}

}  // namespace gendetect
