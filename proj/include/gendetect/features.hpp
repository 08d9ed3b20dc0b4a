#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gendetect/corpus.hpp"
#include "gendetect/ngram_lm.hpp"

namespace gendetect {

struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;
};

// Rectangular named feature table with one row per document id.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::vector<std::string> names) : names_(std::move(names)) {}

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t rows() const { return ids_.size(); }
  std::size_t cols() const { return names_.size(); }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_.data() + r * cols(), cols());
  }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  const std::vector<double>& values() const { return values_; }

  void append_row(std::string id, std::span<const double> values);
  void append_row(std::string id, const FeatureVector& fv);

  // Pre-sizes rows so parallel extraction can write disjoint slots.
  void resize_rows(std::vector<std::string> ids);
  void set_row(std::size_t r, std::span<const double> values);

  // Column-wise concatenation; ids must match in order.
  static FeatureMatrix hconcat(const FeatureMatrix& a, const FeatureMatrix& b);

 private:
  std::vector<std::string> names_;
  std::vector<std::string> ids_;
  std::vector<double> values_;  // row-major
};

// Fixed-order surface statistics: char_count, token_count, mean_token_len,
// punctuation_ratio, digit_ratio, uppercase_ratio, type_token_ratio.
FeatureVector surface_features(const Document& doc);
const std::vector<std::string>& surface_feature_names();

// LM-derived detector features: mean log-likelihood under each
// class-conditional model, their difference, and the rank-histogram
// fractions under each model.
FeatureVector lm_features(const Document& doc, const NGramModel& human_lm,
                          const NGramModel& machine_lm, std::span<const int> bin_edges);
std::vector<std::string> lm_feature_names(std::span<const int> bin_edges);

// Whole-dataset extraction. The unsuffixed versions run the OpenMP kernel
// (row-disjoint writes, so results are identical for any thread count); the
// _serial versions are the plain reference loops kept for tests and the
// benchmark.
FeatureMatrix surface_feature_matrix(const Dataset& dataset);
FeatureMatrix surface_feature_matrix_serial(const Dataset& dataset);
FeatureMatrix lm_feature_matrix(const Dataset& dataset, const NGramModel& human_lm,
                                const NGramModel& machine_lm, std::span<const int> bin_edges);
FeatureMatrix lm_feature_matrix_serial(const Dataset& dataset, const NGramModel& human_lm,
                                       const NGramModel& machine_lm,
                                       std::span<const int> bin_edges);

struct Standardizer {
  std::vector<std::string> names;
  std::vector<double> mean;
  std::vector<double> stddev;  // entries < 1e-12 are stored as 1
};

// Population statistics over the given (training) rows only.
Standardizer fit_standardizer(const FeatureMatrix& m);
FeatureMatrix apply_standardizer(const Standardizer& s, const FeatureMatrix& m);

// Headered CSV `id,<feature names...>`, full round-trip precision. The
// probability files written by predict use `Id` as their key column; pass
// the expected name when loading those.
void save_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix load_feature_matrix(const std::filesystem::path& path,
                                  std::string_view id_column = "id");

}  // namespace gendetect
