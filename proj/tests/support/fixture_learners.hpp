#pragma once

// Contrived base learners used by the stacking tests: they read their
// "knowledge" straight out of marker tokens that make_marker_corpus plants
// in the text, which makes their information content fully controllable.

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "gendetect/stacking.hpp"
#include "gendetect/text.hpp"

namespace gendetect::testing {

inline bool has_token(const std::string& text, const std::string& token) {
  for (const auto& t : tokenize(text)) {
    if (t == token) return true;
  }
  return false;
}

// Emits the one-hot gold label, read from the labh/labm marker.
class OneHotOracleLearner : public BaseLearner {
 public:
  explicit OneHotOracleLearner(std::string name = "onehot_oracle") : name_(std::move(name)) {}
  const std::string& name() const override { return name_; }
  void fit(const Dataset& train) override { fitted_docs_ = train.size(); }
  FeatureMatrix predict_proba(const Dataset& docs) const override {
    FeatureMatrix out(LabelSpace::binary().names());
    for (const Document& doc : docs.documents()) {
      const bool machine = has_token(doc.text, "labm");
      out.append_row(doc.id, std::vector<double>{machine ? 0.0 : 1.0, machine ? 1.0 : 0.0});
    }
    return out;
  }
  nlohmann::json to_json() const override {
    return {{"kind", "fixture"}, {"name", name_}, {"fitted_docs", fitted_docs_}};
  }
  std::size_t fitted_docs() const { return fitted_docs_; }

 private:
  std::string name_;
  std::size_t fitted_docs_ = 0;
};

// Ignores the input entirely.
class UniformLearner : public BaseLearner {
 public:
  explicit UniformLearner(std::string name = "uniform") : name_(std::move(name)) {}
  const std::string& name() const override { return name_; }
  void fit(const Dataset&) override {}
  FeatureMatrix predict_proba(const Dataset& docs) const override {
    FeatureMatrix out(LabelSpace::binary().names());
    for (const Document& doc : docs.documents()) {
      out.append_row(doc.id, std::vector<double>{0.5, 0.5});
    }
    return out;
  }
  nlohmann::json to_json() const override { return {{"kind", "fixture"}, {"name", name_}}; }

 private:
  std::string name_;
};

// Correct (one-hot) on documents carrying `group_token`, uniform elsewhere.
class HalfOracleLearner : public BaseLearner {
 public:
  HalfOracleLearner(std::string name, std::string group_token)
      : name_(std::move(name)), group_token_(std::move(group_token)) {}
  const std::string& name() const override { return name_; }
  void fit(const Dataset&) override {}
  FeatureMatrix predict_proba(const Dataset& docs) const override {
    FeatureMatrix out(LabelSpace::binary().names());
    for (const Document& doc : docs.documents()) {
      if (has_token(doc.text, group_token_)) {
        const bool machine = has_token(doc.text, "labm");
        out.append_row(doc.id, std::vector<double>{machine ? 0.0 : 1.0, machine ? 1.0 : 0.0});
      } else {
        out.append_row(doc.id, std::vector<double>{0.5, 0.5});
      }
    }
    return out;
  }
  nlohmann::json to_json() const override {
    return {{"kind", "fixture"}, {"name", name_}, {"group", group_token_}};
  }

 private:
  std::string name_;
  std::string group_token_;
};

}  // namespace gendetect::testing
