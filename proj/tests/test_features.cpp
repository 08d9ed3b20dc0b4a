#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gendetect/errors.hpp"
#include "gendetect/features.hpp"
#include "gendetect/rng.hpp"
#include "gendetect/text.hpp"
#include "gendetect/util.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace gendetect;
namespace fs = std::filesystem;

namespace {

double feature(const FeatureVector& fv, const std::string& name) {
  for (std::size_t i = 0; i < fv.names.size(); ++i) {
    if (fv.names[i] == name) return fv.values[i];
  }
  FAIL("missing feature ", name);
  return 0.0;
}

LmConfig small_lm_config() {
  LmConfig config;
  config.order = 2;
  config.add_k = 0.5;
  return config;
}

}  // namespace

TEST_CASE("surface features on hand-counted inputs") {
  SUBCASE("\"A.\"") {
    const FeatureVector fv = surface_features(Document{"1", "A."});
    CHECK(feature(fv, "char_count") == 2.0);
    CHECK(feature(fv, "token_count") == 2.0);
    CHECK(feature(fv, "mean_token_len") == 1.0);
    CHECK(feature(fv, "punctuation_ratio") == 0.5);
    CHECK(feature(fv, "digit_ratio") == 0.0);
    CHECK(feature(fv, "uppercase_ratio") == 0.5);
    CHECK(feature(fv, "type_token_ratio") == 1.0);
  }
  SUBCASE("one token repeated ten times") {
    std::string text = "same";
    for (int i = 0; i < 9; ++i) text += " same";
    const FeatureVector fv = surface_features(Document{"1", text});
    CHECK(feature(fv, "type_token_ratio") == doctest::Approx(0.1));
  }
  SUBCASE("the Russian sample row, against the counting oracle and frozen values") {
    const std::string text =
        "увеличение правовой грамотности и развитие правосознания граждан.";
    const FeatureVector fv = surface_features(Document{"1", text});
    const testing::SurfaceCounts oracle = testing::counting_surface_oracle(text);
    CHECK(feature(fv, "char_count") == oracle.char_count);
    CHECK(feature(fv, "token_count") == oracle.token_count);
    CHECK(feature(fv, "mean_token_len") == oracle.mean_token_len);
    CHECK(feature(fv, "punctuation_ratio") == oracle.punctuation_ratio);
    CHECK(feature(fv, "digit_ratio") == oracle.digit_ratio);
    CHECK(feature(fv, "uppercase_ratio") == oracle.uppercase_ratio);
    CHECK(feature(fv, "type_token_ratio") == oracle.type_token_ratio);
    // Frozen golden values (independently recomputed).
    CHECK(feature(fv, "char_count") == 65.0);
    CHECK(feature(fv, "token_count") == 8.0);
    CHECK(feature(fv, "mean_token_len") == doctest::Approx(7.375));
    CHECK(feature(fv, "punctuation_ratio") == doctest::Approx(0.125));
    CHECK(feature(fv, "uppercase_ratio") == 0.0);
    CHECK(feature(fv, "type_token_ratio") == 1.0);
  }
}

TEST_CASE("surface features stay finite on arbitrary UTF-8") {
  Rng rng(11);
  const char* samples[] = {".",    "...",     "¡¿»«",  "1905",      "Ёё Ъъ",
                           "a\tb", "x y", "—",     "\"quoted\"", "白猫と黒猫"};
  for (const char* s : samples) {
    const FeatureVector fv = surface_features(Document{"1", s});
    for (double v : fv.values) CHECK(std::isfinite(v));
  }
  // Random byte-ish strings made of valid codepoints.
  for (int i = 0; i < 40; ++i) {
    std::string text;
    const std::size_t len = 1 + rng.below(60);
    for (std::size_t j = 0; j < len; ++j) {
      const std::uint64_t pick = rng.below(4);
      if (pick == 0) {
        text += static_cast<char>('!' + rng.below(90));
      } else if (pick == 1) {
        text::append_utf8(text, static_cast<char32_t>(0x410 + rng.below(0x40)));
      } else if (pick == 2) {
        text += ' ';
      } else {
        text::append_utf8(text, static_cast<char32_t>(0x2010 + rng.below(0x20)));
      }
    }
    if (tokenize(text).empty()) continue;
    const FeatureVector fv = surface_features(Document{"f", text.empty() ? "x" : text});
    for (double v : fv.values) CHECK(std::isfinite(v));
  }
}

TEST_CASE("lm features") {
  const Dataset corpus = testing::make_binary_corpus(60, 7);
  const NGramModel lm = NGramModel::train(corpus, small_lm_config());
  const std::vector<int> edges = {10, 100, 1000};

  SUBCASE("identical models give exactly zero ll_diff") {
    for (std::size_t i = 0; i < 10; ++i) {
      const FeatureVector fv = lm_features(corpus.document(i), lm, lm, edges);
      CHECK(feature(fv, "ll_diff") == 0.0);
      CHECK(feature(fv, "mean_ll_human") == feature(fv, "mean_ll_machine"));
    }
  }
  SUBCASE("names are ordered and histogram blocks sum to one") {
    const FeatureVector fv = lm_features(corpus.document(0), lm, lm, edges);
    REQUIRE(fv.names.size() == 3 + 2 * (edges.size() + 1));
    CHECK(fv.names[0] == "mean_ll_human");
    CHECK(fv.names[1] == "mean_ll_machine");
    CHECK(fv.names[2] == "ll_diff");
    CHECK(fv.names[3] == "rank_human_le10");
    CHECK(fv.names[6] == "rank_human_gt1000");
    CHECK(fv.names[7] == "rank_machine_le10");
    double human_sum = 0.0;
    double machine_sum = 0.0;
    for (std::size_t i = 0; i < edges.size() + 1; ++i) {
      human_sum += fv.values[3 + i];
      machine_sum += fv.values[3 + edges.size() + 1 + i];
    }
    CHECK(human_sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(machine_sum == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("machine-corpus documents have negative ll_diff in >= 95/100 trials") {
    const auto words = testing::word_bank(80, 50);
    const testing::MarkovSource human_src(words, 51, 6, 0.5);
    const testing::MarkovSource machine_src(words, 52, 2, 0.9);
    Rng gen(53);
    std::vector<std::vector<std::string>> human_docs;
    std::vector<std::vector<std::string>> machine_docs;
    std::vector<std::string> machine_raw;
    for (const auto& s : human_src.sentences(gen, 120, 6, 16)) human_docs.push_back(tokenize(s));
    for (const auto& s : machine_src.sentences(gen, 120, 6, 16)) {
      machine_raw.push_back(s);
      machine_docs.push_back(tokenize(s));
    }
    LmConfig config;
    config.order = 3;
    config.add_k = 0.1;
    const NGramModel human_lm = NGramModel::train(human_docs, config);
    const NGramModel machine_lm = NGramModel::train(machine_docs, config);

    Rng trial(54);
    int negative = 0;
    for (int i = 0; i < 100; ++i) {
      const std::string& doc = machine_raw[trial.below(machine_raw.size())];
      const FeatureVector fv =
          lm_features(Document{"t", doc}, human_lm, machine_lm, edges);
      if (feature(fv, "ll_diff") < 0.0) ++negative;
    }
    CHECK(negative >= 95);
  }
  SUBCASE("all-OOV document still yields finite features") {
    const FeatureVector fv =
        lm_features(Document{"o", "qqqq wwww eeee"}, lm, lm, edges);
    for (double v : fv.values) CHECK(std::isfinite(v));
  }
}

TEST_CASE("standardizer") {
  FeatureMatrix m(std::vector<std::string>{"f1", "f2"});
  m.append_row("a", std::vector<double>{1.0, 5.0});
  m.append_row("b", std::vector<double>{2.0, 5.0});
  m.append_row("c", std::vector<double>{3.0, 5.0});

  const Standardizer s = fit_standardizer(m);
  const FeatureMatrix z = apply_standardizer(s, m);

  SUBCASE("transformed training column has mean 0 and population stddev 1") {
    double mean = 0.0;
    for (std::size_t r = 0; r < 3; ++r) mean += z.at(r, 0);
    mean /= 3.0;
    CHECK(std::abs(mean) <= 1e-9);
    double var = 0.0;
    for (std::size_t r = 0; r < 3; ++r) var += (z.at(r, 0) - mean) * (z.at(r, 0) - mean);
    CHECK(std::abs(std::sqrt(var / 3.0) - 1.0) <= 1e-9);
  }
  SUBCASE("constant column maps to zeros without blowing up") {
    for (std::size_t r = 0; r < 3; ++r) CHECK(z.at(r, 1) == 0.0);
  }
  SUBCASE("test rows are transformed with train statistics (oracle check)") {
    FeatureMatrix test(std::vector<std::string>{"f1", "f2"});
    test.append_row("t1", std::vector<double>{10.0, 7.0});
    test.append_row("t2", std::vector<double>{-4.0, 5.0});
    const FeatureMatrix zt = apply_standardizer(s, test);
    const std::vector<double> train_col = {1.0, 2.0, 3.0};
    CHECK(zt.at(0, 0) == doctest::Approx(testing::zscore_apply(train_col, 10.0)).epsilon(1e-12));
    CHECK(zt.at(1, 0) == doctest::Approx(testing::zscore_apply(train_col, -4.0)).epsilon(1e-12));
  }
  SUBCASE("statistics depend only on the fitted matrix") {
    FeatureMatrix other(std::vector<std::string>{"f1", "f2"});
    other.append_row("x", std::vector<double>{1000.0, -1000.0});
    const Standardizer before = s;
    (void)apply_standardizer(s, other);
    CHECK(before.mean == s.mean);
    CHECK(before.stddev == s.stddev);
  }
  SUBCASE("name mismatch is rejected") {
    FeatureMatrix wrong(std::vector<std::string>{"f1", "other"});
    wrong.append_row("w", std::vector<double>{0.0, 0.0});
    CHECK_THROWS_AS(apply_standardizer(s, wrong), InputError);
  }
}

TEST_CASE("feature extraction is stable across calls") {
  const Dataset corpus = testing::make_binary_corpus(10, 13);
  const FeatureMatrix a = surface_feature_matrix(corpus);
  const FeatureMatrix b = surface_feature_matrix(corpus);
  CHECK(a.names() == b.names());
  CHECK(a.values() == b.values());
}

TEST_CASE("feature CSV round-trips at full precision") {
  Rng rng(3);
  FeatureMatrix m(std::vector<std::string>{"alpha", "beta", "gamma"});
  for (int r = 0; r < 12; ++r) {
    std::vector<double> row = {rng.uniform01() * 1e6, -rng.uniform01() * 1e-7,
                               rng.uniform01() - 0.5};
    m.append_row("row" + std::to_string(r), row);
  }
  const fs::path path = fs::temp_directory_path() / "gendetect_features.csv";
  save_feature_matrix(m, path);
  const FeatureMatrix loaded = load_feature_matrix(path);
  CHECK(loaded.names() == m.names());
  CHECK(loaded.ids() == m.ids());
  CHECK(loaded.values() == m.values());  // exact, via shortest round-trip formatting
}
