// Times the OpenMP kernels against their serial reference implementations
// on a synthetic corpus and checks that both produce identical bytes.

#include <chrono>
#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gendetect/classifiers.hpp"
#include "gendetect/corpus.hpp"
#include "gendetect/features.hpp"
#include "gendetect/ngram_lm.hpp"
#include "gendetect/parallel.hpp"
#include "gendetect/rng.hpp"

using namespace gendetect;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Dataset synthetic_corpus(std::size_t docs, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> words;
  for (int i = 0; i < 400; ++i) {
    static const char* syllables[] = {"ka", "ro", "mi", "tu", "sel", "dor",
                                      "va", "lin", "pe", "zh", "an", "ost"};
    std::string w;
    const std::size_t len = 2 + rng.below(3);
    for (std::size_t s = 0; s < len; ++s) w += syllables[rng.below(12)];
    words.push_back(w);
  }
  std::vector<Document> out;
  std::vector<int> labels;
  for (std::size_t i = 0; i < docs; ++i) {
    std::string text;
    const std::size_t len = 10 + rng.below(20);
    for (std::size_t t = 0; t < len; ++t) {
      if (t) text += ' ';
      text += words[rng.below(words.size())];
    }
    text += '.';
    out.push_back(Document{std::to_string(i), std::move(text)});
    labels.push_back(static_cast<int>(i % 2));
  }
  return Dataset(LabelSpace::binary(), std::move(out), std::move(labels));
}

template <class F>
double time_best_of(int repeats, F&& f) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    const auto start = std::chrono::steady_clock::now();
    f();
    best = std::min(best, seconds_since(start));
  }
  return best;
}

void report(const std::string& name, double serial_s, double parallel_s, bool identical) {
  std::cout << name << ": serial " << serial_s << " s, parallel " << parallel_s << " s, speedup "
            << serial_s / parallel_s << "x, outputs " << (identical ? "identical" : "DIFFER")
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel benchmark: serial reference vs OpenMP"};
  std::size_t docs = 4000;
  int threads = 0;  // 0 = all hardware threads
  int repeats = 3;
  app.add_option("--docs", docs, "Synthetic corpus size");
  app.add_option("--threads", threads, "Worker threads (0 = hardware)");
  app.add_option("--repeats", repeats, "Repetitions, best time kept");
  CLI11_PARSE(app, argc, argv);

  const Dataset corpus = synthetic_corpus(docs, 20240601);
  LmConfig lm_config;
  lm_config.order = 3;
  const NGramModel lm = NGramModel::train(corpus, lm_config);
  const std::vector<int> edges = {10, 100, 1000};

  std::cout << "corpus: " << corpus.size() << " documents, LM vocab " << lm.vocab_size() << "\n";

  // Surface feature extraction.
  parallel::set_threads(1);
  FeatureMatrix surface_serial;
  const double t_surface_serial =
      time_best_of(repeats, [&] { surface_serial = surface_feature_matrix_serial(corpus); });
  parallel::set_threads(threads);
  FeatureMatrix surface_parallel;
  const double t_surface_parallel =
      time_best_of(repeats, [&] { surface_parallel = surface_feature_matrix(corpus); });
  report("surface features", t_surface_serial, t_surface_parallel,
         surface_serial.values() == surface_parallel.values());

  // LM feature extraction (mean log-likelihood + rank histograms).
  parallel::set_threads(1);
  FeatureMatrix lmf_serial;
  const double t_lmf_serial = time_best_of(
      repeats, [&] { lmf_serial = lm_feature_matrix_serial(corpus, lm, lm, edges); });
  parallel::set_threads(threads);
  FeatureMatrix lmf_parallel;
  const double t_lmf_parallel =
      time_best_of(repeats, [&] { lmf_parallel = lm_feature_matrix(corpus, lm, lm, edges); });
  report("lm features", t_lmf_serial, t_lmf_parallel, lmf_serial.values() == lmf_parallel.values());

  // Logistic regression gradient.
  const FeatureMatrix features = surface_feature_matrix(corpus);
  const std::vector<int> y(corpus.labels().begin(), corpus.labels().end());
  const std::size_t d = features.cols();
  const std::size_t c = 2;
  std::vector<double> w(c * d, 0.01);
  std::vector<double> b(c, 0.0);
  std::vector<double> gw_serial(c * d), gb_serial(c), gw_par(c * d), gb_par(c);

  parallel::set_threads(1);
  const double t_grad_serial = time_best_of(repeats * 10, [&] {
    logreg_loss_grad_serial(features.values(), y, features.rows(), d, c, w, b, 1e-3, gw_serial,
                            gb_serial);
  });
  parallel::set_threads(threads);
  const double t_grad_parallel = time_best_of(repeats * 10, [&] {
    logreg_loss_grad(features.values(), y, features.rows(), d, c, w, b, 1e-3, gw_par, gb_par);
  });
  // The chunked kernel's summation order differs from the straight loop, so
  // compare within a tolerance here; thread-count invariance of the chunked
  // kernel itself is asserted exactly in the test suite.
  double max_diff = 0.0;
  for (std::size_t i = 0; i < gw_serial.size(); ++i) {
    max_diff = std::max(max_diff, std::abs(gw_serial[i] - gw_par[i]));
  }
  report("logreg gradient", t_grad_serial, t_grad_parallel, max_diff < 1e-9);

  return 0;
}
