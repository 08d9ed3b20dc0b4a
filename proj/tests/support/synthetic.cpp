#include "support/synthetic.hpp"

#include <algorithm>
#include <unordered_set>

#include "gendetect/errors.hpp"
#include "gendetect/text.hpp"

namespace gendetect::testing {

std::vector<std::string> word_bank(std::size_t size, std::uint64_t seed) {
  static const char* syllables[] = {"ba", "ko", "ri", "mu", "ta", "sel", "dor", "vi",
                                    "lan", "pe", "zho", "an", "ost", "ne", "gu", "fy"};
  constexpr std::size_t kSyllables = sizeof(syllables) / sizeof(syllables[0]);
  Rng rng(seed);
  std::vector<std::string> words;
  words.reserve(size);
  std::unordered_set<std::string> seen;
  while (words.size() < size) {
    std::string w;
    const std::size_t len = 2 + rng.below(3);
    for (std::size_t s = 0; s < len; ++s) w += syllables[rng.below(kSyllables)];
    if (seen.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

MarkovSource::MarkovSource(std::vector<std::string> words, std::uint64_t seed,
                           std::size_t branching, double focus)
    : words_(std::move(words)), focus_(focus) {
  Rng rng(seed);
  preferred_.resize(words_.size());
  for (auto& prefs : preferred_) {
    for (std::size_t b = 0; b < branching; ++b) {
      prefs.push_back(static_cast<std::size_t>(rng.below(words_.size())));
    }
  }
}

std::string MarkovSource::sentence(Rng& rng, std::size_t min_words, std::size_t max_words) const {
  const std::size_t len = min_words + rng.below(max_words - min_words + 1);
  std::string out;
  std::size_t current = static_cast<std::size_t>(rng.below(words_.size()));
  for (std::size_t i = 0; i < len; ++i) {
    if (i) {
      if (rng.uniform01() < 0.06) out += ",";
      out += ' ';
    }
    out += words_[current];
    const auto& prefs = preferred_[current];
    if (rng.uniform01() < focus_) {
      current = prefs[rng.below(prefs.size())];
    } else {
      current = static_cast<std::size_t>(rng.below(words_.size()));
    }
  }
  out += '.';
  return out;
}

std::vector<std::string> MarkovSource::sentences(Rng& rng, std::size_t count,
                                                 std::size_t min_words,
                                                 std::size_t max_words) const {
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sentence(rng, min_words, max_words));
  return out;
}

std::string sample_from_lm(const NGramModel& lm, Rng& rng, std::size_t max_tokens) {
  std::vector<std::int32_t> context;
  std::string out;
  for (std::size_t step = 0; step < max_tokens; ++step) {
    std::vector<double> dist = lm.conditional_distribution(context);
    dist[static_cast<std::size_t>(NGramModel::kUnkId)] = 0.0;
    dist[static_cast<std::size_t>(NGramModel::kBosId)] = 0.0;
    if (step == 0) dist[static_cast<std::size_t>(NGramModel::kEosId)] = 0.0;
    const auto tok = static_cast<std::int32_t>(rng.categorical(dist));
    if (tok == NGramModel::kEosId) break;
    if (!out.empty()) out += ' ';
    out += lm.token(tok);
    context.push_back(tok);
  }
  if (out.empty()) out = lm.vocab().size() > 3 ? lm.vocab()[3] : "x";
  return out;
}

Dataset make_binary_corpus(std::size_t docs, std::uint64_t seed, const std::string& id_prefix) {
  const std::vector<std::string> words = word_bank(300, seed);
  const MarkovSource human(words, seed + 1, 6, 0.55);
  const MarkovSource machine(words, seed + 2, 2, 0.9);
  Rng rng(seed + 3);
  std::vector<Document> documents;
  std::vector<int> labels;
  for (std::size_t i = 0; i < docs; ++i) {
    const bool is_machine = i % 2 == 1;
    const MarkovSource& source = is_machine ? machine : human;
    documents.push_back(Document{id_prefix + std::to_string(i), source.sentence(rng, 8, 24)});
    labels.push_back(is_machine ? 1 : 0);
  }
  return Dataset(LabelSpace::binary(), std::move(documents), std::move(labels));
}

DetectionFixture make_detection_fixture(std::size_t train_docs, std::size_t test_docs,
                                        std::uint64_t seed) {
  const std::vector<std::string> words = word_bank(350, seed);
  const MarkovSource human(words, seed + 11, 7, 0.5);
  const MarkovSource machine_base(words, seed + 22, 2, 0.9);

  // The "generator": a 3-gram LM fitted to the low-entropy source. Sampling
  // uses a near-zero smoothing constant so draws follow the fitted counts
  // instead of the add-k floor.
  Rng base_rng(seed + 33);
  std::vector<std::vector<std::string>> base_tokens;
  for (const std::string& s : machine_base.sentences(base_rng, 1500, 8, 24)) {
    base_tokens.push_back(tokenize(s));
  }
  LmConfig generator_config;
  generator_config.order = 3;
  generator_config.add_k = 1e-6;
  const NGramModel generator = NGramModel::train(base_tokens, generator_config);

  Rng rng(seed + 44);
  const auto build = [&](std::size_t count, const std::string& prefix) {
    std::vector<Document> documents;
    std::vector<int> labels;
    for (std::size_t i = 0; i < count; ++i) {
      const bool is_machine = i % 2 == 1;
      std::string text = is_machine ? sample_from_lm(generator, rng, 30)
                                    : human.sentence(rng, 8, 24);
      documents.push_back(Document{prefix + std::to_string(i), std::move(text)});
      labels.push_back(is_machine ? 1 : 0);
    }
    return Dataset(LabelSpace::binary(), std::move(documents), std::move(labels));
  };
  DetectionFixture fixture{build(train_docs, "tr"), build(test_docs, "te")};
  return fixture;
}

Dataset make_marker_corpus(std::size_t docs, std::uint64_t seed, const std::string& id_prefix) {
  const std::vector<std::string> words = word_bank(100, seed);
  Rng rng(seed + 5);
  std::vector<Document> documents;
  std::vector<int> labels;
  for (std::size_t i = 0; i < docs; ++i) {
    const bool is_machine = i % 2 == 1;
    const bool group_a = (i / 2) % 2 == 0;
    std::string text = group_a ? "grpa" : "grpb";
    text += is_machine ? " labm" : " labh";
    const std::size_t len = 4 + rng.below(6);
    for (std::size_t t = 0; t < len; ++t) {
      text += ' ';
      text += words[rng.below(words.size())];
    }
    text += '.';
    documents.push_back(Document{id_prefix + std::to_string(i), std::move(text)});
    labels.push_back(is_machine ? 1 : 0);
  }
  return Dataset(LabelSpace::binary(), std::move(documents), std::move(labels));
}

}  // namespace gendetect::testing
