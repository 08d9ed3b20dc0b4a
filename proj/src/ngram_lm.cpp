#include "gendetect/ngram_lm.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "gendetect/errors.hpp"
#include "gendetect/text.hpp"
#include "gendetect/util.hpp"

namespace gendetect {

namespace {

constexpr const char* kUnk = "<unk>";
constexpr const char* kBos = "<bos>";
constexpr const char* kEos = "<eos>";

void validate_config(const LmConfig& config) {
  if (config.order < 1) throw InputError("n-gram order must be >= 1");
  if (!(config.add_k > 0.0)) throw InputError("add_k must be > 0");
  if (config.min_count < 1) throw InputError("min_count must be >= 1");
  if (!config.interpolation_weights.empty()) {
    if (config.interpolation_weights.size() != static_cast<std::size_t>(config.order)) {
      throw InputError("interpolation weights must have one entry per order");
    }
    double sum = 0.0;
    for (double w : config.interpolation_weights) {
      if (w < 0.0) throw InputError("interpolation weights must be non-negative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw InputError("interpolation weights must sum to 1, got " + format_double(sum));
    }
  }
}

}  // namespace

NGramModel NGramModel::train(const Dataset& corpus, const LmConfig& config) {
  std::vector<std::vector<std::string>> token_docs;
  token_docs.reserve(corpus.size());
  for (const Document& doc : corpus.documents()) token_docs.push_back(tokenize(doc.text));
  return train(token_docs, config);
}

NGramModel NGramModel::train(const std::vector<std::vector<std::string>>& token_docs,
                             const LmConfig& config) {
  validate_config(config);
  if (token_docs.empty()) throw TrainError("empty corpus");

  NGramModel model;
  model.order_ = config.order;
  model.add_k_ = config.add_k;
  if (config.interpolation_weights.empty()) {
    model.weights_.assign(static_cast<std::size_t>(config.order),
                          1.0 / static_cast<double>(config.order));
  } else {
    model.weights_ = config.interpolation_weights;
  }

  // Closed vocabulary: sentinels first, then tokens meeting min_count in
  // byte order.
  std::unordered_map<std::string, std::int64_t> freq;
  for (const auto& doc : token_docs) {
    for (const auto& tok : doc) ++freq[tok];
  }
  std::vector<std::string> kept;
  kept.reserve(freq.size());
  for (const auto& [tok, count] : freq) {
    if (count >= config.min_count) kept.push_back(tok);
  }
  std::sort(kept.begin(), kept.end());
  model.vocab_ = {kUnk, kBos, kEos};
  model.vocab_.insert(model.vocab_.end(), kept.begin(), kept.end());
  for (std::size_t i = 0; i < model.vocab_.size(); ++i) {
    model.vocab_index_.emplace(model.vocab_[i], static_cast<std::int32_t>(i));
  }

  for (const auto& doc : token_docs) {
    std::vector<std::int32_t> ids;
    ids.reserve(doc.size());
    for (const auto& tok : doc) ids.push_back(model.token_id(tok));
    model.count_sequence(ids);
  }
  return model;
}

void NGramModel::count_sequence(const std::vector<std::int32_t>& tokens) {
  const std::size_t pad = static_cast<std::size_t>(order_ - 1);
  std::vector<std::int32_t> seq;
  seq.reserve(pad + tokens.size() + 1);
  seq.insert(seq.end(), pad, kBosId);
  seq.insert(seq.end(), tokens.begin(), tokens.end());
  seq.push_back(kEosId);

  std::vector<std::int32_t> ctx;
  for (std::size_t pos = pad; pos < seq.size(); ++pos) {
    const std::int32_t target = seq[pos];
    for (int o = 1; o <= order_; ++o) {
      const std::size_t len = static_cast<std::size_t>(o - 1);
      ctx.assign(seq.begin() + static_cast<std::ptrdiff_t>(pos - len),
                 seq.begin() + static_cast<std::ptrdiff_t>(pos));
      ++counts_[ctx][target];
      ++totals_[ctx];
    }
  }
}

std::int32_t NGramModel::token_id(std::string_view token) const {
  const auto it = vocab_index_.find(std::string(token));
  return it == vocab_index_.end() ? kUnkId : it->second;
}

NGramModel::ContextStats NGramModel::context_stats(std::span<const std::int32_t> context) const {
  // Normalize to exactly order-1 preceding ids, left-padded with <bos>.
  const std::size_t ctx_len = static_cast<std::size_t>(order_ - 1);
  std::vector<std::int32_t> full(ctx_len, kBosId);
  const std::size_t take = std::min(context.size(), ctx_len);
  for (std::size_t i = 0; i < take; ++i) {
    full[ctx_len - take + i] = context[context.size() - take + i];
  }

  const double v = static_cast<double>(vocab_.size());
  ContextStats stats;
  std::unordered_map<std::int32_t, double> boost;
  std::vector<std::int32_t> key;
  for (int o = 1; o <= order_; ++o) {
    const double w = weights_[static_cast<std::size_t>(o - 1)];
    const std::size_t len = static_cast<std::size_t>(o - 1);
    key.assign(full.end() - static_cast<std::ptrdiff_t>(len), full.end());
    const auto tot_it = totals_.find(key);
    if (tot_it == totals_.end()) {
      // Unseen context: this order contributes the uniform distribution.
      stats.floor += w / v;
      continue;
    }
    const double denom = static_cast<double>(tot_it->second) + add_k_ * v;
    stats.floor += w * add_k_ / denom;
    const auto& count_map = counts_.find(key)->second;
    for (const auto& [tok, cnt] : count_map) {
      boost[tok] += w * static_cast<double>(cnt) / denom;
    }
  }
  stats.boosted.reserve(boost.size());
  for (const auto& [tok, extra] : boost) {
    const double p = stats.floor + extra;
    if (p > stats.floor) stats.boosted.emplace_back(tok, p);
  }
  std::sort(stats.boosted.begin(), stats.boosted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return stats;
}

double NGramModel::cond_prob(std::span<const std::int32_t> context, std::int32_t token) const {
  const ContextStats stats = context_stats(context);
  for (const auto& [tok, p] : stats.boosted) {
    if (tok == token) return p;
  }
  return stats.floor;
}

std::vector<double> NGramModel::conditional_distribution(
    std::span<const std::int32_t> context) const {
  const ContextStats stats = context_stats(context);
  std::vector<double> dist(vocab_.size(), stats.floor);
  for (const auto& [tok, p] : stats.boosted) dist[static_cast<std::size_t>(tok)] = p;
  return dist;
}

std::vector<std::int32_t> NGramModel::to_ids(std::string_view text) const {
  const std::vector<std::string> tokens = tokenize(text);
  std::vector<std::int32_t> ids;
  ids.reserve(tokens.size());
  for (const auto& tok : tokens) ids.push_back(token_id(tok));
  return ids;
}

std::vector<NGramModel::Scored> NGramModel::score_ids(std::span<const std::int32_t> ids,
                                                      bool with_ranks) const {
  const std::size_t pad = static_cast<std::size_t>(order_ - 1);
  std::vector<std::int32_t> seq(pad, kBosId);
  seq.insert(seq.end(), ids.begin(), ids.end());
  seq.push_back(kEosId);

  std::vector<Scored> out;
  out.reserve(ids.size() + 1);
  for (std::size_t pos = pad; pos < seq.size(); ++pos) {
    const std::int32_t target = seq[pos];
    const std::span<const std::int32_t> context(seq.data() + pos - pad, pad);
    const ContextStats stats = context_stats(context);

    double p = stats.floor;
    for (const auto& [tok, bp] : stats.boosted) {
      if (tok == target) {
        p = bp;
        break;
      }
    }

    int rank = 0;
    if (with_ranks) {
      if (p > stats.floor) {
        int before = 0;
        for (const auto& [tok, bp] : stats.boosted) {
          if (bp > p || (bp == p && tok < target)) ++before;
        }
        rank = before + 1;
      } else {
        // Target sits at the floor: every boosted token outranks it, and
        // floor-probability ties resolve by vocabulary order.
        int boosted_below_id = 0;
        for (const auto& [tok, bp] : stats.boosted) {
          (void)bp;
          if (tok < target) ++boosted_below_id;
        }
        rank = static_cast<int>(stats.boosted.size()) + (target - boosted_below_id) + 1;
      }
    }
    out.push_back(Scored{target, std::log(p), rank});
  }
  return out;
}

std::vector<TokenScore> NGramModel::score_tokens(std::string_view text) const {
  const std::vector<std::int32_t> ids = to_ids(text);
  const std::vector<Scored> scored = score_ids(ids, /*with_ranks=*/true);
  std::vector<TokenScore> out;
  out.reserve(scored.size());
  for (const Scored& s : scored) {
    out.push_back(TokenScore{token(s.token_id), s.log_prob, s.rank});
  }
  return out;
}

double NGramModel::mean_log_likelihood(std::string_view text) const {
  const std::vector<std::int32_t> ids = to_ids(text);
  if (ids.empty()) throw InputError("empty text");
  const std::vector<Scored> scored = score_ids(ids, /*with_ranks=*/false);
  double sum = 0.0;
  for (const Scored& s : scored) sum += s.log_prob;
  return sum / static_cast<double>(scored.size());
}

std::vector<double> NGramModel::rank_histogram(std::string_view text,
                                               std::span<const int> bin_edges) const {
  for (std::size_t i = 0; i < bin_edges.size(); ++i) {
    if (bin_edges[i] < 1 || (i > 0 && bin_edges[i] <= bin_edges[i - 1])) {
      throw InputError("bin edges must be strictly increasing positive integers");
    }
  }
  const std::vector<std::int32_t> ids = to_ids(text);
  if (ids.empty()) throw InputError("empty text");
  const std::vector<Scored> scored = score_ids(ids, /*with_ranks=*/true);

  std::vector<std::int64_t> bins(bin_edges.size() + 1, 0);
  for (const Scored& s : scored) {
    std::size_t bin = bin_edges.size();
    for (std::size_t i = 0; i < bin_edges.size(); ++i) {
      if (s.rank <= bin_edges[i]) {
        bin = i;
        break;
      }
    }
    ++bins[bin];
  }
  std::vector<double> fractions(bins.size());
  for (std::size_t i = 0; i < bins.size(); ++i) {
    fractions[i] = static_cast<double>(bins[i]) / static_cast<double>(scored.size());
  }
  return fractions;
}

std::string NGramModel::to_json_string() const {
  nlohmann::json j;
  j["version"] = kVersion;
  j["order"] = order_;
  j["add_k"] = add_k_;
  j["interpolation_weights"] = weights_;
  j["vocab"] = vocab_;

  // Deterministic bytes: contexts sorted lexicographically, tokens by id.
  std::vector<const std::vector<std::int32_t>*> keys;
  keys.reserve(counts_.size());
  for (const auto& [ctx, counts] : counts_) {
    (void)counts;
    keys.push_back(&ctx);
  }
  std::sort(keys.begin(), keys.end(),
            [](const auto* a, const auto* b) { return *a < *b; });
  nlohmann::json entries = nlohmann::json::array();
  for (const auto* ctx : keys) {
    const CountMap& counts = counts_.at(*ctx);
    std::vector<std::pair<std::int32_t, std::int64_t>> items(counts.begin(), counts.end());
    std::sort(items.begin(), items.end());
    nlohmann::json entry;
    entry["context"] = *ctx;
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [tok, cnt] : items) pairs.push_back({tok, cnt});
    entry["counts"] = pairs;
    entries.push_back(std::move(entry));
  }
  j["counts"] = std::move(entries);
  return j.dump();
}

NGramModel NGramModel::from_json_string(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad model JSON: ") + e.what());
  }
  try {
    if (!j.contains("version") || j["version"].get<int>() != kVersion) {
      throw InputError("unsupported n-gram model version");
    }
    NGramModel model;
    model.order_ = j.at("order").get<int>();
    model.add_k_ = j.at("add_k").get<double>();
    model.weights_ = j.at("interpolation_weights").get<std::vector<double>>();
    model.vocab_ = j.at("vocab").get<std::vector<std::string>>();
    if (model.order_ < 1 || !(model.add_k_ > 0.0) ||
        model.weights_.size() != static_cast<std::size_t>(model.order_) ||
        model.vocab_.size() < 3 || model.vocab_[0] != kUnk || model.vocab_[1] != kBos ||
        model.vocab_[2] != kEos) {
      throw InputError("inconsistent n-gram model fields");
    }
    for (std::size_t i = 0; i < model.vocab_.size(); ++i) {
      model.vocab_index_.emplace(model.vocab_[i], static_cast<std::int32_t>(i));
    }
    for (const auto& entry : j.at("counts")) {
      const auto ctx = entry.at("context").get<std::vector<std::int32_t>>();
      CountMap counts;
      std::int64_t total = 0;
      for (const auto& pair : entry.at("counts")) {
        const auto tok = pair.at(0).get<std::int32_t>();
        const auto cnt = pair.at(1).get<std::int64_t>();
        counts[tok] = cnt;
        total += cnt;
      }
      model.totals_[ctx] = total;
      model.counts_[ctx] = std::move(counts);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad model JSON: ") + e.what());
  }
}

void NGramModel::save(const std::filesystem::path& path) const {
  write_file(path, to_json_string());
}

NGramModel NGramModel::load(const std::filesystem::path& path) {
  return from_json_string(read_file(path));
}

}  // namespace gendetect
