#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gendetect/corpus.hpp"

namespace gendetect {

struct LmConfig {
  int order = 3;
  double add_k = 0.1;
  int min_count = 1;
  // One weight per order 1..n; empty means uniform. Must sum to 1.
  std::vector<double> interpolation_weights;
};

struct TokenScore {
  std::string token;
  double log_prob;  // natural log, <= 0
  int rank;         // 1-based position in the descending conditional distribution
};

// Interpolated add-k n-gram language model over a closed vocabulary with
// <unk>/<bos>/<eos> sentinels. Immutable once trained; conditional
// distributions are proper (sum to 1) and strictly positive.
class NGramModel {
 public:
  static constexpr int kVersion = 1;
  static constexpr std::int32_t kUnkId = 0;
  static constexpr std::int32_t kBosId = 1;
  static constexpr std::int32_t kEosId = 2;

  static NGramModel train(const std::vector<std::vector<std::string>>& token_docs,
                          const LmConfig& config);
  static NGramModel train(const Dataset& corpus, const LmConfig& config);

  int order() const { return order_; }
  double add_k() const { return add_k_; }
  const std::vector<double>& interpolation_weights() const { return weights_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  std::size_t vocab_size() const { return vocab_.size(); }

  // Id lookup; unknown tokens map to <unk>.
  std::int32_t token_id(std::string_view token) const;
  const std::string& token(std::int32_t id) const { return vocab_.at(static_cast<std::size_t>(id)); }

  // P(token | context). The context is the sequence of preceding token ids;
  // it is left-padded with <bos> / truncated to the model's order as needed.
  double cond_prob(std::span<const std::int32_t> context, std::int32_t token) const;

  // Full conditional distribution over the vocabulary, indexed by token id.
  std::vector<double> conditional_distribution(std::span<const std::int32_t> context) const;

  // One score per token plus a final <eos> score. Unknown tokens are scored
  // as <unk>; rank ties break by vocabulary order.
  std::vector<TokenScore> score_tokens(std::string_view text) const;

  // Mean per-token natural-log probability including <eos>.
  double mean_log_likelihood(std::string_view text) const;

  // Fractions of token ranks falling in (0, e1], (e1, e2], ..., (eN, inf).
  std::vector<double> rank_histogram(std::string_view text, std::span<const int> bin_edges) const;

  std::string to_json_string() const;
  static NGramModel from_json_string(std::string_view json_text);
  void save(const std::filesystem::path& path) const;
  static NGramModel load(const std::filesystem::path& path);

 private:
  NGramModel() = default;

  struct VecHash {
    std::size_t operator()(const std::vector<std::int32_t>& v) const {
      std::size_t h = 0xcbf29ce484222325ULL;
      for (std::int32_t x : v) {
        h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(x));
        h *= 0x100000001b3ULL;
      }
      return h;
    }
  };
  using CountMap = std::unordered_map<std::int32_t, std::int64_t>;
  using ContextCounts = std::unordered_map<std::vector<std::int32_t>, CountMap, VecHash>;
  using ContextTotals = std::unordered_map<std::vector<std::int32_t>, std::int64_t, VecHash>;

  // Tokens whose conditional probability exceeds the unseen-token floor,
  // with their probabilities; everything else in the vocabulary sits exactly
  // at `floor`.
  struct ContextStats {
    double floor = 0.0;
    std::vector<std::pair<std::int32_t, double>> boosted;  // sorted by token id
  };
  ContextStats context_stats(std::span<const std::int32_t> context) const;

  std::vector<std::int32_t> to_ids(std::string_view text) const;
  void count_sequence(const std::vector<std::int32_t>& tokens);
  struct Scored {
    std::int32_t token_id;
    double log_prob;
    int rank;
  };
  std::vector<Scored> score_ids(std::span<const std::int32_t> ids, bool with_ranks) const;

  int order_ = 0;
  double add_k_ = 0.0;
  std::vector<double> weights_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::int32_t> vocab_index_;
  ContextCounts counts_;
  ContextTotals totals_;
};

}  // namespace gendetect
