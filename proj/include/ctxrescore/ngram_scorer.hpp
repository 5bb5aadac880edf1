#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ctxrescore/lm_scorer.hpp"

namespace ctxrescore {

/// Additively smoothed n-gram model over a closed vocabulary.
///
/// The vocabulary is every whitespace-separated word of the training text plus
/// two reserved symbols: <s> (id 0), which pads histories at the start of a
/// stream and is never predicted, and <unk> (id 1), which absorbs words unseen
/// in training. Each training line is one stream; sentences inside a line are
/// not separated, so histories run across sentence ends the same way the
/// rescoring context does.
///
///   P(w | h) = (c(h w) + k) / (c(h) + k * V)
///
/// where h is the last order-1 tokens of <s>^(order-1) ++ context ++ target[..t],
/// c(h) counts occurrences of h followed by any token, and V is the number of
/// predictable tokens (vocab_size() - 1).
class NgramScorer final : public LmScorer {
 public:
  struct Options {
    int order = 2;
    double add_k = 1.0;
    std::size_t max_len = std::size_t{1} << 20;
  };

  /// Each element of `lines` is one training stream.
  NgramScorer(const std::vector<std::string>& lines, Options opts);
  NgramScorer(const std::vector<std::string>& lines) : NgramScorer(lines, Options{}) {}

  static NgramScorer from_file(const std::filesystem::path& path, Options opts);

  TokenSeq tokenize(std::string_view text) const override;
  std::string detokenize(const TokenSeq& ids) const;

  ScoreResponse score(const ScoreRequest& req) const override;

  std::size_t vocab_size() const override { return words_.size(); }
  std::size_t max_len() const override { return opts_.max_len; }
  std::string name() const override;

  int order() const { return opts_.order; }
  TokenId id_of(std::string_view word) const;  // <unk> id for unknown words
  const std::string& word_of(TokenId id) const { return words_.at(static_cast<std::size_t>(id)); }

  static constexpr TokenId kBos = 0;
  static constexpr TokenId kUnk = 1;

 private:
  double logprob(const TokenSeq& history, TokenId next) const;

  Options opts_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> ids_;
  std::map<TokenSeq, std::size_t> history_counts_;
  std::map<TokenSeq, std::size_t> ngram_counts_;
};

}  // namespace ctxrescore
