#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ctxrescore/corpus.hpp"

namespace ctxrescore {

/// Conditioning pair for one scoring call: log P(target | context).
struct ScoreRequest {
  TokenSeq context;
  TokenSeq target;
};

/// token_logprobs[t] = ln P(target[t] | context ++ target[0..t)).
struct ScoreResponse {
  std::vector<double> token_logprobs;

  double total() const;
};

/// Per-element failure reported by batch_score.
struct ScoreFailure {
  std::string message;
  bool retriable = false;
  bool length_exceeded = false;
};

using ScoreOutcome = std::variant<ScoreResponse, ScoreFailure>;

/// Conditional token log-prob provider. Implementations must return the same
/// values for concurrent calls as for serial ones.
class LmScorer {
 public:
  virtual ~LmScorer() = default;

  virtual TokenSeq tokenize(std::string_view text) const = 0;

  /// Throws LengthError when context + target exceeds max_len(), ScorerError
  /// for invalid requests, TransportError for retriable remote failures.
  virtual ScoreResponse score(const ScoreRequest& req) const = 0;

  /// Element-wise score(); failures are captured per element.
  virtual std::vector<ScoreOutcome> batch_score(std::span<const ScoreRequest> reqs) const;

  virtual std::size_t vocab_size() const = 0;
  virtual std::size_t max_len() const = 0;
  virtual std::string name() const = 0;

 protected:
  /// Shared request checks: non-empty target, ids in vocabulary, length limit.
  void check_request(const ScoreRequest& req) const;
};

/// Every token has probability 1/V regardless of context.
/// Tokenizes on whitespace and hashes each word into [0, V).
class UniformScorer final : public LmScorer {
 public:
  explicit UniformScorer(std::size_t vocab_size, std::size_t max_len = kDefaultMaxLen);

  TokenSeq tokenize(std::string_view text) const override;
  ScoreResponse score(const ScoreRequest& req) const override;
  std::size_t vocab_size() const override { return vocab_size_; }
  std::size_t max_len() const override { return max_len_; }
  std::string name() const override;

  static constexpr std::size_t kDefaultMaxLen = std::size_t{1} << 20;

 private:
  std::size_t vocab_size_;
  std::size_t max_len_;
};

/// Splits on ASCII whitespace. Shared by the offline scorers.
std::vector<std::string_view> split_words(std::string_view text);

/// Builds a scorer from a spec string: "uniform[:V]", "ngram:PATH[:ORDER]",
/// "remote:URL" or "remote" (URL from CTX_RESCORE_SCORER_URL).
std::unique_ptr<LmScorer> make_scorer(std::string_view spec, std::size_t max_len = 0);

}  // namespace ctxrescore
