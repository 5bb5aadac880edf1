#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <span>
#include <vector>

#include "ctxrescore/corpus.hpp"
#include "ctxrescore/lm_scorer.hpp"
#include "ctxrescore/text_prep.hpp"

namespace ctxrescore {

struct RescoreConfig {
  double alpha = 0.4;       // language weight
  double gamma = 0.5;       // per-token length reward
  std::size_t context_len = 0;  // carried-over tokens
  PrepConfig prep;
  // Text whose tokens are pushed into the context after every selection.
  // Empty means selections are concatenated directly, which for whitespace
  // tokenizers is the same as joining them with a single space.
  std::string context_separator;

  /// Throws ValidationError on negative or non-finite weights.
  void validate() const;
};

/// Trailing window of the selected-hypothesis token stream of one session.
/// The window ignores hypothesis boundaries: it may start mid-hypothesis.
class ContextBuffer {
 public:
  explicit ContextBuffer(std::size_t capacity) : capacity_(capacity) {}

  void append(std::span<const TokenId> tokens);
  void clear() { ids_.clear(); }

  const TokenSeq& ids() const { return ids_; }
  std::size_t capacity() const { return capacity_; }

  bool operator==(const ContextBuffer&) const = default;

 private:
  std::size_t capacity_;
  TokenSeq ids_;
};

/// Value form of ContextBuffer::append.
ContextBuffer append_best(ContextBuffer ctx, std::span<const TokenId> tokens);

struct ScoredHypothesis {
  Hypothesis hypothesis;
  double lm_logprob = 0.0;
  std::size_t token_len = 0;
  double combined = 0.0;
};

/// asr + alpha * lm + gamma * len. Throws ValidationError on non-finite input.
double combine_scores(double asr, double lm, std::size_t len, const RescoreConfig& cfg);

struct NBestResult {
  std::size_t selected = 0;  // index into `all`
  std::vector<ScoredHypothesis> all;

  const ScoredHypothesis& best() const { return all.at(selected); }
};

/// Applies normalize_sentence and the scorer's tokenizer to every hypothesis.
void prepare_hypotheses(NBestList& nbest, const PrepConfig& prep, const LmScorer& scorer);
void prepare_session(NBestSession& session, const PrepConfig& prep, const LmScorer& scorer);

/// Scores each hypothesis as ln P_lm(tokens | ctx) and selects the argmax of
/// the combined score; ties go to the lowest rank. Hypotheses must already be
/// prepared. Empty-token hypotheses keep their pure ASR score.
NBestResult rescore_nbest(const NBestList& nbest, const ContextBuffer& ctx,
                          const RescoreConfig& cfg, const LmScorer& scorer);

/// Selection from precomputed LM scores; shared by rescore_nbest and the
/// cached sweep path. lm_logprob/token_len of `all` must be filled.
std::size_t select_best(std::vector<ScoredHypothesis>& all, const RescoreConfig& cfg);

/// Walks one session in order, carrying the selected tokens forward.
class SessionRescorer {
 public:
  SessionRescorer(const RescoreConfig& cfg, const LmScorer& scorer);

  NBestResult step(const NBestList& nbest);

  const ContextBuffer& context() const { return ctx_; }

 private:
  RescoreConfig cfg_;
  const LmScorer& scorer_;
  ContextBuffer ctx_;
  TokenSeq separator_;
  std::optional<std::string> last_speaker_;
};

/// One ScoredHypothesis per utterance, in session order. The context starts
/// empty. Hypotheses must be prepared.
std::vector<ScoredHypothesis> rescore_session(const NBestSession& session,
                                              const RescoreConfig& cfg, const LmScorer& scorer);

/// rescore_session over independent sessions, run on up to `jobs` threads.
std::vector<std::vector<ScoredHypothesis>> rescore_corpus(
    const std::vector<NBestSession>& sessions, const RescoreConfig& cfg, const LmScorer& scorer,
    std::size_t jobs = 1);

/// Rank-1 hypothesis of every utterance.
std::vector<Hypothesis> baseline_select(const NBestSession& session);

}  // namespace ctxrescore
