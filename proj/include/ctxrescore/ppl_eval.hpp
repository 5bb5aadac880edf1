#pragma once

#include <cstddef>
#include <vector>

#include "ctxrescore/corpus.hpp"
#include "ctxrescore/lm_scorer.hpp"
#include "ctxrescore/text_prep.hpp"

namespace ctxrescore {

struct PplReport {
  std::size_t token_count = 0;
  double sum_logprob = 0.0;

  /// exp(-sum_logprob / token_count). Throws ValidationError when no tokens.
  double ppl() const;

  PplReport& operator+=(const PplReport& other) {
    token_count += other.token_count;
    sum_logprob += other.sum_logprob;
    return *this;
  }
};

/// Teacher-forced token perplexity of one ordered session. Each reference is
/// normalized with `prep`, scored given the last `context_len` tokens of the
/// preceding references, then appended to that window.
PplReport ppl_session(const ReferenceSession& session, std::size_t context_len,
                      const LmScorer& scorer, const PrepConfig& prep);

/// Pools token counts and log-probs over sessions; context resets per session.
PplReport ppl_corpus(const std::vector<ReferenceSession>& sessions, std::size_t context_len,
                     const LmScorer& scorer, const PrepConfig& prep, std::size_t jobs = 1);

}  // namespace ctxrescore
