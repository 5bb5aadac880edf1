#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ctxrescore/corpus.hpp"
#include "ctxrescore/lm_scorer.hpp"
#include "ctxrescore/rescorer.hpp"
#include "ctxrescore/wer_eval.hpp"

namespace ctxrescore {

struct SweepGrid {
  std::vector<double> alphas;
  std::vector<double> gammas;

  /// Non-empty, strictly ascending, finite and >= 0. Throws ValidationError.
  void validate() const;

  /// alpha in {0, 0.1, ..., 1.0}, gamma in {0, 0.25, ..., 1.0}.
  static SweepGrid defaults();
};

/// Parses "LO:HI:STEP" (inclusive) or a comma-separated list "0,0.3,0.4".
/// Range values are rounded to 1e-9 so 0:1:0.1 yields 0.3 rather than
/// 0.30000000000000004.
std::vector<double> parse_grid_axis(std::string_view text);

struct SweepPoint {
  double alpha = 0;
  double gamma = 0;
  WerReport report;
};

struct SweepResult {
  double best_alpha = 0;
  double best_gamma = 0;
  WerReport best;
  std::vector<SweepPoint> table;  // alpha-major, both axes ascending
};

struct SweepOptions {
  std::size_t jobs = 1;
  // Reuse LM scores across grid points when context_len == 0. Disable to
  // force a full rescoring pass per point.
  bool cache_scores = true;
};

/// Grid search over (alpha, gamma) minimizing pooled WER on prepared, ordered
/// dev sessions. `base` supplies context_len, prep and separator; its
/// alpha/gamma are ignored. Ties go to the smaller alpha, then smaller gamma.
SweepResult sweep(const std::vector<NBestSession>& dev_sessions,
                  const std::map<UtteranceKey, std::string>& refs, const SweepGrid& grid,
                  const RescoreConfig& base, const LmScorer& scorer, SweepOptions opts = {});

/// Per-utterance alignment of selections against references, in session order.
/// Throws ValidationError naming the first utterance without a reference.
std::vector<AlignCounts> align_selections(
    const std::vector<NBestSession>& sessions,
    const std::vector<std::vector<ScoredHypothesis>>& selections,
    const std::map<UtteranceKey, std::string>& refs);

}  // namespace ctxrescore
