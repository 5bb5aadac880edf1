#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ctxrescore/corpus.hpp"

namespace ctxrescore {

struct AlignCounts {
  std::size_t hits = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;

  std::size_t errors() const { return substitutions + deletions + insertions; }

  AlignCounts& operator+=(const AlignCounts& o) {
    hits += o.hits;
    substitutions += o.substitutions;
    deletions += o.deletions;
    insertions += o.insertions;
    return *this;
  }
  bool operator==(const AlignCounts&) const = default;
};

struct WerReport {
  AlignCounts counts;
  std::size_t ref_words = 0;
  double wer = 0.0;
};

/// Whitespace-split words with one trailing "." removed from the last word,
/// so the period appended for LM scoring never counts as an error.
std::vector<std::string> scoring_words(std::string_view text);

/// Unit-cost Levenshtein alignment. Backtrace ties prefer hit, then
/// substitution, then insertion, then deletion.
AlignCounts align(std::span<const std::string> ref, std::span<const std::string> hyp);

/// Edit distance only (no backtrace).
std::size_t edit_distance(std::span<const std::string> ref, std::span<const std::string> hyp);

/// Pooled WER over (reference, hypothesis) text pairs. Throws
/// ValidationError when the references contain no words.
WerReport corpus_wer(const std::vector<std::pair<std::string, std::string>>& pairs);
WerReport corpus_wer(const std::vector<AlignCounts>& per_utterance);

/// Hypothesis closest to the reference in edit distance; ties go to the lowest rank.
const Hypothesis& oracle_select(const NBestList& nbest, const Reference& ref);

struct SigTestResult {
  std::size_t n = 0;            // utterances compared
  std::size_t nonzero = 0;      // utterances where the systems differ
  double mean_diff = 0.0;       // mean(errA - errB)
  double stddev = 0.0;          // population standard deviation of the differences
  double statistic = 0.0;       // mean / (stddev / sqrt(n)); +-inf when stddev is 0
  double p_two_sided = 1.0;
  bool significant_05 = false;
  bool significant_01 = false;
  bool no_difference = false;
  bool degenerate_variance = false;
};

/// Matched-pairs test on per-utterance error-count differences using the
/// normal approximation. Throws ValidationError on size mismatch or when
/// fewer than two utterances differ (unless none differ: p = 1).
SigTestResult significance_matched_pairs(std::span<const std::size_t> err_a,
                                         std::span<const std::size_t> err_b);

}  // namespace ctxrescore
