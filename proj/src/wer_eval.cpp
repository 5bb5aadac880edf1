#include "ctxrescore/wer_eval.hpp"

#include <cmath>
#include <limits>

#include "ctxrescore/error.hpp"
#include "ctxrescore/lm_scorer.hpp"

namespace ctxrescore {

std::vector<std::string> scoring_words(std::string_view text) {
  std::vector<std::string> words;
  for (auto w : split_words(text)) words.emplace_back(w);
  if (!words.empty() && words.back().back() == '.') {
    words.back().pop_back();
    if (words.back().empty()) words.pop_back();
  }
  return words;
}

namespace {

// cost[i][j] = edit distance between ref[0..i) and hyp[0..j).
std::vector<std::vector<std::size_t>> distance_table(std::span<const std::string> ref,
                                                     std::span<const std::string> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::vector<std::size_t>> cost(n + 1, std::vector<std::size_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) cost[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) cost[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = cost[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cost[i][j] = std::min({diag, cost[i][j - 1] + 1, cost[i - 1][j] + 1});
    }
  }
  return cost;
}

}  // namespace

std::size_t edit_distance(std::span<const std::string> ref, std::span<const std::string> hyp) {
  return distance_table(ref, hyp)[ref.size()][hyp.size()];
}

AlignCounts align(std::span<const std::string> ref, std::span<const std::string> hyp) {
  const auto cost = distance_table(ref, hyp);
  AlignCounts c;
  std::size_t i = ref.size(), j = hyp.size();
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool match = ref[i - 1] == hyp[j - 1];
      if (cost[i][j] == cost[i - 1][j - 1] + (match ? 0 : 1)) {
        ++(match ? c.hits : c.substitutions);
        --i;
        --j;
        continue;
      }
    }
    if (j > 0 && cost[i][j] == cost[i][j - 1] + 1) {
      ++c.insertions;
      --j;
    } else {
      ++c.deletions;
      --i;
    }
  }
  return c;
}

WerReport corpus_wer(const std::vector<AlignCounts>& per_utterance) {
  WerReport r;
  for (const auto& c : per_utterance) r.counts += c;
  r.ref_words = r.counts.hits + r.counts.substitutions + r.counts.deletions;
  if (r.ref_words == 0) throw ValidationError("WER undefined: references contain no words");
  r.wer = static_cast<double>(r.counts.errors()) / static_cast<double>(r.ref_words);
  return r;
}

WerReport corpus_wer(const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::vector<AlignCounts> counts;
  counts.reserve(pairs.size());
  for (const auto& [ref, hyp] : pairs) counts.push_back(align(scoring_words(ref), scoring_words(hyp)));
  return corpus_wer(counts);
}

const Hypothesis& oracle_select(const NBestList& nbest, const Reference& ref) {
  if (nbest.hypotheses.empty())
    throw ValidationError(nbest.utterance.utterance_id + ": empty N-best list");
  const auto ref_words = scoring_words(ref.text);
  const Hypothesis* best = nullptr;
  std::size_t best_dist = std::numeric_limits<std::size_t>::max();
  for (const auto& h : nbest.hypotheses) {
    const std::size_t d = edit_distance(ref_words, scoring_words(h.text));
    if (d < best_dist) {
      best = &h;
      best_dist = d;
    }
  }
  return *best;
}

SigTestResult significance_matched_pairs(std::span<const std::size_t> err_a,
                                         std::span<const std::size_t> err_b) {
  if (err_a.size() != err_b.size())
    throw ValidationError("significance test: systems cover different utterance counts (" +
                          std::to_string(err_a.size()) + " vs " + std::to_string(err_b.size()) +
                          ")");
  SigTestResult r;
  r.n = err_a.size();
  std::vector<double> d(r.n);
  for (std::size_t i = 0; i < r.n; ++i) {
    d[i] = static_cast<double>(err_a[i]) - static_cast<double>(err_b[i]);
    if (d[i] != 0) ++r.nonzero;
  }
  if (r.nonzero == 0) {
    r.no_difference = true;
    r.p_two_sided = 1.0;
    return r;
  }
  if (r.nonzero < 2)
    throw ValidationError("significance test: insufficient pairs (need >= 2 differing utterances)");

  const double n = static_cast<double>(r.n);
  double sum = 0;
  for (double x : d) sum += x;
  r.mean_diff = sum / n;
  double ss = 0;
  for (double x : d) ss += (x - r.mean_diff) * (x - r.mean_diff);
  r.stddev = std::sqrt(ss / n);

  if (r.stddev == 0) {
    // Every utterance differs by the same nonzero amount.
    r.degenerate_variance = true;
    r.statistic = std::copysign(std::numeric_limits<double>::infinity(), r.mean_diff);
    r.p_two_sided = 0.0;
  } else {
    r.statistic = r.mean_diff / (r.stddev / std::sqrt(n));
    r.p_two_sided = std::erfc(std::abs(r.statistic) / std::sqrt(2.0));
  }
  r.significant_05 = r.p_two_sided < 0.05;
  r.significant_01 = r.p_two_sided < 0.01;
  return r;
}

}  // namespace ctxrescore
