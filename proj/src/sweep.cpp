#include "ctxrescore/sweep.hpp"

#include <cmath>
#include <cstdlib>

#include "ctxrescore/error.hpp"
#include "ctxrescore/parallel.hpp"

namespace ctxrescore {

namespace {

double parse_number(std::string_view s, std::string_view whole) {
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || *end != '\0' || !std::isfinite(v))
    throw ValidationError("invalid grid value '" + tmp + "' in '" + std::string(whole) + "'");
  return v;
}

std::string format_point(double alpha, double gamma) {
  return "(alpha=" + std::to_string(alpha) + ", gamma=" + std::to_string(gamma) + ")";
}

}  // namespace

void SweepGrid::validate() const {
  for (const auto* axis : {&alphas, &gammas}) {
    const char* name = axis == &alphas ? "alphas" : "gammas";
    if (axis->empty()) throw ValidationError(std::string("sweep grid: empty ") + name);
    for (std::size_t i = 0; i < axis->size(); ++i) {
      const double v = (*axis)[i];
      if (!std::isfinite(v) || v < 0)
        throw ValidationError(std::string("sweep grid: ") + name + " must be finite and >= 0");
      if (i > 0 && v <= (*axis)[i - 1])
        throw ValidationError(std::string("sweep grid: ") + name +
                              " must be strictly ascending without duplicates");
    }
  }
}

SweepGrid SweepGrid::defaults() {
  return {parse_grid_axis("0:1:0.1"), parse_grid_axis("0:1:0.25")};
}

std::vector<double> parse_grid_axis(std::string_view text) {
  std::vector<double> out;
  if (text.find(':') != std::string_view::npos) {
    std::vector<double> parts;
    std::size_t start = 0;
    while (true) {
      auto c = text.find(':', start);
      parts.push_back(parse_number(text.substr(start, c - start), text));
      if (c == std::string_view::npos) break;
      start = c + 1;
    }
    if (parts.size() != 3) throw ValidationError("grid range must be LO:HI:STEP, got '" + std::string(text) + "'");
    const double lo = parts[0], hi = parts[1], step = parts[2];
    if (!(step > 0) || hi < lo)
      throw ValidationError("grid range needs STEP > 0 and HI >= LO: '" + std::string(text) + "'");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i)
      out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e9) / 1e9);
  } else {
    std::size_t start = 0;
    while (true) {
      auto c = text.find(',', start);
      out.push_back(parse_number(text.substr(start, c - start), text));
      if (c == std::string_view::npos) break;
      start = c + 1;
    }
  }
  return out;
}

std::vector<AlignCounts> align_selections(
    const std::vector<NBestSession>& sessions,
    const std::vector<std::vector<ScoredHypothesis>>& selections,
    const std::map<UtteranceKey, std::string>& refs) {
  std::vector<AlignCounts> out;
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    for (std::size_t u = 0; u < sessions[s].items.size(); ++u) {
      const auto& utt = sessions[s].items[u].utterance;
      auto it = refs.find(key_of(utt));
      if (it == refs.end())
        throw ValidationError("no reference for utterance " + utt.utterance_id + " in session " +
                              utt.session_id);
      out.push_back(
          align(scoring_words(it->second), scoring_words(selections[s][u].hypothesis.text)));
    }
  }
  return out;
}

SweepResult sweep(const std::vector<NBestSession>& dev_sessions,
                  const std::map<UtteranceKey, std::string>& refs, const SweepGrid& grid,
                  const RescoreConfig& base, const LmScorer& scorer, SweepOptions opts) {
  grid.validate();
  // Fail on missing references before any scoring work.
  for (const auto& s : dev_sessions)
    for (const auto& nbest : s.items)
      if (!refs.count(key_of(nbest.utterance)))
        throw ValidationError("no reference for utterance " + nbest.utterance.utterance_id +
                              " in session " + s.session_id);

  std::vector<std::pair<double, double>> points;
  for (double a : grid.alphas)
    for (double g : grid.gammas) points.emplace_back(a, g);

  // With no carried context the LM score of a hypothesis does not depend on
  // earlier selections, so it is computed once and shared by every point.
  const bool cached = opts.cache_scores && base.context_len == 0;
  std::vector<std::vector<NBestResult>> scored;
  if (cached) {
    scored.resize(dev_sessions.size());
    const ContextBuffer empty(0);
    parallel_for(dev_sessions.size(), opts.jobs, [&](std::size_t s) {
      for (const auto& nbest : dev_sessions[s].items)
        scored[s].push_back(rescore_nbest(nbest, empty, base, scorer));
    });
  }

  SweepResult result;
  result.table.resize(points.size());
  parallel_for(points.size(), cached ? opts.jobs : 1, [&](std::size_t p) {
    RescoreConfig cfg = base;
    cfg.alpha = points[p].first;
    cfg.gamma = points[p].second;
    std::vector<std::vector<ScoredHypothesis>> picks(dev_sessions.size());
    try {
      if (cached) {
        for (std::size_t s = 0; s < scored.size(); ++s) {
          for (auto nbest : scored[s]) {
            const std::size_t best = select_best(nbest.all, cfg);
            picks[s].push_back(nbest.all[best]);
          }
        }
      } else {
        picks = rescore_corpus(dev_sessions, cfg, scorer, opts.jobs);
      }
    } catch (const TransportError& e) {
      throw TransportError(format_point(cfg.alpha, cfg.gamma) + ": " + e.what());
    } catch (const LengthError& e) {
      throw LengthError(format_point(cfg.alpha, cfg.gamma) + ": " + e.what());
    } catch (const ScorerError& e) {
      throw ScorerError(format_point(cfg.alpha, cfg.gamma) + ": " + e.what());
    }
    result.table[p] = {cfg.alpha, cfg.gamma,
                       corpus_wer(align_selections(dev_sessions, picks, refs))};
  });

  std::size_t best = 0;
  for (std::size_t p = 1; p < result.table.size(); ++p)
    if (result.table[p].report.counts.errors() < result.table[best].report.counts.errors())
      best = p;
  result.best_alpha = result.table[best].alpha;
  result.best_gamma = result.table[best].gamma;
  result.best = result.table[best].report;
  return result;
}

}  // namespace ctxrescore
