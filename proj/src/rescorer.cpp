#include "ctxrescore/rescorer.hpp"

#include <cmath>

#include "ctxrescore/error.hpp"
#include "ctxrescore/parallel.hpp"

namespace ctxrescore {

void RescoreConfig::validate() const {
  if (!std::isfinite(alpha) || alpha < 0)
    throw ValidationError("alpha must be a finite value >= 0");
  if (!std::isfinite(gamma) || gamma < 0)
    throw ValidationError("gamma must be a finite value >= 0");
}

void ContextBuffer::append(std::span<const TokenId> tokens) {
  if (capacity_ == 0) return;
  if (tokens.size() >= capacity_) {
    ids_.assign(tokens.end() - static_cast<std::ptrdiff_t>(capacity_), tokens.end());
    return;
  }
  ids_.insert(ids_.end(), tokens.begin(), tokens.end());
  if (ids_.size() > capacity_)
    ids_.erase(ids_.begin(), ids_.end() - static_cast<std::ptrdiff_t>(capacity_));
}

ContextBuffer append_best(ContextBuffer ctx, std::span<const TokenId> tokens) {
  ctx.append(tokens);
  return ctx;
}

double combine_scores(double asr, double lm, std::size_t len, const RescoreConfig& cfg) {
  if (!std::isfinite(asr) || !std::isfinite(lm))
    throw ValidationError("combine_scores: non-finite score");
  return asr + cfg.alpha * lm + cfg.gamma * static_cast<double>(len);
}

void prepare_hypotheses(NBestList& nbest, const PrepConfig& prep, const LmScorer& scorer) {
  for (auto& h : nbest.hypotheses) h.tokens = scorer.tokenize(normalize_sentence(h.text, prep));
}

void prepare_session(NBestSession& session, const PrepConfig& prep, const LmScorer& scorer) {
  for (auto& nbest : session.items) prepare_hypotheses(nbest, prep, scorer);
}

std::size_t select_best(std::vector<ScoredHypothesis>& all, const RescoreConfig& cfg) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto& s = all[i];
    s.combined = combine_scores(s.hypothesis.asr_score, s.lm_logprob, s.token_len, cfg);
    // Strict comparison keeps the earliest (lowest-rank) hypothesis on ties.
    if (s.combined > all[best].combined) best = i;
  }
  return best;
}

NBestResult rescore_nbest(const NBestList& nbest, const ContextBuffer& ctx,
                          const RescoreConfig& cfg, const LmScorer& scorer) {
  const auto& utt = nbest.utterance.utterance_id;
  if (nbest.hypotheses.empty()) throw ValidationError(utt + ": empty N-best list");

  std::vector<ScoreRequest> reqs;
  std::vector<std::size_t> req_owner;
  for (std::size_t i = 0; i < nbest.hypotheses.size(); ++i) {
    const auto& h = nbest.hypotheses[i];
    if (h.tokens.empty()) continue;
    reqs.push_back({ctx.ids(), h.tokens});
    req_owner.push_back(i);
  }
  auto outcomes = scorer.batch_score(reqs);

  NBestResult result;
  result.all.resize(nbest.hypotheses.size());
  for (std::size_t i = 0; i < nbest.hypotheses.size(); ++i) {
    result.all[i].hypothesis = nbest.hypotheses[i];
    result.all[i].token_len = nbest.hypotheses[i].tokens.size();
  }
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const std::size_t i = req_owner[k];
    if (const auto* fail = std::get_if<ScoreFailure>(&outcomes[k])) {
      const std::string msg = "utterance " + utt + ", rank " +
                              std::to_string(nbest.hypotheses[i].rank) + ": " + fail->message;
      if (fail->retriable) throw TransportError(msg);
      if (fail->length_exceeded) throw LengthError(msg);
      throw ScorerError(msg);
    }
    result.all[i].lm_logprob = std::get<ScoreResponse>(outcomes[k]).total();
  }
  result.selected = select_best(result.all, cfg);
  return result;
}

SessionRescorer::SessionRescorer(const RescoreConfig& cfg, const LmScorer& scorer)
    : cfg_(cfg), scorer_(scorer), ctx_(cfg.context_len) {
  cfg_.validate();
  if (!cfg_.context_separator.empty()) separator_ = scorer_.tokenize(cfg_.context_separator);
}

NBestResult SessionRescorer::step(const NBestList& nbest) {
  if (cfg_.prep.reset_context_per_speaker &&
      cfg_.prep.ordering == Ordering::kSpeakerConditioned) {
    if (last_speaker_ && nbest.utterance.speaker_id != last_speaker_) ctx_.clear();
    last_speaker_ = nbest.utterance.speaker_id;
  }
  NBestResult result = rescore_nbest(nbest, ctx_, cfg_, scorer_);
  ctx_.append(result.best().hypothesis.tokens);
  if (!separator_.empty()) ctx_.append(separator_);
  return result;
}

std::vector<ScoredHypothesis> rescore_session(const NBestSession& session,
                                              const RescoreConfig& cfg, const LmScorer& scorer) {
  SessionRescorer rescorer(cfg, scorer);
  std::vector<ScoredHypothesis> out;
  out.reserve(session.items.size());
  for (const auto& nbest : session.items) out.push_back(rescorer.step(nbest).best());
  return out;
}

std::vector<std::vector<ScoredHypothesis>> rescore_corpus(
    const std::vector<NBestSession>& sessions, const RescoreConfig& cfg, const LmScorer& scorer,
    std::size_t jobs) {
  std::vector<std::vector<ScoredHypothesis>> out(sessions.size());
  parallel_for(sessions.size(), jobs,
               [&](std::size_t i) { out[i] = rescore_session(sessions[i], cfg, scorer); });
  return out;
}

std::vector<Hypothesis> baseline_select(const NBestSession& session) {
  std::vector<Hypothesis> out;
  out.reserve(session.items.size());
  for (const auto& nbest : session.items) {
    if (nbest.hypotheses.empty())
      throw ValidationError(nbest.utterance.utterance_id + ": empty N-best list");
    out.push_back(nbest.hypotheses.front());
  }
  return out;
}

}  // namespace ctxrescore
