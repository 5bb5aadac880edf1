#include "ctxrescore/ppl_eval.hpp"

#include <cmath>
#include <optional>

#include "ctxrescore/error.hpp"
#include "ctxrescore/parallel.hpp"
#include "ctxrescore/rescorer.hpp"

namespace ctxrescore {

double PplReport::ppl() const {
  if (token_count == 0) throw ValidationError("perplexity undefined: no tokens scored");
  return std::exp(-sum_logprob / static_cast<double>(token_count));
}

PplReport ppl_session(const ReferenceSession& session, std::size_t context_len,
                      const LmScorer& scorer, const PrepConfig& prep) {
  PplReport report;
  ContextBuffer ctx(context_len);
  const bool reset_on_speaker =
      prep.reset_context_per_speaker && prep.ordering == Ordering::kSpeakerConditioned;
  std::optional<std::string> last_speaker;
  for (std::size_t i = 0; i < session.items.size(); ++i) {
    const Reference& ref = session.items[i];
    if (reset_on_speaker) {
      if (last_speaker && ref.utterance.speaker_id != last_speaker) ctx.clear();
      last_speaker = ref.utterance.speaker_id;
    }
    TokenSeq tokens = scorer.tokenize(normalize_sentence(ref.text, prep));
    if (tokens.empty()) continue;
    try {
      ScoreResponse resp = scorer.score({ctx.ids(), tokens});
      report.token_count += tokens.size();
      report.sum_logprob += resp.total();
    } catch (const TransportError& e) {
      throw TransportError("session " + session.session_id + ", utterance " +
                           ref.utterance.utterance_id + " (item " + std::to_string(i) +
                           "): " + e.what());
    } catch (const LengthError& e) {
      throw LengthError("session " + session.session_id + ", utterance " +
                        ref.utterance.utterance_id + " (item " + std::to_string(i) +
                        "): " + e.what());
    } catch (const ScorerError& e) {
      throw ScorerError("session " + session.session_id + ", utterance " +
                        ref.utterance.utterance_id + " (item " + std::to_string(i) +
                        "): " + e.what());
    }
    ctx.append(tokens);
  }
  return report;
}

PplReport ppl_corpus(const std::vector<ReferenceSession>& sessions, std::size_t context_len,
                     const LmScorer& scorer, const PrepConfig& prep, std::size_t jobs) {
  std::vector<PplReport> parts(sessions.size());
  parallel_for(sessions.size(), jobs, [&](std::size_t i) {
    parts[i] = ppl_session(sessions[i], context_len, scorer, prep);
  });
  PplReport total;
  for (const auto& p : parts) total += p;
  return total;
}

}  // namespace ctxrescore
