#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ctxrescore {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

struct Utterance {
  std::string session_id;
  std::string utterance_id;
  std::optional<std::string> speaker_id;
  std::optional<double> start_time;  // seconds
  std::optional<double> end_time;

  bool operator==(const Utterance&) const = default;
};

struct Hypothesis {
  int rank = 1;
  std::string text;
  double asr_score = 0.0;  // natural-log first-pass score, opaque
  TokenSeq tokens;         // filled by prepare_hypotheses()

  bool operator==(const Hypothesis&) const = default;
};

/// One utterance's first-pass hypotheses, ascending by rank (1..K).
struct NBestList {
  Utterance utterance;
  std::vector<Hypothesis> hypotheses;

  bool operator==(const NBestList&) const = default;
};

struct Reference {
  Utterance utterance;
  std::string text;

  /// Empty transcripts are legal but contribute no words or tokens.
  bool degenerate() const { return text.empty(); }

  bool operator==(const Reference&) const = default;
};

/// The time-ordered utterances of one conversation. Item is NBestList or Reference.
template <typename Item>
struct BasicSession {
  std::string session_id;
  std::vector<Item> items;

  bool operator==(const BasicSession&) const = default;
};

using NBestSession = BasicSession<NBestList>;
using ReferenceSession = BasicSession<Reference>;

/// Key identifying an utterance across files.
using UtteranceKey = std::pair<std::string, std::string>;  // (session_id, utterance_id)

inline UtteranceKey key_of(const Utterance& u) { return {u.session_id, u.utterance_id}; }

/// Checks rank contiguity, rank-1 maximality and finiteness. Throws ValidationError.
void validate(const NBestList& nbest);

/// Reads N-best JSONL. Sessions appear in order of first occurrence; utterances
/// keep input order within a session. Hypotheses are sorted by rank.
std::vector<NBestSession> load_nbest(const std::filesystem::path& path);

std::vector<ReferenceSession> load_references(const std::filesystem::path& path);

/// Reads any JSONL carrying session_id, utterance_id and text (selection or
/// reference files) into a key -> text map.
std::map<UtteranceKey, std::string> load_transcripts(const std::filesystem::path& path);

/// One chosen hypothesis per utterance, as written to selection JSONL.
struct Selection {
  std::string session_id;
  std::string utterance_id;
  std::string text;
  int rank = 1;
  double combined_score = 0.0;

  bool operator==(const Selection&) const = default;
};

/// Writes one line per utterance of `sessions`, in session/item order.
/// Throws ValidationError naming the first utterance without a pick.
void write_selection(const std::vector<NBestSession>& sessions,
                     const std::map<UtteranceKey, Selection>& picks,
                     const std::filesystem::path& path);

std::vector<Selection> load_selection(const std::filesystem::path& path);

/// Serializers used by the writers; exposed for round-trip tests and tooling.
void write_nbest(const std::vector<NBestSession>& sessions, const std::filesystem::path& path);
void write_references(const std::vector<ReferenceSession>& sessions,
                      const std::filesystem::path& path);

}  // namespace ctxrescore
