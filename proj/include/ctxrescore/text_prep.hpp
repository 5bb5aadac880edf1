#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ctxrescore/corpus.hpp"
#include "ctxrescore/error.hpp"

namespace ctxrescore {

enum class Ordering { kConversational, kSpeakerConditioned };

struct PrepConfig {
  Ordering ordering = Ordering::kConversational;
  bool add_period = true;
  bool capitalize_first = false;
  // Only meaningful with kSpeakerConditioned: clear the LM context whenever the
  // speaker changes between consecutive items.
  bool reset_context_per_speaker = false;
};

Ordering parse_ordering(std::string_view name);  // "conv" | "spkr"
std::string_view to_string(Ordering ordering);

/// Trims trailing whitespace, optionally capitalizes the first letter and
/// appends "." unless the text already ends in ".", "?" or "!".
/// Empty (or all-whitespace) input yields "".
std::string normalize_sentence(std::string_view text, const PrepConfig& cfg);

/// Stable sort by start_time. Throws ValidationError if any item lacks one.
template <typename Item>
BasicSession<Item> order_conversational(BasicSession<Item> session) {
  for (const auto& item : session.items)
    if (!item.utterance.start_time)
      throw ValidationError("utterance " + item.utterance.utterance_id + " in session " +
                            session.session_id + " has no start_time");
  std::stable_sort(session.items.begin(), session.items.end(), [](const Item& a, const Item& b) {
    return *a.utterance.start_time < *b.utterance.start_time;
  });
  return session;
}

/// Groups items by speaker. Speaker blocks follow each speaker's earliest
/// start_time; items inside a block are in conversational order.
template <typename Item>
BasicSession<Item> order_speaker_conditioned(BasicSession<Item> session) {
  for (const auto& item : session.items)
    if (!item.utterance.speaker_id)
      throw ValidationError("utterance " + item.utterance.utterance_id + " in session " +
                            session.session_id + " has no speaker_id");
  session = order_conversational(std::move(session));
  std::map<std::string, std::size_t> block_of;
  for (const auto& item : session.items)
    block_of.try_emplace(*item.utterance.speaker_id, block_of.size());
  std::stable_sort(session.items.begin(), session.items.end(), [&](const Item& a, const Item& b) {
    return block_of.at(*a.utterance.speaker_id) < block_of.at(*b.utterance.speaker_id);
  });
  return session;
}

template <typename Item>
BasicSession<Item> order_session(BasicSession<Item> session, Ordering ordering) {
  return ordering == Ordering::kConversational ? order_conversational(std::move(session))
                                               : order_speaker_conditioned(std::move(session));
}

template <typename Item>
std::vector<BasicSession<Item>> order_sessions(std::vector<BasicSession<Item>> sessions,
                                               Ordering ordering) {
  for (auto& s : sessions) s = order_session(std::move(s), ordering);
  return sessions;
}

}  // namespace ctxrescore
