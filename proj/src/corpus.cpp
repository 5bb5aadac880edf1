#include "ctxrescore/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "ctxrescore/error.hpp"

namespace ctxrescore {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

// Line-oriented reader: skips blank lines and reports 1-based line numbers.
class JsonlReader {
 public:
  explicit JsonlReader(const fs::path& path) : path_(path), in_(open_input(path)) {}

  bool next(json& obj) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        obj = json::parse(line);
      } catch (const json::parse_error& e) {
        fail(std::string("malformed JSON: ") + e.what());
      } catch (const json::out_of_range& e) {
        fail(std::string("non-finite number: ") + e.what());
      }
      if (!obj.is_object()) fail("expected a JSON object");
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(path_.string(), line_no_, what);
  }

  std::string req_string(const json& obj, const char* field) const {
    auto it = obj.find(field);
    if (it == obj.end()) fail(std::string("missing field '") + field + "'");
    if (!it->is_string()) fail(std::string("field '") + field + "' must be a string");
    return it->get<std::string>();
  }

  std::optional<std::string> opt_string(const json& obj, const char* field) const {
    auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) fail(std::string("field '") + field + "' must be a string");
    return it->get<std::string>();
  }

  std::optional<double> opt_number(const json& obj, const char* field) const {
    auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_number()) fail(std::string("field '") + field + "' must be a number");
    return it->get<double>();
  }

  double req_number(const json& obj, const char* field) const {
    auto v = opt_number(obj, field);
    if (!v) fail(std::string("missing field '") + field + "'");
    return *v;
  }

  int req_int(const json& obj, const char* field) const {
    auto it = obj.find(field);
    if (it == obj.end()) fail(std::string("missing field '") + field + "'");
    if (!it->is_number_integer()) fail(std::string("field '") + field + "' must be an integer");
    return it->get<int>();
  }

  Utterance utterance(const json& obj) const {
    Utterance u;
    u.session_id = req_string(obj, "session_id");
    u.utterance_id = req_string(obj, "utterance_id");
    u.speaker_id = opt_string(obj, "speaker_id");
    u.start_time = opt_number(obj, "start_time");
    u.end_time = opt_number(obj, "end_time");
    if (u.start_time && (!std::isfinite(*u.start_time) || *u.start_time < 0))
      fail("field 'start_time' must be a non-negative number");
    if (u.start_time && u.end_time && *u.end_time < *u.start_time)
      fail("field 'end_time' precedes 'start_time'");
    return u;
  }

  std::size_t line() const { return line_no_; }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

// Groups items by session, first-occurrence order; items keep input order.
template <typename Item>
class SessionGrouper {
 public:
  Item& slot(const Utterance& u, bool& created) {
    auto [sit, new_session] = session_index_.try_emplace(u.session_id, sessions_.size());
    if (new_session) sessions_.push_back({u.session_id, {}});
    auto& session = sessions_[sit->second];
    auto [uit, new_utt] = utterance_index_.try_emplace(key_of(u), session.items.size());
    created = new_utt;
    if (new_utt) session.items.push_back(Item{u, {}});
    return session.items[uit->second];
  }

  std::vector<BasicSession<Item>> take() { return std::move(sessions_); }

 private:
  std::vector<BasicSession<Item>> sessions_;
  std::unordered_map<std::string, std::size_t> session_index_;
  std::map<UtteranceKey, std::size_t> utterance_index_;
};

void write_utterance(ordered_json& line, const Utterance& u) {
  line["session_id"] = u.session_id;
  line["utterance_id"] = u.utterance_id;
  if (u.speaker_id) line["speaker_id"] = *u.speaker_id;
  if (u.start_time) line["start_time"] = *u.start_time;
  if (u.end_time) line["end_time"] = *u.end_time;
}

}  // namespace

void validate(const NBestList& nbest) {
  const auto& id = nbest.utterance.utterance_id;
  if (nbest.hypotheses.empty()) throw ValidationError(id + ": empty N-best list");
  for (std::size_t i = 0; i < nbest.hypotheses.size(); ++i) {
    const auto& h = nbest.hypotheses[i];
    if (h.rank != static_cast<int>(i) + 1)
      throw ValidationError(id + ": non-contiguous ranks (expected rank " + std::to_string(i + 1) +
                            ", found " + std::to_string(h.rank) + ")");
    if (!std::isfinite(h.asr_score))
      throw ValidationError(id + ": non-finite asr_score at rank " + std::to_string(h.rank));
    if (h.asr_score > nbest.hypotheses.front().asr_score)
      throw ValidationError(id + ": rank " + std::to_string(h.rank) +
                            " has a higher asr_score than rank 1");
  }
}

std::vector<NBestSession> load_nbest(const fs::path& path) {
  JsonlReader reader(path);
  SessionGrouper<NBestList> grouper;
  std::set<std::tuple<std::string, std::string, int>> seen;
  std::map<UtteranceKey, std::size_t> first_line;
  json obj;
  while (reader.next(obj)) {
    Utterance u = reader.utterance(obj);
    Hypothesis h;
    h.rank = reader.req_int(obj, "rank");
    if (h.rank < 1) reader.fail("field 'rank' must be >= 1");
    h.text = reader.req_string(obj, "text");
    h.asr_score = reader.req_number(obj, "asr_score");
    if (!std::isfinite(h.asr_score)) reader.fail("non-finite asr_score");
    if (!seen.emplace(u.session_id, u.utterance_id, h.rank).second)
      reader.fail("duplicate (session_id, utterance_id, rank) = (" + u.session_id + ", " +
                  u.utterance_id + ", " + std::to_string(h.rank) + ")");
    bool created = false;
    NBestList& list = grouper.slot(u, created);
    if (created) {
      first_line[key_of(u)] = reader.line();
    } else if (list.utterance.speaker_id != u.speaker_id ||
               list.utterance.start_time != u.start_time) {
      reader.fail("utterance metadata differs from line " +
                  std::to_string(first_line[key_of(u)]));
    }
    list.hypotheses.push_back(std::move(h));
  }
  auto sessions = grouper.take();
  for (auto& s : sessions) {
    for (auto& list : s.items) {
      std::stable_sort(list.hypotheses.begin(), list.hypotheses.end(),
                       [](const Hypothesis& a, const Hypothesis& b) { return a.rank < b.rank; });
      try {
        validate(list);
      } catch (const ValidationError& e) {
        throw ParseError(path.string(), first_line[key_of(list.utterance)], e.what());
      }
    }
  }
  return sessions;
}

std::vector<ReferenceSession> load_references(const fs::path& path) {
  JsonlReader reader(path);
  SessionGrouper<Reference> grouper;
  json obj;
  while (reader.next(obj)) {
    Utterance u = reader.utterance(obj);
    std::string text = reader.req_string(obj, "text");
    bool created = false;
    Reference& ref = grouper.slot(u, created);
    if (!created)
      reader.fail("duplicate reference for (" + u.session_id + ", " + u.utterance_id + ")");
    ref.text = std::move(text);
  }
  return grouper.take();
}

std::map<UtteranceKey, std::string> load_transcripts(const fs::path& path) {
  JsonlReader reader(path);
  std::map<UtteranceKey, std::string> out;
  json obj;
  while (reader.next(obj)) {
    UtteranceKey key{reader.req_string(obj, "session_id"), reader.req_string(obj, "utterance_id")};
    std::string text = reader.req_string(obj, "text");
    if (!out.emplace(key, std::move(text)).second)
      reader.fail("duplicate transcript for (" + key.first + ", " + key.second + ")");
  }
  return out;
}

void write_selection(const std::vector<NBestSession>& sessions,
                     const std::map<UtteranceKey, Selection>& picks, const fs::path& path) {
  // Validate fully before touching the output file.
  for (const auto& s : sessions)
    for (const auto& list : s.items)
      if (!picks.count(key_of(list.utterance)))
        throw ValidationError("no selection for utterance " + list.utterance.utterance_id +
                              " in session " + s.session_id);
  auto out = open_output(path);
  for (const auto& s : sessions) {
    for (const auto& list : s.items) {
      const Selection& pick = picks.at(key_of(list.utterance));
      ordered_json line;
      line["session_id"] = pick.session_id;
      line["utterance_id"] = pick.utterance_id;
      line["text"] = pick.text;
      line["rank"] = pick.rank;
      line["combined_score"] = pick.combined_score;
      out << line.dump() << '\n';
    }
  }
}

std::vector<Selection> load_selection(const fs::path& path) {
  JsonlReader reader(path);
  std::vector<Selection> out;
  json obj;
  while (reader.next(obj)) {
    Selection s;
    s.session_id = reader.req_string(obj, "session_id");
    s.utterance_id = reader.req_string(obj, "utterance_id");
    s.text = reader.req_string(obj, "text");
    s.rank = reader.req_int(obj, "rank");
    s.combined_score = reader.req_number(obj, "combined_score");
    out.push_back(std::move(s));
  }
  return out;
}

void write_nbest(const std::vector<NBestSession>& sessions, const fs::path& path) {
  auto out = open_output(path);
  for (const auto& s : sessions) {
    for (const auto& list : s.items) {
      for (const auto& h : list.hypotheses) {
        ordered_json line;
        write_utterance(line, list.utterance);
        line["rank"] = h.rank;
        line["text"] = h.text;
        line["asr_score"] = h.asr_score;
        out << line.dump() << '\n';
      }
    }
  }
}

void write_references(const std::vector<ReferenceSession>& sessions, const fs::path& path) {
  auto out = open_output(path);
  for (const auto& s : sessions) {
    for (const auto& ref : s.items) {
      ordered_json line;
      write_utterance(line, ref.utterance);
      line["text"] = ref.text;
      out << line.dump() << '\n';
    }
  }
}

}  // namespace ctxrescore
