#include <doctest.h>

#include <cmath>
#include <set>

#include "ctxrescore/corpus.hpp"
#include "ctxrescore/error.hpp"
#include "support/files.hpp"
#include "support/synthetic.hpp"

using namespace ctxrescore;
using ctxrescore::testing::read_text;
using ctxrescore::testing::TempDir;
using ctxrescore::testing::write_text;

namespace {

std::string nbest_line(const std::string& sid, const std::string& uid, int rank,
                       const std::string& text, double score, double t = 0.0) {
  return R"({"session_id": ")" + sid + R"(", "utterance_id": ")" + uid +
         R"(", "speaker_id": "A", "start_time": )" + std::to_string(t) +
         R"(, "rank": )" + std::to_string(rank) + R"(, "text": ")" + text +
         R"(", "asr_score": )" + std::to_string(score) + "}\n";
}

template <typename Fn>
std::string error_of(Fn&& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("load_nbest groups a minimal file into one session") {
  TempDir dir;
  write_text(dir / "n.jsonl", nbest_line("s", "u1", 1, "hello there", -1.0) +
                                  nbest_line("s", "u1", 2, "hello bear", -2.0));
  auto sessions = load_nbest(dir / "n.jsonl");
  REQUIRE(sessions.size() == 1);
  REQUIRE(sessions[0].items.size() == 1);
  const auto& list = sessions[0].items[0];
  CHECK(list.hypotheses.size() == 2);
  CHECK(list.hypotheses[0].text == "hello there");
  CHECK(list.hypotheses[1].rank == 2);
  CHECK(list.utterance.speaker_id == std::optional<std::string>("A"));
}

TEST_CASE("load_nbest sorts out-of-order ranks") {
  TempDir dir;
  write_text(dir / "n.jsonl",
             nbest_line("s", "u1", 2, "two", -2.0) + nbest_line("s", "u1", 1, "one", -1.0));
  auto sessions = load_nbest(dir / "n.jsonl");
  CHECK(sessions[0].items[0].hypotheses[0].text == "one");
}

TEST_CASE("load_nbest rejects non-contiguous ranks") {
  TempDir dir;
  write_text(dir / "n.jsonl",
             nbest_line("s", "u1", 1, "one", -1.0) + nbest_line("s", "u1", 3, "three", -3.0));
  auto msg = error_of([&] { load_nbest(dir / "n.jsonl"); });
  CHECK(msg.find("non-contiguous ranks") != std::string::npos);
  CHECK(msg.find(":1:") != std::string::npos);  // line of the utterance's first hypothesis
}

TEST_CASE("load_nbest accepts 32-best lists") {
  TempDir dir;
  std::string text;
  for (int r = 1; r <= 32; ++r) text += nbest_line("s", "u1", r, "h" + std::to_string(r), -r);
  write_text(dir / "n.jsonl", text);
  auto sessions = load_nbest(dir / "n.jsonl");
  CHECK(sessions[0].items[0].hypotheses.size() == 32);
}

TEST_CASE("load_nbest reports line and field on malformed input") {
  TempDir dir;
  SUBCASE("missing field") {
    write_text(dir / "n.jsonl", nbest_line("s", "u1", 1, "a", -1) +
                                    R"({"session_id": "s", "utterance_id": "u2", "rank": 1})"
                                    "\n");
    auto msg = error_of([&] { load_nbest(dir / "n.jsonl"); });
    CHECK(msg.find(":2:") != std::string::npos);
    CHECK(msg.find("text") != std::string::npos);
  }
  SUBCASE("bad json") {
    write_text(dir / "n.jsonl", "{not json\n");
    CHECK(error_of([&] { load_nbest(dir / "n.jsonl"); }).find(":1:") != std::string::npos);
  }
  SUBCASE("wrong type") {
    write_text(dir / "n.jsonl",
               R"({"session_id": "s", "utterance_id": "u", "rank": "1", "text": "a", "asr_score": 0})"
               "\n");
    CHECK(error_of([&] { load_nbest(dir / "n.jsonl"); }).find("rank") != std::string::npos);
  }
  SUBCASE("duplicate rank") {
    write_text(dir / "n.jsonl", nbest_line("s", "u1", 1, "a", -1) + nbest_line("s", "u1", 1, "b", -1));
    auto msg = error_of([&] { load_nbest(dir / "n.jsonl"); });
    CHECK(msg.find("duplicate") != std::string::npos);
    CHECK(msg.find(":2:") != std::string::npos);
  }
  SUBCASE("non-finite score") {
    // JSON has no NaN literal; an overflowing exponent parses to infinity.
    write_text(dir / "n.jsonl",
               R"({"session_id": "s", "utterance_id": "u", "rank": 1, "text": "a", "asr_score": -1e999})"
               "\n");
    CHECK(error_of([&] { load_nbest(dir / "n.jsonl"); }).find("non-finite") != std::string::npos);
  }
  SUBCASE("rank 1 not maximal") {
    write_text(dir / "n.jsonl", nbest_line("s", "u1", 1, "a", -5) + nbest_line("s", "u1", 2, "b", -1));
    CHECK(error_of([&] { load_nbest(dir / "n.jsonl"); }).find("higher asr_score") !=
          std::string::npos);
  }
  SUBCASE("missing file") {
    CHECK(error_of([&] { load_nbest(dir / "absent.jsonl"); }).find("absent.jsonl") !=
          std::string::npos);
  }
}

TEST_CASE("load_nbest allows tied scores") {
  TempDir dir;
  write_text(dir / "n.jsonl", nbest_line("s", "u1", 1, "a", -1) + nbest_line("s", "u1", 2, "b", -1));
  CHECK(load_nbest(dir / "n.jsonl")[0].items[0].hypotheses.size() == 2);
}

TEST_CASE("load_nbest keeps session first-appearance and utterance input order") {
  TempDir dir;
  write_text(dir / "n.jsonl", nbest_line("s2", "x", 1, "a", -1, 5) +
                                  nbest_line("s1", "y", 1, "b", -1, 3) +
                                  nbest_line("s2", "w", 1, "c", -1, 1));
  auto sessions = load_nbest(dir / "n.jsonl");
  REQUIRE(sessions.size() == 2);
  CHECK(sessions[0].session_id == "s2");
  CHECK(sessions[0].items[0].utterance.utterance_id == "x");
  CHECK(sessions[0].items[1].utterance.utterance_id == "w");
  CHECK(sessions[1].session_id == "s1");
}

TEST_CASE("load_references") {
  TempDir dir;
  SUBCASE("one line per utterance") {
    write_text(dir / "r.jsonl",
               R"({"session_id": "s", "utterance_id": "u1", "speaker_id": "A", "start_time": 0.0, "text": "hi"})"
               "\n"
               R"({"session_id": "s", "utterance_id": "u2", "speaker_id": "B", "start_time": 1.0, "text": ""})"
               "\n");
    auto refs = load_references(dir / "r.jsonl");
    REQUIRE(refs.size() == 1);
    REQUIRE(refs[0].items.size() == 2);
    CHECK(refs[0].items[0].text == "hi");
    CHECK_FALSE(refs[0].items[0].degenerate());
    CHECK(refs[0].items[1].degenerate());
  }
  SUBCASE("missing text") {
    write_text(dir / "r.jsonl", R"({"session_id": "s", "utterance_id": "u1"})"
                                "\n");
    auto msg = error_of([&] { load_references(dir / "r.jsonl"); });
    CHECK(msg.find(":1:") != std::string::npos);
    CHECK(msg.find("text") != std::string::npos);
  }
  SUBCASE("negative start time") {
    write_text(dir / "r.jsonl",
               R"({"session_id": "s", "utterance_id": "u1", "start_time": -1, "text": "a"})"
               "\n");
    CHECK(error_of([&] { load_references(dir / "r.jsonl"); }).find("start_time") !=
          std::string::npos);
  }
}

TEST_CASE("write_selection") {
  TempDir dir;
  auto sessions = testing::random_sessions(3, 1, 3, 2);
  sessions[0].items.resize(3);
  for (std::size_t i = 0; i < 3; ++i) {
    sessions[0].items[i].utterance.utterance_id = "u" + std::to_string(i);
    sessions[0].items[i].utterance.session_id = sessions[0].session_id;
    sessions[0].items[i].hypotheses = {{1, "t" + std::to_string(i), -1.0, {}}};
  }
  std::map<UtteranceKey, Selection> picks;
  for (const auto& list : sessions[0].items)
    picks[key_of(list.utterance)] = {list.utterance.session_id, list.utterance.utterance_id,
                                     list.hypotheses[0].text, 1, -0.25};

  write_selection(sessions, picks, dir / "a.jsonl");
  const std::string first = read_text(dir / "a.jsonl");
  CHECK(std::count(first.begin(), first.end(), '\n') == 3);
  CHECK(first.substr(0, first.find('\n')) ==
        R"({"session_id":"R0","utterance_id":"u0","text":"t0","rank":1,"combined_score":-0.25})");

  write_selection(sessions, picks, dir / "b.jsonl");
  CHECK(read_text(dir / "b.jsonl") == first);

  auto loaded = load_selection(dir / "a.jsonl");
  REQUIRE(loaded.size() == 3);
  CHECK(loaded[2] == picks.at({"R0", "u2"}));

  picks.erase({"R0", "u1"});
  auto msg = error_of([&] { write_selection(sessions, picks, dir / "c.jsonl"); });
  CHECK(msg.find("u1") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "c.jsonl"));
}

TEST_CASE("round trip and partition over random corpora") {
  TempDir dir;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto sessions = testing::random_sessions(seed, 4, 6, 5);
    write_nbest(sessions, dir / "n.jsonl");
    auto loaded = load_nbest(dir / "n.jsonl");
    REQUIRE(loaded == sessions);

    std::size_t lines = 0, hyps = 0;
    for (const auto& s : sessions)
      for (const auto& l : s.items) hyps += l.hypotheses.size();
    const std::string text = read_text(dir / "n.jsonl");
    lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
    CHECK(lines == hyps);
  }
  auto corpus = testing::make_synthetic({});
  write_references(corpus.refs, dir / "r.jsonl");
  CHECK(load_references(dir / "r.jsonl") == corpus.refs);
}
