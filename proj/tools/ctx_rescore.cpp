// ctx-rescore: N-best rescoring with LM context carry-over, plus the
// evaluation commands used to tune and score it.
//
// Exit codes: 0 success, 1 validation/usage error, 2 scorer transport error.

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctxrescore/corpus.hpp"
#include "ctxrescore/error.hpp"
#include "ctxrescore/lm_scorer.hpp"
#include "ctxrescore/parallel.hpp"
#include "ctxrescore/ppl_eval.hpp"
#include "ctxrescore/rescorer.hpp"
#include "ctxrescore/sweep.hpp"
#include "ctxrescore/text_prep.hpp"
#include "ctxrescore/wer_eval.hpp"

namespace {

using namespace ctxrescore;
using nlohmann::ordered_json;

enum class LogLevel { kError, kWarn, kInfo, kDebug };

struct Options {
  // shared
  std::string scorer = "uniform";
  std::string ordering = "conv";
  bool no_period = false;
  bool capitalize = false;
  bool reset_per_speaker = false;
  std::size_t context_len = 0;
  std::size_t max_len = 0;
  std::size_t jobs = default_jobs();
  bool json = false;
  std::string json_out;
  std::uint64_t seed = 0;
  std::string log_level = "info";

  // inputs / outputs
  std::string nbest, refs, hyps, hyps_a, hyps_b, out;
  double alpha = 0.4;
  double gamma = 0.5;
  std::string alphas = "0:1:0.1";
  std::string gammas = "0:1:0.25";
  std::string separator;
  bool per_session = false;
};

LogLevel g_level = LogLevel::kInfo;

void log(LogLevel level, const std::string& msg) {
  if (level > g_level) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "level=" << names[static_cast<int>(level)] << " msg=\"" << msg << "\"\n";
}

PrepConfig prep_from(const Options& o) {
  PrepConfig p;
  p.ordering = parse_ordering(o.ordering);
  p.add_period = !o.no_period;
  p.capitalize_first = o.capitalize;
  p.reset_context_per_speaker = o.reset_per_speaker;
  return p;
}

// JSON cannot carry inf/nan; those become null.
ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(); }

ordered_json to_json(const AlignCounts& c) {
  return {{"hits", c.hits},
          {"substitutions", c.substitutions},
          {"deletions", c.deletions},
          {"insertions", c.insertions}};
}

ordered_json to_json(const WerReport& r) {
  return {{"counts", to_json(r.counts)}, {"ref_words", r.ref_words}, {"wer", r.wer}};
}

ordered_json effective_config(const std::string& command, const Options& o) {
  ordered_json cfg;
  cfg["command"] = command;
  auto add = [&](const char* key, const ordered_json& v) { cfg[key] = v; };
  if (!o.nbest.empty()) add("nbest", o.nbest);
  if (!o.refs.empty()) add("refs", o.refs);
  if (!o.hyps.empty()) add("hyps", o.hyps);
  if (!o.hyps_a.empty()) add("hypsA", o.hyps_a);
  if (!o.hyps_b.empty()) add("hypsB", o.hyps_b);
  if (command == "rescore") {
    add("alpha", o.alpha);
    add("gamma", o.gamma);
  }
  if (command == "sweep") {
    add("alphas", o.alphas);
    add("gammas", o.gammas);
  }
  if (command == "rescore" || command == "sweep" || command == "ppl") {
    add("context_len", o.context_len);
    add("scorer", o.scorer);
    add("ordering", o.ordering);
    add("add_period", !o.no_period);
    add("capitalize_first", o.capitalize);
    add("reset_context_per_speaker", o.reset_per_speaker);
    if (command != "ppl") add("context_separator", o.separator);
    if (o.max_len) add("max_len", o.max_len);
  }
  add("seed", o.seed);
  return cfg;
}

void emit(const Options& o, const ordered_json& result, const std::string& human) {
  if (o.json)
    std::cout << result.dump(2) << '\n';
  else
    std::cout << human;
  if (!o.json_out.empty()) {
    std::ofstream f(o.json_out, std::ios::binary | std::ios::trunc);
    if (!f) throw ValidationError("cannot write " + o.json_out);
    f << result.dump(2) << '\n';
  }
}

std::string fmt_double(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

std::unique_ptr<LmScorer> load_scorer(const Options& o) {
  auto scorer = make_scorer(o.scorer, o.max_len);
  log(LogLevel::kInfo, "scorer " + scorer->name() + " vocab=" +
                           std::to_string(scorer->vocab_size()) +
                           " max_len=" + std::to_string(scorer->max_len()));
  return scorer;
}

std::vector<NBestSession> load_prepared_nbest(const Options& o, const LmScorer& scorer,
                                              const PrepConfig& prep) {
  auto sessions = order_sessions(load_nbest(o.nbest), prep.ordering);
  std::size_t utts = 0;
  for (auto& s : sessions) {
    prepare_session(s, prep, scorer);
    utts += s.items.size();
  }
  log(LogLevel::kInfo, "loaded " + std::to_string(sessions.size()) + " sessions, " +
                           std::to_string(utts) + " utterances from " + o.nbest);
  return sessions;
}

// Texts of `hyps` aligned to the reference utterance order.
std::vector<AlignCounts> align_against(const std::vector<ReferenceSession>& refs,
                                       const std::map<UtteranceKey, std::string>& hyps,
                                       const std::string& hyps_path) {
  std::vector<AlignCounts> out;
  for (const auto& s : refs) {
    for (const auto& r : s.items) {
      auto it = hyps.find(key_of(r.utterance));
      if (it == hyps.end())
        throw ValidationError(hyps_path + ": no hypothesis for utterance " +
                              r.utterance.utterance_id + " in session " + s.session_id);
      out.push_back(align(scoring_words(r.text), scoring_words(it->second)));
    }
  }
  return out;
}

int cmd_rescore(const Options& o) {
  RescoreConfig cfg;
  cfg.alpha = o.alpha;
  cfg.gamma = o.gamma;
  cfg.context_len = o.context_len;
  cfg.prep = prep_from(o);
  cfg.context_separator = o.separator;
  cfg.validate();
  auto scorer = load_scorer(o);
  auto sessions = load_prepared_nbest(o, *scorer, cfg.prep);
  auto picks = rescore_corpus(sessions, cfg, *scorer, o.jobs);

  std::map<UtteranceKey, Selection> by_key;
  std::size_t changed = 0, total = 0;
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    for (std::size_t u = 0; u < sessions[s].items.size(); ++u) {
      const auto& utt = sessions[s].items[u].utterance;
      const auto& sh = picks[s][u];
      by_key[key_of(utt)] = {utt.session_id, utt.utterance_id, sh.hypothesis.text,
                             sh.hypothesis.rank, sh.combined};
      ++total;
      if (sh.hypothesis.rank != 1) ++changed;
    }
  }
  if (!o.out.empty()) write_selection(sessions, by_key, o.out);

  ordered_json result;
  result["config"] = effective_config("rescore", o);
  result["utterances"] = total;
  result["changed_from_rank1"] = changed;
  if (!o.out.empty()) result["out"] = o.out;
  emit(o, result,
       "utterances " + std::to_string(total) + "\nchanged_from_rank1 " + std::to_string(changed) +
           "\n");
  return 0;
}

int cmd_ppl(const Options& o) {
  PrepConfig prep = prep_from(o);
  auto scorer = load_scorer(o);
  auto sessions = order_sessions(load_references(o.refs), prep.ordering);
  PplReport r = ppl_corpus(sessions, o.context_len, *scorer, prep, o.jobs);
  const double ppl = r.ppl();
  ordered_json result;
  result["config"] = effective_config("ppl", o);
  result["token_count"] = r.token_count;
  result["sum_logprob"] = r.sum_logprob;
  result["ppl"] = ppl;
  emit(o, result,
       "token_count " + std::to_string(r.token_count) + "\nsum_logprob " +
           fmt_double(r.sum_logprob) + "\nppl " + fmt_double(ppl) + "\n");
  return 0;
}

int cmd_wer(const Options& o) {
  auto refs = load_references(o.refs);
  auto hyps = load_transcripts(o.hyps);
  auto counts = align_against(refs, hyps, o.hyps);
  WerReport total = corpus_wer(counts);
  ordered_json result;
  result["config"] = effective_config("wer", o);
  result["utterances"] = counts.size();
  auto body = to_json(total);
  for (auto& [k, v] : body.items()) result[k] = v;
  std::string human = "wer " + fmt_double(total.wer) + " (" + std::to_string(total.counts.errors()) +
                      "/" + std::to_string(total.ref_words) + ")\n";
  if (o.per_session) {
    ordered_json per = ordered_json::array();
    std::size_t i = 0;
    for (const auto& s : refs) {
      std::vector<AlignCounts> part(counts.begin() + static_cast<std::ptrdiff_t>(i),
                                    counts.begin() + static_cast<std::ptrdiff_t>(i + s.items.size()));
      i += s.items.size();
      ordered_json entry;
      entry["session_id"] = s.session_id;
      try {
        WerReport r = corpus_wer(part);
        const auto body = to_json(r);
        for (auto& [k, v] : body.items()) entry[k] = v;
        human += s.session_id + " wer " + fmt_double(r.wer) + "\n";
      } catch (const ValidationError&) {
        entry["wer"] = nullptr;  // session without reference words
        human += s.session_id + " wer n/a\n";
      }
      per.push_back(entry);
    }
    result["sessions"] = per;
  }
  emit(o, result, human);
  return 0;
}

int cmd_oracle(const Options& o) {
  auto ref_sessions = load_references(o.refs);
  std::map<UtteranceKey, const Reference*> refs;
  for (const auto& s : ref_sessions)
    for (const auto& r : s.items) refs[key_of(r.utterance)] = &r;
  auto sessions = load_nbest(o.nbest);

  std::vector<AlignCounts> oracle_counts, baseline_counts;
  std::map<UtteranceKey, Selection> picks;
  for (const auto& s : sessions) {
    for (const auto& nbest : s.items) {
      auto it = refs.find(key_of(nbest.utterance));
      if (it == refs.end())
        throw ValidationError(o.refs + ": no reference for utterance " +
                              nbest.utterance.utterance_id + " in session " + s.session_id);
      const auto ref_words = scoring_words(it->second->text);
      const Hypothesis& best = oracle_select(nbest, *it->second);
      oracle_counts.push_back(align(ref_words, scoring_words(best.text)));
      baseline_counts.push_back(align(ref_words, scoring_words(nbest.hypotheses.front().text)));
      picks[key_of(nbest.utterance)] = {s.session_id, nbest.utterance.utterance_id, best.text,
                                        best.rank, best.asr_score};
    }
  }
  if (!o.out.empty()) write_selection(sessions, picks, o.out);
  WerReport oracle = corpus_wer(oracle_counts), baseline = corpus_wer(baseline_counts);
  ordered_json result;
  result["config"] = effective_config("oracle", o);
  result["utterances"] = oracle_counts.size();
  result["oracle"] = to_json(oracle);
  result["baseline_rank1"] = to_json(baseline);
  emit(o, result,
       "oracle_wer " + fmt_double(oracle.wer) + "\nbaseline_wer " + fmt_double(baseline.wer) +
           "\n");
  return 0;
}

int cmd_sigtest(const Options& o) {
  auto refs = load_references(o.refs);
  auto a = align_against(refs, load_transcripts(o.hyps_a), o.hyps_a);
  auto b = align_against(refs, load_transcripts(o.hyps_b), o.hyps_b);
  std::vector<std::size_t> err_a, err_b;
  for (const auto& c : a) err_a.push_back(c.errors());
  for (const auto& c : b) err_b.push_back(c.errors());
  SigTestResult r = significance_matched_pairs(err_a, err_b);
  ordered_json result;
  result["config"] = effective_config("sigtest", o);
  result["wer_a"] = corpus_wer(a).wer;
  result["wer_b"] = corpus_wer(b).wer;
  result["n"] = r.n;
  result["nonzero"] = r.nonzero;
  result["mean_diff"] = r.mean_diff;
  result["stddev"] = r.stddev;
  result["statistic"] = number_or_null(r.statistic);
  result["p_two_sided"] = r.p_two_sided;
  result["significant_05"] = r.significant_05;
  result["significant_01"] = r.significant_01;
  result["no_difference"] = r.no_difference;
  result["degenerate_variance"] = r.degenerate_variance;
  std::string mark = r.significant_01 ? "**" : r.significant_05 ? "*" : "";
  emit(o, result,
       "wer_a " + fmt_double(result["wer_a"].get<double>()) + "\nwer_b " +
           fmt_double(result["wer_b"].get<double>()) + "\np_two_sided " +
           fmt_double(r.p_two_sided) + " " + mark + "\n");
  return 0;
}

int cmd_sweep(const Options& o) {
  SweepGrid grid{parse_grid_axis(o.alphas), parse_grid_axis(o.gammas)};
  grid.validate();
  RescoreConfig base;
  base.context_len = o.context_len;
  base.prep = prep_from(o);
  base.context_separator = o.separator;
  auto scorer = load_scorer(o);
  auto sessions = load_prepared_nbest(o, *scorer, base.prep);
  auto refs = load_transcripts(o.refs);
  SweepResult r = sweep(sessions, refs, grid, base, *scorer, {o.jobs, true});

  ordered_json result;
  result["config"] = effective_config("sweep", o);
  result["best_alpha"] = r.best_alpha;
  result["best_gamma"] = r.best_gamma;
  result["best"] = to_json(r.best);
  ordered_json table = ordered_json::array();
  std::ostringstream human;
  human << "alpha gamma wer\n";
  for (const auto& p : r.table) {
    ordered_json row;
    row["alpha"] = p.alpha;
    row["gamma"] = p.gamma;
    const auto body = to_json(p.report);
    for (auto& [k, v] : body.items()) row[k] = v;
    table.push_back(row);
    human << fmt_double(p.alpha) << ' ' << fmt_double(p.gamma) << ' ' << fmt_double(p.report.wer)
          << '\n';
  }
  result["table"] = table;
  human << "best alpha=" << fmt_double(r.best_alpha) << " gamma=" << fmt_double(r.best_gamma)
        << " wer=" << fmt_double(r.best.wer) << '\n';
  emit(o, result, human.str());
  return 0;
}

void add_output_flags(CLI::App* sub, Options& o) {
  sub->add_flag("--json", o.json, "Print results as JSON");
  sub->add_option("--json-out", o.json_out, "Also write the JSON result to this file");
  sub->add_option("--jobs", o.jobs, "Worker threads (default: available parallelism)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--seed", o.seed, "Reserved; all code paths are deterministic");
  sub->add_option("--log-level", o.log_level, "error|warn|info|debug")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));
}

void add_lm_flags(CLI::App* sub, Options& o) {
  sub->add_option("--scorer", o.scorer,
                  "uniform[:V] | ngram:PATH[:ORDER] | remote[:URL] "
                  "(remote defaults to $CTX_RESCORE_SCORER_URL)");
  sub->add_option("--context-len", o.context_len, "Context length L in tokens");
  sub->add_option("--ordering", o.ordering, "conv | spkr")->check(CLI::IsMember({"conv", "spkr"}));
  sub->add_flag("--no-period", o.no_period, "Do not append a sentence-final period");
  sub->add_flag("--capitalize", o.capitalize, "Uppercase the first letter of each sentence");
  sub->add_flag("--reset-per-speaker", o.reset_per_speaker,
                "With --ordering spkr, clear the context at each speaker change");
  sub->add_option("--max-len", o.max_len, "Override the offline scorer's maximum sequence length");
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"N-best rescoring with language-model context carry-over"};
  app.require_subcommand(1);

  auto* rescore = app.add_subcommand("rescore", "Rescore N-best lists and write selections");
  rescore->add_option("--nbest", o.nbest, "N-best JSONL")->required()->check(CLI::ExistingFile);
  rescore->add_option("--alpha", o.alpha, "Language weight (>= 0)");
  rescore->add_option("--gamma", o.gamma, "Per-token length reward (>= 0)");
  rescore->add_option("--out", o.out, "Selection JSONL output");
  rescore->add_option("--context-separator", o.separator,
                      "Text tokenized and appended to the context after each selection");
  add_lm_flags(rescore, o);
  add_output_flags(rescore, o);

  auto* ppl = app.add_subcommand("ppl", "Token perplexity of references with context carry-over");
  ppl->add_option("--refs", o.refs, "Reference JSONL")->required()->check(CLI::ExistingFile);
  add_lm_flags(ppl, o);
  add_output_flags(ppl, o);

  auto* wer = app.add_subcommand("wer", "Pooled WER of hypotheses against references");
  wer->add_option("--refs", o.refs, "Reference JSONL")->required()->check(CLI::ExistingFile);
  wer->add_option("--hyps", o.hyps, "Selection or transcript JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  wer->add_flag("--per-session", o.per_session, "Also report WER per session");
  add_output_flags(wer, o);

  auto* oracle = app.add_subcommand("oracle", "Oracle and rank-1 WER of N-best lists");
  oracle->add_option("--refs", o.refs, "Reference JSONL")->required()->check(CLI::ExistingFile);
  oracle->add_option("--nbest", o.nbest, "N-best JSONL")->required()->check(CLI::ExistingFile);
  oracle->add_option("--out", o.out, "Write oracle selections as JSONL");
  add_output_flags(oracle, o);

  auto* sigtest = app.add_subcommand("sigtest", "Matched-pairs significance test of two systems");
  sigtest->add_option("--refs", o.refs, "Reference JSONL")->required()->check(CLI::ExistingFile);
  sigtest->add_option("--hypsA", o.hyps_a, "System A JSONL")->required()->check(CLI::ExistingFile);
  sigtest->add_option("--hypsB", o.hyps_b, "System B JSONL")->required()->check(CLI::ExistingFile);
  add_output_flags(sigtest, o);

  auto* sweep_cmd = app.add_subcommand("sweep", "Grid search of alpha and gamma on a dev set");
  sweep_cmd->add_option("--nbest", o.nbest, "N-best JSONL")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--refs", o.refs, "Reference JSONL")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--alphas", o.alphas, "LO:HI:STEP or comma list");
  sweep_cmd->add_option("--gammas", o.gammas, "LO:HI:STEP or comma list");
  sweep_cmd->add_option("--context-separator", o.separator,
                        "Text tokenized and appended to the context after each selection");
  add_lm_flags(sweep_cmd, o);
  add_output_flags(sweep_cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  static const std::map<std::string, LogLevel> levels = {
      {"error", LogLevel::kError}, {"warn", LogLevel::kWarn},
      {"info", LogLevel::kInfo},   {"debug", LogLevel::kDebug}};
  g_level = levels.at(o.log_level);

  const std::string command = app.get_subcommands().front()->get_name();
  std::cerr << "# ctx-rescore " << effective_config(command, o).dump() << '\n';
  try {
    if (command == "rescore") return cmd_rescore(o);
    if (command == "ppl") return cmd_ppl(o);
    if (command == "wer") return cmd_wer(o);
    if (command == "oracle") return cmd_oracle(o);
    if (command == "sigtest") return cmd_sigtest(o);
    if (command == "sweep") return cmd_sweep(o);
  } catch (const TransportError& e) {
    log(LogLevel::kError, e.what());
    std::cerr << "hint: the scorer service is unavailable; the run can be retried\n";
    return 2;
  } catch (const std::exception& e) {
    log(LogLevel::kError, e.what());
    return 1;
  }
  return 1;
}
