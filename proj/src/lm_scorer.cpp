#include "ctxrescore/lm_scorer.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>

#include "ctxrescore/error.hpp"
#include "ctxrescore/ngram_scorer.hpp"
#include "ctxrescore/remote_scorer.hpp"

namespace ctxrescore {

double ScoreResponse::total() const {
  return std::accumulate(token_logprobs.begin(), token_logprobs.end(), 0.0);
}

void LmScorer::check_request(const ScoreRequest& req) const {
  if (req.target.empty()) throw ScorerError("score request with empty target");
  const std::size_t len = req.context.size() + req.target.size();
  if (len > max_len())
    throw LengthError("context (" + std::to_string(req.context.size()) + ") + target (" +
                      std::to_string(req.target.size()) + ") tokens exceed max length " +
                      std::to_string(max_len()) + "; use a smaller context length");
  const auto vocab = static_cast<std::int64_t>(vocab_size());
  for (const auto* seq : {&req.context, &req.target})
    for (TokenId id : *seq)
      if (id < 0 || id >= vocab)
        throw ScorerError("token id " + std::to_string(id) + " outside vocabulary of size " +
                          std::to_string(vocab));
}

std::vector<ScoreOutcome> LmScorer::batch_score(std::span<const ScoreRequest> reqs) const {
  std::vector<ScoreOutcome> out;
  out.reserve(reqs.size());
  for (const auto& req : reqs) {
    try {
      out.emplace_back(score(req));
    } catch (const TransportError& e) {
      out.emplace_back(ScoreFailure{e.what(), true, false});
    } catch (const LengthError& e) {
      out.emplace_back(ScoreFailure{e.what(), false, true});
    } catch (const Error& e) {
      out.emplace_back(ScoreFailure{e.what(), false, false});
    }
  }
  return out;
}

std::vector<std::string_view> split_words(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) words.push_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

UniformScorer::UniformScorer(std::size_t vocab_size, std::size_t max_len)
    : vocab_size_(vocab_size), max_len_(max_len) {
  if (vocab_size_ < 1) throw ValidationError("uniform scorer needs vocab_size >= 1");
}

TokenSeq UniformScorer::tokenize(std::string_view text) const {
  TokenSeq ids;
  for (auto word : split_words(text)) {
    // 64-bit FNV-1a
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : word) {
      h ^= c;
      h *= 1099511628211ull;
    }
    ids.push_back(static_cast<TokenId>(h % vocab_size_));
  }
  return ids;
}

ScoreResponse UniformScorer::score(const ScoreRequest& req) const {
  check_request(req);
  const double lp = -std::log(static_cast<double>(vocab_size_));
  return {std::vector<double>(req.target.size(), lp)};
}

std::string UniformScorer::name() const { return "uniform:" + std::to_string(vocab_size_); }

std::unique_ptr<LmScorer> make_scorer(std::string_view spec, std::size_t max_len) {
  auto colon = spec.find(':');
  std::string_view kind = spec.substr(0, colon);
  std::string_view arg = colon == std::string_view::npos ? "" : spec.substr(colon + 1);
  auto parse_count = [&](std::string_view s, const char* what) {
    char* end = nullptr;
    std::string tmp(s);
    long long v = std::strtoll(tmp.c_str(), &end, 10);
    if (tmp.empty() || *end != '\0' || v <= 0)
      throw ValidationError(std::string("invalid ") + what + " in scorer spec '" +
                            std::string(spec) + "'");
    return static_cast<std::size_t>(v);
  };
  if (kind == "uniform") {
    std::size_t v = arg.empty() ? 32000 : parse_count(arg, "vocabulary size");
    return std::make_unique<UniformScorer>(v, max_len ? max_len : UniformScorer::kDefaultMaxLen);
  }
  if (kind == "ngram") {
    if (arg.empty()) throw ValidationError("ngram scorer needs a training text: ngram:PATH");
    NgramScorer::Options opts;
    if (max_len) opts.max_len = max_len;
    std::string_view path = arg;
    if (auto c = arg.rfind(':'); c != std::string_view::npos) {
      std::string_view tail = arg.substr(c + 1);
      if (!tail.empty() && tail.find_first_not_of("0123456789") == std::string_view::npos) {
        opts.order = static_cast<int>(parse_count(tail, "n-gram order"));
        path = arg.substr(0, c);
      }
    }
    return std::make_unique<NgramScorer>(NgramScorer::from_file(std::string(path), opts));
  }
  if (kind == "remote") {
    std::string url(arg);
    if (url.empty()) {
      const char* env = std::getenv("CTX_RESCORE_SCORER_URL");
      if (!env || !*env)
        throw ValidationError("remote scorer needs a URL (remote:URL or CTX_RESCORE_SCORER_URL)");
      url = env;
    }
    return std::make_unique<RemoteScorer>(url);
  }
  throw ValidationError("unknown scorer '" + std::string(spec) +
                        "' (expected uniform[:V], ngram:PATH[:ORDER] or remote[:URL])");
}

}  // namespace ctxrescore
