#include "ctxrescore/ngram_scorer.hpp"

#include <cmath>
#include <fstream>

#include "ctxrescore/error.hpp"

namespace ctxrescore {

NgramScorer::NgramScorer(const std::vector<std::string>& lines, Options opts) : opts_(opts) {
  if (opts_.order < 1) throw ValidationError("n-gram order must be >= 1");
  if (!(opts_.add_k > 0) || !std::isfinite(opts_.add_k))
    throw ValidationError("n-gram add-k constant must be positive");
  words_ = {"<s>", "<unk>"};
  ids_ = {{"<s>", kBos}, {"<unk>", kUnk}};

  const std::size_t hist = static_cast<std::size_t>(opts_.order - 1);
  for (const auto& line : lines) {
    TokenSeq stream(hist, kBos);
    for (auto word : split_words(line)) {
      auto [it, added] = ids_.try_emplace(std::string(word), static_cast<TokenId>(words_.size()));
      if (added) words_.emplace_back(word);
      stream.push_back(it->second);
    }
    for (std::size_t i = hist; i < stream.size(); ++i) {
      TokenSeq gram(stream.begin() + static_cast<std::ptrdiff_t>(i - hist),
                    stream.begin() + static_cast<std::ptrdiff_t>(i + 1));
      ++ngram_counts_[gram];
      gram.pop_back();
      ++history_counts_[gram];
    }
  }
}

NgramScorer NgramScorer::from_file(const std::filesystem::path& path, Options opts) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open n-gram training text " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  return NgramScorer(lines, opts);
}

TokenId NgramScorer::id_of(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnk : it->second;
}

TokenSeq NgramScorer::tokenize(std::string_view text) const {
  TokenSeq ids;
  for (auto word : split_words(text)) ids.push_back(id_of(word));
  return ids;
}

std::string NgramScorer::detokenize(const TokenSeq& ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (!out.empty()) out.push_back(' ');
    out += word_of(id);
  }
  return out;
}

double NgramScorer::logprob(const TokenSeq& history, TokenId next) const {
  const double predictable = static_cast<double>(words_.size() - 1);
  auto hit = history_counts_.find(history);
  const double c_hist = hit == history_counts_.end() ? 0.0 : static_cast<double>(hit->second);
  TokenSeq gram = history;
  gram.push_back(next);
  auto git = ngram_counts_.find(gram);
  const double c_gram = git == ngram_counts_.end() ? 0.0 : static_cast<double>(git->second);
  return std::log((c_gram + opts_.add_k) / (c_hist + opts_.add_k * predictable));
}

ScoreResponse NgramScorer::score(const ScoreRequest& req) const {
  check_request(req);
  for (TokenId id : req.target)
    if (id == kBos) throw ScorerError("<s> is not a predictable token");
  const std::size_t hist = static_cast<std::size_t>(opts_.order - 1);
  TokenSeq stream(hist, kBos);
  stream.insert(stream.end(), req.context.begin(), req.context.end());
  ScoreResponse resp;
  resp.token_logprobs.reserve(req.target.size());
  for (TokenId next : req.target) {
    TokenSeq history(stream.end() - static_cast<std::ptrdiff_t>(hist), stream.end());
    resp.token_logprobs.push_back(logprob(history, next));
    stream.push_back(next);
  }
  return resp;
}

std::string NgramScorer::name() const {
  return "ngram:order=" + std::to_string(opts_.order) + ",vocab=" + std::to_string(words_.size());
}

}  // namespace ctxrescore
