#pragma once

#include <memory>
#include <mutex>
#include <string>

#include "ctxrescore/lm_scorer.hpp"

namespace httplib {
class Client;
}

namespace ctxrescore {

/// Client for an HTTP log-prob service:
///   GET  /health    -> {"model", "vocab_size", "max_len", ...}
///   POST /tokenize  {"text"} -> {"ids"}
///   POST /logprobs  {"context_ids", "target_ids"} -> {"token_logprobs"}
/// Responses are validated for shape and finiteness only.
class RemoteScorer final : public LmScorer {
 public:
  struct Options {
    double timeout_seconds = 60.0;
    int retries = 2;  // extra attempts on transport failure
  };

  /// Queries /health immediately; throws TransportError if unreachable.
  explicit RemoteScorer(const std::string& url, Options opts);
  explicit RemoteScorer(const std::string& url) : RemoteScorer(url, Options{}) {}
  ~RemoteScorer() override;

  TokenSeq tokenize(std::string_view text) const override;
  ScoreResponse score(const ScoreRequest& req) const override;

  std::size_t vocab_size() const override { return vocab_size_; }
  std::size_t max_len() const override { return max_len_; }
  std::string name() const override;

  const std::string& model() const { return model_; }

 private:
  std::string post(const std::string& route, const std::string& body) const;

  std::string url_;
  Options opts_;
  std::unique_ptr<httplib::Client> client_;
  mutable std::mutex mu_;
  std::string model_;
  std::size_t vocab_size_ = 0;
  std::size_t max_len_ = 0;
};

}  // namespace ctxrescore
