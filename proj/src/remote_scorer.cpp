#include "ctxrescore/remote_scorer.hpp"

#include <cmath>

#include <httplib.h>
#include <json.hpp>

#include "ctxrescore/error.hpp"

namespace ctxrescore {

using nlohmann::json;

RemoteScorer::RemoteScorer(const std::string& url, Options opts)
    : url_(url), opts_(opts), client_(std::make_unique<httplib::Client>(url)) {
  if (!client_->is_valid()) throw ValidationError("invalid scorer URL '" + url + "'");
  const auto secs = static_cast<time_t>(opts_.timeout_seconds);
  const auto usecs = static_cast<time_t>((opts_.timeout_seconds - static_cast<double>(secs)) * 1e6);
  client_->set_connection_timeout(secs, usecs);
  client_->set_read_timeout(secs, usecs);
  client_->set_write_timeout(secs, usecs);

  httplib::Result res = client_->Get("/health");
  if (!res)
    throw TransportError("scorer at " + url_ + " unreachable (" + httplib::to_string(res.error()) +
                         "); retry once the service is up");
  if (res->status != 200)
    throw TransportError("scorer /health returned HTTP " + std::to_string(res->status));
  try {
    json health = json::parse(res->body);
    model_ = health.at("model").get<std::string>();
    vocab_size_ = health.at("vocab_size").get<std::size_t>();
    max_len_ = health.at("max_len").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ScorerError(std::string("malformed /health response: ") + e.what());
  }
  if (vocab_size_ == 0 || max_len_ < 2) throw ScorerError("implausible /health limits");
}

RemoteScorer::~RemoteScorer() = default;

std::string RemoteScorer::post(const std::string& route, const std::string& body) const {
  std::string last_error;
  for (int attempt = 0; attempt <= opts_.retries; ++attempt) {
    httplib::Result res = [&] {
      std::lock_guard lock(mu_);
      return client_->Post(route, body, "application/json");
    }();
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return res->body;
    if (res->status == 422) throw LengthError(route + ": " + res->body);
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    throw ScorerError(route + " returned HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  throw TransportError(route + " failed at " + url_ + " (" + last_error + "); retriable");
}

TokenSeq RemoteScorer::tokenize(std::string_view text) const {
  if (text.empty()) return {};
  const std::string body = post("/tokenize", json{{"text", std::string(text)}}.dump());
  TokenSeq ids;
  try {
    ids = json::parse(body).at("ids").get<TokenSeq>();
  } catch (const json::exception& e) {
    throw ScorerError(std::string("malformed /tokenize response: ") + e.what());
  }
  for (TokenId id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size_)
      throw ScorerError("/tokenize returned id " + std::to_string(id) + " outside vocabulary");
  return ids;
}

ScoreResponse RemoteScorer::score(const ScoreRequest& req) const {
  check_request(req);
  const std::string body =
      post("/logprobs", json{{"context_ids", req.context}, {"target_ids", req.target}}.dump());
  ScoreResponse resp;
  try {
    resp.token_logprobs = json::parse(body).at("token_logprobs").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ScorerError(std::string("malformed /logprobs response: ") + e.what());
  }
  if (resp.token_logprobs.size() != req.target.size())
    throw ScorerError("/logprobs returned " + std::to_string(resp.token_logprobs.size()) +
                      " values for " + std::to_string(req.target.size()) + " target tokens");
  for (double lp : resp.token_logprobs)
    if (!std::isfinite(lp)) throw ScorerError("/logprobs returned a non-finite value");
  return resp;
}

std::string RemoteScorer::name() const { return "remote:" + url_ + " (" + model_ + ")"; }

}  // namespace ctxrescore
