#pragma once

// HTTP adapter for a real model behind the scorer protocol
// (docs/scorer-protocol.md). The adapter only forwards the masked candidate
// set, so a remote model can never pick a token outside the constraint.

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "constraintsmith/decoder.hpp"

namespace constraintsmith {

struct RemoteScorerConfig {
  std::string base_url;          // e.g. "http://127.0.0.1:8081"
  std::string path = "/score";
  int timeout_ms = 30'000;
};

class RemoteScorer final : public TokenScorer {
 public:
  explicit RemoteScorer(RemoteScorerConfig config) : config_(std::move(config)) {}

  std::vector<double> score(const ScoreRequest& request) const override {
    nlohmann::json body;
    body["prompt"] = std::string(request.prompt);
    body["prefix_ids"] = std::vector<TokenId>(request.prefix.begin(), request.prefix.end());
    body["candidate_ids"] =
        std::vector<TokenId>(request.candidates.begin(), request.candidates.end());

    // One client per call: httplib clients are not meant for concurrent use.
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(std::chrono::milliseconds(config_.timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(config_.timeout_ms));
    auto res = client.Post(config_.path, body.dump(), "application/json");
    if (!res) {
      throw ScorerError(request.step, "transport error: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw ScorerError(request.step, "endpoint returned HTTP " + std::to_string(res->status));
    }
    return parse_weights(request, res->body);
  }

  // Exposed for tests; validates and normalizes a response body.
  static std::vector<double> parse_weights(const ScoreRequest& request, const std::string& text) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
      throw ScorerError(request.step, "malformed response: not JSON");
    }
    if (!j.is_object() || !j.contains("weights")) {
      throw ScorerError(request.step, "malformed response: missing \"weights\"");
    }
    const auto& w = j["weights"];
    std::vector<double> out(request.candidates.size(), 0.0);
    auto read = [&](const nlohmann::json& v) {
      if (!v.is_number()) throw ScorerError(request.step, "malformed response: weight is not a number");
      const double d = v.get<double>();
      if (!std::isfinite(d) || d < 0) {
        throw ScorerError(request.step, "malformed response: weight must be finite and >= 0");
      }
      return d;
    };
    if (w.is_array()) {
      if (w.size() != out.size()) {
        throw ScorerError(request.step, "malformed response: expected " +
                                            std::to_string(out.size()) + " weights");
      }
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = read(w[i]);
    } else if (w.is_object()) {
      std::unordered_map<TokenId, std::size_t> slot;
      for (std::size_t i = 0; i < request.candidates.size(); ++i) slot[request.candidates[i]] = i;
      for (const auto& [key, value] : w.items()) {
        TokenId id = 0;
        try {
          id = static_cast<TokenId>(std::stoul(key));
        } catch (const std::exception&) {
          throw ScorerError(request.step, "malformed response: bad token id \"" + key + "\"");
        }
        auto it = slot.find(id);
        if (it == slot.end()) {
          throw ScorerError(request.step, "unsolicited token " + key);
        }
        out[it->second] = read(value);
      }
    } else {
      throw ScorerError(request.step, "malformed response: \"weights\" must be an array or object");
    }
    double total = 0;
    for (double d : out) total += d;
    if (total <= 0) throw ScorerError(request.step, "degenerate distribution (all weights zero)");
    for (double& d : out) d /= total;
    return out;
  }

 private:
  RemoteScorerConfig config_;
};

inline RemoteScorer remote_scorer(RemoteScorerConfig config) { return RemoteScorer(std::move(config)); }

}  // namespace constraintsmith
