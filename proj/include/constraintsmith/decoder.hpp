#pragma once

// Constrained generation loop.
//
// Each step offers the scorer exactly the tokens admissible from the current
// automaton state (plus EOS when the state accepts), picks one from the
// returned weights, and advances. Whatever the scorer returns, the emitted
// text stays inside the constraint language; a result that finishes with
// EOS is a full match.

#include <cmath>
#include <cstdint>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "constraintsmith/errors.hpp"
#include "constraintsmith/token_index.hpp"

namespace constraintsmith {

struct ScoreRequest {
  std::string_view prompt;
  std::span<const TokenId> prefix;      // tokens emitted so far
  std::span<const TokenId> candidates;  // sorted; may end with eos_id
  TokenId eos_id;
  std::size_t step;
};

// Source of next-token weights. Implementations return one non-negative
// weight per candidate, in candidate order, and must be safe to call from
// concurrent sessions.
class TokenScorer {
 public:
  virtual ~TokenScorer() = default;
  virtual std::vector<double> score(const ScoreRequest& request) const = 0;
};

enum class DecodeMode { Greedy, Sample };

struct DecodeParams {
  DecodeMode mode = DecodeMode::Sample;
  std::uint64_t seed = 0;  // ignored by greedy
  std::size_t max_tokens = 512;
  double eos_bias = 1.0;   // multiplies the EOS weight
};

enum class Finish { Eos, ForcedEos, CompletionFailure };

inline std::string_view finish_name(Finish f) {
  switch (f) {
    case Finish::Eos: return "eos";
    case Finish::ForcedEos: return "forced_eos";
    case Finish::CompletionFailure: return "max_tokens_with_completion_failure";
  }
  return "eos";
}

struct GenerationResult {
  std::string text;
  std::vector<TokenId> token_ids;  // EOS excluded
  std::size_t steps = 0;           // scorer consultations plus forced EOS
  Finish finish = Finish::Eos;
  std::string diagnostic;          // set on CompletionFailure

  bool succeeded() const noexcept { return finish != Finish::CompletionFailure; }
};

namespace detail {

// 53-bit uniform double in [0, 1) from std::mt19937_64, whose output
// sequence is fixed by the standard.
inline double unit_interval(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t pick(std::span<const double> weights, std::span<const TokenId> ids,
                        DecodeMode mode, std::mt19937_64& rng) {
  if (mode == DecodeMode::Greedy) {
    // Candidates are sorted by id, so the first maximum is the lowest id.
    std::size_t best = 0;
    for (std::size_t i = 1; i < weights.size(); ++i) {
      if (weights[i] > weights[best] || (weights[i] == weights[best] && ids[i] < ids[best])) {
        best = i;
      }
    }
    return best;
  }
  double total = 0;
  for (double w : weights) total += w;
  const double target = unit_interval(rng) * total;
  double cumulative = 0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0) continue;
    cumulative += weights[i];
    last_positive = i;
    if (target < cumulative) return i;
  }
  return last_positive;  // rounding at the top end
}

}  // namespace detail

// Throws ScorerError (carrying the step index) on a bad scorer response.
// Exhausting max_tokens in a non-accepting state, or reaching a state with
// no admissible token, yields finish == CompletionFailure with the partial
// text kept for diagnostics.
inline GenerationResult generate(std::string_view prompt, const TokenIndex& index,
                                 const TokenScorer& scorer, const DecodeParams& params = {}) {
  GenerationResult result;
  std::mt19937_64 rng(params.seed);
  const Vocabulary& vocab = index.vocabulary();
  const TokenId eos = index.eos_id();
  StateId state = index.start();
  std::vector<TokenId> candidates;
  std::vector<double> weights;

  auto finish = [&](Finish f, std::string diagnostic = {}) {
    result.finish = f;
    result.diagnostic = std::move(diagnostic);
    return std::move(result);
  };

  while (true) {
    const auto [allowed, eos_ok] = index.allowed_tokens(state);
    if (allowed.empty()) {
      if (eos_ok) {
        ++result.steps;
        return finish(Finish::ForcedEos);
      }
      return finish(Finish::CompletionFailure, "no admissible token in state " +
                                                   std::to_string(state));
    }
    if (result.token_ids.size() >= params.max_tokens) {
      // Budget spent. Stopping is only safe where the text already matches.
      if (eos_ok) {
        ++result.steps;
        return finish(Finish::ForcedEos);
      }
      return finish(Finish::CompletionFailure,
                    "max_tokens (" + std::to_string(params.max_tokens) +
                        ") reached before the constraint was satisfied");
    }

    candidates.assign(allowed.begin(), allowed.end());
    if (eos_ok) candidates.push_back(eos);
    const std::size_t step = result.steps;
    weights = scorer.score({prompt, result.token_ids, candidates, eos, step});
    if (weights.size() != candidates.size()) {
      throw ScorerError(step, "expected " + std::to_string(candidates.size()) +
                                  " weights, got " + std::to_string(weights.size()));
    }
    bool any_positive = false;
    for (double w : weights) {
      if (!std::isfinite(w) || w < 0) throw ScorerError(step, "weights must be finite and >= 0");
      any_positive = any_positive || w > 0;
    }
    if (!any_positive) throw ScorerError(step, "degenerate distribution (all weights zero)");
    if (eos_ok) {
      weights.back() *= params.eos_bias;
      bool still_positive = false;
      for (double w : weights) still_positive = still_positive || w > 0;
      if (!still_positive) {
        throw ScorerError(step, "degenerate distribution after eos_bias");
      }
    }

    const std::size_t chosen = detail::pick(weights, candidates, params.mode, rng);
    ++result.steps;
    const TokenId token = candidates[chosen];
    if (token == eos) return finish(Finish::Eos);
    result.token_ids.push_back(token);
    result.text += vocab.text(token);
    state = index.advance(state, token);
  }
}

// ---------------------------------------------------------------------------
// Desk-scale scorers

class UniformScorer final : public TokenScorer {
 public:
  std::vector<double> score(const ScoreRequest& request) const override {
    return std::vector<double>(request.candidates.size(), 1.0);
  }
};

inline UniformScorer uniform_scorer() { return {}; }

// Replays a fixed token script: weight 1 on the scripted next id when it is
// offered (EOS once the script is exhausted). Otherwise falls back to uniform
// weights and records a deviation at that step.
class EchoScorer final : public TokenScorer {
 public:
  explicit EchoScorer(std::vector<TokenId> script) : script_(std::move(script)) {}

  std::vector<double> score(const ScoreRequest& request) const override {
    const std::size_t pos = request.prefix.size();
    const TokenId wanted = pos < script_.size() ? script_[pos] : request.eos_id;
    std::vector<double> w(request.candidates.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (request.candidates[i] == wanted) {
        w[i] = 1.0;
        return w;
      }
    }
    {
      std::lock_guard lock(mutex_);
      deviations_.push_back(request.step);
    }
    std::fill(w.begin(), w.end(), 1.0);
    return w;
  }

  const std::vector<TokenId>& script() const noexcept { return script_; }

  // Steps at which the scripted token was masked out.
  std::vector<std::size_t> deviations() const {
    std::lock_guard lock(mutex_);
    return deviations_;
  }

 private:
  std::vector<TokenId> script_;
  mutable std::mutex mutex_;
  mutable std::vector<std::size_t> deviations_;
};

inline EchoScorer echo_scorer(std::vector<TokenId> script) { return EchoScorer(std::move(script)); }

}  // namespace constraintsmith
