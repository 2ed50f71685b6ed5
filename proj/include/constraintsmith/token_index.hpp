#pragma once

// Per-state admissible-token index over an automaton and a vocabulary.
//
// For every live state the index lists, sorted by id, each token whose whole
// text can be walked from that state without leaving the automaton, together
// with the state the walk ends in. Lookup at decode time is a vector access.
// Construction walks a trie of the vocabulary once per state, so shared
// token prefixes are stepped only once.

#include <algorithm>
#include <cstdint>
#include <future>
#include <memory>
#include <numeric>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "constraintsmith/automaton.hpp"
#include "constraintsmith/errors.hpp"
#include "constraintsmith/vocabulary.hpp"

namespace constraintsmith {

class VocabularyTrie {
 public:
  struct Node {
    std::vector<std::pair<utf8::Scalar, std::uint32_t>> children;  // sorted by scalar
    std::vector<TokenId> terminals;
  };

  explicit VocabularyTrie(const Vocabulary& v) : nodes_(1) {
    for (TokenId id = 0; id < v.size(); ++id) {
      std::uint32_t cur = 0;
      for (utf8::Scalar c : v.scalars(id)) {
        auto& ch = nodes_[cur].children;
        auto it = std::find_if(ch.begin(), ch.end(), [c](const auto& p) { return p.first == c; });
        if (it != ch.end()) {
          cur = it->second;
        } else {
          const auto next = static_cast<std::uint32_t>(nodes_.size());
          ch.emplace_back(c, next);
          nodes_.emplace_back();
          cur = next;
        }
      }
      nodes_[cur].terminals.push_back(id);
    }
    for (auto& n : nodes_) std::sort(n.children.begin(), n.children.end());
  }

  const Node& node(std::uint32_t i) const { return nodes_[i]; }
  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
};

struct AllowedTokens {
  std::span<const TokenId> tokens;
  bool eos_ok;
};

class TokenIndex {
 public:
  struct Entry {
    std::vector<TokenId> allowed;  // sorted
    std::vector<StateId> next;     // parallel to allowed
    bool eos_ok = false;
  };

  TokenIndex(std::shared_ptr<const Vocabulary> vocab, StateId start, std::vector<Entry> entries)
      : vocab_(std::move(vocab)), start_(start), entries_(std::move(entries)) {}

  StateId start() const noexcept { return start_; }
  std::size_t state_count() const noexcept { return entries_.size(); }
  const Vocabulary& vocabulary() const noexcept { return *vocab_; }
  std::shared_ptr<const Vocabulary> vocabulary_ptr() const noexcept { return vocab_; }
  TokenId eos_id() const noexcept { return vocab_->eos_id(); }

  // Throws UnknownState.
  AllowedTokens allowed_tokens(StateId state) const {
    const auto& e = entry(state);
    return {std::span<const TokenId>(e.allowed), e.eos_ok};
  }

  // Throws UnknownState or TokenNotAllowed.
  StateId advance(StateId state, TokenId token) const {
    const auto& e = entry(state);
    auto it = std::lower_bound(e.allowed.begin(), e.allowed.end(), token);
    if (it == e.allowed.end() || *it != token) throw TokenNotAllowed(state, token);
    return e.next[static_cast<std::size_t>(it - e.allowed.begin())];
  }

  bool is_accepting(StateId state) const { return entry(state).eos_ok; }

  const Entry& entry(StateId state) const {
    if (state >= entries_.size()) throw UnknownState(state);
    return entries_[state];
  }

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  StateId start_;
  std::vector<Entry> entries_;
};

namespace detail {

inline TokenIndex::Entry index_state(const Automaton& a, const VocabularyTrie& trie, StateId s) {
  TokenIndex::Entry e;
  e.eos_ok = a.is_accepting(s);
  std::vector<std::pair<TokenId, StateId>> found;
  std::vector<std::pair<std::uint32_t, StateId>> stack{{0, s}};
  while (!stack.empty()) {
    const auto [node_id, state] = stack.back();
    stack.pop_back();
    const auto& node = trie.node(node_id);
    if (node_id != 0) {
      for (TokenId t : node.terminals) found.emplace_back(t, state);
    }
    // Merge-walk the sorted children against the sorted transitions.
    const auto& ts = a.transitions(state);
    auto t = ts.begin();
    for (const auto& [c, child] : node.children) {
      while (t != ts.end() && t->hi < c) ++t;
      if (t == ts.end()) break;
      if (t->lo <= c) stack.emplace_back(child, t->target);
    }
  }
  std::sort(found.begin(), found.end());
  e.allowed.reserve(found.size());
  e.next.reserve(found.size());
  for (const auto& [tok, st] : found) {
    e.allowed.push_back(tok);
    e.next.push_back(st);
  }
  return e;
}

}  // namespace detail

struct IndexOptions {
  unsigned threads = 0;  // 0 = hardware concurrency
};

// Tokens that cannot be walked from a state are simply absent from its
// allowed list; a token valid nowhere appears in no list.
inline TokenIndex build_index(const Automaton& a, std::shared_ptr<const Vocabulary> vocab,
                              const IndexOptions& options = {}) {
  const VocabularyTrie trie(*vocab);
  const std::size_t n = a.state_count();
  std::vector<TokenIndex::Entry> entries(n);
  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n / 4 + 1)));
  if (threads == 1) {
    for (StateId s = 0; s < n; ++s) entries[s] = detail::index_state(a, trie, s);
  } else {
    // Each worker fills a disjoint stride of states; the result does not
    // depend on scheduling.
    std::vector<std::future<void>> workers;
    for (unsigned w = 0; w < threads; ++w) {
      workers.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t s = w; s < n; s += threads) {
          entries[s] = detail::index_state(a, trie, static_cast<StateId>(s));
        }
      }));
    }
    for (auto& f : workers) f.get();
  }
  return TokenIndex(std::move(vocab), a.start(), std::move(entries));
}

inline TokenIndex build_index(const Automaton& a, const Vocabulary& vocab,
                              const IndexOptions& options = {}) {
  return build_index(a, std::make_shared<const Vocabulary>(vocab), options);
}

}  // namespace constraintsmith
