#pragma once

// Deterministic automata over Unicode scalar values.
//
// Pipeline: AST -> Thompson NFA -> subset construction -> dead-state pruning
// -> Hopcroft minimization (optional) -> breadth-first renumbering. The
// renumbering makes the result a pure function of the language's minimal DFA
// (or of the subset-constructed DFA when minimization is off), so identical
// ASTs always produce identical automata.
//
// Transitions are stored per state as sorted, disjoint scalar intervals. A
// missing transition means reject; every retained state is live.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "constraintsmith/errors.hpp"
#include "constraintsmith/regex_ast.hpp"
#include "constraintsmith/utf8.hpp"

namespace constraintsmith {

using StateId = std::uint32_t;
using utf8::Scalar;

struct Transition {
  Scalar lo;
  Scalar hi;  // inclusive
  StateId target;

  bool operator==(const Transition&) const = default;
};

struct BuildOptions {
  std::size_t state_cap = 100'000;
  bool minimize = true;
};

class Automaton {
 public:
  Automaton() = default;
  Automaton(StateId start, std::vector<std::vector<Transition>> transitions,
            std::vector<bool> accepting)
      : start_(start), transitions_(std::move(transitions)), accepting_(std::move(accepting)) {}

  StateId start() const noexcept { return start_; }
  std::size_t state_count() const noexcept { return transitions_.size(); }

  bool is_valid_state(StateId s) const noexcept { return s < transitions_.size(); }
  bool is_accepting(StateId s) const { return is_valid_state(s) && accepting_[s]; }
  // Pruning leaves only live states, so liveness is membership.
  bool is_live(StateId s) const noexcept { return is_valid_state(s); }

  const std::vector<Transition>& transitions(StateId s) const { return transitions_.at(s); }

  std::optional<StateId> step(StateId s, Scalar c) const {
    if (!is_valid_state(s)) return std::nullopt;
    const auto& ts = transitions_[s];
    auto it = std::upper_bound(ts.begin(), ts.end(), c,
                               [](Scalar v, const Transition& t) { return v < t.lo; });
    if (it == ts.begin()) return std::nullopt;
    --it;
    if (c > it->hi) return std::nullopt;
    return it->target;
  }

  std::size_t transition_count() const {
    std::size_t n = 0;
    for (const auto& ts : transitions_) n += ts.size();
    return n;
  }

  bool operator==(const Automaton&) const = default;

 private:
  StateId start_ = 0;
  std::vector<std::vector<Transition>> transitions_;
  std::vector<bool> accepting_;
};

namespace detail {

// ---------------------------------------------------------------------------
// Thompson NFA

struct NfaEdge {
  std::vector<regex::Interval> ranges;
  int target;
};

struct NfaState {
  std::vector<int> eps;
  std::vector<NfaEdge> edges;
};

class NfaBuilder {
 public:
  explicit NfaBuilder(std::size_t cap) : cap_(cap) {}

  struct Frag {
    int start;
    int end;
  };

  int add_state() {
    if (states_.size() >= cap_) throw ComplexityLimit(cap_);
    states_.emplace_back();
    return static_cast<int>(states_.size() - 1);
  }

  Frag build(const regex::Node& n) {
    switch (n.kind) {
      case regex::Kind::Literal:
        return edge(regex::CharSet::single(n.literal));
      case regex::Kind::CharClass:
        return edge(n.matched_set());
      case regex::Kind::AnyChar:
        return edge(regex::classes::any_but_newline());
      case regex::Kind::Group:
        return build(n.children.front());
      case regex::Kind::Concat: {
        if (n.children.empty()) {
          const int s = add_state();
          return {s, s};
        }
        Frag f = build(n.children.front());
        for (std::size_t i = 1; i < n.children.size(); ++i) {
          Frag g = build(n.children[i]);
          states_[f.end].eps.push_back(g.start);
          f.end = g.end;
        }
        return f;
      }
      case regex::Kind::Alternate: {
        const int s = add_state();
        const int e = add_state();
        for (const auto& c : n.children) {
          Frag g = build(c);
          states_[s].eps.push_back(g.start);
          states_[g.end].eps.push_back(e);
        }
        return {s, e};
      }
      case regex::Kind::Repeat:
        return build_repeat(n);
    }
    return {add_state(), add_state()};
  }

  std::vector<NfaState> take() { return std::move(states_); }

 private:
  Frag edge(const regex::CharSet& set) {
    const int s = add_state();
    const int e = add_state();
    if (!set.empty()) states_[s].edges.push_back({set.ranges(), e});
    return {s, e};
  }

  Frag build_repeat(const regex::Node& n) {
    const auto& child = n.children.front();
    const int start = add_state();
    int cur = start;
    for (int i = 0; i < n.min; ++i) {
      Frag g = build(child);
      states_[cur].eps.push_back(g.start);
      cur = g.end;
    }
    if (n.max == regex::kUnbounded) {
      Frag g = build(child);
      const int end = add_state();
      states_[cur].eps.push_back(g.start);
      states_[cur].eps.push_back(end);
      states_[g.end].eps.push_back(cur);
      return {start, end};
    }
    const int end = add_state();
    for (int i = n.min; i < n.max; ++i) {
      Frag g = build(child);
      states_[cur].eps.push_back(g.start);
      states_[cur].eps.push_back(end);
      cur = g.end;
    }
    states_[cur].eps.push_back(end);
    return {start, end};
  }

  std::size_t cap_;
  std::vector<NfaState> states_;
};

// ---------------------------------------------------------------------------
// Subset construction

struct VectorHash {
  std::size_t operator()(const std::vector<int>& v) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (int x : v) {
      h ^= static_cast<std::uint32_t>(x);
      h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

struct RawDfa {
  std::vector<std::vector<Transition>> transitions;
  std::vector<bool> accepting;
  StateId start = 0;
};

inline RawDfa subset_construct(const std::vector<NfaState>& nfa, int nfa_start, int nfa_accept,
                               std::size_t cap) {
  std::vector<std::uint32_t> seen(nfa.size(), 0);
  std::uint32_t stamp = 0;
  auto closure = [&](std::vector<int> seeds) {
    ++stamp;
    std::vector<int> out;
    std::vector<int> stack = std::move(seeds);
    while (!stack.empty()) {
      const int s = stack.back();
      stack.pop_back();
      if (seen[s] == stamp) continue;
      seen[s] = stamp;
      // Only states that consume input or accept distinguish subsets.
      if (!nfa[s].edges.empty() || s == nfa_accept) out.push_back(s);
      for (int t : nfa[s].eps) stack.push_back(t);
    }
    std::sort(out.begin(), out.end());
    return out;
  };

  RawDfa dfa;
  std::unordered_map<std::vector<int>, StateId, VectorHash> ids;
  std::vector<std::vector<int>> sets;
  auto intern = [&](std::vector<int> set) -> StateId {
    auto it = ids.find(set);
    if (it != ids.end()) return it->second;
    if (sets.size() >= cap) throw ComplexityLimit(cap);
    const auto id = static_cast<StateId>(sets.size());
    ids.emplace(set, id);
    dfa.accepting.push_back(std::binary_search(set.begin(), set.end(), nfa_accept));
    sets.push_back(std::move(set));
    return id;
  };

  dfa.start = intern(closure({nfa_start}));
  struct Item {
    Scalar lo;
    Scalar hi;
    int target;
  };
  for (std::size_t cur = 0; cur < sets.size(); ++cur) {
    std::vector<Item> items;
    std::vector<Scalar> cuts;
    for (int s : sets[cur]) {
      for (const auto& e : nfa[s].edges) {
        for (const auto& r : e.ranges) {
          items.push_back({r.lo, r.hi, e.target});
          cuts.push_back(r.lo);
          cuts.push_back(r.hi + 1);
        }
      }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<Transition> out;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const Scalar lo = cuts[i];
      const Scalar hi = cuts[i + 1] - 1;
      std::vector<int> targets;
      for (const auto& it : items) {
        if (it.lo <= lo && hi <= it.hi) targets.push_back(it.target);
      }
      if (targets.empty()) continue;
      const StateId t = intern(closure(std::move(targets)));
      if (!out.empty() && out.back().target == t && out.back().hi + 1 == lo) {
        out.back().hi = hi;
      } else {
        out.push_back({lo, hi, t});
      }
    }
    dfa.transitions.push_back(std::move(out));
  }
  return dfa;
}

// Drops states from which no accepting state is reachable, along with the
// transitions into them. Returns false if the start state is dead.
inline bool prune_dead(RawDfa& dfa) {
  const std::size_t n = dfa.transitions.size();
  std::vector<std::vector<StateId>> reverse(n);
  for (StateId s = 0; s < n; ++s) {
    for (const auto& t : dfa.transitions[s]) reverse[t.target].push_back(s);
  }
  std::vector<bool> live(n, false);
  std::vector<StateId> stack;
  for (StateId s = 0; s < n; ++s) {
    if (dfa.accepting[s]) {
      live[s] = true;
      stack.push_back(s);
    }
  }
  while (!stack.empty()) {
    const StateId s = stack.back();
    stack.pop_back();
    for (StateId p : reverse[s]) {
      if (!live[p]) {
        live[p] = true;
        stack.push_back(p);
      }
    }
  }
  if (!live[dfa.start]) return false;
  for (auto& ts : dfa.transitions) {
    std::erase_if(ts, [&](const Transition& t) { return !live[t.target]; });
  }
  // Dead states stay in the vector until renumbering drops them; they are
  // unreachable now.
  return true;
}

// ---------------------------------------------------------------------------
// Hopcroft minimization over symbol classes

inline RawDfa minimize(const RawDfa& dfa) {
  const std::size_t n = dfa.transitions.size();
  // Symbol classes: maximal scalar ranges on which every state behaves alike.
  std::vector<Scalar> cuts{0};
  for (const auto& ts : dfa.transitions) {
    for (const auto& t : ts) {
      cuts.push_back(t.lo);
      if (t.hi < utf8::kMaxScalar) cuts.push_back(t.hi + 1);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const std::size_t k = cuts.size();
  auto class_of = [&](Scalar c) {
    return static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), c) - cuts.begin() - 1);
  };

  // Complete the DFA with an explicit sink at index n.
  const std::size_t total = n + 1;
  const auto sink = static_cast<StateId>(n);
  std::vector<StateId> delta(total * k, sink);
  for (StateId s = 0; s < n; ++s) {
    for (const auto& t : dfa.transitions[s]) {
      for (std::size_t c = class_of(t.lo), last = class_of(t.hi); c <= last; ++c) {
        delta[s * k + c] = t.target;
      }
    }
  }
  // Predecessor lists per (symbol, target), CSR layout.
  std::vector<std::uint32_t> pred_start(total * k + 1, 0);
  for (std::size_t s = 0; s < total; ++s) {
    for (std::size_t c = 0; c < k; ++c) ++pred_start[c * total + delta[s * k + c] + 1];
  }
  for (std::size_t i = 1; i < pred_start.size(); ++i) pred_start[i] += pred_start[i - 1];
  std::vector<StateId> preds(total * k);
  {
    std::vector<std::uint32_t> fill(pred_start.begin(), pred_start.end() - 1);
    for (std::size_t s = 0; s < total; ++s) {
      for (std::size_t c = 0; c < k; ++c) {
        preds[fill[c * total + delta[s * k + c]]++] = static_cast<StateId>(s);
      }
    }
  }

  // Partition: elems grouped by block, each block a [begin, end) slice.
  std::vector<StateId> elems(total);
  std::vector<std::uint32_t> pos(total);
  std::vector<std::uint32_t> block_of(total);
  std::vector<std::uint32_t> begin;
  std::vector<std::uint32_t> end;
  std::vector<std::uint32_t> marked;
  {
    std::uint32_t i = 0;
    for (int pass = 0; pass < 2; ++pass) {
      const std::uint32_t b0 = i;
      for (StateId s = 0; s < total; ++s) {
        const bool acc = s < n && dfa.accepting[s];
        if (acc == (pass == 0)) {
          elems[i] = s;
          pos[s] = i;
          ++i;
        }
      }
      if (i > b0) {
        for (std::uint32_t j = b0; j < i; ++j) block_of[elems[j]] = static_cast<std::uint32_t>(begin.size());
        begin.push_back(b0);
        end.push_back(i);
        marked.push_back(0);
      }
    }
  }

  std::vector<std::pair<std::uint32_t, std::uint32_t>> work;
  std::vector<char> in_work;
  auto in_work_at = [&](std::uint32_t b, std::size_t c) -> char& {
    if (in_work.size() < (b + 1) * k) in_work.resize((b + 1) * k, 0);
    return in_work[b * k + c];
  };
  {
    // Seed with the smaller initial block for every symbol.
    std::uint32_t seed = 0;
    if (begin.size() == 2 && end[1] - begin[1] < end[0] - begin[0]) seed = 1;
    for (std::size_t c = 0; c < k; ++c) {
      work.emplace_back(seed, static_cast<std::uint32_t>(c));
      in_work_at(seed, c) = 1;
    }
  }

  std::vector<std::uint32_t> touched;
  std::vector<StateId> splitter;
  while (!work.empty()) {
    auto [a, c] = work.back();
    work.pop_back();
    in_work_at(a, c) = 0;
    splitter.assign(elems.begin() + begin[a], elems.begin() + end[a]);
    touched.clear();
    for (StateId t : splitter) {
      const std::size_t row = c * total + t;
      for (std::uint32_t p = pred_start[row]; p < pred_start[row + 1]; ++p) {
        const StateId s = preds[p];
        const std::uint32_t b = block_of[s];
        const std::uint32_t m = begin[b] + marked[b];
        if (pos[s] < m) continue;  // already marked
        // Swap s into the marked prefix of its block.
        const StateId other = elems[m];
        std::swap(elems[pos[s]], elems[m]);
        pos[other] = pos[s];
        pos[s] = m;
        if (marked[b]++ == 0) touched.push_back(b);
      }
    }
    for (std::uint32_t b : touched) {
      const std::uint32_t size = end[b] - begin[b];
      const std::uint32_t m = marked[b];
      marked[b] = 0;
      if (m == size) continue;
      const auto nb = static_cast<std::uint32_t>(begin.size());
      // The smaller part takes the new id.
      if (m <= size - m) {
        begin.push_back(begin[b]);
        end.push_back(begin[b] + m);
        begin[b] += m;
      } else {
        begin.push_back(begin[b] + m);
        end.push_back(end[b]);
        end[b] = begin[b] + m;
      }
      marked.push_back(0);
      for (std::uint32_t i = begin[nb]; i < end[nb]; ++i) block_of[elems[i]] = nb;
      for (std::size_t d = 0; d < k; ++d) {
        work.emplace_back(nb, static_cast<std::uint32_t>(d));
        in_work_at(nb, d) = 1;
      }
    }
  }

  // Rebuild from block representatives, skipping the sink's block.
  const std::uint32_t sink_block = block_of[sink];
  RawDfa out;
  std::vector<StateId> rep(begin.size());
  for (std::uint32_t b = 0; b < begin.size(); ++b) rep[b] = elems[begin[b]];
  out.transitions.resize(begin.size());
  out.accepting.resize(begin.size(), false);
  for (std::uint32_t b = 0; b < begin.size(); ++b) {
    if (b == sink_block) continue;
    const StateId r = rep[b];
    out.accepting[b] = dfa.accepting[r];
    for (const auto& t : dfa.transitions[r]) {
      const StateId target = block_of[t.target];
      auto& ts = out.transitions[b];
      if (!ts.empty() && ts.back().target == target && ts.back().hi + 1 == t.lo) {
        ts.back().hi = t.hi;
      } else {
        ts.push_back({t.lo, t.hi, target});
      }
    }
  }
  out.start = block_of[dfa.start];
  return out;
}

// Renumbers reachable states in breadth-first order from the start, visiting
// transitions in interval order. Unreachable states are dropped.
inline Automaton canonicalize(const RawDfa& dfa) {
  constexpr StateId kUnset = ~StateId{0};
  std::vector<StateId> id(dfa.transitions.size(), kUnset);
  std::vector<StateId> order;
  std::deque<StateId> queue{dfa.start};
  id[dfa.start] = 0;
  order.push_back(dfa.start);
  while (!queue.empty()) {
    const StateId s = queue.front();
    queue.pop_front();
    for (const auto& t : dfa.transitions[s]) {
      if (id[t.target] == kUnset) {
        id[t.target] = static_cast<StateId>(order.size());
        order.push_back(t.target);
        queue.push_back(t.target);
      }
    }
  }
  std::vector<std::vector<Transition>> transitions(order.size());
  std::vector<bool> accepting(order.size());
  for (StateId i = 0; i < order.size(); ++i) {
    accepting[i] = dfa.accepting[order[i]];
    for (const auto& t : dfa.transitions[order[i]]) {
      transitions[i].push_back({t.lo, t.hi, id[t.target]});
    }
  }
  return Automaton(0, std::move(transitions), std::move(accepting));
}

}  // namespace detail

// Throws EmptyLanguage or ComplexityLimit.
inline Automaton build_dfa(const regex::Node& ast, const BuildOptions& options = {}) {
  detail::NfaBuilder builder(options.state_cap * 10);
  const auto frag = builder.build(ast);
  const auto nfa = builder.take();
  auto raw = detail::subset_construct(nfa, frag.start, frag.end, options.state_cap);
  if (!detail::prune_dead(raw)) throw EmptyLanguage();
  Automaton pruned = detail::canonicalize(raw);
  if (!options.minimize) return pruned;
  detail::RawDfa compact;
  compact.start = pruned.start();
  for (StateId s = 0; s < pruned.state_count(); ++s) {
    compact.transitions.push_back(pruned.transitions(s));
    compact.accepting.push_back(pruned.is_accepting(s));
  }
  return detail::canonicalize(detail::minimize(compact));
}

// ---------------------------------------------------------------------------
// Queries

inline bool full_match(const Automaton& a, std::string_view text) {
  StateId s = a.start();
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto c = utf8::decode_one(text, pos);
    if (!c) return false;
    auto next = a.step(s, *c);
    if (!next) return false;
    s = *next;
  }
  return a.is_accepting(s);
}

// Byte offset of the first scalar with no transition, or text.size() when the
// input ends mid-pattern. nullopt when the text matches. Malformed UTF-8
// rejects at the offending byte.
inline std::optional<std::size_t> first_reject_offset(const Automaton& a, std::string_view text) {
  StateId s = a.start();
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t at = pos;
    auto c = utf8::decode_one(text, pos);
    if (!c) return at;
    auto next = a.step(s, *c);
    if (!next) return at;
    s = *next;
  }
  if (a.is_accepting(s)) return std::nullopt;
  return text.size();
}

// Minimum number of scalars from each state to acceptance.
inline std::vector<std::size_t> distance_to_accept(const Automaton& a) {
  constexpr auto kInf = static_cast<std::size_t>(-1);
  const std::size_t n = a.state_count();
  std::vector<std::vector<StateId>> reverse(n);
  for (StateId s = 0; s < n; ++s) {
    for (const auto& t : a.transitions(s)) reverse[t.target].push_back(s);
  }
  std::vector<std::size_t> dist(n, kInf);
  std::deque<StateId> queue;
  for (StateId s = 0; s < n; ++s) {
    if (a.is_accepting(s)) {
      dist[s] = 0;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    const StateId s = queue.front();
    queue.pop_front();
    for (StateId p : reverse[s]) {
      if (dist[p] == kInf) {
        dist[p] = dist[s] + 1;
        queue.push_back(p);
      }
    }
  }
  return dist;
}

// Random member of L(a) with at most max_len scalars. At each step the walk
// chooses uniformly between stopping (when accepting) and each outgoing
// interval that can still reach acceptance within budget, then picks a
// uniform scalar inside the interval. Throws LengthExceeded.
inline std::string sample_string(const Automaton& a, std::uint64_t seed, std::size_t max_len) {
  const auto dist = distance_to_accept(a);
  if (dist[a.start()] > max_len) throw LengthExceeded(max_len);
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](std::uint64_t bound) {  // [0, bound)
    return static_cast<std::uint64_t>((rng() >> 11) * 0x1.0p-53 * static_cast<double>(bound));
  };
  std::string out;
  StateId s = a.start();
  for (std::size_t remaining = max_len;; --remaining) {
    std::vector<const Transition*> options;
    if (remaining > 0) {
      for (const auto& t : a.transitions(s)) {
        if (dist[t.target] <= remaining - 1) options.push_back(&t);
      }
    }
    const std::size_t stop = a.is_accepting(s) ? 1 : 0;
    const std::uint64_t pick = uniform(options.size() + stop);
    if (pick >= options.size()) break;
    const Transition& t = *options[pick];
    // Interval sizes may include the surrogate block; skip over it.
    const std::uint64_t span = static_cast<std::uint64_t>(t.hi) - t.lo + 1;
    Scalar c = t.lo + static_cast<Scalar>(uniform(span));
    if (!utf8::is_scalar(c)) c = t.hi > utf8::kSurrogateHi ? utf8::kSurrogateHi + 1 : t.lo;
    utf8::append(out, c);
    s = t.target;
  }
  return out;
}

// Graphviz rendering for documentation and debugging.
inline std::string to_dot(const Automaton& a) {
  auto label = [](Scalar c) {
    std::string out;
    if (c >= 0x21 && c < 0x7F && c != '"' && c != '\\') {
      out += static_cast<char>(c);
    } else {
      char buf[16];
      std::snprintf(buf, sizeof buf, "U+%04X", static_cast<unsigned>(c));
      out += buf;
    }
    return out;
  };
  std::ostringstream os;
  os << "digraph automaton {\n  rankdir=LR;\n  node [shape=circle];\n";
  os << "  __start [shape=point];\n  __start -> " << a.start() << ";\n";
  for (StateId s = 0; s < a.state_count(); ++s) {
    if (a.is_accepting(s)) os << "  " << s << " [shape=doublecircle];\n";
    for (const auto& t : a.transitions(s)) {
      os << "  " << s << " -> " << t.target << " [label=\"" << label(t.lo);
      if (t.hi != t.lo) os << "-" << label(t.hi);
      os << "\"];\n";
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace constraintsmith
