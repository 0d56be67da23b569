#include "rewb/automata.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <stdexcept>

namespace rewb {

namespace {

void sort_unique_edges(EpsNfa& nfa) {
  for (auto& edges : nfa.letter_edges) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  }
  for (auto& edges : nfa.eps_edges) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  }
  std::sort(nfa.finals.begin(), nfa.finals.end());
  nfa.finals.erase(std::unique(nfa.finals.begin(), nfa.finals.end()),
                   nfa.finals.end());
}

}  // namespace

void check_nfa(const EpsNfa& nfa) {
  if (nfa.letter_edges.size() != nfa.state_count ||
      nfa.eps_edges.size() != nfa.state_count)
    throw std::invalid_argument("adjacency list size mismatch");
  if (nfa.initial >= nfa.state_count)
    throw std::invalid_argument("initial state out of range");
  if (!std::is_sorted(nfa.alphabet.begin(), nfa.alphabet.end()) ||
      std::adjacent_find(nfa.alphabet.begin(), nfa.alphabet.end()) !=
          nfa.alphabet.end())
    throw std::invalid_argument("alphabet not sorted/unique");
  if (!std::is_sorted(nfa.finals.begin(), nfa.finals.end()) ||
      std::adjacent_find(nfa.finals.begin(), nfa.finals.end()) !=
          nfa.finals.end())
    throw std::invalid_argument("final set not sorted/unique");
  for (State f : nfa.finals)
    if (f >= nfa.state_count)
      throw std::invalid_argument("final state out of range");
  for (State q = 0; q < nfa.state_count; ++q) {
    for (auto [letter, to] : nfa.letter_edges[q]) {
      if (to >= nfa.state_count)
        throw std::invalid_argument("letter edge target out of range");
      if (nfa.alphabet.find(letter) == std::string::npos)
        throw std::invalid_argument("letter edge outside alphabet");
    }
    if (!std::is_sorted(nfa.letter_edges[q].begin(),
                        nfa.letter_edges[q].end()) ||
        std::adjacent_find(nfa.letter_edges[q].begin(),
                           nfa.letter_edges[q].end()) !=
            nfa.letter_edges[q].end())
      throw std::invalid_argument("letter edges not sorted/unique");
    for (State to : nfa.eps_edges[q])
      if (to >= nfa.state_count)
        throw std::invalid_argument("epsilon edge target out of range");
    if (!std::is_sorted(nfa.eps_edges[q].begin(), nfa.eps_edges[q].end()) ||
        std::adjacent_find(nfa.eps_edges[q].begin(), nfa.eps_edges[q].end()) !=
            nfa.eps_edges[q].end())
      throw std::invalid_argument("epsilon edges not sorted/unique");
  }
}

namespace {

// Allocates two fresh states per AST node; returns (entry, exit).
struct ThompsonBuilder {
  EpsNfa machine;

  State fresh() {
    machine.letter_edges.emplace_back();
    machine.eps_edges.emplace_back();
    return machine.state_count++;
  }

  void add_eps(State from, State to) { machine.eps_edges[from].push_back(to); }
  void add_letter(State from, char letter, State to) {
    machine.letter_edges[from].emplace_back(letter, to);
  }

  std::pair<State, State> build(const ExprPtr& e) {
    State entry = fresh();
    State exit = fresh();
    switch (e->kind) {
      case ExprKind::EmptySet:
        break;  // no path from entry to exit
      case ExprKind::Epsilon:
        add_eps(entry, exit);
        break;
      case ExprKind::Letter:
        if (machine.alphabet.find(e->symbol) == std::string::npos)
          throw std::invalid_argument(
              "expression letter outside the declared alphabet");
        add_letter(entry, e->symbol, exit);
        break;
      case ExprKind::Concat: {
        auto [li, lf] = build(e->left);
        auto [ri, rf] = build(e->right);
        add_eps(entry, li);
        add_eps(lf, ri);
        add_eps(rf, exit);
        break;
      }
      case ExprKind::Union: {
        auto [li, lf] = build(e->left);
        auto [ri, rf] = build(e->right);
        add_eps(entry, li);
        add_eps(entry, ri);
        add_eps(lf, exit);
        add_eps(rf, exit);
        break;
      }
      case ExprKind::Star: {
        auto [bi, bf] = build(e->left);
        add_eps(entry, exit);
        add_eps(entry, bi);
        add_eps(bf, exit);
        add_eps(bf, bi);
        break;
      }
      case ExprKind::Capture:
      case ExprKind::Backref:
        throw std::invalid_argument(
            "automaton construction takes plain regexes only");
    }
    return {entry, exit};
  }
};

}  // namespace

EpsNfa thompson(const ExprPtr& e, std::string_view alphabet) {
  assert(e);
  ThompsonBuilder builder;
  builder.machine.alphabet.assign(alphabet);
  std::sort(builder.machine.alphabet.begin(), builder.machine.alphabet.end());
  builder.machine.alphabet.erase(
      std::unique(builder.machine.alphabet.begin(),
                  builder.machine.alphabet.end()),
      builder.machine.alphabet.end());
  auto [entry, exit] = builder.build(e);
  builder.machine.initial = entry;
  builder.machine.finals = {exit};
  sort_unique_edges(builder.machine);
  return std::move(builder.machine);
}

EpsNfa rewire(const EpsNfa& nfa, State new_initial,
              std::vector<State> new_finals) {
  if (new_initial >= nfa.state_count)
    throw std::invalid_argument("rewire: initial state out of range");
  for (State f : new_finals)
    if (f >= nfa.state_count)
      throw std::invalid_argument("rewire: final state out of range");
  EpsNfa out = nfa;
  out.initial = new_initial;
  out.finals = std::move(new_finals);
  std::sort(out.finals.begin(), out.finals.end());
  out.finals.erase(std::unique(out.finals.begin(), out.finals.end()),
                   out.finals.end());
  return out;
}

EpsNfa product(const EpsNfa& a, const EpsNfa& b) {
  if (a.alphabet != b.alphabet)
    throw std::invalid_argument("product: alphabet mismatch");
  EpsNfa out;
  out.alphabet = a.alphabet;
  out.state_count = a.state_count * b.state_count;
  out.letter_edges.resize(out.state_count);
  out.eps_edges.resize(out.state_count);
  auto encode = [&](State i, State j) { return i * b.state_count + j; };
  out.initial = encode(a.initial, b.initial);
  for (State i = 0; i < a.state_count; ++i) {
    for (State j = 0; j < b.state_count; ++j) {
      State here = encode(i, j);
      // Letters advance both coordinates on the same symbol.
      for (auto [letter, ai] : a.letter_edges[i]) {
        for (auto [letter2, bj] : b.letter_edges[j])
          if (letter == letter2)
            out.letter_edges[here].emplace_back(letter, encode(ai, bj));
      }
      // Epsilon moves advance one coordinate at a time.
      for (State ai : a.eps_edges[i])
        out.eps_edges[here].push_back(encode(ai, j));
      for (State bj : b.eps_edges[j])
        out.eps_edges[here].push_back(encode(i, bj));
    }
  }
  for (State fa : a.finals)
    for (State fb : b.finals) out.finals.push_back(encode(fa, fb));
  sort_unique_edges(out);
  return out;
}

EpsNfa concatenate(const EpsNfa& a, const EpsNfa& b) {
  if (a.alphabet != b.alphabet)
    throw std::invalid_argument("concatenate: alphabet mismatch");
  EpsNfa out;
  out.alphabet = a.alphabet;
  out.state_count = a.state_count + b.state_count;
  out.letter_edges = a.letter_edges;
  out.eps_edges = a.eps_edges;
  out.letter_edges.resize(out.state_count);
  out.eps_edges.resize(out.state_count);
  State shift = a.state_count;
  for (State q = 0; q < b.state_count; ++q) {
    for (auto [letter, to] : b.letter_edges[q])
      out.letter_edges[shift + q].emplace_back(letter, shift + to);
    for (State to : b.eps_edges[q])
      out.eps_edges[shift + q].push_back(shift + to);
  }
  out.initial = a.initial;
  for (State f : a.finals) out.eps_edges[f].push_back(shift + b.initial);
  for (State f : b.finals) out.finals.push_back(shift + f);
  sort_unique_edges(out);
  return out;
}

EpsNfa remove_epsilon_word(const EpsNfa& nfa) {
  // Layer 0: no letter consumed yet; layer 1: at least one consumed.
  EpsNfa out;
  out.alphabet = nfa.alphabet;
  State n = nfa.state_count;
  out.state_count = 2 * n;
  out.letter_edges.resize(out.state_count);
  out.eps_edges.resize(out.state_count);
  auto layer = [n](State q, State which) { return which * n + q; };
  for (State q = 0; q < n; ++q) {
    for (State to : nfa.eps_edges[q]) {
      out.eps_edges[layer(q, 0)].push_back(layer(to, 0));
      out.eps_edges[layer(q, 1)].push_back(layer(to, 1));
    }
    for (auto [letter, to] : nfa.letter_edges[q]) {
      out.letter_edges[layer(q, 0)].emplace_back(letter, layer(to, 1));
      out.letter_edges[layer(q, 1)].emplace_back(letter, layer(to, 1));
    }
  }
  out.initial = layer(nfa.initial, 0);
  for (State f : nfa.finals) out.finals.push_back(layer(f, 1));
  sort_unique_edges(out);
  return out;
}

void close_over_epsilon(const EpsNfa& nfa, DynBitset& states) {
  std::deque<State> queue;
  states.for_each([&](std::size_t q) { queue.push_back(State(q)); });
  while (!queue.empty()) {
    State q = queue.front();
    queue.pop_front();
    for (State to : nfa.eps_edges[q]) {
      if (!states.test(to)) {
        states.set(to);
        queue.push_back(to);
      }
    }
  }
}

EpsNfa eps_free(const EpsNfa& nfa) {
  EpsNfa out;
  out.alphabet = nfa.alphabet;
  out.state_count = nfa.state_count;
  out.initial = nfa.initial;
  out.letter_edges.resize(out.state_count);
  out.eps_edges.resize(out.state_count);
  DynBitset final_mask(nfa.state_count);
  for (State f : nfa.finals) final_mask.set(f);
  for (State q = 0; q < nfa.state_count; ++q) {
    DynBitset closure(nfa.state_count);
    closure.set(q);
    close_over_epsilon(nfa, closure);
    closure.for_each([&](std::size_t s) {
      for (auto [letter, to] : nfa.letter_edges[s])
        out.letter_edges[q].emplace_back(letter, to);
      if (final_mask.test(s)) out.finals.push_back(q);
    });
  }
  sort_unique_edges(out);
  return out;
}

DynBitset reachable_states(const EpsNfa& nfa) {
  DynBitset seen(nfa.state_count);
  std::deque<State> queue{nfa.initial};
  seen.set(nfa.initial);
  while (!queue.empty()) {
    State q = queue.front();
    queue.pop_front();
    auto visit = [&](State to) {
      if (!seen.test(to)) {
        seen.set(to);
        queue.push_back(to);
      }
    };
    for (auto [letter, to] : nfa.letter_edges[q]) visit(to);
    for (State to : nfa.eps_edges[q]) visit(to);
  }
  return seen;
}

std::pair<EpsNfa, std::vector<State>> restrict_states(const EpsNfa& nfa,
                                                      const DynBitset& keep) {
  if (!keep.test(nfa.initial))
    throw std::invalid_argument("restrict_states: initial state dropped");
  std::vector<State> old_to_new(nfa.state_count, kInvalidState);
  State next = 0;
  for (State q = 0; q < nfa.state_count; ++q)
    if (keep.test(q)) old_to_new[q] = next++;
  EpsNfa out;
  out.alphabet = nfa.alphabet;
  out.state_count = next;
  out.initial = old_to_new[nfa.initial];
  out.letter_edges.resize(next);
  out.eps_edges.resize(next);
  for (State q = 0; q < nfa.state_count; ++q) {
    if (old_to_new[q] == kInvalidState) continue;
    for (auto [letter, to] : nfa.letter_edges[q])
      if (old_to_new[to] != kInvalidState)
        out.letter_edges[old_to_new[q]].emplace_back(letter, old_to_new[to]);
    for (State to : nfa.eps_edges[q])
      if (old_to_new[to] != kInvalidState)
        out.eps_edges[old_to_new[q]].push_back(old_to_new[to]);
  }
  for (State f : nfa.finals)
    if (old_to_new[f] != kInvalidState) out.finals.push_back(old_to_new[f]);
  sort_unique_edges(out);
  return {std::move(out), std::move(old_to_new)};
}

DynBitset simulate_states(const EpsNfa& nfa, std::string_view w) {
  DynBitset current(nfa.state_count);
  current.set(nfa.initial);
  close_over_epsilon(nfa, current);
  for (char letter : w) {
    DynBitset next(nfa.state_count);
    current.for_each([&](std::size_t q) {
      for (auto [edge_letter, to] : nfa.letter_edges[q])
        if (edge_letter == letter) next.set(to);
    });
    close_over_epsilon(nfa, next);
    current = std::move(next);
  }
  return current;
}

bool simulate(const EpsNfa& nfa, std::string_view w) {
  DynBitset reached = simulate_states(nfa, w);
  DynBitset final_mask(nfa.state_count);
  for (State f : nfa.finals) final_mask.set(f);
  return reached.intersects(final_mask);
}

}  // namespace rewb
