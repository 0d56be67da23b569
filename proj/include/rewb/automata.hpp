#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rewb/bitset.hpp"
#include "rewb/syntax.hpp"

namespace rewb {

using State = std::uint32_t;

// Nondeterministic finite automaton with epsilon moves. Adjacency lists are
// sorted and duplicate-free; every referenced state is < state_count.
struct EpsNfa {
  State state_count = 0;
  State initial = 0;
  std::vector<State> finals;  // sorted, duplicate-free
  std::vector<std::vector<std::pair<char, State>>> letter_edges;
  std::vector<std::vector<State>> eps_edges;
  std::string alphabet;  // sorted, duplicate-free

  bool is_final(State q) const {
    return std::binary_search(finals.begin(), finals.end(), q);
  }
};

// Validates the structural invariants above; throws std::invalid_argument.
void check_nfa(const EpsNfa& nfa);

// Classic construction with one fresh initial and one fresh final state per
// AST node, so state_count == 2 * expr_size(e) and there is a single final
// state. Captures and backreferences are rejected.
EpsNfa thompson(const ExprPtr& e, std::string_view alphabet);

// Same transition structure, new initial state and final set.
EpsNfa rewire(const EpsNfa& nfa, State new_initial,
              std::vector<State> new_finals);

// Pair construction recognizing the intersection; epsilon moves advance one
// coordinate at a time. State (i, j) is encoded as i * b.state_count + j.
EpsNfa product(const EpsNfa& a, const EpsNfa& b);

// Appends b after a: accepts L(a)L(b). States of b are shifted by
// a.state_count.
EpsNfa concatenate(const EpsNfa& a, const EpsNfa& b);

// Two-layer copy (q, seen) with seen flipping to 1 on the first letter;
// accepts L(nfa) minus the empty string. Layer encoding: seen * n + q.
EpsNfa remove_epsilon_word(const EpsNfa& nfa);

// Same language, no epsilon edges, same state set; final set grows to every
// state whose closure meets the old finals.
EpsNfa eps_free(const EpsNfa& nfa);

// States reachable from the initial state.
DynBitset reachable_states(const EpsNfa& nfa);

// Keeps exactly the states with keep[q] set. Returns the renumbered machine
// and the old-to-new state map (entry = new id, or kInvalidState if dropped).
// The initial state must be kept.
inline constexpr State kInvalidState = 0xffffffffu;
std::pair<EpsNfa, std::vector<State>> restrict_states(const EpsNfa& nfa,
                                                      const DynBitset& keep);

// Epsilon-closure of the given state set, in place.
void close_over_epsilon(const EpsNfa& nfa, DynBitset& states);

// Subset simulation; true iff w is accepted.
bool simulate(const EpsNfa& nfa, std::string_view w);

// Subset simulation returning the reached (closed) state set.
DynBitset simulate_states(const EpsNfa& nfa, std::string_view w);

}  // namespace rewb
