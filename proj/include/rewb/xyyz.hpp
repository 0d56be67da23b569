#pragma once

// Decides w = u_x (u_y)^alpha u_z with each part accepted by its
// automaton. Candidate repeats are indexed by the maximal local powers of
// w; for each one, ultimately periodic exponent sets over the three
// transition monoids turn the check into constant-time arithmetic, so a
// word costs O(|w| log |w|) beyond automaton-size-only preprocessing.

#include <cstdint>
#include <string>

#include "rewb/automata.hpp"
#include "rewb/syntax.hpp"

namespace rewb {

// One problem instance. The three automata must share an alphabet that
// covers every letter of the word; captures are not allowed (build the
// automata with thompson or take them from an upstream rewrite).
struct XyzInstance {
  EpsNfa x;
  EpsNfa y;
  EpsNfa z;
  std::uint32_t alpha = 2;  // number of repeated-part copies, >= 2
  std::string word;
};

// Convenience builder: compiles the three expressions over the joint
// alphabet of the expressions and the word.
XyzInstance make_xyz_instance(const ExprPtr& x, const ExprPtr& y,
                              const ExprPtr& z, std::uint32_t alpha,
                              std::string word);

// An accepted decomposition, spelled out: word == part_x + alpha copies
// of part_y + part_z.
struct XyzSplit {
  std::string part_x;
  std::string part_y;
  std::string part_z;
};

// True iff a decomposition exists. When `witness` is non-null and the
// answer is yes, one decomposition is reconstructed, re-checked against
// the automata by simulation, and written there. Throws
// std::invalid_argument when alpha < 2 and MonoidCapError when a
// transition monoid exceeds its cap.
bool solve_xyaz(const XyzInstance& inst, XyzSplit* witness = nullptr);

}  // namespace rewb
