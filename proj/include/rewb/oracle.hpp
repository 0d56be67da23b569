#pragma once

// Slow reference implementations trusted by the differential tests. The
// matcher follows the update semantics directly; the split deciders
// enumerate every decomposition; the scans unfold definitions verbatim.
// None of this aims to be fast.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rewb/strings.hpp"
#include "rewb/syntax.hpp"
#include "rewb/upset.hpp"

namespace rewb {

// Variable bindings; total over the declared variables, each holding the
// empty string until a capture closes over it.
using Valuation = std::map<char, std::string>;

// True iff w lies in the language of e: a capture rebinds its variable to
// the text its body just matched, and a reference matches the variable's
// current value (any number of reference occurrences allowed). Memoized
// over (node, position, interned valuation); a star iterates over
// (position, valuation) states, so empty-body progress cannot loop.
bool oracle_rewb_match(const ExprPtr& e, std::string_view w);

// Decides w = u_a u_b u_c u_b u_d with each part in the corresponding
// language and the repeated part equal letter for letter, by enumerating
// every split; part membership comes from NFA simulation tables.
bool oracle_abcbd(const ExprPtr& a, const ExprPtr& b, const ExprPtr& c,
                  const ExprPtr& d, std::string_view w);

// Decides w = u_x (u_y)^alpha u_z with alpha exact copies of u_y.
bool oracle_xyaz(const ExprPtr& x, const ExprPtr& y, const ExprPtr& z,
                 std::uint32_t alpha, std::string_view w);

// The repeated-part split with the extra requirement that the letters
// immediately following the two u_b occurrences exist and differ.
bool oracle_branching(const ExprPtr& a, const ExprPtr& b, const ExprPtr& c,
                      const ExprPtr& d, std::string_view w);

// Quadratic definition scan for maximal local powers.
std::vector<MaxLocalPower> oracle_maximal_powers(std::string_view w);

// All members of an ultimately periodic set up to and including bound.
std::vector<std::uint64_t> oracle_up_enumerate(const UpSet& p,
                                               std::uint64_t bound);

}  // namespace rewb
