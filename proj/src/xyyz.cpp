#include "rewb/xyyz.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

#include "rewb/monoid.hpp"
#include "rewb/strings.hpp"
#include "rewb/upset.hpp"

namespace rewb {
namespace {

void check_split(const XyzInstance& inst, const XyzSplit& split) {
  std::string assembled = split.part_x;
  for (std::uint32_t r = 0; r < inst.alpha; ++r) assembled += split.part_y;
  assembled += split.part_z;
  if (assembled != inst.word || !simulate(inst.x, split.part_x) ||
      !simulate(inst.y, split.part_y) || !simulate(inst.z, split.part_z))
    throw std::logic_error("reconstructed split failed re-checking");
}

// The repeated part is empty, so the word need only split across x and z;
// scan for one split point.
XyzSplit epsilon_witness(const XyzInstance& inst) {
  const std::string& w = inst.word;
  for (std::size_t cut = 0; cut <= w.size(); ++cut) {
    if (!simulate(inst.x, std::string_view(w).substr(0, cut))) continue;
    if (!simulate(inst.z, std::string_view(w).substr(cut))) continue;
    return XyzSplit{w.substr(0, cut), "", w.substr(cut)};
  }
  throw std::logic_error("accepted concatenation offers no split point");
}

// Finds exponents i + alpha j + k == reps drawn from the three sets and
// spells out the corresponding parts of the word.
XyzSplit power_witness(const XyzInstance& inst, const MaxLocalPower& power,
                       const UpSet& sx, const UpSet& sy, const UpSet& sz) {
  const std::string& w = inst.word;
  const std::size_t base = power.start - 1;
  const std::size_t len = power.root_length;
  for (std::uint32_t i = 0; i <= power.exponent; ++i) {
    if (!sx.contains(i)) continue;
    const std::uint32_t left = power.exponent - i;
    for (std::uint32_t j = 0; inst.alpha * j <= left; ++j) {
      if (!sy.contains(j)) continue;
      const std::uint32_t k = left - inst.alpha * j;
      if (!sz.contains(k)) continue;
      XyzSplit split{w.substr(0, base + i * len), w.substr(base + i * len, j * len),
                     w.substr(base + (i + std::size_t(inst.alpha) * j) * len)};
      check_split(inst, split);
      return split;
    }
  }
  throw std::logic_error("exponent sum accepted but no exponents found");
}

}  // namespace

XyzInstance make_xyz_instance(const ExprPtr& x, const ExprPtr& y,
                              const ExprPtr& z, std::uint32_t alpha,
                              std::string word) {
  std::set<char> letters(word.begin(), word.end());
  for (const ExprPtr* e : {&x, &y, &z}) {
    const auto own = expr_letters(*e);
    letters.insert(own.begin(), own.end());
  }
  const std::string alphabet(letters.begin(), letters.end());
  return XyzInstance{thompson(x, alphabet), thompson(y, alphabet),
                     thompson(z, alphabet), alpha, std::move(word)};
}

bool solve_xyaz(const XyzInstance& inst, XyzSplit* witness) {
  if (inst.alpha < 2)
    throw std::invalid_argument("repeat count must be at least 2");
  const std::string& w = inst.word;
  const std::uint32_t n = std::uint32_t(w.size());
  const std::size_t cap = default_monoid_cap();
  const TransitionMonoid mx = TransitionMonoid::build(inst.x, cap);
  const TransitionMonoid my = TransitionMonoid::build(inst.y, cap);
  const TransitionMonoid mz = TransitionMonoid::build(inst.z, cap);

  // An empty repeated part escapes the local-power argument; that case is
  // exactly membership in the concatenation of x and z.
  if (my.accepting(my.identity_id()) &&
      simulate(concatenate(inst.x, inst.z), w)) {
    if (witness) {
      *witness = epsilon_witness(inst);
      check_split(inst, *witness);
    }
    return true;
  }
  if (n == 0) return false;

  const FactForest fx = build_fact_forest(w, mx);
  const FactForest fy = build_fact_forest(w, my);
  const FactForest fz = build_fact_forest(w, mz);

  // A nonempty repeated part makes (u_y)^alpha a power, so it lies inside
  // some maximal local power phase-aligned with its primitive root. The
  // combined exponent set depends only on five transitions; cache it.
  std::map<std::array<ElemId, 5>, UpSet> combined;
  for (const MaxLocalPower& power : maximal_local_powers(w)) {
    const std::uint32_t start = power.start;  // 1-based
    const std::uint32_t len = power.root_length;
    const std::uint32_t block_end = start + power.exponent * len;  // one past
    const ElemId x_prefix = fx.range_eval(1, start - 1);
    const ElemId x_theta = fx.range_eval(start, start + len - 1);
    const ElemId y_theta = fy.range_eval(start, start + len - 1);
    const ElemId z_theta = fz.range_eval(start, start + len - 1);
    const ElemId z_suffix = fz.range_eval(block_end, n);

    const std::array<ElemId, 5> key{x_prefix, x_theta, y_theta, z_theta,
                                    z_suffix};
    auto it = combined.find(key);
    if (it == combined.end()) {
      const UpSet sx =
          up_accepting_sandwich(mx, x_prefix, x_theta, mx.identity_id());
      const UpSet sy =
          up_accepting_sandwich(my, my.identity_id(), y_theta,
                                my.identity_id());
      const UpSet sz =
          up_accepting_sandwich(mz, mz.identity_id(), z_theta, z_suffix);
      it = combined
               .emplace(key, up_minkowski(
                                 sx, up_minkowski(up_scale(inst.alpha, sy),
                                                  sz)))
               .first;
    }
    if (!it->second.contains(power.exponent)) continue;
    if (witness) {
      const UpSet sx =
          up_accepting_sandwich(mx, x_prefix, x_theta, mx.identity_id());
      const UpSet sy = up_accepting_sandwich(my, my.identity_id(), y_theta,
                                             my.identity_id());
      const UpSet sz =
          up_accepting_sandwich(mz, mz.identity_id(), z_theta, z_suffix);
      *witness = power_witness(inst, power, sx, sy, sz);
    }
    return true;
  }
  return false;
}

}  // namespace rewb
