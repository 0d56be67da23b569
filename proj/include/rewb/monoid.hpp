#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rewb/automata.hpp"
#include "rewb/bitset.hpp"
#include "rewb/syntax.hpp"
#include "rewb/upset.hpp"

namespace rewb {

// Square bit matrix over automaton states. Rows are contiguous word blocks.
class BoolMatrix {
 public:
  BoolMatrix() = default;
  BoolMatrix(std::uint32_t dim, bool identity_diagonal);

  static BoolMatrix identity(std::uint32_t dim) { return {dim, true}; }
  static BoolMatrix zero(std::uint32_t dim) { return {dim, false}; }

  std::uint32_t dim() const { return dim_; }
  std::uint32_t words_per_row() const { return words_per_row_; }

  bool get(std::uint32_t row, std::uint32_t col) const {
    return (bits_[row * words_per_row_ + (col >> 6)] >> (col & 63)) & 1;
  }
  void set(std::uint32_t row, std::uint32_t col) {
    bits_[row * words_per_row_ + (col >> 6)] |= std::uint64_t{1} << (col & 63);
  }

  const std::uint64_t* row(std::uint32_t r) const {
    return bits_.data() + r * words_per_row_;
  }
  std::uint64_t* row(std::uint32_t r) {
    return bits_.data() + r * words_per_row_;
  }

  // Boolean matrix product: out[i][j] = OR_k (a[i][k] AND b[k][j]).
  friend BoolMatrix multiply(const BoolMatrix& a, const BoolMatrix& b);

  // True when row `r` has a set bit within `mask`.
  bool row_intersects(std::uint32_t r, const DynBitset& mask) const;

  std::uint64_t hash() const;
  bool operator==(const BoolMatrix&) const = default;

 private:
  std::uint32_t dim_ = 0;
  std::uint32_t words_per_row_ = 0;
  std::vector<std::uint64_t> bits_;
};

using ElemId = std::uint32_t;

class MonoidCapError : public std::runtime_error {
 public:
  explicit MonoidCapError(std::size_t cap)
      : std::runtime_error(
            "expression too large for the monoid path (element cap " +
            std::to_string(cap) + " exceeded)") {}
};

std::size_t default_monoid_cap();  // env REWB_MONOID_CAP or 20000

// Monoids at most this large get a dense product table (O(1) multiply).
inline constexpr std::size_t kDenseProductLimit = 4096;

// Transition monoid of an automaton: all letter-matrix products, interned.
// Membership test: w in L iff the matrix of w has a set bit in row
// `initial` within the final-state mask. Immutable after build; all queries
// are reentrant.
class TransitionMonoid {
 public:
  // Empty placeholder; assign a built monoid before use.
  TransitionMonoid() = default;

  // Epsilon edges are removed first; matrices act on the same state set.
  static TransitionMonoid build(const EpsNfa& machine,
                                std::size_t cap = default_monoid_cap());

  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return elements_.size(); }
  const std::string& alphabet() const { return alphabet_; }

  ElemId identity_id() const { return 0; }
  ElemId letter_id(char letter) const {
    return letter_ids_[letter_index(letter)];
  }

  const BoolMatrix& matrix(ElemId id) const { return elements_[id]; }

  // Interned id of a matrix already known to lie in the monoid.
  ElemId find(const BoolMatrix& m) const;

  // id of element * letter generator, precomputed during closure.
  ElemId step_letter(ElemId id, char letter) const {
    return right_by_letter_[letter_index(letter)][id];
  }

  // O(1) via the dense product table for monoids up to kDenseProductLimit
  // elements; larger monoids fall back to a matrix product plus lookup.
  ElemId multiply(ElemId a, ElemId b) const;

  ElemId delta_of(std::string_view w) const {
    ElemId id = identity_id();
    for (char c : w) id = step_letter(id, c);
    return id;
  }

  bool accepting(ElemId id) const { return accepting_[id] != 0; }

  State initial_state() const { return initial_; }
  const DynBitset& final_mask() const { return final_mask_; }

  std::size_t letter_index(char letter) const;

 private:
  ElemId intern(BoolMatrix m);

  std::uint32_t dim_ = 0;
  std::string alphabet_;
  State initial_ = 0;
  DynBitset final_mask_;
  std::vector<BoolMatrix> elements_;
  std::vector<std::uint8_t> accepting_;
  std::vector<ElemId> letter_ids_;
  std::vector<std::vector<ElemId>> right_by_letter_;
  std::vector<ElemId> product_table_;  // row-major, only if size <= limit
  std::vector<std::vector<ElemId>> hash_buckets_;  // open hash on matrix hash
  std::size_t bucket_mask_ = 0;
};

// Convenience: monoid of the automaton of a plain regex.
TransitionMonoid build_monoid(const ExprPtr& e, std::string_view alphabet,
                              std::size_t cap = default_monoid_cap());

// Green's-relation classes of a built monoid: equivalence ids for the
// R (same right ideal), L (same left ideal), and J (same two-sided ideal)
// relations, plus H = R intersect L. Class ids are dense from 0.
class GreenIndex {
 public:
  explicit GreenIndex(const TransitionMonoid& m);

  std::uint32_t r_class(ElemId id) const { return r_class_[id]; }
  std::uint32_t l_class(ElemId id) const { return l_class_[id]; }
  std::uint32_t j_class(ElemId id) const { return j_class_[id]; }
  std::uint32_t h_class(ElemId id) const { return h_class_[id]; }
  std::uint32_t h_class_count() const {
    return static_cast<std::uint32_t>(h_members_.size());
  }

  const std::vector<ElemId>& h_members(std::uint32_t h) const {
    return h_members_[h];
  }

  // The unique idempotent of an H-class that forms a group; absent otherwise.
  std::optional<ElemId> group_identity(std::uint32_t h) const;

 private:
  const TransitionMonoid* monoid_ = nullptr;
  std::vector<std::uint32_t> r_class_;
  std::vector<std::uint32_t> l_class_;
  std::vector<std::uint32_t> j_class_;
  std::vector<std::uint32_t> h_class_;
  std::vector<std::vector<ElemId>> h_members_;
};

// {i >= 0 : base^i == target}, exact.
UpSet power_profile(const TransitionMonoid& m, ElemId base, ElemId target);

// {i >= 0 : delta(w1 theta^i w2) == target}, exact.
UpSet up_from_sandwich(const TransitionMonoid& m, std::string_view w1,
                       std::string_view theta, std::string_view w2,
                       ElemId target);

// {i >= 0 : left (.) theta^i (.) right is accepting}, exact; the element
// form of the sandwich query used when transitions are already at hand.
UpSet up_accepting_sandwich(const TransitionMonoid& m, ElemId left,
                            ElemId theta, ElemId right);

// For every element v that occurs as left (.) theta^i (.) right for some
// i >= 0, the exact exponent set {i >= 0 : left (.) theta^i (.) right == v}.
std::map<ElemId, UpSet> up_sandwich_classes(const TransitionMonoid& m,
                                            ElemId left, ElemId theta,
                                            ElemId right);

}  // namespace rewb
