#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace rewb {

// Ultimately periodic set of non-negative integers: n is a member iff
// n < mu ? head[n] : tail[n % lambda]. Canonical form has the smallest
// period, then the smallest threshold.
class UpSet {
 public:
  // The empty set: (0, {}, 1, {false}).
  UpSet() : tail_{false} {}

  UpSet(std::vector<bool> head, std::vector<bool> tail);

  static UpSet empty_set() { return UpSet(); }
  static UpSet all_from(std::uint64_t start);
  static UpSet singleton(std::uint64_t n);
  // Residues modulo `lambda` in `residues`, from 0 on.
  static UpSet residue_class(std::uint64_t lambda,
                             const std::vector<std::uint64_t>& residues);

  std::uint64_t threshold() const { return head_.size(); }
  std::uint64_t period() const { return tail_.size(); }
  const std::vector<bool>& head() const { return head_; }
  const std::vector<bool>& tail() const { return tail_; }

  bool contains(std::uint64_t n) const {
    if (n < head_.size()) return head_[n];
    return tail_[n % tail_.size()];
  }

  bool is_empty() const;
  // Smallest member, or no value.
  std::optional<std::uint64_t> min() const;

  bool operator==(const UpSet&) const = default;

 private:
  void canonicalize();

  std::vector<bool> head_;  // size = mu
  std::vector<bool> tail_;  // size = lambda >= 1
};

UpSet up_union(const UpSet& p, const UpSet& q);
// {a + b : a in p, b in q}.
UpSet up_minkowski(const UpSet& p, const UpSet& q);
// {e * a : a in p}; e >= 1.
UpSet up_scale(std::uint64_t e, const UpSet& p);

}  // namespace rewb
