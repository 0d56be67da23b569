#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rewb/monoid.hpp"
#include "rewb/strings.hpp"
#include "rewb/syntax.hpp"

namespace rewb {

// Shared read-only data for one branching query over the split
// w = u_a u_b u_c u_b u_d: the transition monoid and factorization forest
// of each part language, the suffix tree of the word, and its heavy-path
// decomposition. Non-movable; the forests point at the monoids.
//
// The word must use the two-letter alphabet {0,1}. With a wider alphabet
// two occurrences could sit in two distinct light subtrees of their
// divergence node, and the heavy/light pairing below would miss them.
struct BranchingInstance {
  std::string word;
  TransitionMonoid monoid_a, monoid_b, monoid_c, monoid_d;
  FactForest forest_a, forest_b, forest_c, forest_d;
  std::vector<std::uint32_t> leaf_c;  // forest_c leaf id per 1-based position
  SuffixTree tree;
  HldInfo hld;
  bool debug_checks = false;

  BranchingInstance() = default;
  BranchingInstance(const BranchingInstance&) = delete;
  BranchingInstance& operator=(const BranchingInstance&) = delete;
};

// Builds the instance; throws std::invalid_argument when the word is empty
// or uses letters outside {0,1}, or when the second or fourth part accepts
// the empty word (their occurrences then have no following letter to
// compare).
std::unique_ptr<BranchingInstance> make_branching_instance(
    const ExprPtr& part_a, const ExprPtr& part_b, const ExprPtr& part_c,
    const ExprPtr& part_d, std::string word, bool debug_checks = false);

// Same with prebuilt monoids (moved in); callers deciding many words
// against the same four languages build each monoid once and pass copies.
std::unique_ptr<BranchingInstance> make_branching_instance(
    TransitionMonoid monoid_a, TransitionMonoid monoid_b,
    TransitionMonoid monoid_c, TransitionMonoid monoid_d, std::string word,
    bool debug_checks = false);

// One heavy path, listed bottom-up starting at its suffix-tree leaf. Every
// node on the path names the prefix word[anchor .. anchor+depth) of that
// leaf suffix, where depth is the node's path length.
struct HeavyPathContext {
  const BranchingInstance* shared = nullptr;
  std::vector<std::uint32_t> path;
  std::uint32_t anchor = 0;
};

HeavyPathContext heavy_path_context(const BranchingInstance& instance,
                                    std::uint32_t path_index);

// Maps each 1-based word position to the forest leaf covering it.
std::vector<std::uint32_t> forest_position_leaves(const FactForest& forest);

// Labeled bags of word positions merged smallest-into-largest; merge
// reports the elements that moved so callers can replay them elsewhere.
class LabeledBags {
 public:
  explicit LabeledBags(std::uint32_t label_count);

  void make_bag(std::uint32_t label);
  void insert(std::uint32_t label, std::uint32_t value);

  struct MergeResult {
    std::uint32_t label = 0;
    std::vector<std::uint32_t> moved;
  };
  // Keeps the largest bag among the labels and moves the rest into it; the
  // abandoned labels end up empty.
  MergeResult merge(const std::vector<std::uint32_t>& labels);

  const std::vector<std::uint32_t>& bag(std::uint32_t label) const;
  std::uint64_t moves() const { return moves_; }
  std::uint64_t inserts() const { return inserts_; }

 private:
  std::vector<std::vector<std::uint32_t>> bags_;
  std::uint64_t moves_ = 0;
  std::uint64_t inserts_ = 0;
};

// Member set J of word positions supporting queries
//   get(from) = {transition of word[from .. j) : j in J, from <= j}
// in time proportional to forest height times answer size. Per forest node
// it keeps the transitions of word[node begin .. j) for the members j
// below the node, and per idempotent group node the rightmost child index
// reaching each absorbed transition; storage is created on first touch so
// initialize is cheap.
class RightEnumerator {
 public:
  RightEnumerator() = default;
  RightEnumerator(const FactForest& forest,
                  const std::vector<std::uint32_t>& leaves)
      : forest_(&forest), leaves_(&leaves) {}

  void initialize(std::uint32_t anchor);
  void add(std::uint32_t index);
  void collect(std::uint32_t from, std::set<ElemId>& out) const;
  std::set<ElemId> get(std::uint32_t from) const;

  std::uint32_t anchor() const { return anchor_; }
  const std::vector<std::uint32_t>& members() const { return members_; }
  void set_debug(bool value) { debug_ = value; }

 private:
  struct NodeData {
    std::vector<ElemId> transitions;
    // Transition after the group identity is applied, with the largest
    // 0-based child index producing it; only filled at group nodes.
    std::vector<std::pair<ElemId, std::uint32_t>> last_child_with;
  };

  void verify() const;

  const FactForest* forest_ = nullptr;
  const std::vector<std::uint32_t>* leaves_ = nullptr;
  std::uint32_t anchor_ = 1;
  bool debug_ = false;
  std::vector<std::uint32_t> members_;
  std::unordered_map<std::uint32_t, NodeData> nodes_;
};

// Interval set over a shrinking window length m supporting
//   get(upto) = {transition of word[j+m .. upto) : interval [j, k), k <= upto}
// where every stored interval [j, k) keeps j+m <= k as m shrinks. Interval
// [j, k) lives on the leaf-to-root path of the leaf covering position k-1,
// so a node holds the intervals with k in (node begin, node end]. Stored
// transitions are right-anchored at the node end and refreshed lazily: all
// stored intervals share the window prefix with the anchor suffix, so one
// gap transition updates a whole node.
class AuxiliaryEnumerator {
 public:
  AuxiliaryEnumerator() = default;
  AuxiliaryEnumerator(const FactForest& forest,
                      const std::vector<std::uint32_t>& leaves)
      : forest_(&forest), leaves_(&leaves) {}

  void initialize(std::uint32_t anchor);
  void shrink(std::uint32_t delta);
  void add(std::uint32_t start, std::uint32_t bound);
  void collect(std::uint32_t upto, std::set<ElemId>& out);
  std::set<ElemId> get(std::uint32_t upto);

  std::uint32_t window() const { return length_; }
  std::uint32_t anchor() const { return anchor_; }
  void set_debug(bool value) { debug_ = value; }
  // Every interval ever added; only recorded while debugging.
  const std::vector<std::pair<std::uint32_t, std::uint32_t>>&
  recorded_intervals() const {
    return debug_intervals_;
  }

 private:
  struct NodeData {
    std::uint32_t window = 0;
    std::vector<ElemId> transitions;
  };
  struct GroupData {
    std::uint32_t window = 0;
    // Transition before the trailing group identity, with the smallest
    // 0-based child index producing it.
    std::vector<std::pair<ElemId, std::uint32_t>> first_child_with;
  };

  void refresh(NodeData& data);
  void refresh_group(GroupData& data);
  void verify();

  const FactForest* forest_ = nullptr;
  const std::vector<std::uint32_t>* leaves_ = nullptr;
  std::uint32_t anchor_ = 1;
  std::uint32_t length_ = 0;
  bool has_unit_bound_ = false;  // interval with k == 1; no leaf covers it
  bool debug_ = false;
  std::unordered_map<std::uint32_t, NodeData> nodes_;
  std::unordered_map<std::uint32_t, GroupData> groups_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> debug_intervals_;
};

// Member set J over a shrinking window length m supporting
//   get(upto) = {transition of word[j+m .. upto) : j in J, j+m <= upto}.
// Members near upto (within 2m) are answered from an ordered set of every
// registered occurrence: inside a window of width m the occurrences form
// an arithmetic progression, so the answer reduces to sandwich exponent
// sets. Members further left are delegated to the auxiliary enumerator;
// each member re-registers there with a halved window at most log2 |word|
// times via the pending queue.
class LeftEnumerator {
 public:
  struct Parts {
    const TransitionMonoid* monoid_a = nullptr;
    const FactForest* forest_a = nullptr;
    const TransitionMonoid* monoid_c = nullptr;
    const FactForest* forest_c = nullptr;
    const std::vector<std::uint32_t>* leaves_c = nullptr;
  };

  LeftEnumerator() = default;
  explicit LeftEnumerator(const Parts& parts)
      : parts_(parts), aux_(*parts.forest_c, *parts.leaves_c) {}

  void initialize(std::uint32_t anchor);
  // Records an occurrence for the near-window progression only.
  void register_occurrence(std::uint32_t index);
  // Joins J; the caller guarantees word[index .. index+m) prefixes the
  // anchor suffix and that the prefix word[1 .. index) lies in part A.
  void add(std::uint32_t index);
  void shrink(std::uint32_t delta);
  std::set<ElemId> get(std::uint32_t upto);

  std::uint32_t window() const { return length_; }
  const std::set<std::uint32_t>& occurrences() const { return occurrences_; }
  const std::vector<std::uint32_t>& members() const { return members_; }
  void set_debug(bool value);

 private:
  void verify();

  Parts parts_;
  AuxiliaryEnumerator aux_;
  std::uint32_t anchor_ = 1;
  std::uint32_t length_ = 0;
  bool debug_ = false;
  std::deque<std::pair<std::uint32_t, std::uint32_t>> queue_;
  std::set<std::uint32_t> occurrences_;
  std::vector<std::uint32_t> members_;
};

// Transitions of word[j+m .. upto) over the near window
// upto-2m < j <= upto-m, for the registered occurrences j whose prefix
// word[1 .. j) is accepted by part A. With three or more occurrences in
// the window the occurrences form an arithmetic progression and the
// answer comes from sandwich exponent sets; with fewer each occurrence is
// checked directly.
std::set<ElemId> near_transitions(const LeftEnumerator::Parts& parts,
                                  const std::set<std::uint32_t>& occurrences,
                                  std::uint32_t upto, std::uint32_t window);

// Part C transitions of the gaps of valid pairs whose first occurrence is
// light and second is heavy: walking the path bottom-up, heavy members are
// bagged by their part D suffix transition and each light first occurrence
// with an accepted A prefix collects from the bags that currently accept.
std::set<ElemId> right_b_enumeration(const HeavyPathContext& context);

// Part C transitions of the gaps of valid pairs whose first occurrence is
// heavy and second is light: heavy members with accepted A prefixes join a
// left enumerator and each light second occurrence whose D suffix is
// accepted queries it.
std::set<ElemId> left_b_enumeration(const HeavyPathContext& context);

// Whether some split w = u_a u_b u_c u_b u_d has every part in its
// language, a nonempty repeated block, and distinct letters right after
// the two block occurrences. Near linear in the word length.
bool solve_branching(const ExprPtr& part_a, const ExprPtr& part_b,
                     const ExprPtr& part_c, const ExprPtr& part_d,
                     std::string word, bool debug_checks = false);

bool solve_branching(const BranchingInstance& instance);

}  // namespace rewb
