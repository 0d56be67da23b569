#include "rewb/branching.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <iterator>
#include <map>
#include <stdexcept>

namespace rewb {

namespace {

// Structural invariant checks recompute state from scratch; they only run
// on words up to this many positions.
constexpr std::uint32_t kDebugLimit = 200;

void insert_unique(std::vector<ElemId>& values, ElemId value) {
  if (std::find(values.begin(), values.end(), value) == values.end())
    values.push_back(value);
}

using IndexedElems = std::vector<std::pair<ElemId, std::uint32_t>>;

void raise_to(IndexedElems& entries, ElemId key, std::uint32_t index) {
  for (auto& entry : entries)
    if (entry.first == key) {
      entry.second = std::max(entry.second, index);
      return;
    }
  entries.emplace_back(key, index);
}

void lower_to(IndexedElems& entries, ElemId key, std::uint32_t index) {
  for (auto& entry : entries)
    if (entry.first == key) {
      entry.second = std::min(entry.second, index);
      return;
    }
  entries.emplace_back(key, index);
}

bool same_set(const std::vector<ElemId>& stored, const std::set<ElemId>& expect) {
  if (stored.size() != expect.size()) return false;
  for (const ElemId value : stored)
    if (!expect.count(value)) return false;
  return true;
}

bool same_entries(const IndexedElems& stored,
                  const std::map<ElemId, std::uint32_t>& expect) {
  if (stored.size() != expect.size()) return false;
  for (const auto& [key, index] : stored) {
    auto it = expect.find(key);
    if (it == expect.end() || it->second != index) return false;
  }
  return true;
}

}  // namespace

std::vector<std::uint32_t> forest_position_leaves(const FactForest& forest) {
  std::vector<std::uint32_t> leaves(forest.length() + 1, kNoNode);
  for (std::uint32_t id = 0; id < forest.node_count(); ++id) {
    const FactForest::Node& node = forest.node(id);
    if (node.child_count == 0) leaves[node.begin] = id;
  }
  return leaves;
}

LabeledBags::LabeledBags(std::uint32_t label_count) : bags_(label_count) {}

void LabeledBags::make_bag(std::uint32_t label) { bags_[label].clear(); }

void LabeledBags::insert(std::uint32_t label, std::uint32_t value) {
  bags_[label].push_back(value);
  ++inserts_;
}

LabeledBags::MergeResult LabeledBags::merge(
    const std::vector<std::uint32_t>& labels) {
  std::uint32_t keep = labels.front();
  for (const std::uint32_t label : labels)
    if (bags_[label].size() > bags_[keep].size()) keep = label;
  MergeResult result;
  result.label = keep;
  for (const std::uint32_t label : labels) {
    if (label == keep) continue;
    std::vector<std::uint32_t>& from = bags_[label];
    result.moved.insert(result.moved.end(), from.begin(), from.end());
    moves_ += from.size();
    from.clear();
    from.shrink_to_fit();
  }
  std::vector<std::uint32_t>& into = bags_[keep];
  into.insert(into.end(), result.moved.begin(), result.moved.end());
  return result;
}

const std::vector<std::uint32_t>& LabeledBags::bag(std::uint32_t label) const {
  return bags_[label];
}

void RightEnumerator::initialize(std::uint32_t anchor) {
  anchor_ = anchor;
  members_.clear();
  nodes_.clear();
}

void RightEnumerator::add(std::uint32_t index) {
  const TransitionMonoid& monoid = forest_->monoid();
  members_.push_back(index);
  std::uint32_t node = (*leaves_)[index];
  while (node != forest_->root_id()) {
    const FactForest::Node& here = forest_->node(node);
    const ElemId transition = forest_->range_eval(here.begin, index - 1);
    insert_unique(nodes_[node].transitions, transition);
    const FactForest::Node& up = forest_->node(here.parent);
    if (up.idempotent_group)
      raise_to(nodes_[here.parent].last_child_with,
               monoid.multiply(up.value, transition), here.pos_in_parent);
    node = here.parent;
  }
  if (debug_) verify();
}

void RightEnumerator::collect(std::uint32_t from, std::set<ElemId>& out) const {
  if (from > forest_->length()) return;
  const TransitionMonoid& monoid = forest_->monoid();
  std::uint32_t node = (*leaves_)[from];
  if (auto it = nodes_.find(node); it != nodes_.end())
    out.insert(it->second.transitions.begin(), it->second.transitions.end());
  while (node != forest_->root_id()) {
    const FactForest::Node& here = forest_->node(node);
    const FactForest::Node& up = forest_->node(here.parent);
    if (here.pos_in_parent + 1 < up.child_count) {
      const std::uint32_t sibling =
          forest_->child(here.parent, here.pos_in_parent + 1);
      const ElemId bridge =
          forest_->range_eval(from, forest_->node(sibling).begin - 1);
      if (auto it = nodes_.find(sibling); it != nodes_.end())
        for (const ElemId transition : it->second.transitions)
          out.insert(monoid.multiply(bridge, transition));
      // Members two or more children to the right: the whole children
      // between collapse to the group identity, which the key absorbed.
      if (up.idempotent_group)
        if (auto it = nodes_.find(here.parent); it != nodes_.end())
          for (const auto& [key, last] : it->second.last_child_with)
            if (last > here.pos_in_parent + 1)
              out.insert(monoid.multiply(bridge, key));
    }
    node = here.parent;
  }
}

std::set<ElemId> RightEnumerator::get(std::uint32_t from) const {
  std::set<ElemId> out;
  collect(from, out);
  return out;
}

void RightEnumerator::verify() const {
  if (forest_->length() > kDebugLimit) return;
  const TransitionMonoid& monoid = forest_->monoid();
  for (std::uint32_t id = 0; id < forest_->node_count(); ++id) {
    const FactForest::Node& node = forest_->node(id);
    const bool is_root = id == forest_->root_id();
    std::set<ElemId> transitions;
    std::map<ElemId, std::uint32_t> last_child;
    for (const std::uint32_t member : members_) {
      if (member < node.begin || member >= node.end) continue;
      if (!is_root)
        transitions.insert(forest_->range_eval(node.begin, member - 1));
      if (node.idempotent_group) {
        for (std::uint32_t pos = 0; pos < node.child_count; ++pos) {
          const FactForest::Node& child =
              forest_->node(forest_->child(id, pos));
          if (member < child.begin || member >= child.end) continue;
          const ElemId key = monoid.multiply(
              node.value, forest_->range_eval(child.begin, member - 1));
          auto it = last_child.find(key);
          if (it == last_child.end())
            last_child.emplace(key, pos);
          else
            it->second = std::max(it->second, pos);
        }
      }
    }
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
      assert(transitions.empty() && last_child.empty());
      continue;
    }
    assert(same_set(it->second.transitions, transitions));
    assert(same_entries(it->second.last_child_with, last_child));
  }
}

void AuxiliaryEnumerator::initialize(std::uint32_t anchor) {
  anchor_ = anchor;
  length_ = forest_->length() - anchor + 1;
  has_unit_bound_ = false;
  nodes_.clear();
  groups_.clear();
  debug_intervals_.clear();
}

void AuxiliaryEnumerator::shrink(std::uint32_t delta) {
  assert(delta <= length_);
  length_ -= delta;
}

void AuxiliaryEnumerator::refresh(NodeData& data) {
  assert(data.window >= length_);
  if (data.window == length_) return;
  // Every stored interval starts with the same window prefix as the anchor
  // suffix, so one gap transition updates the whole node.
  const ElemId gap =
      forest_->range_eval(anchor_ + length_, anchor_ + data.window - 1);
  const TransitionMonoid& monoid = forest_->monoid();
  std::vector<ElemId> updated;
  updated.reserve(data.transitions.size());
  for (const ElemId transition : data.transitions)
    insert_unique(updated, monoid.multiply(gap, transition));
  data.transitions = std::move(updated);
  data.window = length_;
}

void AuxiliaryEnumerator::refresh_group(GroupData& data) {
  assert(data.window >= length_);
  if (data.window == length_) return;
  const ElemId gap =
      forest_->range_eval(anchor_ + length_, anchor_ + data.window - 1);
  const TransitionMonoid& monoid = forest_->monoid();
  IndexedElems updated;
  updated.reserve(data.first_child_with.size());
  for (const auto& [key, index] : data.first_child_with)
    lower_to(updated, monoid.multiply(gap, key), index);
  data.first_child_with = std::move(updated);
  data.window = length_;
}

void AuxiliaryEnumerator::add(std::uint32_t start, std::uint32_t bound) {
  assert(start + length_ <= bound);
  if (debug_) debug_intervals_.emplace_back(start, bound);
  if (bound == 1) {
    // No leaf sits left of position 1; the interval forces start 1 and a
    // zero window from here on, so its transition is recomputed at query
    // time.
    has_unit_bound_ = true;
    if (debug_) verify();
    return;
  }
  const TransitionMonoid& monoid = forest_->monoid();
  std::uint32_t node = (*leaves_)[bound - 1];
  while (node != forest_->root_id()) {
    const FactForest::Node& here = forest_->node(node);
    auto [entry, created] = nodes_.try_emplace(node);
    if (created) entry->second.window = length_;
    refresh(entry->second);
    const ElemId transition =
        forest_->range_eval(start + length_, here.end - 1);
    insert_unique(entry->second.transitions, transition);
    const FactForest::Node& up = forest_->node(here.parent);
    if (up.idempotent_group) {
      auto [group, fresh] = groups_.try_emplace(here.parent);
      if (fresh) group->second.window = length_;
      refresh_group(group->second);
      lower_to(group->second.first_child_with,
               monoid.multiply(transition, up.value), here.pos_in_parent);
    }
    node = here.parent;
  }
  if (debug_) verify();
}

void AuxiliaryEnumerator::collect(std::uint32_t upto, std::set<ElemId>& out) {
  const TransitionMonoid& monoid = forest_->monoid();
  if (has_unit_bound_) out.insert(forest_->range_eval(1 + length_, upto - 1));
  if (upto < 2) return;
  std::uint32_t node = (*leaves_)[upto - 1];
  if (auto it = nodes_.find(node); it != nodes_.end()) {
    refresh(it->second);
    out.insert(it->second.transitions.begin(), it->second.transitions.end());
  }
  while (node != forest_->root_id()) {
    const FactForest::Node& here = forest_->node(node);
    const FactForest::Node& up = forest_->node(here.parent);
    if (here.pos_in_parent > 0) {
      const std::uint32_t sibling =
          forest_->child(here.parent, here.pos_in_parent - 1);
      const ElemId bridge =
          forest_->range_eval(forest_->node(sibling).end, upto - 1);
      if (auto it = nodes_.find(sibling); it != nodes_.end()) {
        refresh(it->second);
        for (const ElemId transition : it->second.transitions)
          out.insert(monoid.multiply(transition, bridge));
      }
      // Intervals two or more children to the left: the whole children
      // between collapse to the group identity, which the key absorbed.
      if (up.idempotent_group)
        if (auto it = groups_.find(here.parent); it != groups_.end()) {
          refresh_group(it->second);
          for (const auto& [key, first] : it->second.first_child_with)
            if (first + 1 < here.pos_in_parent)
              out.insert(monoid.multiply(key, bridge));
        }
    }
    node = here.parent;
  }
}

std::set<ElemId> AuxiliaryEnumerator::get(std::uint32_t upto) {
  std::set<ElemId> out;
  collect(upto, out);
  return out;
}

void AuxiliaryEnumerator::verify() {
  if (forest_->length() > kDebugLimit) return;
  const TransitionMonoid& monoid = forest_->monoid();
  bool unit = false;
  for (const auto& [start, bound] : debug_intervals_) unit |= bound == 1;
  assert(unit == has_unit_bound_);
  for (std::uint32_t id = 0; id < forest_->node_count(); ++id) {
    const FactForest::Node& node = forest_->node(id);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> inside;
    for (const auto& interval : debug_intervals_)
      if (node.begin < interval.second && interval.second <= node.end)
        inside.push_back(interval);
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
      assert(inside.empty() || id == forest_->root_id());
    } else {
      std::set<ElemId> transitions;
      for (const auto& [start, bound] : inside)
        transitions.insert(
            forest_->range_eval(start + it->second.window, node.end - 1));
      assert(same_set(it->second.transitions, transitions));
    }
    if (node.idempotent_group) {
      auto group = groups_.find(id);
      if (group == groups_.end()) {
        assert(inside.empty());
        continue;
      }
      std::map<ElemId, std::uint32_t> first_child;
      for (const auto& [start, bound] : inside) {
        for (std::uint32_t pos = 0; pos < node.child_count; ++pos) {
          const FactForest::Node& child =
              forest_->node(forest_->child(id, pos));
          if (child.begin < bound && bound <= child.end) {
            const ElemId key = monoid.multiply(
                forest_->range_eval(start + group->second.window,
                                    child.end - 1),
                node.value);
            auto entry = first_child.find(key);
            if (entry == first_child.end())
              first_child.emplace(key, pos);
            else
              entry->second = std::min(entry->second, pos);
          }
        }
      }
      assert(same_entries(group->second.first_child_with, first_child));
    }
  }
}

void LeftEnumerator::initialize(std::uint32_t anchor) {
  anchor_ = anchor;
  length_ = parts_.forest_c->length() - anchor + 1;
  aux_.initialize(anchor);
  queue_.clear();
  occurrences_.clear();
  members_.clear();
}

void LeftEnumerator::register_occurrence(std::uint32_t index) {
  occurrences_.insert(index);
}

void LeftEnumerator::add(std::uint32_t index) {
  members_.push_back(index);
  aux_.add(index, index + length_);
  if (length_ > 0) queue_.emplace_back(index, length_);
  if (debug_) verify();
}

void LeftEnumerator::shrink(std::uint32_t delta) {
  assert(delta <= length_);
  length_ -= delta;
  aux_.shrink(delta);
  // Re-register members whose window more than halved; each member
  // re-registers at most log2 of the word length times.
  while (!queue_.empty() && 2 * length_ < queue_.front().second) {
    const std::uint32_t index = queue_.front().first;
    queue_.pop_front();
    aux_.add(index, index + length_);
    if (length_ > 0) queue_.emplace_back(index, length_);
  }
  if (debug_) verify();
}

std::set<ElemId> LeftEnumerator::get(std::uint32_t upto) {
  std::set<ElemId> out = aux_.get(upto);
  const std::set<ElemId> near =
      near_transitions(parts_, occurrences_, upto, length_);
  out.insert(near.begin(), near.end());
  return out;
}

void LeftEnumerator::set_debug(bool value) {
  debug_ = value;
  aux_.set_debug(value);
}

void LeftEnumerator::verify() {
  if (parts_.forest_c->length() > kDebugLimit) return;
  if (length_ == 0) assert(queue_.empty());
  std::vector<std::uint32_t> queued;
  std::uint32_t previous = 0xffffffffu;
  for (const auto& [index, window] : queue_) {
    assert(length_ <= window && window <= 2 * length_);
    assert(window <= previous);
    previous = window;
    queued.push_back(index);
  }
  std::vector<std::uint32_t> expected = members_;
  std::sort(expected.begin(), expected.end());
  if (length_ > 0) {
    std::sort(queued.begin(), queued.end());
    assert(queued == expected);
  }
  // The tightest registered bound per member stays within twice the window.
  std::map<std::uint32_t, std::uint32_t> tightest;
  for (const auto& [start, bound] : aux_.recorded_intervals()) {
    auto it = tightest.find(start);
    if (it == tightest.end())
      tightest.emplace(start, bound);
    else
      it->second = std::min(it->second, bound);
  }
  std::vector<std::uint32_t> supports;
  for (const auto& [start, bound] : tightest) supports.push_back(start);
  assert(supports == expected);
  for (const std::uint32_t member : expected) {
    const std::uint32_t bound = tightest.at(member);
    assert(member + length_ <= bound);
    assert(bound <= member + 2 * length_);
  }
}

std::set<ElemId> near_transitions(const LeftEnumerator::Parts& parts,
                                  const std::set<std::uint32_t>& occurrences,
                                  std::uint32_t upto, std::uint32_t window) {
  std::set<ElemId> out;
  const std::uint32_t m = window;
  if (m == 0 || upto < m + 1) return out;
  const std::uint32_t high = upto - m;
  const std::uint32_t low = upto >= 2 * m ? upto - 2 * m + 1 : 1;
  auto first = occurrences.lower_bound(low);
  if (first == occurrences.end() || *first > high) return out;
  auto last = std::prev(occurrences.upper_bound(high));
  const std::uint32_t first_occ = *first;
  const std::uint32_t last_occ = *last;
  const TransitionMonoid& monoid_a = *parts.monoid_a;
  const TransitionMonoid& monoid_c = *parts.monoid_c;
  const FactForest& forest_a = *parts.forest_a;
  const FactForest& forest_c = *parts.forest_c;
  auto prefix_accepted = [&](std::uint32_t occ) {
    return monoid_a.accepting(forest_a.range_eval(1, occ - 1));
  };
  auto gap_transition = [&](std::uint32_t occ) {
    return forest_c.range_eval(occ + m, upto - 1);
  };
  if (first_occ == last_occ || *std::next(first) == last_occ) {
    if (prefix_accepted(first_occ)) out.insert(gap_transition(first_occ));
    if (last_occ != first_occ && prefix_accepted(last_occ))
      out.insert(gap_transition(last_occ));
    return out;
  }
  const std::uint32_t step = *std::next(first) - first_occ;
  if ((last_occ - first_occ) % step != 0) {
    // A full occurrence set inside a window narrower than the occurrences
    // themselves is always an arithmetic progression; a partial set may
    // not be, so scan it directly.
    for (auto it = first; it != occurrences.end() && *it <= high; ++it)
      if (prefix_accepted(*it)) out.insert(gap_transition(*it));
    return out;
  }
  // The window occurrences are first_occ + k * step for k = 0..count; the
  // prefix before the k-th and the gap after it are sandwiches in k, so
  // the answer reduces to exponent set arithmetic.
  const std::uint64_t count = (last_occ - first_occ) / step;
  const ElemId head_a = forest_a.range_eval(1, first_occ - 1);
  const ElemId step_a = forest_a.range_eval(first_occ, first_occ + step - 1);
  const UpSet accepted_a =
      up_accepting_sandwich(monoid_a, head_a, step_a, monoid_a.identity_id());
  const ElemId step_c =
      forest_c.range_eval(first_occ + m, first_occ + m + step - 1);
  const ElemId tail_c = forest_c.range_eval(last_occ + m, upto - 1);
  const auto classes =
      up_sandwich_classes(monoid_c, monoid_c.identity_id(), step_c, tail_c);
  for (const auto& [value, exponents] : classes)
    if (up_minkowski(accepted_a, exponents).contains(count))
      out.insert(value);
  return out;
}

namespace {

void validate_monoids(const TransitionMonoid& monoid_a,
                      const TransitionMonoid& monoid_b,
                      const TransitionMonoid& monoid_c,
                      const TransitionMonoid& monoid_d) {
  for (const TransitionMonoid* monoid :
       {&monoid_a, &monoid_b, &monoid_c, &monoid_d})
    if (monoid->alphabet() != "01")
      throw std::invalid_argument(
          "branching expects machines over the alphabet 01");
  if (monoid_b.accepting(monoid_b.identity_id()) ||
      monoid_d.accepting(monoid_d.identity_id()))
    throw std::invalid_argument(
        "branching expects the second and fourth parts to reject the "
        "empty word");
}

}  // namespace

std::unique_ptr<BranchingInstance> make_branching_instance(
    TransitionMonoid monoid_a, TransitionMonoid monoid_b,
    TransitionMonoid monoid_c, TransitionMonoid monoid_d, std::string word,
    bool debug_checks) {
  validate_monoids(monoid_a, monoid_b, monoid_c, monoid_d);
  if (word.empty())
    throw std::invalid_argument("branching expects a nonempty word");
  for (const char letter : word)
    if (letter != '0' && letter != '1')
      throw std::invalid_argument(
          "branching expects a word over the alphabet 01");
  auto instance = std::make_unique<BranchingInstance>();
  instance->word = std::move(word);
  instance->debug_checks = debug_checks;
  instance->monoid_a = std::move(monoid_a);
  instance->monoid_b = std::move(monoid_b);
  instance->monoid_c = std::move(monoid_c);
  instance->monoid_d = std::move(monoid_d);
  instance->forest_a = build_fact_forest(instance->word, instance->monoid_a);
  instance->forest_b = build_fact_forest(instance->word, instance->monoid_b);
  instance->forest_c = build_fact_forest(instance->word, instance->monoid_c);
  instance->forest_d = build_fact_forest(instance->word, instance->monoid_d);
  instance->leaf_c = forest_position_leaves(instance->forest_c);
  instance->tree = build_suffix_tree(instance->word);
  instance->hld = heavy_light(instance->tree);
  return instance;
}

std::unique_ptr<BranchingInstance> make_branching_instance(
    const ExprPtr& part_a, const ExprPtr& part_b, const ExprPtr& part_c,
    const ExprPtr& part_d, std::string word, bool debug_checks) {
  return make_branching_instance(
      build_monoid(part_a, "01"), build_monoid(part_b, "01"),
      build_monoid(part_c, "01"), build_monoid(part_d, "01"), std::move(word),
      debug_checks);
}

HeavyPathContext heavy_path_context(const BranchingInstance& instance,
                                    std::uint32_t path_index) {
  HeavyPathContext context;
  context.shared = &instance;
  const std::vector<std::uint32_t>& path = instance.hld.paths.at(path_index);
  context.path.assign(path.rbegin(), path.rend());
  context.anchor = instance.tree.occurrence_start(context.path.front());
  return context;
}

namespace {

// Starts of the suffixes hanging off the node outside its heavy subtree:
// the node's own suffix occurrence plus every suffix under a light child.
void collect_lights(const BranchingInstance& instance, std::uint32_t node,
                    std::vector<std::uint32_t>& out,
                    std::vector<std::uint32_t>& stack) {
  out.clear();
  const SuffixTree& tree = instance.tree;
  if (tree.node(node).is_suffix) out.push_back(tree.occurrence_start(node));
  const std::uint32_t heavy = instance.hld.heavy_child[node];
  for (std::uint32_t child = tree.node(node).first_child; child != kNoNode;
       child = tree.node(child).next_sibling) {
    if (child == heavy) continue;
    stack.assign(1, child);
    while (!stack.empty()) {
      const std::uint32_t below = stack.back();
      stack.pop_back();
      if (tree.node(below).is_suffix)
        out.push_back(tree.occurrence_start(below));
      for (std::uint32_t next = tree.node(below).first_child; next != kNoNode;
           next = tree.node(next).next_sibling)
        stack.push_back(next);
    }
  }
}

bool block_accepted(const BranchingInstance& instance,
                    const HeavyPathContext& context, std::uint32_t depth) {
  return instance.monoid_b.accepting(instance.forest_b.range_eval(
      context.anchor, context.anchor + depth - 1));
}

}  // namespace

std::set<ElemId> right_b_enumeration(const HeavyPathContext& context) {
  const BranchingInstance& instance = *context.shared;
  const TransitionMonoid& monoid_a = instance.monoid_a;
  const TransitionMonoid& monoid_d = instance.monoid_d;
  const std::uint32_t word_size = std::uint32_t(instance.word.size());
  const std::uint32_t label_count = std::uint32_t(monoid_d.size());

  LabeledBags bags(label_count);
  std::vector<RightEnumerator> slots(
      label_count, RightEnumerator(instance.forest_c, instance.leaf_c));
  if (instance.debug_checks)
    for (RightEnumerator& slot : slots) slot.set_debug(true);
  std::vector<ElemId> bag_transition(label_count, 0);
  std::set<std::uint32_t> labels;
  std::set<std::uint32_t> freed;
  std::uint32_t fresh = 0;
  std::map<ElemId, std::uint32_t> label_of;
  std::set<ElemId> out;
  std::vector<std::uint32_t> lights;
  std::vector<std::uint32_t> stack;
  std::uint32_t previous_depth = 0;
  bool started = false;

  for (const std::uint32_t node : context.path) {
    const std::uint32_t depth = instance.tree.node(node).path_length;
    // The block shortened: push the dropped chunk into every bag
    // transition; all members share the chunk because each one starts a
    // copy of the anchor prefix.
    if (started && depth < previous_depth && !labels.empty()) {
      const ElemId gap = instance.forest_d.range_eval(
          context.anchor + depth, context.anchor + previous_depth - 1);
      for (const std::uint32_t label : labels)
        bag_transition[label] = monoid_d.multiply(gap, bag_transition[label]);
    }
    previous_depth = depth;
    started = true;

    // Merge bags whose transitions collided, keeping the largest.
    label_of.clear();
    std::map<ElemId, std::vector<std::uint32_t>> grouped;
    for (const std::uint32_t label : labels)
      grouped[bag_transition[label]].push_back(label);
    for (const auto& [transition, group] : grouped) {
      if (group.size() == 1) {
        label_of[transition] = group.front();
        continue;
      }
      const LabeledBags::MergeResult merged = bags.merge(group);
      for (const std::uint32_t moved : merged.moved)
        slots[merged.label].add(moved);
      for (const std::uint32_t label : group) {
        if (label == merged.label) continue;
        labels.erase(label);
        freed.insert(label);
      }
      label_of[transition] = merged.label;
    }

    collect_lights(instance, node, lights, stack);

    // Query phase: each light first occurrence with an accepted prefix
    // reads the members of every bag whose tail transition accepts.
    if (block_accepted(instance, context, depth)) {
      for (const std::uint32_t occurrence : lights) {
        if (!monoid_a.accepting(
                instance.forest_a.range_eval(1, occurrence - 1)))
          continue;
        for (const std::uint32_t label : labels)
          if (monoid_d.accepting(bag_transition[label]))
            slots[label].collect(occurrence + depth, out);
      }
    }

    // Insert phase: each light occurrence joins the bag of its tail
    // transition, claiming the lowest free label when none exists.
    for (const std::uint32_t occurrence : lights) {
      const ElemId tail =
          instance.forest_d.range_eval(occurrence + depth, word_size);
      std::uint32_t label;
      auto it = label_of.find(tail);
      if (it == label_of.end()) {
        if (!freed.empty() && *freed.begin() < fresh) {
          label = *freed.begin();
          freed.erase(freed.begin());
        } else {
          label = fresh++;
        }
        assert(label < label_count);
        bags.make_bag(label);
        slots[label].initialize(occurrence);
        bag_transition[label] = tail;
        labels.insert(label);
        label_of.emplace(tail, label);
      } else {
        label = it->second;
      }
      bags.insert(label, occurrence);
      slots[label].add(occurrence);
    }

    if (instance.debug_checks && word_size <= kDebugLimit) {
      assert(labels.size() <= label_count);
      for (const std::uint32_t label : labels)
        for (const std::uint32_t member : bags.bag(label))
          assert(instance.forest_d.range_eval(member + depth, word_size) ==
                 bag_transition[label]);
    }
  }

  if (instance.debug_checks) {
    // Smallest-into-largest: every element at least doubles its bag per
    // move.
    const double cap =
        std::log2(std::max<double>(2.0, double(word_size)));
    assert(double(bags.moves()) <= double(bags.inserts()) * cap + 1e-9);
  }
  return out;
}

std::set<ElemId> left_b_enumeration(const HeavyPathContext& context) {
  const BranchingInstance& instance = *context.shared;
  const TransitionMonoid& monoid_a = instance.monoid_a;
  const TransitionMonoid& monoid_d = instance.monoid_d;
  const std::uint32_t word_size = std::uint32_t(instance.word.size());

  LeftEnumerator::Parts parts;
  parts.monoid_a = &instance.monoid_a;
  parts.forest_a = &instance.forest_a;
  parts.monoid_c = &instance.monoid_c;
  parts.forest_c = &instance.forest_c;
  parts.leaves_c = &instance.leaf_c;
  LeftEnumerator members(parts);
  if (instance.debug_checks) members.set_debug(true);
  members.initialize(context.anchor);

  std::set<ElemId> out;
  std::vector<std::uint32_t> lights;
  std::vector<std::uint32_t> stack;
  for (const std::uint32_t node : context.path) {
    const std::uint32_t depth = instance.tree.node(node).path_length;
    members.shrink(members.window() - depth);
    collect_lights(instance, node, lights, stack);

    // Query phase: each light second occurrence with an accepted tail
    // collects the gap transitions from the heavy first occurrences.
    if (block_accepted(instance, context, depth)) {
      for (const std::uint32_t occurrence : lights) {
        if (!monoid_d.accepting(
                instance.forest_d.range_eval(occurrence + depth, word_size)))
          continue;
        const std::set<ElemId> got = members.get(occurrence);
        out.insert(got.begin(), got.end());
      }
    }

    // Insert phase: every light occurrence feeds the near-window set; the
    // ones with accepted prefixes join the member set.
    for (const std::uint32_t occurrence : lights) {
      members.register_occurrence(occurrence);
      if (monoid_a.accepting(
              instance.forest_a.range_eval(1, occurrence - 1)))
        members.add(occurrence);
    }
  }
  return out;
}

bool solve_branching(const BranchingInstance& instance) {
  const TransitionMonoid& monoid_c = instance.monoid_c;
  for (std::uint32_t path = 0; path < instance.hld.paths.size(); ++path) {
    const HeavyPathContext context = heavy_path_context(instance, path);
    for (const ElemId transition : right_b_enumeration(context))
      if (monoid_c.accepting(transition)) return true;
    for (const ElemId transition : left_b_enumeration(context))
      if (monoid_c.accepting(transition)) return true;
  }
  return false;
}

bool solve_branching(const ExprPtr& part_a, const ExprPtr& part_b,
                     const ExprPtr& part_c, const ExprPtr& part_d,
                     std::string word, bool debug_checks) {
  TransitionMonoid monoid_a = build_monoid(part_a, "01");
  TransitionMonoid monoid_b = build_monoid(part_b, "01");
  TransitionMonoid monoid_c = build_monoid(part_c, "01");
  TransitionMonoid monoid_d = build_monoid(part_d, "01");
  validate_monoids(monoid_a, monoid_b, monoid_c, monoid_d);
  if (word.empty()) return false;
  const auto instance = make_branching_instance(
      std::move(monoid_a), std::move(monoid_b), std::move(monoid_c),
      std::move(monoid_d), std::move(word), debug_checks);
  return solve_branching(*instance);
}

}  // namespace rewb
