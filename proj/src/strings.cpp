#include "rewb/strings.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace rewb {

namespace {

std::array<int, 256> letter_codes(const std::vector<char>& alphabet) {
  if (alphabet.empty()) throw std::invalid_argument("alphabet must be nonempty");
  std::array<int, 256> table;
  table.fill(-1);
  for (std::size_t k = 0; k < alphabet.size(); ++k) {
    if (k > 0 && alphabet[k - 1] >= alphabet[k])
      throw std::invalid_argument("alphabet must be strictly ascending");
    table[static_cast<unsigned char>(alphabet[k])] = static_cast<int>(k);
  }
  return table;
}

void append_code(std::string& out, std::size_t code, std::size_t width) {
  for (std::size_t bit = width; bit-- > 0;)
    out.push_back(((code >> bit) & 1) != 0 ? '1' : '0');
}

}  // namespace

std::size_t sanitize_code_width(std::size_t alphabet_size) {
  if (alphabet_size <= 1) return 0;
  return std::bit_width(alphabet_size - 1);
}

SanitizedInput sanitize(std::string_view word, const std::vector<char>& alphabet) {
  const auto table = letter_codes(alphabet);
  const std::size_t width = sanitize_code_width(alphabet.size());
  SanitizedInput out;
  out.bits_per_letter = width;
  out.original_length = word.size();
  out.alphabet = alphabet;
  out.text.reserve((width + 1) * (word.size() + 1));
  for (char letter : word) {
    const int code = table[static_cast<unsigned char>(letter)];
    if (code < 0)
      throw std::invalid_argument(std::string("letter outside the alphabet: ") +
                                  letter);
    append_code(out.text, static_cast<std::size_t>(code), width);
    out.text.push_back('0');
  }
  out.text.append(width + 1, '1');
  return out;
}

ExprPtr encode_letters(const ExprPtr& expr, const std::vector<char>& alphabet) {
  const auto table = letter_codes(alphabet);
  const std::size_t width = sanitize_code_width(alphabet.size());
  auto rec = [&](auto&& self, const ExprPtr& e) -> ExprPtr {
    switch (e->kind) {
      case ExprKind::EmptySet:
        return make_empty_set();
      case ExprKind::Epsilon:
        return make_epsilon();
      case ExprKind::Letter: {
        const int code = table[static_cast<unsigned char>(e->symbol)];
        if (code < 0)
          throw std::invalid_argument(
              std::string("letter outside the alphabet: ") + e->symbol);
        std::string block;
        append_code(block, static_cast<std::size_t>(code), width);
        block.push_back('0');
        ExprPtr acc = make_letter(block[0]);
        for (std::size_t k = 1; k < block.size(); ++k)
          acc = make_concat(acc, make_letter(block[k]));
        return acc;
      }
      case ExprKind::Concat:
        return make_concat(self(self, e->left), self(self, e->right));
      case ExprKind::Union:
        return make_union(self(self, e->left), self(self, e->right));
      case ExprKind::Star:
        return make_star(self(self, e->left));
      case ExprKind::Capture:
      case ExprKind::Backref:
        throw std::invalid_argument(
            "letter encoding is defined for plain regexes only");
    }
    throw std::logic_error("unhandled expression kind");
  };
  return rec(rec, expr);
}

SanitizedExprs sanitize_exprs(const ExprPtr& a, const ExprPtr& b,
                              const ExprPtr& c, const ExprPtr& d,
                              const std::vector<char>& alphabet) {
  const std::size_t width = sanitize_code_width(alphabet.size());
  SanitizedExprs out;
  out.a = encode_letters(a, alphabet);
  out.b = encode_letters(b, alphabet);
  out.c = encode_letters(c, alphabet);
  ExprPtr terminator = make_letter('1');
  for (std::size_t k = 0; k < width; ++k)
    terminator = make_concat(terminator, make_letter('1'));
  out.d = make_concat(encode_letters(d, alphabet), std::move(terminator));
  return out;
}

SuffixArray build_suffix_array(std::string_view text) {
  const std::size_t n = text.size();
  SuffixArray sa;
  if (n == 0) return sa;
  sa.order.resize(n);
  sa.rank.resize(n);
  std::vector<std::uint32_t> count(257, 0);
  for (char c : text) ++count[static_cast<unsigned char>(c) + 1];
  for (std::size_t v = 1; v < count.size(); ++v) count[v] += count[v - 1];
  for (std::size_t i = 0; i < n; ++i)
    sa.order[count[static_cast<unsigned char>(text[i])]++] = static_cast<std::uint32_t>(i);
  sa.rank[sa.order[0]] = 0;
  for (std::size_t k = 1; k < n; ++k)
    sa.rank[sa.order[k]] =
        sa.rank[sa.order[k - 1]] + (text[sa.order[k]] != text[sa.order[k - 1]] ? 1 : 0);

  std::vector<std::uint32_t> tmp(n), next_rank(n);
  for (std::size_t step = 1; step < n && sa.rank[sa.order[n - 1]] != n - 1;
       step <<= 1) {
    std::size_t idx = 0;
    for (std::size_t i = n - step; i < n; ++i)
      tmp[idx++] = static_cast<std::uint32_t>(i);
    for (std::size_t k = 0; k < n; ++k)
      if (sa.order[k] >= step) tmp[idx++] = sa.order[k] - static_cast<std::uint32_t>(step);
    count.assign(n + 1, 0);
    for (std::uint32_t r : sa.rank) ++count[r + 1];
    for (std::size_t v = 1; v <= n; ++v) count[v] += count[v - 1];
    for (std::uint32_t v : tmp) sa.order[count[sa.rank[v]]++] = v;
    auto pair_rank = [&](std::uint32_t i) -> std::uint64_t {
      const std::uint64_t high = std::uint64_t{sa.rank[i]} + 1;
      const std::uint64_t low =
          i + step < n ? std::uint64_t{sa.rank[i + step]} + 1 : 0;
      return (high << 32) | low;
    };
    next_rank[sa.order[0]] = 0;
    for (std::size_t k = 1; k < n; ++k)
      next_rank[sa.order[k]] =
          next_rank[sa.order[k - 1]] +
          (pair_rank(sa.order[k]) != pair_rank(sa.order[k - 1]) ? 1 : 0);
    sa.rank.swap(next_rank);
  }

  sa.lcp.assign(n, 0);
  std::size_t h = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t r = sa.rank[i];
    if (r == 0) {
      h = 0;
      continue;
    }
    const std::uint32_t j = sa.order[r - 1];
    while (i + h < n && j + h < n && text[i + h] == text[j + h]) ++h;
    sa.lcp[r] = static_cast<std::uint32_t>(h);
    if (h > 0) --h;
  }
  return sa;
}

namespace {
constexpr std::size_t kLceBlock = 16;
}  // namespace

LceIndex::LceIndex(std::string_view text) : length_(text.size()) {
  if (length_ == 0) return;
  SuffixArray sa = build_suffix_array(text);
  rank_ = std::move(sa.rank);
  lcp_ = std::move(sa.lcp);
  const std::size_t m = lcp_.size();
  block_count_ = (m + kLceBlock - 1) / kLceBlock;
  block_min_.assign(block_count_, std::numeric_limits<std::uint32_t>::max());
  prefix_min_.resize(m);
  suffix_min_.resize(m);
  for (std::size_t blk = 0; blk < block_count_; ++blk) {
    const std::size_t lo = blk * kLceBlock;
    const std::size_t hi = std::min(lo + kLceBlock, m);
    std::uint32_t best = std::numeric_limits<std::uint32_t>::max();
    for (std::size_t k = lo; k < hi; ++k) {
      best = std::min(best, lcp_[k]);
      prefix_min_[k] = best;
    }
    block_min_[blk] = best;
    best = std::numeric_limits<std::uint32_t>::max();
    for (std::size_t k = hi; k-- > lo;) {
      best = std::min(best, lcp_[k]);
      suffix_min_[k] = best;
    }
  }
  std::size_t levels = 1;
  while ((std::size_t{1} << levels) <= block_count_) ++levels;
  sparse_.assign(levels * block_count_, 0);
  std::copy(block_min_.begin(), block_min_.end(), sparse_.begin());
  for (std::size_t lev = 1; lev < levels; ++lev) {
    const std::size_t span = std::size_t{1} << lev;
    for (std::size_t blk = 0; blk + span <= block_count_; ++blk)
      sparse_[lev * block_count_ + blk] =
          std::min(sparse_[(lev - 1) * block_count_ + blk],
                   sparse_[(lev - 1) * block_count_ + blk + span / 2]);
  }
}

std::uint32_t LceIndex::range_min(std::size_t lo, std::size_t hi) const {
  const std::size_t bl = lo / kLceBlock;
  const std::size_t bh = hi / kLceBlock;
  if (bl == bh) {
    std::uint32_t best = lcp_[lo];
    for (std::size_t k = lo + 1; k <= hi; ++k) best = std::min(best, lcp_[k]);
    return best;
  }
  std::uint32_t best = std::min(suffix_min_[lo], prefix_min_[hi]);
  if (bl + 1 <= bh - 1) {
    const std::size_t first = bl + 1;
    const std::size_t span = bh - 1 - first + 1;
    const std::size_t lev = std::bit_width(span) - 1;
    best = std::min(best, sparse_[lev * block_count_ + first]);
    best = std::min(best,
                    sparse_[lev * block_count_ + bh - 1 - (std::size_t{1} << lev) + 1]);
  }
  return best;
}

std::size_t LceIndex::common_prefix(std::size_t i, std::size_t j) const {
  if (i == j) return i <= length_ ? length_ - i : 0;
  if (i >= length_ || j >= length_) return 0;
  std::uint32_t a = rank_[i];
  std::uint32_t b = rank_[j];
  if (a > b) std::swap(a, b);
  return range_min(a + 1, b);
}

std::vector<std::uint32_t> SuffixTree::children(std::uint32_t id) const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t c = nodes_[id].first_child; c != kNoNode;
       c = nodes_[c].next_sibling)
    out.push_back(c);
  return out;
}

std::string SuffixTree::path_label(std::uint32_t id) const {
  const SuffixTreeNode& nd = nodes_[id];
  return text_.substr(nd.edge_end - nd.path_length, nd.path_length);
}

SuffixTree build_suffix_tree(std::string_view text) {
  if (text.empty())
    throw std::invalid_argument("suffix tree requires a nonempty word");
  const std::size_t n = text.size();
  const SuffixArray sa = build_suffix_array(text);

  SuffixTree tree;
  tree.text_.assign(text);
  std::vector<SuffixTreeNode>& nodes = tree.nodes_;
  nodes.emplace_back();
  std::vector<std::uint32_t> last_child(1, kNoNode);

  auto fresh = [&](SuffixTreeNode nd) {
    nodes.push_back(nd);
    last_child.push_back(kNoNode);
    return static_cast<std::uint32_t>(nodes.size() - 1);
  };
  auto append_child = [&](std::uint32_t parent, std::uint32_t child) {
    nodes[child].parent = parent;
    if (last_child[parent] == kNoNode)
      nodes[parent].first_child = child;
    else
      nodes[last_child[parent]].next_sibling = child;
    last_child[parent] = child;
  };

  std::vector<std::uint32_t> stack{0};  // root-to-rightmost path
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint32_t start = sa.order[k];
    const std::uint32_t suffix_len = static_cast<std::uint32_t>(n) - start;
    const std::uint32_t h = k == 0 ? 0 : sa.lcp[k];
    std::uint32_t popped = kNoNode;
    while (nodes[stack.back()].path_length > h) {
      popped = stack.back();
      stack.pop_back();
    }
    std::uint32_t top = stack.back();
    if (nodes[top].path_length < h) {
      // Split the edge top -> popped at label depth h.
      const std::uint32_t keep = h - nodes[top].path_length;
      SuffixTreeNode mid;
      mid.parent = top;
      mid.edge_begin = nodes[popped].edge_begin;
      mid.edge_end = nodes[popped].edge_begin + keep;
      mid.path_length = h;
      mid.first_child = popped;
      const std::uint32_t mid_id = fresh(mid);
      last_child[mid_id] = popped;
      nodes[popped].edge_begin += keep;
      nodes[popped].parent = mid_id;
      if (nodes[top].first_child == popped) {
        nodes[top].first_child = mid_id;
      } else {
        std::uint32_t prev = nodes[top].first_child;
        while (nodes[prev].next_sibling != popped)
          prev = nodes[prev].next_sibling;
        nodes[prev].next_sibling = mid_id;
      }
      last_child[top] = mid_id;
      stack.push_back(mid_id);
      top = mid_id;
    }
    if (suffix_len == h) {
      nodes[top].is_suffix = true;
    } else {
      SuffixTreeNode leaf;
      leaf.edge_begin = start + h;
      leaf.edge_end = static_cast<std::uint32_t>(n);
      leaf.path_length = suffix_len;
      leaf.is_suffix = true;
      const std::uint32_t leaf_id = fresh(leaf);
      append_child(top, leaf_id);
      stack.push_back(leaf_id);
    }
  }

  // Subtree node counts, children before parents via reversed preorder.
  std::vector<std::uint32_t> preorder;
  preorder.reserve(nodes.size());
  std::vector<std::uint32_t> work{0};
  while (!work.empty()) {
    const std::uint32_t v = work.back();
    work.pop_back();
    preorder.push_back(v);
    for (std::uint32_t c = nodes[v].first_child; c != kNoNode;
         c = nodes[c].next_sibling)
      work.push_back(c);
  }
  for (auto it = preorder.rbegin(); it != preorder.rend(); ++it) {
    std::uint32_t total = 1;
    for (std::uint32_t c = nodes[*it].first_child; c != kNoNode;
         c = nodes[c].next_sibling)
      total += nodes[c].subtree_nodes;
    nodes[*it].subtree_nodes = total;
  }
  return tree;
}

HldInfo heavy_light(const SuffixTree& tree) {
  const std::size_t n = tree.node_count();
  HldInfo info;
  info.heavy_child.assign(n, kNoNode);
  info.path_id.assign(n, 0);
  info.path_pos.assign(n, 0);
  for (std::uint32_t v = 0; v < n; ++v) {
    std::uint32_t best = kNoNode;
    std::uint32_t best_count = 0;
    for (std::uint32_t c = tree.node(v).first_child; c != kNoNode;
         c = tree.node(c).next_sibling) {
      // Strict comparison keeps the leftmost child on ties.
      if (tree.node(c).subtree_nodes > best_count) {
        best = c;
        best_count = tree.node(c).subtree_nodes;
      }
    }
    info.heavy_child[v] = best;
  }
  for (std::uint32_t v = 0; v < n; ++v) {
    const bool head =
        v == tree.root() || info.heavy_child[tree.node(v).parent] != v;
    if (!head) continue;
    const std::uint32_t id = static_cast<std::uint32_t>(info.paths.size());
    std::vector<std::uint32_t> path;
    for (std::uint32_t u = v; u != kNoNode; u = info.heavy_child[u]) {
      info.path_id[u] = id;
      info.path_pos[u] = static_cast<std::uint32_t>(path.size());
      path.push_back(u);
    }
    info.paths.push_back(std::move(path));
  }
  return info;
}

FactForest FactForest::from_parts(const TransitionMonoid& monoid,
                                  std::string_view word,
                                  std::vector<Node> nodes,
                                  std::vector<std::uint32_t> child_ids,
                                  std::uint32_t root_id) {
  const auto fail = [](const char* what) {
    throw std::invalid_argument(std::string("malformed forest: ") + what);
  };
  const std::uint32_t length = static_cast<std::uint32_t>(word.size());
  if (length == 0) fail("word must be nonempty");
  if (root_id >= nodes.size()) fail("root id out of range");

  std::size_t slot_total = 0;
  for (Node& nd : nodes) {
    nd.parent = kNoNode;
    nd.pos_in_parent = 0;
    if (nd.begin < 1 || nd.begin >= nd.end || nd.end > length + 1)
      fail("node interval out of range");
    if (nd.child_count == 0) {
      if (nd.end != nd.begin + 1) fail("leaf must cover a single position");
      if (nd.idempotent_group) fail("leaf flagged as idempotent group");
      if (nd.value != monoid.letter_id(word[nd.begin - 1]))
        fail("leaf value must be its letter's image");
    } else if (nd.child_count == 1) {
      fail("unary nodes are not allowed");
    } else {
      if (std::size_t{nd.child_offset} + nd.child_count > child_ids.size())
        fail("child slots out of range");
      slot_total += nd.child_count;
      if (nd.child_count == 2 && nd.idempotent_group)
        fail("binary node flagged as idempotent group");
      if (nd.child_count > 2 && !nd.idempotent_group)
        fail("wide node must be an idempotent group");
    }
  }
  if (slot_total != child_ids.size()) fail("child array not fully claimed");

  for (std::uint32_t id = 0; id < nodes.size(); ++id) {
    const std::uint32_t child_count = nodes[id].child_count;
    if (child_count == 0) continue;
    std::uint32_t cursor = nodes[id].begin;
    for (std::uint32_t k = 0; k < child_count; ++k) {
      const std::uint32_t cid = child_ids[nodes[id].child_offset + k];
      if (cid >= nodes.size() || cid == id) fail("bad child id");
      Node& ch = nodes[cid];
      if (ch.parent != kNoNode) fail("node claimed by two parents");
      ch.parent = id;
      ch.pos_in_parent = k;
      if (ch.begin != cursor) fail("children must tile the parent interval");
      cursor = ch.end;
    }
    if (cursor != nodes[id].end) fail("children must tile the parent interval");
    const Node& nd = nodes[id];
    if (child_count == 2) {
      const ElemId left = nodes[child_ids[nd.child_offset]].value;
      const ElemId right = nodes[child_ids[nd.child_offset + 1]].value;
      if (nd.value != monoid.multiply(left, right))
        fail("binary node value must be the product of its children");
    } else {
      const ElemId shared = nodes[child_ids[nd.child_offset]].value;
      if (monoid.multiply(shared, shared) != shared)
        fail("wide node children must carry an idempotent");
      for (std::uint32_t k = 0; k < child_count; ++k)
        if (nodes[child_ids[nd.child_offset + k]].value != shared)
          fail("wide node children must share one value");
      if (nd.value != shared) fail("wide node value must equal its children's");
    }
  }

  if (nodes[root_id].parent != kNoNode) fail("root cannot have a parent");
  if (nodes[root_id].begin != 1 || nodes[root_id].end != length + 1)
    fail("root must cover the whole word");
  for (std::uint32_t id = 0; id < nodes.size(); ++id)
    if (id != root_id && nodes[id].parent == kNoNode)
      fail("node unreachable from the root");

  // Parent links are acyclic only if everything is reachable from the root.
  std::uint32_t height = 0;
  std::size_t seen = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> dfs{{root_id, 1}};
  while (!dfs.empty()) {
    const auto [id, depth] = dfs.back();
    dfs.pop_back();
    ++seen;
    height = std::max(height, depth);
    for (std::uint32_t k = 0; k < nodes[id].child_count; ++k)
      dfs.emplace_back(child_ids[nodes[id].child_offset + k], depth + 1);
  }
  if (seen != nodes.size()) fail("forest must be a single tree");

  FactForest out;
  out.monoid_ = &monoid;
  out.length_ = length;
  out.root_ = root_id;
  out.height_ = height;
  out.nodes_ = std::move(nodes);
  out.child_ids_ = std::move(child_ids);
  return out;
}

std::uint32_t FactForest::child_covering(std::uint32_t id,
                                         std::uint32_t pos) const {
  const Node& nd = nodes_[id];
  const std::uint32_t* first = child_ids_.data() + nd.child_offset;
  const std::uint32_t* last = first + nd.child_count;
  const std::uint32_t* it = std::upper_bound(
      first, last, pos, [this](std::uint32_t p, std::uint32_t cid) {
        return p < nodes_[cid].begin;
      });
  return *(it - 1);
}

ElemId FactForest::eval_suffix(std::uint32_t id, std::uint32_t from) const {
  std::vector<ElemId> rights;
  std::uint32_t cur = id;
  while (nodes_[cur].begin != from) {
    const Node& nd = nodes_[cur];
    const std::uint32_t c = child_covering(cur, from);
    const std::uint32_t pos = nodes_[c].pos_in_parent;
    if (pos + 1 < nd.child_count) {
      // Idempotent: any run of later siblings multiplies to the shared value.
      rights.push_back(nd.idempotent_group
                           ? nd.value
                           : nodes_[child(cur, pos + 1)].value);
    }
    cur = c;
  }
  ElemId result = nodes_[cur].value;
  while (!rights.empty()) {
    result = monoid_->multiply(result, rights.back());
    rights.pop_back();
  }
  return result;
}

ElemId FactForest::eval_prefix(std::uint32_t id, std::uint32_t to) const {
  ElemId acc = monoid_->identity_id();
  std::uint32_t cur = id;
  while (nodes_[cur].end != to) {
    const Node& nd = nodes_[cur];
    const std::uint32_t c = child_covering(cur, to - 1);
    const std::uint32_t pos = nodes_[c].pos_in_parent;
    if (pos > 0) {
      acc = monoid_->multiply(
          acc, nd.idempotent_group ? nd.value : nodes_[child(cur, 0)].value);
    }
    cur = c;
  }
  return monoid_->multiply(acc, nodes_[cur].value);
}

ElemId FactForest::range_eval(std::uint32_t i, std::uint32_t j) const {
  if (i < 1 || j > length_ || i > j + 1)
    throw std::out_of_range("range_eval indices outside 1..length");
  if (j + 1 == i) return monoid_->identity_id();
  const std::uint32_t lo = i;
  const std::uint32_t hi = j + 1;  // half-open
  std::uint32_t cur = root_;
  while (nodes_[cur].child_count != 0) {
    const std::uint32_t c = child_covering(cur, lo);
    if (nodes_[c].end < hi) break;
    cur = c;
  }
  const Node& nd = nodes_[cur];
  if (nd.child_count == 0) return nd.value;
  const std::uint32_t ci = child_covering(cur, lo);
  const std::uint32_t cj = child_covering(cur, hi - 1);
  ElemId result = eval_suffix(ci, lo);
  if (nodes_[cj].pos_in_parent > nodes_[ci].pos_in_parent + 1 &&
      nd.idempotent_group) {
    // All strict middles carry the node's idempotent value.
    result = monoid_->multiply(result, nd.value);
  }
  return monoid_->multiply(result, eval_prefix(cj, hi));
}

namespace {

// Shared node store while a forest is being assembled; leaves are node ids
// 0..n-1 for positions 1..n.
class ForestBuilder {
 public:
  ForestBuilder(std::string_view word, const TransitionMonoid& monoid)
      : word_(word), monoid_(&monoid) {
    nodes_.reserve(word.size() * 2);
    for (std::uint32_t pos = 1; pos <= word.size(); ++pos) {
      FactForest::Node nd;
      nd.begin = pos;
      nd.end = pos + 1;
      nd.value = monoid.letter_id(word[pos - 1]);
      nodes_.push_back(nd);
    }
  }

  const TransitionMonoid& monoid() const { return *monoid_; }
  ElemId value(std::uint32_t id) const { return nodes_[id].value; }

  std::uint32_t binary(std::uint32_t left, std::uint32_t right) {
    FactForest::Node nd;
    nd.begin = nodes_[left].begin;
    nd.end = nodes_[right].end;
    nd.value = monoid_->multiply(nodes_[left].value, nodes_[right].value);
    nd.child_offset = static_cast<std::uint32_t>(child_ids_.size());
    nd.child_count = 2;
    child_ids_.push_back(left);
    child_ids_.push_back(right);
    nodes_.push_back(nd);
    return static_cast<std::uint32_t>(nodes_.size() - 1);
  }

  std::uint32_t wide(const std::vector<std::uint32_t>& ids, std::size_t lo,
                     std::size_t hi) {
    FactForest::Node nd;
    nd.begin = nodes_[ids[lo]].begin;
    nd.end = nodes_[ids[hi - 1]].end;
    nd.value = nodes_[ids[lo]].value;
    nd.child_offset = static_cast<std::uint32_t>(child_ids_.size());
    nd.child_count = static_cast<std::uint32_t>(hi - lo);
    nd.idempotent_group = true;
    child_ids_.insert(child_ids_.end(), ids.begin() + lo, ids.begin() + hi);
    nodes_.push_back(nd);
    return static_cast<std::uint32_t>(nodes_.size() - 1);
  }

  // Balanced pairwise fold: height grows as ceil(log2 n).
  std::uint32_t fold_binary(std::vector<std::uint32_t> ids) {
    while (ids.size() > 1) {
      std::vector<std::uint32_t> next;
      next.reserve(ids.size() / 2 + 1);
      for (std::size_t k = 0; k + 1 < ids.size(); k += 2)
        next.push_back(binary(ids[k], ids[k + 1]));
      if (ids.size() % 2 != 0) next.push_back(ids.back());
      ids.swap(next);
    }
    return ids[0];
  }

  FactForest finish(std::uint32_t root) {
    return FactForest::from_parts(*monoid_, word_, std::move(nodes_),
                                  std::move(child_ids_), root);
  }

 private:
  std::string_view word_;
  const TransitionMonoid* monoid_;
  std::vector<FactForest::Node> nodes_;
  std::vector<std::uint32_t> child_ids_;
};

constexpr int kMaxGlueDepth = 200;

// Builds a forest of height at most 3 * monoid size by gluing along the
// ideal structure of the monoid: runs of one idempotent collapse into wide
// nodes, products are grouped until they reach the ideal of the whole
// range, and repeated boundary profiles inside one group give further wide
// nodes. Every step only emits binary or wide nodes, so any fallback stays
// correct and merely costs height.
class AwareBuilder {
 public:
  AwareBuilder(ForestBuilder& builder)
      : builder_(builder),
        monoid_(builder.monoid()),
        green_(builder.monoid()),
        idempotent_memo_(builder.monoid().size(), -1) {}

  std::uint32_t glue(std::vector<std::uint32_t> units, int depth) {
    if (units.size() == 1) return units[0];
    if (units.size() == 2) return builder_.binary(units[0], units[1]);
    if (depth > kMaxGlueDepth) return builder_.fold_binary(std::move(units));

    std::vector<std::uint32_t> compact = compress_runs(units);
    if (compact.size() == 1) return compact[0];
    if (compact.size() == 2) return builder_.binary(compact[0], compact[1]);

    // Peel trailing units until the prefix splits into at least two blocks
    // whose products reach the ideal of the whole prefix.
    std::vector<std::uint32_t> peeled;
    const std::size_t peel_cap =
        std::min<std::size_t>(monoid_.size() + 2, 64);
    std::vector<std::size_t> closes;
    bool fold = false;
    while (true) {
      if (compact.size() <= 2) break;
      closes = close_positions(compact);
      if (closes.size() >= 2) break;
      if (peeled.size() >= peel_cap) {
        fold = true;
        break;
      }
      peeled.push_back(compact.back());
      compact.pop_back();
    }

    std::uint32_t core;
    if (fold) {
      core = builder_.fold_binary(std::move(compact));
    } else if (compact.size() == 1) {
      core = compact[0];
    } else if (compact.size() == 2) {
      core = builder_.binary(compact[0], compact[1]);
    } else {
      std::vector<std::uint32_t> blocks;
      blocks.reserve(closes.size());
      std::size_t lo = 0;
      for (std::size_t hi : closes) {
        if (hi - lo == 1) {
          blocks.push_back(compact[lo]);
        } else {
          std::vector<std::uint32_t> head(compact.begin() + lo,
                                          compact.begin() + hi - 1);
          blocks.push_back(builder_.binary(glue(std::move(head), depth + 1),
                                           compact[hi - 1]));
        }
        lo = hi;
      }
      core = smooth_glue(std::move(blocks), depth + 1);
    }
    for (auto it = peeled.rbegin(); it != peeled.rend(); ++it)
      core = builder_.binary(core, *it);
    return core;
  }

 private:
  bool idempotent(ElemId v) {
    if (idempotent_memo_[v] < 0)
      idempotent_memo_[v] = monoid_.multiply(v, v) == v ? 1 : 0;
    return idempotent_memo_[v] == 1;
  }

  std::vector<std::uint32_t> compress_runs(
      const std::vector<std::uint32_t>& units) {
    std::vector<std::uint32_t> out;
    out.reserve(units.size());
    std::size_t k = 0;
    while (k < units.size()) {
      const ElemId v = builder_.value(units[k]);
      std::size_t end = k + 1;
      if (idempotent(v))
        while (end < units.size() && builder_.value(units[end]) == v) ++end;
      if (end - k >= 3)
        out.push_back(builder_.wide(units, k, end));
      else if (end - k == 2)
        out.push_back(builder_.binary(units[k], units[k + 1]));
      else
        out.push_back(units[k]);
      k = end;
    }
    return out;
  }

  // Positions after which a restarted running product reaches the two-sided
  // ideal class of the whole sequence; a trailing remainder joins the last
  // block (its product stays inside the class).
  std::vector<std::size_t> close_positions(
      const std::vector<std::uint32_t>& units) {
    ElemId total = monoid_.identity_id();
    for (std::uint32_t id : units)
      total = monoid_.multiply(total, builder_.value(id));
    const std::uint32_t target = green_.j_class(total);
    std::vector<std::size_t> closes;
    ElemId running = monoid_.identity_id();
    for (std::size_t k = 0; k < units.size(); ++k) {
      running = monoid_.multiply(running, builder_.value(units[k]));
      if (green_.j_class(running) == target) {
        closes.push_back(k + 1);
        running = monoid_.identity_id();
      }
    }
    if (closes.empty())
      closes.push_back(units.size());  // cannot happen: the full product closes
    else if (closes.back() != units.size())
      closes.back() = units.size();
    return closes;
  }

  // All infix products of `blocks` share one two-sided ideal class.
  std::uint32_t smooth_glue(std::vector<std::uint32_t> blocks, int depth) {
    const std::size_t s = blocks.size();
    if (s == 1) return blocks[0];
    if (s == 2) return builder_.binary(blocks[0], blocks[1]);
    if (depth > kMaxGlueDepth) return builder_.fold_binary(std::move(blocks));
    std::vector<ElemId> prefix(s + 1), suffix(s + 1);
    prefix[0] = monoid_.identity_id();
    for (std::size_t k = 0; k < s; ++k)
      prefix[k + 1] = monoid_.multiply(prefix[k], builder_.value(blocks[k]));
    suffix[s] = monoid_.identity_id();
    for (std::size_t k = s; k-- > 0;)
      suffix[k] = monoid_.multiply(builder_.value(blocks[k]), suffix[k + 1]);
    // Boundary profile of the cut before block c.
    std::vector<std::uint64_t> profile(s);
    for (std::size_t c = 1; c < s; ++c)
      profile[c] = (std::uint64_t{green_.l_class(prefix[c])} << 32) |
                   green_.r_class(suffix[c]);
    return smooth_range(blocks, profile, 0, s, depth);
  }

  std::uint32_t smooth_range(const std::vector<std::uint32_t>& blocks,
                             const std::vector<std::uint64_t>& profile,
                             std::size_t lo, std::size_t hi, int depth) {
    const std::size_t count = hi - lo;
    if (count == 1) return blocks[lo];
    if (count == 2) return builder_.binary(blocks[lo], blocks[lo + 1]);
    if (depth > kMaxGlueDepth)
      return builder_.fold_binary(
          std::vector<std::uint32_t>(blocks.begin() + lo, blocks.begin() + hi));
    std::unordered_map<std::uint64_t, std::size_t> freq;
    for (std::size_t c = lo + 1; c < hi; ++c) ++freq[profile[c]];
    std::uint64_t best_value = 0;
    std::size_t best_count = 0;
    for (std::size_t c = lo + 1; c < hi; ++c) {
      const std::size_t f = freq[profile[c]];
      if (f > best_count) {
        best_count = f;
        best_value = profile[c];
      }
    }
    std::vector<std::size_t> cuts;
    cuts.reserve(best_count);
    for (std::size_t c = lo + 1; c < hi; ++c)
      if (profile[c] == best_value) cuts.push_back(c);
    if (cuts.size() == 1)
      return builder_.binary(smooth_range(blocks, profile, lo, cuts[0], depth + 1),
                             smooth_range(blocks, profile, cuts[0], hi, depth + 1));
    std::vector<std::uint32_t> pieces;
    pieces.reserve(cuts.size() + 1);
    std::size_t at = lo;
    for (std::size_t c : cuts) {
      pieces.push_back(smooth_range(blocks, profile, at, c, depth + 1));
      at = c;
    }
    pieces.push_back(smooth_range(blocks, profile, at, hi, depth + 1));
    // The pieces strictly between two equal-profile cuts multiply within one
    // group; glue them by repeated partial products. The end pieces join in
    // when their values lie in the same group, else they attach by binaries.
    if (one_group(pieces)) return group_glue(std::move(pieces), depth + 1);
    std::uint32_t middle;
    if (pieces.size() == 3) {
      middle = pieces[1];
    } else {
      std::vector<std::uint32_t> inner(pieces.begin() + 1, pieces.end() - 1);
      middle = group_glue(std::move(inner), depth + 1);
    }
    return builder_.binary(pieces.front(),
                           builder_.binary(middle, pieces.back()));
  }

  // True when every value lies in one H-class that contains an idempotent;
  // such a class is closed under products, so partial products stay inside.
  bool one_group(const std::vector<std::uint32_t>& pieces) {
    const std::uint32_t h_home = green_.h_class(builder_.value(pieces[0]));
    for (std::uint32_t id : pieces)
      if (green_.h_class(builder_.value(id)) != h_home) return false;
    return green_.group_identity(h_home).has_value();
  }

  // Every infix product of `pieces` lies in one group H-class.
  std::uint32_t group_glue(std::vector<std::uint32_t> pieces, int depth) {
    const std::size_t r = pieces.size();
    if (r == 1) return pieces[0];
    if (r == 2) return builder_.binary(pieces[0], pieces[1]);
    if (depth > kMaxGlueDepth) return builder_.fold_binary(std::move(pieces));
    std::vector<ElemId> partial(r);
    ElemId acc = builder_.value(pieces[0]);
    partial[0] = acc;
    const std::uint32_t h_home = green_.h_class(acc);
    bool uniform = true;
    for (std::size_t k = 1; k < r; ++k) {
      acc = monoid_.multiply(acc, builder_.value(pieces[k]));
      partial[k] = acc;
      if (green_.h_class(acc) != h_home) uniform = false;
      if (green_.h_class(builder_.value(pieces[k])) != h_home) uniform = false;
    }
    const std::optional<ElemId> identity = green_.group_identity(h_home);
    if (!uniform || !identity.has_value())
      return builder_.fold_binary(std::move(pieces));
    return group_range(pieces, partial, *identity, 0, r, depth);
  }

  std::uint32_t group_range(const std::vector<std::uint32_t>& pieces,
                            const std::vector<ElemId>& partial,
                            ElemId group_e, std::size_t lo, std::size_t hi,
                            int depth) {
    const std::size_t count = hi - lo;
    if (count == 1) return pieces[lo];
    if (count == 2) return builder_.binary(pieces[lo], pieces[lo + 1]);
    if (depth > kMaxGlueDepth)
      return builder_.fold_binary(
          std::vector<std::uint32_t>(pieces.begin() + lo, pieces.begin() + hi));
    // Cut after piece k when the global partial product repeats: between two
    // repeats the product cancels to the group identity.
    std::unordered_map<std::uint32_t, std::size_t> freq;
    for (std::size_t k = lo; k + 1 < hi; ++k) ++freq[partial[k]];
    ElemId best_value = 0;
    std::size_t best_count = 0;
    for (std::size_t k = lo; k + 1 < hi; ++k) {
      const std::size_t f = freq[partial[k]];
      if (f > best_count) {
        best_count = f;
        best_value = partial[k];
      }
    }
    std::vector<std::size_t> marks;
    marks.reserve(best_count);
    for (std::size_t k = lo; k + 1 < hi; ++k)
      if (partial[k] == best_value) marks.push_back(k + 1);
    if (marks.size() == 1)
      return builder_.binary(
          group_range(pieces, partial, group_e, lo, marks[0], depth + 1),
          group_range(pieces, partial, group_e, marks[0], hi, depth + 1));
    std::vector<std::uint32_t> segments;
    segments.reserve(marks.size() + 1);
    std::size_t at = lo;
    for (std::size_t m : marks) {
      segments.push_back(group_range(pieces, partial, group_e, at, m, depth + 1));
      at = m;
    }
    segments.push_back(group_range(pieces, partial, group_e, at, hi, depth + 1));
    // Interior segments multiply to the group identity, an idempotent; an
    // end segment carrying that same value joins the flat middle as well.
    for (std::size_t k = 1; k + 1 < segments.size(); ++k)
      if (builder_.value(segments[k]) != group_e)
        return builder_.fold_binary(std::move(segments));
    std::size_t flat_lo = 1;
    std::size_t flat_hi = segments.size() - 1;
    if (builder_.value(segments.front()) == group_e) flat_lo = 0;
    if (builder_.value(segments.back()) == group_e) flat_hi = segments.size();
    const std::size_t span = flat_hi - flat_lo;
    std::uint32_t middle;
    if (span == 1) {
      middle = segments[flat_lo];
    } else if (span == 2) {
      middle = builder_.binary(segments[flat_lo], segments[flat_lo + 1]);
    } else {
      std::vector<std::uint32_t> flat(segments.begin() + flat_lo,
                                      segments.begin() + flat_hi);
      middle = builder_.wide(flat, 0, flat.size());
    }
    if (flat_lo == 1) middle = builder_.binary(segments.front(), middle);
    if (flat_hi + 1 == segments.size())
      middle = builder_.binary(middle, segments.back());
    return middle;
  }

  ForestBuilder& builder_;
  const TransitionMonoid& monoid_;
  GreenIndex green_;
  std::vector<int> idempotent_memo_;
};

}  // namespace

FactForest build_fact_forest(std::string_view word,
                             const TransitionMonoid& monoid,
                             bool balanced_fallback) {
  if (word.empty())
    throw std::invalid_argument("factorization forest requires a nonempty word");
  ForestBuilder builder(word, monoid);
  std::vector<std::uint32_t> leaves(word.size());
  std::iota(leaves.begin(), leaves.end(), 0);
  std::uint32_t root;
  if (balanced_fallback) {
    root = builder.fold_binary(std::move(leaves));
  } else {
    AwareBuilder aware(builder);
    root = aware.glue(std::move(leaves), 0);
  }
  return builder.finish(root);
}

std::vector<MaxLocalPower> maximal_local_powers(std::string_view word) {
  const std::size_t n = word.size();
  std::vector<MaxLocalPower> out;
  if (n < 2) return out;
  const LceIndex forward(word);
  const std::string reversed(word.rbegin(), word.rend());
  const LceIndex backward(reversed);

  // Periodic intervals keyed by extent, keeping the smallest period; the
  // ascending period loop makes the first insert the primitive one.
  std::unordered_map<std::uint64_t, std::uint32_t> runs;
  for (std::size_t period = 1; 2 * period <= n; ++period) {
    for (std::size_t anchor = period; anchor < n; anchor += period) {
      const std::size_t right = forward.common_prefix(anchor - period, anchor);
      const std::size_t left =
          backward.common_prefix(n - (anchor - period), n - anchor);
      if (left + right < period) continue;
      const std::uint64_t start = anchor - period - left;
      const std::uint64_t end = anchor + right;
      runs.emplace((start << 32) | end, static_cast<std::uint32_t>(period));
    }
  }
  for (const auto& [key, period] : runs) {
    const std::size_t start = key >> 32;
    const std::size_t end = key & 0xffffffffu;
    for (std::size_t at = start; at < start + period; ++at) {
      const std::size_t repeats = (end - at) / period;
      if (repeats < 2) continue;
      out.push_back(MaxLocalPower{static_cast<std::uint32_t>(at + 1),
                                  static_cast<std::uint32_t>(period),
                                  static_cast<std::uint32_t>(repeats)});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<std::uint64_t> fine_wilf_gcd_period(std::uint64_t length,
                                                  std::uint64_t p,
                                                  std::uint64_t q) {
  if (p == 0 || q == 0)
    throw std::invalid_argument("periods must be positive");
  const std::uint64_t g = std::gcd(p, q);
  if (length >= p + q - g) return g;
  return std::nullopt;
}

}  // namespace rewb
