#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rewb/monoid.hpp"
#include "rewb/syntax.hpp"

namespace rewb {

inline constexpr std::uint32_t kNoNode = 0xffffffffu;

// Binary encoding of a word: every letter becomes its code (width
// `bits_per_letter`, most significant bit first) followed by 0, and the
// whole word is terminated by an all-ones block. The terminator block
// occurs nowhere else, and among suffixes that start inside the letter
// area none is a prefix of another.
struct SanitizedInput {
  std::string text;                  // over {'0','1'}
  std::size_t bits_per_letter = 0;   // code width, ceil(log2 |alphabet|)
  std::size_t original_length = 0;
  std::vector<char> alphabet;        // sorted; code of a letter = its index

  std::size_t block_width() const { return bits_per_letter + 1; }
};

std::size_t sanitize_code_width(std::size_t alphabet_size);

SanitizedInput sanitize(std::string_view word, const std::vector<char>& alphabet);

// The letter-to-code rewriting applied to a plain regex: each letter node
// becomes the concatenation of its code bits followed by 0. Capture and
// reference nodes are rejected.
ExprPtr encode_letters(const ExprPtr& expr, const std::vector<char>& alphabet);

struct SanitizedExprs {
  ExprPtr a, b, c, d;
};

// Encodes all four parts; the last part is additionally concatenated with
// the all-ones terminator block, so its language only contains strings of
// length at least code width + 1.
SanitizedExprs sanitize_exprs(const ExprPtr& a, const ExprPtr& b,
                              const ExprPtr& c, const ExprPtr& d,
                              const std::vector<char>& alphabet);

// Suffix array with inverse and adjacent-suffix common prefix lengths.
struct SuffixArray {
  std::vector<std::uint32_t> order;  // order[k] = start of k-th smallest suffix
  std::vector<std::uint32_t> rank;   // rank[order[k]] == k
  std::vector<std::uint32_t> lcp;    // lcp[k] between order[k-1], order[k]
};

SuffixArray build_suffix_array(std::string_view text);

// Longest-common-extension queries over a fixed text, O(1) after an
// O(n log n) build (suffix array + adjacent common prefixes + block RMQ).
class LceIndex {
 public:
  LceIndex() = default;
  explicit LceIndex(std::string_view text);

  std::size_t text_length() const { return length_; }

  // Longest common prefix length of the suffixes starting at i and j
  // (0-based; i == length or j == length gives 0).
  std::size_t common_prefix(std::size_t i, std::size_t j) const;

 private:
  std::size_t length_ = 0;
  std::vector<std::uint32_t> rank_;
  std::vector<std::uint32_t> lcp_;
  std::vector<std::uint32_t> block_min_;      // per block of lcp_
  std::vector<std::uint32_t> sparse_;         // doubling table over block_min_
  std::size_t block_count_ = 0;
  std::vector<std::uint32_t> prefix_min_;     // within-block, from block start
  std::vector<std::uint32_t> suffix_min_;     // within-block, to block end

  std::uint32_t range_min(std::size_t lo, std::size_t hi) const;  // [lo, hi]
};

// Suffix tree without an end marker: suffixes that stop early end at
// marked nodes instead of leaves. Children are ordered by first edge
// letter; node 0 is the root.
struct SuffixTreeNode {
  std::uint32_t parent = kNoNode;
  std::uint32_t edge_begin = 0;    // label = text[edge_begin..edge_end), 0-based
  std::uint32_t edge_end = 0;
  std::uint32_t path_length = 0;   // label length from the root
  std::uint32_t first_child = kNoNode;
  std::uint32_t next_sibling = kNoNode;
  std::uint32_t subtree_nodes = 1;
  bool is_suffix = false;
};

class SuffixTree {
 public:
  const std::string& text() const { return text_; }
  std::size_t node_count() const { return nodes_.size(); }
  const SuffixTreeNode& node(std::uint32_t id) const { return nodes_[id]; }
  std::uint32_t root() const { return 0; }

  // 1-based start of the suffix equal to the path label; requires is_suffix.
  std::uint32_t occurrence_start(std::uint32_t id) const {
    return static_cast<std::uint32_t>(text_.size()) - nodes_[id].path_length + 1;
  }

  std::vector<std::uint32_t> children(std::uint32_t id) const;
  std::string path_label(std::uint32_t id) const;

  friend SuffixTree build_suffix_tree(std::string_view text);

 private:
  std::string text_;
  std::vector<SuffixTreeNode> nodes_;
};

SuffixTree build_suffix_tree(std::string_view text);

// Heavy-path decomposition of a suffix tree. The heavy child is the one
// with the most subtree nodes; ties go to the leftmost child, and a single
// child is always heavy. Paths partition the nodes.
struct HldInfo {
  std::vector<std::uint32_t> heavy_child;          // kNoNode at leaves
  std::vector<std::uint32_t> path_id;
  std::vector<std::uint32_t> path_pos;             // 0 at the path head
  std::vector<std::vector<std::uint32_t>> paths;   // head first
};

HldInfo heavy_light(const SuffixTree& tree);

// Factorization forest over a word and a transition monoid. Leaves carry
// letter values; a binary node multiplies its two children; a wider node
// requires every child to carry the same idempotent value, which is also
// the node's value. Intervals are 1-based half-open.
class FactForest {
 public:
  struct Node {
    std::uint32_t begin = 0;   // [begin, end)
    std::uint32_t end = 0;
    ElemId value = 0;
    std::uint32_t parent = kNoNode;
    std::uint32_t pos_in_parent = 0;
    std::uint32_t child_offset = 0;
    std::uint32_t child_count = 0;   // 0 for leaves
    bool idempotent_group = false;   // built by the all-equal-idempotent rule
  };

  FactForest() = default;

  // Validates the structural rules and the value of every node against the
  // word; throws std::invalid_argument on any violation.
  static FactForest from_parts(const TransitionMonoid& monoid,
                               std::string_view word, std::vector<Node> nodes,
                               std::vector<std::uint32_t> child_ids,
                               std::uint32_t root_id);

  const TransitionMonoid& monoid() const { return *monoid_; }
  std::uint32_t length() const { return length_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::uint32_t root_id() const { return root_; }
  const Node& node(std::uint32_t id) const { return nodes_[id]; }
  std::uint32_t child(std::uint32_t id, std::uint32_t index) const {
    return child_ids_[nodes_[id].child_offset + index];
  }
  // Nodes on the longest root-to-leaf path; a one-letter word has height 1.
  std::uint32_t height() const { return height_; }

  // Value of w[i..j], both ends 1-based and inclusive; j == i-1 gives the
  // identity. Out-of-range indices throw std::out_of_range.
  ElemId range_eval(std::uint32_t i, std::uint32_t j) const;

  const BoolMatrix& range_matrix(std::uint32_t i, std::uint32_t j) const {
    return monoid_->matrix(range_eval(i, j));
  }

 private:
  const TransitionMonoid* monoid_ = nullptr;
  std::uint32_t length_ = 0;
  std::uint32_t root_ = 0;
  std::uint32_t height_ = 0;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> child_ids_;

  ElemId eval_suffix(std::uint32_t id, std::uint32_t from) const;
  ElemId eval_prefix(std::uint32_t id, std::uint32_t to) const;
  std::uint32_t child_covering(std::uint32_t id, std::uint32_t pos) const;
};

// Monoid-guided construction bounds the height by 3 * monoid size; the
// balanced fallback bounds it by ceil(log2 n) + 1 instead.
FactForest build_fact_forest(std::string_view word, const TransitionMonoid& monoid,
                             bool balanced_fallback = false);

// w[start .. start + root_length * exponent) equals the exponent-fold
// repeat of the primitive root w[start .. start + root_length), and the
// repeat extends by no full root copy to either side. 1-based.
struct MaxLocalPower {
  std::uint32_t start = 0;
  std::uint32_t root_length = 0;
  std::uint32_t exponent = 0;

  auto operator<=>(const MaxLocalPower&) const = default;
};

std::vector<MaxLocalPower> maximal_local_powers(std::string_view word);

// gcd(p, q) when a word of the given length with periods p and q must also
// have period gcd(p, q), i.e. when length >= p + q - gcd(p, q).
std::optional<std::uint64_t> fine_wilf_gcd_period(std::uint64_t length,
                                                  std::uint64_t p,
                                                  std::uint64_t q);

}  // namespace rewb
