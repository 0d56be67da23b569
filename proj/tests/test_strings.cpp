#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rewb/automata.hpp"
#include "rewb/monoid.hpp"
#include "rewb/strings.hpp"
#include "rewb/syntax.hpp"
#include "support.hpp"

using namespace rewb;

namespace {

ExprPtr rx(const std::string& text, const std::string& alphabet) {
  return parse_regex(text, std::set<char>(alphabet.begin(), alphabet.end()));
}

// Four-state machine counting a's, saturating at three; accepts exactly two.
EpsNfa counter_machine() {
  EpsNfa nfa;
  nfa.alphabet = "ab";
  nfa.state_count = 4;
  nfa.letter_edges.resize(4);
  nfa.eps_edges.resize(4);
  nfa.letter_edges[0] = {{'a', 1}, {'b', 0}};
  nfa.letter_edges[1] = {{'a', 2}, {'b', 1}};
  nfa.letter_edges[2] = {{'a', 3}, {'b', 2}};
  nfa.letter_edges[3] = {{'a', 3}, {'b', 3}};
  nfa.initial = 0;
  nfa.finals = {2};
  return nfa;
}

// One-state machine for a*: b has no edge, so its matrix is the zero element.
EpsNfa a_star_machine() {
  EpsNfa nfa;
  nfa.alphabet = "ab";
  nfa.state_count = 1;
  nfa.letter_edges.resize(1);
  nfa.eps_edges.resize(1);
  nfa.letter_edges[0] = {{'a', 0}};
  nfa.initial = 0;
  nfa.finals = {0};
  return nfa;
}

// The 3-state chain machine for b*ab*ab*.
EpsNfa chain_machine() {
  EpsNfa nfa;
  nfa.alphabet = "ab";
  nfa.state_count = 3;
  nfa.letter_edges.resize(3);
  nfa.eps_edges.resize(3);
  nfa.letter_edges[0] = {{'a', 1}, {'b', 0}};
  nfa.letter_edges[1] = {{'a', 2}, {'b', 1}};
  nfa.letter_edges[2] = {{'b', 2}};
  nfa.initial = 0;
  nfa.finals = {2};
  return nfa;
}

std::string repeat(std::string_view unit, std::size_t copies) {
  std::string out;
  out.reserve(unit.size() * copies);
  for (std::size_t i = 0; i < copies; ++i) out += unit;
  return out;
}

// Structural checks shared by the exhaustive suffix tree sweep; label-level
// checks cost O(n^2) per word and run only when `deep` is set.
void verify_suffix_tree(const SuffixTree& tree, std::string_view w,
                        bool deep) {
  const std::size_t n = w.size();
  REQUIRE(tree.node_count() >= 1);
  const auto& root = tree.node(tree.root());
  CHECK(root.parent == kNoNode);
  CHECK(root.path_length == 0);
  CHECK_FALSE(root.is_suffix);

  std::size_t suffix_nodes = 0;
  std::size_t subtree_sum_children = 0;
  for (std::uint32_t id = 0; id < tree.node_count(); ++id) {
    const auto& node = tree.node(id);
    const auto kids = tree.children(id);
    if (id != tree.root()) {
      REQUIRE(node.parent < tree.node_count());
      const auto& up = tree.node(node.parent);
      CHECK(node.edge_begin < node.edge_end);
      CHECK(node.edge_end <= n);
      CHECK(node.path_length ==
            up.path_length + (node.edge_end - node.edge_begin));
      // Every node is the root, a branching node, or a suffix end.
      CHECK((kids.size() >= 2 || node.is_suffix));
    }
    std::uint32_t from_children = 1;
    std::set<char> first_letters;
    for (std::uint32_t kid : kids) {
      CHECK(tree.node(kid).parent == id);
      from_children += tree.node(kid).subtree_nodes;
      char head = tree.text()[tree.node(kid).edge_begin];
      CHECK(first_letters.insert(head).second);  // distinct branch letters
    }
    CHECK(node.subtree_nodes == from_children);
    subtree_sum_children += kids.size();
    if (node.is_suffix) ++suffix_nodes;
  }
  CHECK(subtree_sum_children + 1 == tree.node_count());
  CHECK(suffix_nodes == n);

  // The suffix nodes spell out exactly the nonempty suffixes.
  std::set<std::string> expected;
  for (std::size_t i = 0; i < n; ++i) expected.insert(std::string(w.substr(i)));
  std::set<std::string> found;
  for (std::uint32_t id = 0; id < tree.node_count(); ++id)
    if (tree.node(id).is_suffix) {
      std::string label = tree.path_label(id);
      CHECK(tree.occurrence_start(id) == n - label.size() + 1);
      found.insert(std::move(label));
    }
  CHECK(found == expected);

  if (!deep) return;
  for (std::uint32_t id = 1; id < tree.node_count(); ++id) {
    const auto& node = tree.node(id);
    std::string label = tree.path_label(id);
    std::string edge(tree.text().substr(
        node.edge_begin, node.edge_end - node.edge_begin));
    CHECK(label == tree.path_label(node.parent) + edge);
    if (node.is_suffix)
      CHECK(label == w.substr(tree.occurrence_start(id) - 1));
  }
}

void verify_heavy_light(const SuffixTree& tree) {
  const auto hld = heavy_light(tree);
  const std::size_t n = tree.node_count();
  REQUIRE(hld.heavy_child.size() == n);
  REQUIRE(hld.path_id.size() == n);
  REQUIRE(hld.path_pos.size() == n);

  for (std::uint32_t id = 0; id < n; ++id) {
    const auto kids = tree.children(id);
    if (kids.empty()) {
      CHECK(hld.heavy_child[id] == kNoNode);
      continue;
    }
    std::uint32_t best = kids[0];
    for (std::size_t k = 1; k < kids.size(); ++k)
      if (tree.node(kids[k]).subtree_nodes > tree.node(best).subtree_nodes)
        best = kids[k];
    CHECK(hld.heavy_child[id] == best);
  }

  std::vector<int> seen(n, 0);
  for (std::size_t p = 0; p < hld.paths.size(); ++p) {
    const auto& path = hld.paths[p];
    REQUIRE_FALSE(path.empty());
    const std::uint32_t head = path.front();
    CHECK((head == tree.root() ||
           hld.heavy_child[tree.node(head).parent] != head));
    for (std::size_t k = 0; k < path.size(); ++k) {
      CHECK(hld.path_id[path[k]] == p);
      CHECK(hld.path_pos[path[k]] == k);
      ++seen[path[k]];
      if (k + 1 < path.size())
        CHECK(hld.heavy_child[path[k]] == path[k + 1]);
    }
    CHECK(hld.heavy_child[path.back()] == kNoNode);
  }
  for (std::uint32_t id = 0; id < n; ++id) CHECK(seen[id] == 1);

  // Any root-to-node walk crosses O(log n) light edges.
  const int light_cap = std::bit_width(n) + 1;
  for (std::uint32_t id = 0; id < n; ++id) {
    int light = 0;
    std::uint32_t at = id;
    while (at != tree.root()) {
      const std::uint32_t up = tree.node(at).parent;
      if (hld.heavy_child[up] != at) ++light;
      at = up;
    }
    CHECK(light <= light_cap);
  }
}

// Node description used to assemble forests by hand in tests.
struct Proto {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  ElemId value = 0;
  std::vector<std::uint32_t> kids;
  bool wide = false;
};

FactForest assemble(const TransitionMonoid& monoid, std::string_view word,
                    const std::vector<Proto>& protos, std::uint32_t root) {
  std::vector<FactForest::Node> nodes(protos.size());
  std::vector<std::uint32_t> child_ids;
  for (std::size_t id = 0; id < protos.size(); ++id) {
    nodes[id].begin = protos[id].begin;
    nodes[id].end = protos[id].end;
    nodes[id].value = protos[id].value;
    nodes[id].idempotent_group = protos[id].wide;
  }
  for (std::size_t id = 0; id < protos.size(); ++id) {
    nodes[id].child_offset = static_cast<std::uint32_t>(child_ids.size());
    nodes[id].child_count = static_cast<std::uint32_t>(protos[id].kids.size());
    for (std::size_t k = 0; k < protos[id].kids.size(); ++k) {
      const std::uint32_t kid = protos[id].kids[k];
      nodes[kid].parent = static_cast<std::uint32_t>(id);
      nodes[kid].pos_in_parent = static_cast<std::uint32_t>(k);
      child_ids.push_back(kid);
    }
  }
  return FactForest::from_parts(monoid, word, std::move(nodes),
                                std::move(child_ids), root);
}

// Leaves for word positions 1..n; letter values looked up in the monoid.
std::vector<Proto> leaf_protos(const TransitionMonoid& monoid,
                               std::string_view word) {
  std::vector<Proto> protos(word.size());
  for (std::size_t i = 0; i < word.size(); ++i) {
    protos[i].begin = static_cast<std::uint32_t>(i + 1);
    protos[i].end = static_cast<std::uint32_t>(i + 2);
    protos[i].value = monoid.letter_id(word[i]);
  }
  return protos;
}

void check_forest_ranges(const FactForest& forest, std::string_view w,
                         rewbtest::Rng& rng, int samples) {
  const TransitionMonoid& monoid = forest.monoid();
  const std::uint32_t n = forest.length();
  REQUIRE(n == w.size());
  CHECK(forest.node(forest.root_id()).value == monoid.delta_of(w));
  auto check_one = [&](std::uint32_t i, std::uint32_t j) {
    const ElemId direct = monoid.delta_of(w.substr(i - 1, j - i + 1));
    CHECK(forest.range_eval(i, j) == direct);
  };
  if (n <= 40) {
    for (std::uint32_t i = 1; i <= n; ++i)
      for (std::uint32_t j = i - 1; j <= n; ++j) check_one(i, j);
  } else {
    for (int s = 0; s < samples; ++s) {
      const auto i = std::uint32_t(rng.uniform(1, int(n)));
      const auto j = std::uint32_t(rng.uniform(int(i) - 1, int(n)));
      check_one(i, j);
    }
    check_one(1, n);
  }
}

std::vector<MaxLocalPower> brute_local_powers(std::string_view w) {
  std::vector<MaxLocalPower> out;
  const std::size_t n = w.size();
  for (std::size_t start = 0; start < n; ++start) {
    for (std::size_t period = 1; start + 2 * period <= n; ++period) {
      const std::string_view root = w.substr(start, period);
      bool primitive = true;
      for (std::size_t d = 1; primitive && d < period; ++d) {
        if (period % d != 0) continue;
        bool repeats = true;
        for (std::size_t k = d; repeats && k < period; ++k)
          repeats = root[k] == root[k - d];
        if (repeats) primitive = false;
      }
      if (!primitive) continue;
      if (start >= period && w.substr(start - period, period) == root)
        continue;  // a full copy extends the power to the left
      std::size_t reps = 1;
      while (start + (reps + 1) * period <= n &&
             w.substr(start + reps * period, period) == root)
        ++reps;
      if (reps >= 2)
        out.push_back({static_cast<std::uint32_t>(start + 1),
                       static_cast<std::uint32_t>(period),
                       static_cast<std::uint32_t>(reps)});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct UnionFind {
  std::vector<std::uint32_t> parent;

  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0u);
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) { parent[find(a)] = find(b); }
};

bool brute_has_period(std::string_view w, std::size_t p) {
  for (std::size_t i = 0; i + p < w.size(); ++i)
    if (w[i] != w[i + p]) return false;
  return true;
}

}  // namespace

TEST_CASE("letter blocks and terminator of the binary encoding") {
  const std::vector<char> abc{'a', 'b', 'c'};
  auto s = sanitize("abacaba", abc);
  CHECK(s.bits_per_letter == 2);
  CHECK(s.block_width() == 3);
  CHECK(s.original_length == 7);
  CHECK(s.text == "000010000100000010000111");

  CHECK(sanitize("", abc).text == "111");
  CHECK(sanitize("aa", {'a'}).text == "001");
  CHECK(sanitize("ab", {'a', 'b'}).text == "001011");
  CHECK(sanitize("ba", {'a', 'b'}).text == "100011");

  for (const char* word : {"", "c", "abc", "ccba", "aaaaa"}) {
    auto enc = sanitize(word, abc);
    CHECK(enc.text.size() ==
          enc.block_width() * (std::string_view(word).size() + 1));
  }

  CHECK(sanitize_code_width(0) == 0);
  CHECK(sanitize_code_width(1) == 0);
  CHECK(sanitize_code_width(2) == 1);
  CHECK(sanitize_code_width(3) == 2);
  CHECK(sanitize_code_width(4) == 2);
  CHECK(sanitize_code_width(5) == 3);
  CHECK(sanitize_code_width(8) == 3);
  CHECK(sanitize_code_width(9) == 4);

  CHECK_THROWS_AS(sanitize("ad", abc), std::invalid_argument);
  CHECK_THROWS_AS(sanitize("a", std::vector<char>{'b', 'a'}),
                  std::invalid_argument);
}

TEST_CASE("encoded suffixes are prefix-free away from the terminator") {
  const std::vector<char> abc{'a', 'b', 'c'};
  for (int len = 0; len <= 6; ++len) {
    for (const auto& w : rewbtest::strings_of_length("abc", len)) {
      const auto enc = sanitize(w, abc);
      const std::string& t = enc.text;
      const std::size_t limit = t.size() - enc.bits_per_letter;
      for (std::size_t p = 1; p <= limit; ++p)
        for (std::size_t q = p + 1; q <= limit; ++q) {
          const bool is_prefix =
              t.compare(p - 1, t.size() - q + 1, t, q - 1,
                        t.size() - q + 1) == 0;
          CHECK_FALSE(is_prefix);
        }
    }
  }
  // Inside the terminator the guard is needed: "1" prefixes "11".
  const std::string tail = sanitize("", abc).text;
  CHECK(tail.substr(2) == "1");
  CHECK(tail.substr(1, 1) == "1");
}

TEST_CASE("letter encoding of plain expressions") {
  const std::vector<char> abc{'a', 'b', 'c'};
  auto encoded = encode_letters(rx("(a+b)*(b+c)*", "abc"), abc);
  CHECK(format_expr(encoded) == "(000+010)*(010+100)*");

  CHECK(encode_letters(make_epsilon(), abc)->kind == ExprKind::Epsilon);
  CHECK(encode_letters(make_empty_set(), abc)->kind == ExprKind::EmptySet);
  CHECK_THROWS_AS(encode_letters(make_capture('x', make_letter('a')), abc),
                  std::invalid_argument);
  CHECK_THROWS_AS(encode_letters(make_backref('x'), abc),
                  std::invalid_argument);
  CHECK_THROWS_AS(encode_letters(make_letter('z'), abc),
                  std::invalid_argument);
}

TEST_CASE("encoded expressions accept exactly the encoded words") {
  const std::vector<char> ab{'a', 'b'};
  const ExprPtr eps = make_epsilon();
  rewbtest::EnumOptions enum_opt;

  std::vector<std::string> words;
  for (int len = 0; len <= 6; ++len)
    for (const auto& w : rewbtest::strings_of_length("ab", len))
      words.push_back(w);
  std::vector<std::string> encoded_words;
  encoded_words.reserve(words.size());
  for (const auto& w : words) encoded_words.push_back(sanitize(w, ab).text);

  for (int size = 1; size <= 4; ++size) {
    for (const auto& expr : rewbtest::exprs_of_size(size, enum_opt)) {
      auto parts = sanitize_exprs(eps, eps, eps, expr, ab);
      CHECK(expr_equal(parts.a, eps));
      for (std::size_t k = 0; k < words.size(); ++k) {
        const bool direct = rewbtest::dp_regex_match(expr, words[k]);
        const bool via_encoding =
            rewbtest::dp_regex_match(parts.d, encoded_words[k]);
        CHECK(direct == via_encoding);
      }
    }
  }

  // Random larger expressions, shorter words.
  rewbtest::Rng rng(20240817);
  rewbtest::GenOptions gen_opt;
  for (int round = 0; round < 100; ++round) {
    auto expr = rewbtest::random_expr(rng, rng.uniform(1, 8), gen_opt);
    auto parts = sanitize_exprs(eps, eps, eps, expr, ab);
    for (int len = 0; len <= 5; ++len)
      for (const auto& w : rewbtest::strings_of_length("ab", len)) {
        const bool direct = rewbtest::dp_regex_match(expr, w);
        const bool via_encoding =
            rewbtest::dp_regex_match(parts.d, sanitize(w, ab).text);
        CHECK(direct == via_encoding);
      }
  }

  // The terminator block is mandatory even for the empty word.
  auto star = sanitize_exprs(eps, eps, eps, rx("a*", "ab"), ab);
  CHECK(rewbtest::dp_regex_match(star.d, "11"));
  CHECK(rewbtest::dp_regex_match(star.d, "0011"));
  CHECK_FALSE(rewbtest::dp_regex_match(star.d, ""));
  CHECK_FALSE(rewbtest::dp_regex_match(star.d, "1011"));

  // The first three parts carry no terminator.
  auto all_parts = sanitize_exprs(rx("a", "ab"), rx("b", "ab"),
                                  rx("ab", "ab"), eps, ab);
  CHECK(rewbtest::dp_regex_match(all_parts.a, "00"));
  CHECK(rewbtest::dp_regex_match(all_parts.b, "10"));
  CHECK(rewbtest::dp_regex_match(all_parts.c, "0010"));
  CHECK(rewbtest::dp_regex_match(all_parts.d, "11"));
}

TEST_CASE("suffix array and extension queries match brute force") {
  auto brute_check = [](std::string_view w) {
    const std::size_t n = w.size();
    const auto sa = build_suffix_array(w);
    REQUIRE(sa.order.size() == n);
    REQUIRE(sa.rank.size() == n);
    REQUIRE(sa.lcp.size() == n);
    std::vector<std::uint32_t> expect(n);
    std::iota(expect.begin(), expect.end(), 0u);
    std::sort(expect.begin(), expect.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                return w.substr(a) < w.substr(b);
              });
    CHECK(sa.order == expect);
    for (std::size_t k = 0; k < n; ++k) CHECK(sa.rank[sa.order[k]] == k);
    if (n > 0) CHECK(sa.lcp[0] == 0);
    for (std::size_t k = 1; k < n; ++k) {
      const std::string_view a = w.substr(sa.order[k - 1]);
      const std::string_view b = w.substr(sa.order[k]);
      std::size_t common = 0;
      while (common < a.size() && common < b.size() &&
             a[common] == b[common])
        ++common;
      CHECK(sa.lcp[k] == common);
    }
  };

  for (int len = 0; len <= 8; ++len)
    for (const auto& w : rewbtest::strings_of_length("ab", len))
      brute_check(w);
  rewbtest::Rng rng(77001);
  for (int round = 0; round < 30; ++round)
    brute_check(rng.random_string("abc", rng.uniform(1, 60)));

  for (int round = 0; round < 20; ++round) {
    const std::string letters = round % 2 == 0 ? "ab" : "abc";
    const std::string w = rng.random_string(letters, rng.uniform(1, 120));
    const LceIndex lce(w);
    CHECK(lce.text_length() == w.size());
    for (std::size_t i = 0; i <= w.size(); ++i)
      for (std::size_t j = 0; j <= w.size(); ++j) {
        std::size_t common = 0;
        while (i + common < w.size() && j + common < w.size() &&
               w[i + common] == w[j + common])
          ++common;
        CHECK(lce.common_prefix(i, j) == common);
      }
  }
}

TEST_CASE("suffix tree of aabaababba") {
  const std::string w = "aabaababba";
  const auto tree = build_suffix_tree(w);
  CHECK(tree.node_count() == 15);

  std::set<std::string> internal_labels;
  std::set<std::pair<std::string, std::uint32_t>> suffix_entries;
  std::size_t leaves = 0;
  for (std::uint32_t id = 1; id < tree.node_count(); ++id) {
    const auto kids = tree.children(id);
    if (kids.empty()) ++leaves;
    if (tree.node(id).is_suffix)
      suffix_entries.insert({tree.path_label(id), tree.occurrence_start(id)});
    else
      internal_labels.insert(tree.path_label(id));
  }
  CHECK(leaves == 8);
  CHECK(internal_labels ==
        std::set<std::string>{"aaba", "ab", "aba", "b"});

  std::set<std::pair<std::string, std::uint32_t>> expected;
  for (std::size_t i = 0; i < w.size(); ++i)
    expected.insert({w.substr(i), static_cast<std::uint32_t>(i + 1)});
  CHECK(suffix_entries == expected);

  // The suffix nodes for "a" and "ba" sit on branching interior nodes.
  for (std::uint32_t id = 1; id < tree.node_count(); ++id) {
    const std::string label = tree.path_label(id);
    if (label == "a" || label == "ba") {
      CHECK(tree.node(id).is_suffix);
      CHECK(tree.children(id).size() == 2);
    }
  }

  verify_suffix_tree(tree, w, true);
}

TEST_CASE("suffix trees without end markers keep chains explicit") {
  const auto tree = build_suffix_tree("aa");
  REQUIRE(tree.node_count() == 3);
  const auto top = tree.children(tree.root());
  REQUIRE(top.size() == 1);
  const std::uint32_t mid = top[0];
  CHECK(tree.path_label(mid) == "a");
  CHECK(tree.node(mid).is_suffix);
  REQUIRE(tree.children(mid).size() == 1);
  const std::uint32_t deep = tree.children(mid)[0];
  CHECK(tree.path_label(deep) == "aa");
  CHECK(tree.node(deep).is_suffix);
  CHECK(tree.children(deep).empty());

  const auto abab = build_suffix_tree("abab");
  CHECK(abab.node_count() == 5);
  for (std::uint32_t id = 1; id < abab.node_count(); ++id)
    CHECK(abab.node(id).is_suffix);

  CHECK_THROWS_AS(build_suffix_tree(""), std::invalid_argument);
}

TEST_CASE("suffix tree invariants hold exhaustively") {
  for (int len = 1; len <= 12; ++len)
    for (const auto& w : rewbtest::strings_of_length("ab", len))
      verify_suffix_tree(build_suffix_tree(w), w, len <= 9);
  rewbtest::Rng rng(90210);
  for (int round = 0; round < 200; ++round) {
    const std::string w = rng.random_string("abc", rng.uniform(1, 40));
    verify_suffix_tree(build_suffix_tree(w), w, true);
  }
}

TEST_CASE("heavy path decomposition") {
  {
    const auto tree = build_suffix_tree("ab");
    const auto hld = heavy_light(tree);
    const auto kids = tree.children(tree.root());
    REQUIRE(kids.size() == 2);
    // Equal subtree sizes: the leftmost child wins the tie.
    CHECK(hld.heavy_child[tree.root()] == kids[0]);
    CHECK(hld.paths.size() == 2);
  }
  {
    const auto tree = build_suffix_tree("aa");
    const auto hld = heavy_light(tree);
    REQUIRE(hld.paths.size() == 1);
    CHECK(hld.paths[0].size() == 3);
    CHECK(hld.path_pos[hld.paths[0][0]] == 0);
    CHECK(hld.path_pos[hld.paths[0][2]] == 2);
  }
  for (int len = 1; len <= 10; ++len)
    for (const auto& w : rewbtest::strings_of_length("ab", len))
      verify_heavy_light(build_suffix_tree(w));
  rewbtest::Rng rng(5150);
  for (int round = 0; round < 100; ++round)
    verify_heavy_light(
        build_suffix_tree(rng.random_string("abc", rng.uniform(1, 50))));
}

TEST_CASE("a hand-built factorization forest validates and evaluates") {
  const std::string w = "aaababaabaaabbbbb";
  REQUIRE(w.size() == 17);
  const auto monoid = TransitionMonoid::build(counter_machine());
  const ElemId one = monoid.identity_id();
  const ElemId step1 = monoid.letter_id('a');
  const ElemId step2 = monoid.multiply(step1, step1);
  const ElemId step3 = monoid.multiply(step2, step1);

  std::vector<Proto> protos = leaf_protos(monoid, w);
  protos.push_back({1, 3, step2, {0, 1}, false});     // 17
  protos.push_back({3, 5, step1, {2, 3}, false});     // 18
  protos.push_back({6, 8, step1, {5, 6}, false});     // 19
  protos.push_back({5, 8, step2, {4, 19}, false});    // 20
  protos.push_back({9, 11, step1, {8, 9}, false});    // 21
  protos.push_back({11, 13, step2, {10, 11}, false}); // 22
  protos.push_back({1, 5, step3, {17, 18}, false});   // 23
  protos.push_back({5, 9, step3, {20, 7}, false});    // 24
  protos.push_back({9, 13, step3, {21, 22}, false});  // 25
  protos.push_back({14, 18, one, {13, 14, 15, 16}, true});  // 26
  protos.push_back({13, 18, one, {12, 26}, false});   // 27
  protos.push_back({1, 13, step3, {23, 24, 25}, true});     // 28
  protos.push_back({1, 18, step3, {28, 27}, false});  // 29

  const FactForest forest = assemble(monoid, w, protos, 29);
  CHECK(forest.node_count() == 30);
  CHECK(forest.length() == 17);
  CHECK(forest.height() == 6);
  CHECK(forest.node(forest.root_id()).value == monoid.delta_of(w));

  for (std::uint32_t i = 1; i <= 18; ++i)
    for (std::uint32_t j = i - 1; j <= 17; ++j) {
      const ElemId direct = monoid.delta_of(w.substr(i - 1, j - i + 1));
      CHECK(forest.range_eval(i, j) == direct);
      if ((i + j) % 5 == 0)
        CHECK(forest.range_matrix(i, j) == monoid.matrix(direct));
    }
  CHECK(forest.range_eval(4, 3) == one);

  CHECK_THROWS_AS(forest.range_eval(0, 1), std::out_of_range);
  CHECK_THROWS_AS(forest.range_eval(1, 18), std::out_of_range);
  CHECK_THROWS_AS(forest.range_eval(4, 2), std::out_of_range);
}

TEST_CASE("forest validation rejects malformed inputs") {
  const auto monoid = TransitionMonoid::build(counter_machine());
  const ElemId one = monoid.identity_id();
  const ElemId step1 = monoid.letter_id('a');
  const ElemId step2 = monoid.multiply(step1, step1);
  const ElemId step3 = monoid.multiply(step2, step1);

  const std::string w = "aab";
  auto base = leaf_protos(monoid, w);
  base.push_back({1, 3, step2, {0, 1}, false});                     // 3
  base.push_back({1, 4, monoid.multiply(step2, one), {3, 2}, false});  // 4
  CHECK(assemble(monoid, w, base, 4).height() == 3);

  {
    auto bad = base;
    bad[3].value = step3;  // wrong binary product
    CHECK_THROWS_AS(assemble(monoid, w, bad, 4), std::invalid_argument);
  }
  {
    auto bad = base;
    bad[0].value = one;  // wrong leaf value
    CHECK_THROWS_AS(assemble(monoid, w, bad, 4), std::invalid_argument);
  }
  {
    auto bad = base;
    bad[3].wide = true;  // two children must form a plain binary node
    CHECK_THROWS_AS(assemble(monoid, w, bad, 4), std::invalid_argument);
  }
  {
    // One-child nodes are never allowed.
    std::vector<Proto> unary = leaf_protos(monoid, "a");
    unary.push_back({1, 2, step1, {0}, false});
    CHECK_THROWS_AS(assemble(monoid, "a", unary, 1), std::invalid_argument);
  }
  {
    // A wide node needs an idempotent value.
    std::vector<Proto> protos = leaf_protos(monoid, "aaa");
    protos.push_back({1, 4, step1, {0, 1, 2}, true});
    CHECK_THROWS_AS(assemble(monoid, "aaa", protos, 3),
                    std::invalid_argument);
  }
  {
    // A wide node's children must carry the node's own value.
    std::vector<Proto> protos = leaf_protos(monoid, "bbb");
    protos.push_back({1, 4, step3, {0, 1, 2}, true});
    CHECK_THROWS_AS(assemble(monoid, "bbb", protos, 3),
                    std::invalid_argument);
  }
  {
    // Children must tile their parent's interval exactly once.
    auto bad = leaf_protos(monoid, w);
    bad.push_back({1, 3, step2, {0, 1}, false});                 // 3
    bad.push_back({2, 4, monoid.multiply(step1, one), {1, 2}, false});  // 4
    bad.push_back({1, 4, step2, {3, 4}, false});                 // 5
    CHECK_THROWS_AS(assemble(monoid, w, bad, 5), std::invalid_argument);
  }
  {
    auto bad = base;
    bad.push_back({1, 2, step1, {}, false});  // node attached to no parent
    CHECK_THROWS_AS(assemble(monoid, w, bad, 4), std::invalid_argument);
  }
  {
    // The root must cover the whole word.
    auto short_root = leaf_protos(monoid, w);
    short_root.push_back({1, 3, step2, {0, 1}, false});
    CHECK_THROWS_AS(assemble(monoid, w, short_root, 3),
                    std::invalid_argument);
  }
}

TEST_CASE("built forests evaluate every range correctly") {
  rewbtest::Rng rng(31337);
  const std::array<TransitionMonoid, 3> monoids{
      TransitionMonoid::build(counter_machine()),
      TransitionMonoid::build(a_star_machine()),
      TransitionMonoid::build(chain_machine())};

  for (const auto& monoid : monoids) {
    std::vector<std::string> words{
        "a",
        "ba",
        repeat("a", 137),
        repeat("ab", 80),
        repeat("aab", 50),
        rng.random_string("ab", 512)};
    for (const auto& w : words) {
      for (bool balanced : {false, true}) {
        const FactForest forest = build_fact_forest(w, monoid, balanced);
        CHECK(forest.length() == w.size());
        check_forest_ranges(forest, w, rng, 500);
        if (balanced) {
          CHECK(forest.height() <=
                std::uint32_t(std::bit_width(w.size() - 1)) + 1);
        } else {
          CHECK(forest.height() <= 3 * monoid.size());
        }
      }
    }
  }

  // Exhaustive over short binary words.
  const auto& counter = monoids[0];
  for (int len = 1; len <= 8; ++len)
    for (const auto& w : rewbtest::strings_of_length("ab", len)) {
      const FactForest forest = build_fact_forest(w, counter);
      check_forest_ranges(forest, w, rng, 0);
    }

  CHECK_THROWS_AS(build_fact_forest("", counter), std::invalid_argument);
  {
    const FactForest one_leaf = build_fact_forest("a", counter);
    CHECK(one_leaf.height() == 1);
    CHECK(one_leaf.node_count() == 1);
    CHECK(one_leaf.range_eval(1, 1) == counter.letter_id('a'));
    CHECK(one_leaf.range_eval(1, 0) == counter.identity_id());
  }
}

TEST_CASE("guided forests stay within three levels per element") {
  rewbtest::Rng rng(424242);
  const std::array<TransitionMonoid, 3> monoids{
      TransitionMonoid::build(counter_machine()),
      TransitionMonoid::build(a_star_machine()),
      TransitionMonoid::build(chain_machine())};

  auto adversaries = [&rng](std::size_t n) {
    return std::vector<std::string>{
        repeat("a", n),
        repeat("b", n),
        repeat("ab", n / 2),
        repeat("aab", n / 3),
        repeat("aabbab", n / 6),
        rng.random_string("ab", int(n))};
  };

  for (const auto& monoid : monoids) {
    const std::uint32_t bound = 3 * std::uint32_t(monoid.size());
    for (std::size_t n : {std::size_t{24}, std::size_t{997}, std::size_t{5000}})
      for (const auto& w : adversaries(n))
        CHECK(build_fact_forest(w, monoid).height() <= bound);
    for (int len = 1; len <= 30; ++len)
      CHECK(build_fact_forest(rng.random_string("ab", len), monoid).height()
            <= bound);
  }

  // Random regex monoids; also spot-check range evaluation on each.
  rewbtest::GenOptions gen_opt;
  for (int round = 0; round < 40; ++round) {
    auto expr = rewbtest::random_expr(rng, rng.uniform(2, 7), gen_opt);
    TransitionMonoid monoid;
    try {
      monoid = build_monoid(expr, "ab");
    } catch (const MonoidCapError&) {
      continue;
    }
    if (monoid.size() > 300) continue;
    const std::uint32_t bound = 3 * std::uint32_t(monoid.size());
    for (const auto& w : {rng.random_string("ab", 300), repeat("ab", 150),
                          repeat("a", 300)}) {
      const FactForest forest = build_fact_forest(w, monoid);
      CHECK(forest.height() <= bound);
      check_forest_ranges(forest, w, rng, 50);
    }
  }
}

TEST_CASE("maximal local powers pinned and exhaustive") {
  using Powers = std::vector<MaxLocalPower>;
  CHECK(maximal_local_powers("aabaabaabba") ==
        Powers{{1, 1, 2},
               {1, 3, 3},
               {2, 3, 2},
               {3, 3, 2},
               {4, 1, 2},
               {7, 1, 2},
               {9, 1, 2}});
  CHECK(maximal_local_powers("aaaa") == Powers{{1, 1, 4}});
  CHECK(maximal_local_powers("abab") == Powers{{1, 2, 2}});
  CHECK(maximal_local_powers("aabb") == Powers{{1, 1, 2}, {3, 1, 2}});
  CHECK(maximal_local_powers("ab").empty());
  CHECK(maximal_local_powers("a").empty());
  CHECK(maximal_local_powers("").empty());

  for (int len = 1; len <= 13; ++len)
    for (const auto& w : rewbtest::strings_of_length("ab", len))
      CHECK(maximal_local_powers(w) == brute_local_powers(w));

  rewbtest::Rng rng(86420);
  for (int round = 0; round < 120; ++round) {
    const std::string letters = round % 3 == 2 ? "abc" : "ab";
    const std::string w = rng.random_string(letters, rng.uniform(1, 160));
    CHECK(maximal_local_powers(w) == brute_local_powers(w));
  }
}

TEST_CASE("local power counts grow at most quasilinearly") {
  auto within_bound = [](std::string_view w) {
    const double n = double(w.size());
    const double cap = 2.0 * n * std::max(1.0, std::log2(n));
    return double(maximal_local_powers(w).size()) <= cap;
  };

  std::string prev = "b";
  std::string cur = "a";
  while (cur.size() < 11000) {
    std::string next = cur + prev;
    prev = std::move(cur);
    cur = std::move(next);
    if (cur.size() >= 50) CHECK(within_bound(cur));
  }
  CHECK(within_bound(repeat("a", 5000)));
  CHECK(within_bound(repeat("aab", 1600)));
  rewbtest::Rng rng(13579);
  for (int round = 0; round < 10; ++round)
    CHECK(within_bound(rng.random_string("ab", 4000)));
}

TEST_CASE("periods combine exactly at the compatibility threshold") {
  CHECK(fine_wilf_gcd_period(10, 4, 8) == 4);
  CHECK(fine_wilf_gcd_period(12, 4, 6) == 2);
  CHECK(fine_wilf_gcd_period(8, 4, 6) == 2);
  CHECK_FALSE(fine_wilf_gcd_period(7, 4, 6).has_value());
  CHECK_FALSE(fine_wilf_gcd_period(7, 4, 8).has_value());
  CHECK(fine_wilf_gcd_period(100, 5, 5) == 5);
  CHECK_FALSE(fine_wilf_gcd_period(3, 4, 6).has_value());
  CHECK_FALSE(fine_wilf_gcd_period(0, 2, 3).has_value());
  CHECK_THROWS_AS(fine_wilf_gcd_period(5, 0, 3), std::invalid_argument);
  CHECK_THROWS_AS(fine_wilf_gcd_period(5, 3, 0), std::invalid_argument);

  // One letter short of the threshold the conclusion genuinely fails.
  const std::string witness = "abacaba";
  CHECK(brute_has_period(witness, 4));
  CHECK(brute_has_period(witness, 6));
  CHECK_FALSE(brute_has_period(witness, 2));
  CHECK_FALSE(fine_wilf_gcd_period(witness.size(), 4, 6).has_value());

  // Position identifications forced by both periods: the combined period
  // appears exactly from the threshold on.
  for (std::uint32_t p = 1; p <= 18; ++p)
    for (std::uint32_t q = 1; q <= 18; ++q) {
      const std::uint32_t g = std::uint32_t(std::gcd(p, q));
      for (std::uint32_t len = 1; len <= 40; ++len) {
        UnionFind uf(len);
        for (std::uint32_t i = 0; i + p < len; ++i) uf.unite(i, i + p);
        for (std::uint32_t i = 0; i + q < len; ++i) uf.unite(i, i + q);
        bool forced = true;
        for (std::uint32_t i = 0; forced && i + g < len; ++i)
          forced = uf.find(i) == uf.find(i + g);

        const auto result = fine_wilf_gcd_period(len, p, q);
        CHECK(result.has_value() == (len >= p + q - g));
        if (result.has_value()) {
          CHECK(*result == g);
          CHECK(forced);
        } else if (len + 1 == p + q - g && g < p && g < q) {
          CHECK_FALSE(forced);
        }
      }
    }
}
