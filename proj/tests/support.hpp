#pragma once

// Helpers shared by the test binaries: exhaustive AST enumeration, random
// expression/string generation, and a deterministic RNG wrapper.

#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "rewb/syntax.hpp"

namespace rewbtest {

struct EnumOptions {
  std::string letters = "ab";
  std::string variables;     // empty: plain regex enumeration
  bool with_empty_set = false;

  bool operator<(const EnumOptions& o) const {
    return std::tie(letters, variables, with_empty_set) <
           std::tie(o.letters, o.variables, o.with_empty_set);
  }
};

// All ASTs of exactly `size` nodes. Memoized; subtrees are shared, so the
// returned trees must be treated as immutable (they are).
inline const std::vector<rewb::ExprPtr>& exprs_of_size(int size,
                                                       const EnumOptions& opt) {
  static std::map<std::pair<int, EnumOptions>, std::vector<rewb::ExprPtr>>
      memo;
  auto key = std::make_pair(size, opt);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;

  std::vector<rewb::ExprPtr> result;
  if (size == 1) {
    result.push_back(rewb::make_epsilon());
    if (opt.with_empty_set) result.push_back(rewb::make_empty_set());
    for (char c : opt.letters) result.push_back(rewb::make_letter(c));
    for (char v : opt.variables) result.push_back(rewb::make_backref(v));
  } else if (size > 1) {
    for (const auto& body : exprs_of_size(size - 1, opt)) {
      result.push_back(rewb::make_star(body));
      for (char v : opt.variables)
        result.push_back(rewb::make_capture(v, body));
    }
    for (int left = 1; left <= size - 2; ++left) {
      int right = size - 1 - left;
      for (const auto& l : exprs_of_size(left, opt))
        for (const auto& r : exprs_of_size(right, opt)) {
          result.push_back(rewb::make_concat(l, r));
          result.push_back(rewb::make_union(l, r));
        }
    }
  }
  return memo.emplace(std::move(key), std::move(result)).first->second;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [lo, hi], inclusive.
  int uniform(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(engine_);
  }

  std::uint64_t next_u64() { return engine_(); }

  bool chance(double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_) < p;
  }

  char pick(const std::string& pool) {
    return pool[static_cast<std::size_t>(uniform(0, int(pool.size()) - 1))];
  }

  std::string random_string(const std::string& letters, int length) {
    std::string s;
    s.reserve(static_cast<std::size_t>(length));
    for (int i = 0; i < length; ++i) s += pick(letters);
    return s;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

struct GenOptions {
  std::string letters = "ab";
  std::string variables;  // empty: plain regex
  bool allow_empty_set = false;
};

// Random AST with exactly `size` nodes (size >= 1).
inline rewb::ExprPtr random_expr(Rng& rng, int size, const GenOptions& opt) {
  if (size <= 1) {
    int leaf_kinds = 1 + int(opt.letters.size()) +
                     int(opt.variables.size()) + (opt.allow_empty_set ? 1 : 0);
    int pick = rng.uniform(0, leaf_kinds - 1);
    if (pick == 0) return rewb::make_epsilon();
    pick -= 1;
    if (pick < int(opt.letters.size()))
      return rewb::make_letter(opt.letters[static_cast<std::size_t>(pick)]);
    pick -= int(opt.letters.size());
    if (pick < int(opt.variables.size()))
      return rewb::make_backref(opt.variables[static_cast<std::size_t>(pick)]);
    return rewb::make_empty_set();
  }
  bool can_unary = true;
  bool can_binary = size >= 3;
  int choice = can_binary ? rng.uniform(0, 3) : rng.uniform(0, 1);
  if (!can_unary && !can_binary) return random_expr(rng, 1, opt);
  switch (choice) {
    case 0: {
      return rewb::make_star(random_expr(rng, size - 1, opt));
    }
    case 1: {
      auto body = random_expr(rng, size - 1, opt);
      if (opt.variables.empty()) return rewb::make_star(std::move(body));
      char v = rng.pick(opt.variables);
      return rewb::make_capture(v, std::move(body));
    }
    default: {
      int left = rng.uniform(1, size - 2);
      auto l = random_expr(rng, left, opt);
      auto r = random_expr(rng, size - 1 - left, opt);
      if (choice == 2) return rewb::make_concat(std::move(l), std::move(r));
      return rewb::make_union(std::move(l), std::move(r));
    }
  }
}

// Memoized interval matcher over the AST; independent of the automaton and
// monoid paths. Plain regexes only.
class DpRegexMatcher {
 public:
  DpRegexMatcher(rewb::ExprPtr root, std::string_view w)
      : root_(std::move(root)), w_(w) {}

  bool full_match() { return match(root_.get(), 0, w_.size()); }

 private:
  bool match(const rewb::Expr* e, std::size_t i, std::size_t j) {
    auto key = std::make_tuple(e, i, j);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    bool result = false;
    switch (e->kind) {
      case rewb::ExprKind::EmptySet:
        result = false;
        break;
      case rewb::ExprKind::Epsilon:
        result = i == j;
        break;
      case rewb::ExprKind::Letter:
        result = j == i + 1 && w_[i] == e->symbol;
        break;
      case rewb::ExprKind::Concat:
        for (std::size_t k = i; k <= j && !result; ++k)
          result = match(e->left.get(), i, k) && match(e->right.get(), k, j);
        break;
      case rewb::ExprKind::Union:
        result = match(e->left.get(), i, j) || match(e->right.get(), i, j);
        break;
      case rewb::ExprKind::Star:
        if (i == j) {
          result = true;
        } else {
          for (std::size_t k = i + 1; k <= j && !result; ++k)
            result = match(e->left.get(), i, k) && match(e, k, j);
        }
        break;
      case rewb::ExprKind::Capture:
      case rewb::ExprKind::Backref:
        throw std::logic_error("DpRegexMatcher takes plain regexes only");
    }
    memo_.emplace(key, result);
    return result;
  }

  rewb::ExprPtr root_;
  std::string_view w_;
  std::map<std::tuple<const rewb::Expr*, std::size_t, std::size_t>, bool>
      memo_;
};

inline bool dp_regex_match(const rewb::ExprPtr& e, std::string_view w) {
  return DpRegexMatcher(e, w).full_match();
}

// All strings over `letters` of exactly `length`, in lexicographic order.
inline std::vector<std::string> strings_of_length(const std::string& letters,
                                                  int length) {
  std::vector<std::string> out{""};
  for (int i = 0; i < length; ++i) {
    std::vector<std::string> next;
    next.reserve(out.size() * letters.size());
    for (const auto& s : out)
      for (char c : letters) next.push_back(s + c);
    out = std::move(next);
  }
  return out;
}

}  // namespace rewbtest
