#include "rewb/oracle.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>

#include "rewb/automata.hpp"

namespace rewb {
namespace {

// Every letter the expressions or the word can mention; simulation treats a
// letter outside an expression's own alphabet as having no transitions.
std::string joint_alphabet(const std::vector<const ExprPtr*>& exprs,
                           std::string_view w) {
  std::set<char> seen(w.begin(), w.end());
  for (const ExprPtr* e : exprs) {
    const auto letters = expr_letters(*e);
    seen.insert(letters.begin(), letters.end());
  }
  return std::string(seen.begin(), seen.end());
}

// Direct evaluation of the update semantics, memoized per subexpression,
// start position, and interned valuation.
class RewbOracle {
 public:
  RewbOracle(const ExprPtr& root, std::string_view w) : root_(root), w_(w) {
    const auto vars = expr_variables(root);
    variables_.assign(vars.begin(), vars.end());
    initial_ = intern(std::vector<std::string>(variables_.size()));
  }

  bool matches() {
    for (const auto& [end, val] : eval(root_.get(), 0, initial_)) {
      (void)val;
      if (end == w_.size()) return true;
    }
    return false;
  }

 private:
  using ValId = std::uint32_t;
  // One run outcome: end position plus the valuation left behind.
  using State = std::pair<std::uint32_t, ValId>;
  using Outcome = std::vector<State>;

  ValId intern(std::vector<std::string> values) {
    const auto [it, inserted] =
        value_ids_.emplace(std::move(values), ValId(valuations_.size()));
    if (inserted) valuations_.push_back(&it->first);
    return it->second;
  }

  const std::string& binding(ValId id, char var) const {
    const auto slot = std::lower_bound(variables_.begin(), variables_.end(), var);
    if (slot == variables_.end() || *slot != var)
      throw std::logic_error("reference to an undeclared variable");
    return (*valuations_[id])[std::size_t(slot - variables_.begin())];
  }

  const Outcome& eval(const Expr* node, std::uint32_t pos, ValId val) {
    const auto key = std::make_tuple(node, pos, val);
    if (const auto it = memo_.find(key); it != memo_.end()) return it->second;
    // Insert the slot first: std::map keeps it stable across the recursive
    // inserts below. A star never revisits its own (node, pos, val) key, so
    // the empty placeholder is never read back mid-computation.
    auto& out = memo_[key];
    std::set<State> results;
    switch (node->kind) {
      case ExprKind::EmptySet:
        break;
      case ExprKind::Epsilon:
        results.emplace(pos, val);
        break;
      case ExprKind::Letter:
        if (pos < w_.size() && w_[pos] == node->symbol)
          results.emplace(pos + 1, val);
        break;
      case ExprKind::Backref: {
        const std::string& bound = binding(val, node->symbol);
        if (w_.compare(pos, bound.size(), bound) == 0 &&
            pos + bound.size() <= w_.size())
          results.emplace(std::uint32_t(pos + bound.size()), val);
        break;
      }
      case ExprKind::Union: {
        for (const State& s : eval(node->left.get(), pos, val))
          results.insert(s);
        for (const State& s : eval(node->right.get(), pos, val))
          results.insert(s);
        break;
      }
      case ExprKind::Concat: {
        const Outcome first = eval(node->left.get(), pos, val);
        for (const auto& [mid, v1] : first)
          for (const State& s : eval(node->right.get(), mid, v1))
            results.insert(s);
        break;
      }
      case ExprKind::Star: {
        // Closure over (position, valuation) states: each visited state is
        // reachable by some iteration count, and the seen set bounds the
        // walk even when an iteration consumes nothing but rewrites vars.
        std::set<State> seen{{pos, val}};
        std::deque<State> queue{{pos, val}};
        while (!queue.empty()) {
          const auto [at, v] = queue.front();
          queue.pop_front();
          for (const State& s : eval(node->left.get(), at, v))
            if (seen.insert(s).second) queue.push_back(s);
        }
        results = std::move(seen);
        break;
      }
      case ExprKind::Capture: {
        for (const auto& [end, v1] : eval(node->left.get(), pos, val)) {
          std::vector<std::string> values = *valuations_[v1];
          const auto slot = std::lower_bound(variables_.begin(),
                                             variables_.end(), node->symbol);
          values[std::size_t(slot - variables_.begin())] =
              std::string(w_.substr(pos, end - pos));
          results.emplace(end, intern(std::move(values)));
        }
        break;
      }
    }
    out.assign(results.begin(), results.end());
    return out;
  }

  const ExprPtr& root_;
  std::string_view w_;
  std::vector<char> variables_;
  ValId initial_ = 0;
  std::map<std::vector<std::string>, ValId> value_ids_;
  std::vector<const std::vector<std::string>*> valuations_;
  std::map<std::tuple<const Expr*, std::uint32_t, ValId>, Outcome> memo_;
};

// accept[i][j] for 0 <= i <= j <= n, flattened: does e accept w[i..j)?
class IntervalTable {
 public:
  IntervalTable(const ExprPtr& e, const std::string& alphabet,
                std::string_view w)
      : size_(w.size()), accept_((size_ + 1) * (size_ + 1), false) {
    const EpsNfa nfa = eps_free(thompson(e, alphabet));
    for (std::size_t i = 0; i <= size_; ++i) {
      std::vector<char> live(nfa.state_count, false);
      live[nfa.initial] = true;
      for (std::size_t j = i;; ++j) {
        bool any = false;
        for (State f : nfa.finals) any = any || live[f];
        accept_[i * (size_ + 1) + j] = any;
        if (j == size_) break;
        std::vector<char> next(nfa.state_count, false);
        bool alive = false;
        for (State s = 0; s < nfa.state_count; ++s) {
          if (!live[s]) continue;
          for (const auto& [letter, to] : nfa.letter_edges[s])
            if (letter == w[j]) {
              next[to] = true;
              alive = true;
            }
        }
        if (!alive) break;
        live = std::move(next);
      }
    }
  }

  bool at(std::size_t i, std::size_t j) const {
    return accept_[i * (size_ + 1) + j];
  }

 private:
  std::size_t size_;
  std::vector<char> accept_;
};

// Shared core of the two repeated-part deciders.
bool split_with_repeat(const ExprPtr& a, const ExprPtr& b, const ExprPtr& c,
                       const ExprPtr& d, std::string_view w,
                       bool require_distinct_next) {
  const std::string alphabet = joint_alphabet({&a, &b, &c, &d}, w);
  const IntervalTable ta(a, alphabet, w);
  const IntervalTable tb(b, alphabet, w);
  const IntervalTable tc(c, alphabet, w);
  const IntervalTable td(d, alphabet, w);
  const std::size_t n = w.size();
  const auto same = [&](std::size_t i, std::size_t k, std::size_t len) {
    return w.substr(i, len) == w.substr(k, len);
  };
  for (std::size_t i = 0; i <= n; ++i) {
    if (!ta.at(0, i)) continue;
    for (std::size_t j = i; j <= n; ++j) {
      if (!tb.at(i, j)) continue;
      const std::size_t len = j - i;
      for (std::size_t k = j; k + len <= n; ++k) {
        if (!tc.at(j, k)) continue;
        if (!same(i, k, len)) continue;
        if (!td.at(k + len, n)) continue;
        if (require_distinct_next &&
            (j >= n || k + len >= n || w[j] == w[k + len]))
          continue;
        return true;
      }
    }
  }
  return false;
}

}  // namespace

bool oracle_rewb_match(const ExprPtr& e, std::string_view w) {
  return RewbOracle(e, w).matches();
}

bool oracle_abcbd(const ExprPtr& a, const ExprPtr& b, const ExprPtr& c,
                  const ExprPtr& d, std::string_view w) {
  return split_with_repeat(a, b, c, d, w, false);
}

bool oracle_branching(const ExprPtr& a, const ExprPtr& b, const ExprPtr& c,
                      const ExprPtr& d, std::string_view w) {
  return split_with_repeat(a, b, c, d, w, true);
}

bool oracle_xyaz(const ExprPtr& x, const ExprPtr& y, const ExprPtr& z,
                 std::uint32_t alpha, std::string_view w) {
  const std::string alphabet = joint_alphabet({&x, &y, &z}, w);
  const IntervalTable tx(x, alphabet, w);
  const IntervalTable ty(y, alphabet, w);
  const IntervalTable tz(z, alphabet, w);
  const std::size_t n = w.size();
  for (std::size_t i = 0; i <= n; ++i) {
    if (!tx.at(0, i)) continue;
    for (std::size_t m = 0; i + std::size_t(alpha) * m <= n; ++m) {
      if (!ty.at(i, i + m)) continue;
      bool copies = true;
      for (std::uint32_t r = 1; r < alpha && copies; ++r)
        copies = w.substr(i + std::size_t(r) * m, m) == w.substr(i, m);
      if (!copies) continue;
      if (tz.at(i + std::size_t(alpha) * m, n)) return true;
    }
  }
  return false;
}

std::vector<MaxLocalPower> oracle_maximal_powers(std::string_view w) {
  const std::size_t n = w.size();
  std::vector<MaxLocalPower> found;
  for (std::size_t start = 0; start < n; ++start) {
    for (std::size_t period = 1; start + 2 * period <= n; ++period) {
      // Root must be primitive: no proper divisor of the period repeats.
      bool primitive = true;
      for (std::size_t div = 1; primitive && div < period; ++div) {
        if (period % div != 0) continue;
        bool repeats = true;
        for (std::size_t t = div; repeats && t < period; ++t)
          repeats = w[start + t] == w[start + t - div];
        primitive = !repeats;
      }
      if (!primitive) continue;
      // Not extensible by a full copy on the left.
      if (start >= period &&
          w.substr(start - period, period) == w.substr(start, period))
        continue;
      std::size_t reps = 1;
      while (start + (reps + 1) * period <= n &&
             w.substr(start + reps * period, period) ==
                 w.substr(start, period))
        ++reps;
      if (reps < 2) continue;
      found.push_back(MaxLocalPower{std::uint32_t(start + 1),
                                    std::uint32_t(period),
                                    std::uint32_t(reps)});
    }
  }
  std::sort(found.begin(), found.end());
  return found;
}

std::vector<std::uint64_t> oracle_up_enumerate(const UpSet& p,
                                               std::uint64_t bound) {
  std::vector<std::uint64_t> members;
  for (std::uint64_t k = 0; k <= bound; ++k)
    if (p.contains(k)) members.push_back(k);
  return members;
}

}  // namespace rewb
