#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rewb {

enum class ExprKind : std::uint8_t {
  EmptySet,  // '#', the empty language
  Epsilon,   // '_', the empty string
  Letter,    // a single alphabet letter
  Concat,
  Union,
  Star,
  Capture,  // <x:E>, stores the matched substring into variable x
  Backref,  // \x, re-matches the stored value of x
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Immutable AST node. Shared subtrees are fine; no node is ever mutated
// after construction.
struct Expr {
  ExprKind kind;
  char symbol = '\0';  // Letter: the letter; Capture/Backref: the variable
  ExprPtr left;        // Concat/Union: left operand; Star/Capture: body
  ExprPtr right;       // Concat/Union: right operand
};

ExprPtr make_empty_set();
ExprPtr make_epsilon();
ExprPtr make_letter(char letter);
ExprPtr make_concat(ExprPtr left, ExprPtr right);
ExprPtr make_union(ExprPtr left, ExprPtr right);
ExprPtr make_star(ExprPtr body);
ExprPtr make_capture(char variable, ExprPtr body);
ExprPtr make_backref(char variable);

// Number of executed backreferences: either a finite maximum or unbounded.
struct UseBound {
  static UseBound finite(std::uint64_t n) { return UseBound{false, n}; }
  static UseBound unbounded() { return UseBound{true, 0}; }

  bool is_unbounded = false;
  std::uint64_t count = 0;  // meaningful only when !is_unbounded

  bool operator==(const UseBound&) const = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : std::runtime_error(message + " at position " +
                           std::to_string(position)),
        position_(position) {}

  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Parses the plain-regex fragment: letters, '_' (empty string), '#' (empty
// language), juxtaposition, '+', postfix '*', parentheses. Capture and
// backreference tokens are rejected.
ExprPtr parse_regex(std::string_view text, const std::set<char>& alphabet);

// Full syntax including <x:E> and \x. Variables must be disjoint from the
// alphabet.
ExprPtr parse_rewb(std::string_view text, const std::set<char>& alphabet,
                   const std::set<char>& variables);

// Node count: leaves count 1, unary operators add 1, binary operators add 1.
std::uint64_t expr_size(const ExprPtr& e);

// Structural equality.
bool expr_equal(const ExprPtr& a, const ExprPtr& b);

// Renders the AST back into the concrete syntax with minimal parentheses.
// Re-parsing the result yields a structurally equal AST.
std::string format_expr(const ExprPtr& e);

// Rewrites until no empty-set node remains; the result is either empty-set
// free or the single empty-set node. Language-preserving.
ExprPtr eliminate_empty(const ExprPtr& e);

bool contains_empty_set(const ExprPtr& e);

// Maximum number of backreference executions over all ways the expression can
// run; unbounded when a starred body can execute one. Requires an empty-set
// free expression.
UseBound max_reference_uses(const ExprPtr& e);

// Letters / variables that occur in the expression.
std::set<char> expr_letters(const ExprPtr& e);
std::set<char> expr_variables(const ExprPtr& e);

}  // namespace rewb
