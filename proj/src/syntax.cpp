#include "rewb/syntax.hpp"

#include <cassert>
#include <utility>

namespace rewb {

namespace {

ExprPtr make_node(ExprKind kind, char symbol, ExprPtr left, ExprPtr right) {
  auto node = std::make_shared<Expr>();
  node->kind = kind;
  node->symbol = symbol;
  node->left = std::move(left);
  node->right = std::move(right);
  return node;
}

}  // namespace

ExprPtr make_empty_set() {
  static const ExprPtr instance = make_node(ExprKind::EmptySet, '\0', {}, {});
  return instance;
}

ExprPtr make_epsilon() {
  static const ExprPtr instance = make_node(ExprKind::Epsilon, '\0', {}, {});
  return instance;
}

ExprPtr make_letter(char letter) {
  return make_node(ExprKind::Letter, letter, {}, {});
}

ExprPtr make_concat(ExprPtr left, ExprPtr right) {
  assert(left && right);
  return make_node(ExprKind::Concat, '\0', std::move(left), std::move(right));
}

ExprPtr make_union(ExprPtr left, ExprPtr right) {
  assert(left && right);
  return make_node(ExprKind::Union, '\0', std::move(left), std::move(right));
}

ExprPtr make_star(ExprPtr body) {
  assert(body);
  return make_node(ExprKind::Star, '\0', std::move(body), {});
}

ExprPtr make_capture(char variable, ExprPtr body) {
  assert(body);
  return make_node(ExprKind::Capture, variable, std::move(body), {});
}

ExprPtr make_backref(char variable) {
  return make_node(ExprKind::Backref, variable, {}, {});
}

namespace {

// Recursive-descent parser for the concrete syntax. Precedence, loosest to
// tightest: union '+', juxtaposition, postfix '*'.
class Parser {
 public:
  Parser(std::string_view text, const std::set<char>& alphabet,
         const std::set<char>* variables)
      : text_(text), alphabet_(alphabet), variables_(variables) {}

  ExprPtr run() {
    if (text_.empty()) throw ParseError("empty expression", 0);
    ExprPtr result = parse_union();
    if (pos_ != text_.size())
      throw ParseError("unexpected character '" + std::string(1, peek()) + "'",
                       pos_);
    return result;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  bool starts_atom() const {
    if (at_end()) return false;
    char c = peek();
    if (c == '_' || c == '#' || c == '(') return true;
    if (variables_ && (c == '<' || c == '\\')) return true;
    return alphabet_.count(c) > 0;
  }

  ExprPtr parse_union() {
    ExprPtr node = parse_concat();
    while (!at_end() && peek() == '+') {
      ++pos_;
      node = make_union(std::move(node), parse_concat());
    }
    return node;
  }

  ExprPtr parse_concat() {
    if (!starts_atom())
      throw ParseError(at_end() ? "expected expression"
                                : "expected expression, found '" +
                                      std::string(1, peek()) + "'",
                       pos_);
    ExprPtr node = parse_postfix();
    while (starts_atom()) node = make_concat(std::move(node), parse_postfix());
    return node;
  }

  ExprPtr parse_postfix() {
    ExprPtr node = parse_atom();
    while (!at_end() && peek() == '*') {
      ++pos_;
      node = make_star(std::move(node));
    }
    return node;
  }

  char expect_variable() {
    if (at_end()) throw ParseError("expected variable", pos_);
    char v = text_[pos_];
    if (!variables_ || variables_->count(v) == 0)
      throw ParseError("undeclared variable '" + std::string(1, v) + "'",
                       pos_);
    ++pos_;
    return v;
  }

  ExprPtr parse_atom() {
    std::size_t start = pos_;
    char c = peek();
    if (c == '_') {
      ++pos_;
      return make_epsilon();
    }
    if (c == '#') {
      ++pos_;
      return make_empty_set();
    }
    if (c == '(') {
      ++pos_;
      ExprPtr inner = parse_union();
      if (at_end() || peek() != ')')
        throw ParseError("unmatched '('", start);
      ++pos_;
      return inner;
    }
    if (c == '<') {
      if (!variables_)
        throw ParseError("capture not allowed in a plain regex", start);
      ++pos_;
      char v = expect_variable();
      if (at_end() || peek() != ':')
        throw ParseError("expected ':' after capture variable", pos_);
      ++pos_;
      ExprPtr body = parse_union();
      if (at_end() || peek() != '>')
        throw ParseError("unmatched '<'", start);
      ++pos_;
      return make_capture(v, std::move(body));
    }
    if (c == '\\') {
      if (!variables_)
        throw ParseError("backreference not allowed in a plain regex", start);
      ++pos_;
      char v = expect_variable();
      return make_backref(v);
    }
    if (alphabet_.count(c) > 0) {
      ++pos_;
      return make_letter(c);
    }
    throw ParseError("letter '" + std::string(1, c) +
                         "' is not in the declared alphabet",
                     pos_);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  const std::set<char>& alphabet_;
  const std::set<char>* variables_;  // null in plain-regex mode
};

}  // namespace

ExprPtr parse_regex(std::string_view text, const std::set<char>& alphabet) {
  return Parser(text, alphabet, nullptr).run();
}

ExprPtr parse_rewb(std::string_view text, const std::set<char>& alphabet,
                   const std::set<char>& variables) {
  for (char v : variables)
    if (alphabet.count(v) > 0)
      throw std::invalid_argument("variable '" + std::string(1, v) +
                                  "' collides with an alphabet letter");
  return Parser(text, alphabet, &variables).run();
}

std::uint64_t expr_size(const ExprPtr& e) {
  assert(e);
  switch (e->kind) {
    case ExprKind::EmptySet:
    case ExprKind::Epsilon:
    case ExprKind::Letter:
    case ExprKind::Backref:
      return 1;
    case ExprKind::Star:
    case ExprKind::Capture:
      return 1 + expr_size(e->left);
    case ExprKind::Concat:
    case ExprKind::Union:
      return 1 + expr_size(e->left) + expr_size(e->right);
  }
  return 0;  // unreachable
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind || a->symbol != b->symbol) return false;
  switch (a->kind) {
    case ExprKind::EmptySet:
    case ExprKind::Epsilon:
    case ExprKind::Letter:
    case ExprKind::Backref:
      return true;
    case ExprKind::Star:
    case ExprKind::Capture:
      return expr_equal(a->left, b->left);
    case ExprKind::Concat:
    case ExprKind::Union:
      return expr_equal(a->left, b->left) && expr_equal(a->right, b->right);
  }
  return false;  // unreachable
}

namespace {

// Precedence contexts for printing, loosest to tightest.
enum class PrintLevel : int { Union = 0, Concat = 1, Postfix = 2 };

void format_into(const ExprPtr& e, PrintLevel level, std::string& out) {
  switch (e->kind) {
    case ExprKind::EmptySet:
      out += '#';
      return;
    case ExprKind::Epsilon:
      out += '_';
      return;
    case ExprKind::Letter:
      out += e->symbol;
      return;
    case ExprKind::Backref:
      out += '\\';
      out += e->symbol;
      return;
    case ExprKind::Capture:
      out += '<';
      out += e->symbol;
      out += ':';
      format_into(e->left, PrintLevel::Union, out);
      out += '>';
      return;
    case ExprKind::Star:
      format_into(e->left, PrintLevel::Postfix, out);
      out += '*';
      return;
    case ExprKind::Concat: {
      bool parens = level > PrintLevel::Concat;
      if (parens) out += '(';
      format_into(e->left, PrintLevel::Concat, out);
      // The right operand must bind at least as tightly as juxtaposition so
      // the printed form re-parses into the same left-leaning tree.
      format_into(e->right, PrintLevel::Postfix, out);
      if (parens) out += ')';
      return;
    }
    case ExprKind::Union: {
      bool parens = level > PrintLevel::Union;
      if (parens) out += '(';
      format_into(e->left, PrintLevel::Union, out);
      out += '+';
      format_into(e->right, PrintLevel::Concat, out);
      if (parens) out += ')';
      return;
    }
  }
}

}  // namespace

std::string format_expr(const ExprPtr& e) {
  assert(e);
  std::string out;
  format_into(e, PrintLevel::Union, out);
  return out;
}

bool contains_empty_set(const ExprPtr& e) {
  if (!e) return false;
  if (e->kind == ExprKind::EmptySet) return true;
  return contains_empty_set(e->left) || contains_empty_set(e->right);
}

ExprPtr eliminate_empty(const ExprPtr& e) {
  assert(e);
  switch (e->kind) {
    case ExprKind::EmptySet:
    case ExprKind::Epsilon:
    case ExprKind::Letter:
    case ExprKind::Backref:
      return e;
    case ExprKind::Star: {
      ExprPtr body = eliminate_empty(e->left);
      if (body->kind == ExprKind::EmptySet) return make_epsilon();
      return body == e->left ? e : make_star(std::move(body));
    }
    case ExprKind::Capture: {
      ExprPtr body = eliminate_empty(e->left);
      if (body->kind == ExprKind::EmptySet) return make_empty_set();
      return body == e->left ? e : make_capture(e->symbol, std::move(body));
    }
    case ExprKind::Concat: {
      ExprPtr left = eliminate_empty(e->left);
      ExprPtr right = eliminate_empty(e->right);
      if (left->kind == ExprKind::EmptySet ||
          right->kind == ExprKind::EmptySet)
        return make_empty_set();
      if (left == e->left && right == e->right) return e;
      return make_concat(std::move(left), std::move(right));
    }
    case ExprKind::Union: {
      ExprPtr left = eliminate_empty(e->left);
      ExprPtr right = eliminate_empty(e->right);
      if (left->kind == ExprKind::EmptySet) return right;
      if (right->kind == ExprKind::EmptySet) return left;
      if (left == e->left && right == e->right) return e;
      return make_union(std::move(left), std::move(right));
    }
  }
  return e;  // unreachable
}

namespace {

UseBound add_bounds(UseBound a, UseBound b) {
  if (a.is_unbounded || b.is_unbounded) return UseBound::unbounded();
  return UseBound::finite(a.count + b.count);
}

UseBound max_bounds(UseBound a, UseBound b) {
  if (a.is_unbounded || b.is_unbounded) return UseBound::unbounded();
  return UseBound::finite(a.count > b.count ? a.count : b.count);
}

}  // namespace

UseBound max_reference_uses(const ExprPtr& e) {
  assert(e);
  switch (e->kind) {
    case ExprKind::EmptySet:
      throw std::invalid_argument(
          "max_reference_uses requires an empty-set free expression");
    case ExprKind::Epsilon:
    case ExprKind::Letter:
      return UseBound::finite(0);
    case ExprKind::Backref:
      return UseBound::finite(1);
    case ExprKind::Capture:
      return max_reference_uses(e->left);
    case ExprKind::Star: {
      UseBound body = max_reference_uses(e->left);
      if (body.is_unbounded || body.count > 0) return UseBound::unbounded();
      return UseBound::finite(0);
    }
    case ExprKind::Concat:
      return add_bounds(max_reference_uses(e->left),
                        max_reference_uses(e->right));
    case ExprKind::Union:
      return max_bounds(max_reference_uses(e->left),
                        max_reference_uses(e->right));
  }
  return UseBound::finite(0);  // unreachable
}

namespace {

void collect_symbols(const ExprPtr& e, std::set<char>& letters,
                     std::set<char>& variables) {
  if (!e) return;
  if (e->kind == ExprKind::Letter) letters.insert(e->symbol);
  if (e->kind == ExprKind::Capture || e->kind == ExprKind::Backref)
    variables.insert(e->symbol);
  collect_symbols(e->left, letters, variables);
  collect_symbols(e->right, letters, variables);
}

}  // namespace

std::set<char> expr_letters(const ExprPtr& e) {
  std::set<char> letters, variables;
  collect_symbols(e, letters, variables);
  return letters;
}

std::set<char> expr_variables(const ExprPtr& e) {
  std::set<char> letters, variables;
  collect_symbols(e, letters, variables);
  return variables;
}

}  // namespace rewb
