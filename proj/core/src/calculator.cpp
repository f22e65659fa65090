#include "tutor/calculator.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "tutor/errors.hpp"

namespace tutor {

namespace {

enum class TokenKind { number, plus, minus, star, slash, lparen, rparen, end };

struct Token {
  TokenKind kind = TokenKind::end;
  double value = 0.0;
  std::size_t pos = 0;
};

class Lexer {
public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
    Token tok;
    tok.pos = pos_;
    if (pos_ >= text_.size()) return tok;

    const char c = text_[pos_];
    if ((c >= '0' && c <= '9') || c == '.') return number(tok);
    switch (c) {
      case '+': return single(tok, TokenKind::plus);
      case '-': return single(tok, TokenKind::minus);
      case '*': return single(tok, TokenKind::star);
      case '/': return single(tok, TokenKind::slash);
      case '(': return single(tok, TokenKind::lparen);
      case ')': return single(tok, TokenKind::rparen);
      default: break;
    }
    if (starts_with("\xC3\x97")) return multi(tok, TokenKind::star, 2);       // ×
    if (starts_with("\xC3\xB7")) return multi(tok, TokenKind::slash, 2);      // ÷
    if (starts_with("\xE2\x88\x92")) return multi(tok, TokenKind::minus, 3);  // −
    throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
  }

private:
  bool starts_with(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }

  Token single(Token tok, TokenKind kind) { return multi(tok, kind, 1); }

  Token multi(Token tok, TokenKind kind, std::size_t width) {
    tok.kind = kind;
    pos_ += width;
    return tok;
  }

  Token number(Token tok) {
    const auto start = pos_;
    bool seen_digit = false;
    bool seen_dot = false;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c >= '0' && c <= '9') {
        seen_digit = true;
      } else if (c == '.' && !seen_dot) {
        seen_dot = true;
      } else {
        break;
      }
      ++pos_;
    }
    if (!seen_digit) throw ParseError("malformed number", start);
    const auto literal = text_.substr(start, pos_ - start);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(literal.data(), literal.data() + literal.size(), value,
                                     std::chars_format::fixed);
    if (ec != std::errc() || ptr != literal.data() + literal.size()) {
      throw ParseError("malformed number", start);
    }
    tok.kind = TokenKind::number;
    tok.value = value;
    return tok;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

class Parser {
public:
  explicit Parser(std::string_view text) : lexer_(text) { advance(); }

  ExprPtr parse() {
    if (current_.kind == TokenKind::end) throw ParseError("empty expression", current_.pos);
    auto node = expr();
    if (current_.kind != TokenKind::end) throw ParseError("unexpected token", current_.pos);
    return node;
  }

private:
  void advance() { current_ = lexer_.next(); }

  static ExprPtr make_binary(ExprNode::Kind kind, ExprPtr lhs, ExprPtr rhs) {
    auto node = std::make_unique<ExprNode>();
    node->kind = kind;
    node->lhs = std::move(lhs);
    node->rhs = std::move(rhs);
    return node;
  }

  ExprPtr expr() {
    auto lhs = term();
    while (current_.kind == TokenKind::plus || current_.kind == TokenKind::minus) {
      const auto kind =
          current_.kind == TokenKind::plus ? ExprNode::Kind::add : ExprNode::Kind::subtract;
      advance();
      lhs = make_binary(kind, std::move(lhs), term());
    }
    return lhs;
  }

  ExprPtr term() {
    auto lhs = unary();
    while (current_.kind == TokenKind::star || current_.kind == TokenKind::slash) {
      const auto kind =
          current_.kind == TokenKind::star ? ExprNode::Kind::multiply : ExprNode::Kind::divide;
      advance();
      lhs = make_binary(kind, std::move(lhs), unary());
    }
    return lhs;
  }

  ExprPtr unary() {
    if (current_.kind == TokenKind::minus) {
      advance();
      auto node = std::make_unique<ExprNode>();
      node->kind = ExprNode::Kind::negate;
      node->lhs = unary();
      return node;
    }
    return primary();
  }

  ExprPtr primary() {
    if (current_.kind == TokenKind::number) {
      auto node = std::make_unique<ExprNode>();
      node->value = current_.value;
      advance();
      return node;
    }
    if (current_.kind == TokenKind::lparen) {
      advance();
      auto inner = expr();
      if (current_.kind != TokenKind::rparen) throw ParseError("expected ')'", current_.pos);
      advance();
      return inner;
    }
    if (current_.kind == TokenKind::end) throw ParseError("unexpected end of expression", current_.pos);
    throw ParseError("expected a number or '('", current_.pos);
  }

  Lexer lexer_;
  Token current_;
};

double checked(double v) {
  if (!std::isfinite(v)) throw DomainError("result out of range");
  return v;
}

}  // namespace

ExprPtr parse_expression(std::string_view text) {
  if (text.size() > kMaxExpressionLength) {
    throw ToolError("expression longer than " + std::to_string(kMaxExpressionLength) + " bytes");
  }
  return Parser(text).parse();
}

double evaluate(const ExprNode& node) {
  using Kind = ExprNode::Kind;
  switch (node.kind) {
    case Kind::number:
      return node.value;
    case Kind::negate:
      return -evaluate(*node.lhs);
    case Kind::add:
      return checked(evaluate(*node.lhs) + evaluate(*node.rhs));
    case Kind::subtract:
      return checked(evaluate(*node.lhs) - evaluate(*node.rhs));
    case Kind::multiply:
      return checked(evaluate(*node.lhs) * evaluate(*node.rhs));
    case Kind::divide: {
      const double lhs = evaluate(*node.lhs);
      const double rhs = evaluate(*node.rhs);
      if (rhs == 0.0) throw DomainError("division by zero");
      return checked(lhs / rhs);
    }
  }
  throw DomainError("corrupt expression tree");
}

double eval_expression(std::string_view text) { return evaluate(*parse_expression(text)); }

std::string to_string(const ExprNode& node) {
  using Kind = ExprNode::Kind;
  switch (node.kind) {
    case Kind::number:
      return format_number(node.value);
    case Kind::negate:
      return "(-" + to_string(*node.lhs) + ")";
    case Kind::add:
      return "(" + to_string(*node.lhs) + " + " + to_string(*node.rhs) + ")";
    case Kind::subtract:
      return "(" + to_string(*node.lhs) + " - " + to_string(*node.rhs) + ")";
    case Kind::multiply:
      return "(" + to_string(*node.lhs) + " * " + to_string(*node.rhs) + ")";
    case Kind::divide:
      return "(" + to_string(*node.lhs) + " / " + to_string(*node.rhs) + ")";
  }
  return "?";
}

std::string format_number(double value) {
  if (value == 0.0) return "0";
  std::ostringstream out;
  out.precision(12);
  out << value;
  return out.str();
}

}  // namespace tutor
