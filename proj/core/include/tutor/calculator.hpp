#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>

namespace tutor {

inline constexpr std::size_t kMaxExpressionLength = 256;

// Grammar (no identifiers, no calls, no exponentiation):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | primary
//   primary := number | '(' expr ')'
// '×', '÷' and '−' are accepted as spellings of '*', '/' and '-'.
struct ExprNode {
  enum class Kind { number, negate, add, subtract, multiply, divide };

  Kind kind = Kind::number;
  double value = 0.0;  // number only
  std::unique_ptr<const ExprNode> lhs;  // operand of negate
  std::unique_ptr<const ExprNode> rhs;
};

using ExprPtr = std::unique_ptr<const ExprNode>;

// Throws ParseError (with byte position) or ToolError for over-length input.
ExprPtr parse_expression(std::string_view text);

// Throws DomainError on division by zero or a non-finite result.
double evaluate(const ExprNode& node);

double eval_expression(std::string_view text);

// Fully parenthesized rendering, handy in diagnostics and tests.
std::string to_string(const ExprNode& node);

// Compact decimal rendering of a calculator result.
std::string format_number(double value);

}  // namespace tutor
