#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "scimcheck/rational.hpp"

namespace scim {

// Expression grammar for structural functions and objectives:
//
//   expr   := term (('+' | '-') term)*
//   term   := factor ('*' factor)*
//   factor := INT | INT '/' INT | NAME | FN '(' ... ')' | '(' expr ')' | '-' factor
//   FN     := mod(a,b) | and(a,b) | or(a,b) | not(a) | xor(a,b)
//           | ind(a=b) | ind(a<b) | if(c,a,b)
//
// Structural functions must be integer-valued; the boolean operators require
// 0-1 operands. Rational literals ("p/q") are only meaningful in objectives.
class Expr {
 public:
  enum class Op {
    Lit, Var, Neg, Add, Sub, Mul, Mod, And, Or, Not, Xor, IndEq, IndLt, If
  };

  Op op = Op::Lit;
  Rational lit;             // Op::Lit
  std::string var;          // Op::Var
  std::vector<Expr> args;   // operands for everything else

  // Evaluates with an environment mapping variable name -> exact value.
  // Throws Error(PartialFunction) on boolean ops with non 0-1 operands or
  // mod with non-integers / zero divisor; Error(UnknownVariable) for names
  // the environment cannot resolve.
  Rational eval(const std::function<Rational(const std::string&)>& env) const;

  // Variable names referenced by the expression, in first-use order.
  std::vector<std::string> variables() const;

  std::string str() const;

  // Parses the grammar above. Positions in errors are relative to `text`
  // (col), offset by `base` for messages that point into a larger file.
  static Expr parse(const std::string& text, int base_line = 0);
};

}  // namespace scim
