#include "scimcheck/expr.hpp"

#include <cctype>

#include "scimcheck/errors.hpp"

namespace scim {

namespace {

struct Parser {
  const std::string& s;
  size_t i = 0;
  int line;

  explicit Parser(const std::string& text, int base_line) : s(text), line(base_line) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(Errc::ParseError, msg + " in expression '" + s + "'",
                SourcePos{line, static_cast<int>(i) + 1});
  }

  void skip_ws() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }

  bool eat(char c) {
    skip_ws();
    if (i < s.size() && s[i] == c) {
      ++i;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }

  bool at_end() {
    skip_ws();
    return i >= s.size();
  }

  Expr parse_expr() {
    Expr lhs = parse_term();
    for (;;) {
      skip_ws();
      if (eat('+')) {
        Expr node;
        node.op = Expr::Op::Add;
        node.args = {std::move(lhs), parse_term()};
        lhs = std::move(node);
      } else if (eat('-')) {
        Expr node;
        node.op = Expr::Op::Sub;
        node.args = {std::move(lhs), parse_term()};
        lhs = std::move(node);
      } else {
        return lhs;
      }
    }
  }

  Expr parse_term() {
    Expr lhs = parse_factor();
    for (;;) {
      skip_ws();
      if (eat('*')) {
        Expr node;
        node.op = Expr::Op::Mul;
        node.args = {std::move(lhs), parse_factor()};
        lhs = std::move(node);
      } else {
        return lhs;
      }
    }
  }

  Expr parse_factor() {
    skip_ws();
    if (i >= s.size()) fail("unexpected end of expression");
    char c = s[i];
    if (c == '(') {
      ++i;
      Expr e = parse_expr();
      expect(')');
      return e;
    }
    if (c == '-') {
      ++i;
      Expr node;
      node.op = Expr::Op::Neg;
      node.args = {parse_factor()};
      return node;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name();
    fail("unexpected character");
  }

  Expr parse_number() {
    size_t start = i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i < s.size() && s[i] == '.') fail("decimal literals are not allowed; use p/q");
    BigInt num(s.substr(start, i - start));
    BigInt den = 1;
    size_t save = i;
    skip_ws();
    if (i < s.size() && s[i] == '/') {
      ++i;
      skip_ws();
      size_t dstart = i;
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      if (dstart == i) fail("expected denominator after '/'");
      den = BigInt(s.substr(dstart, i - dstart));
      if (den == 0) fail("zero denominator");
    } else {
      i = save;
    }
    Expr node;
    node.op = Expr::Op::Lit;
    node.lit = Rational(num, den);
    return node;
  }

  Expr parse_name() {
    size_t start = i;
    while (i < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_' || s[i] == '.'))
      ++i;
    std::string name = s.substr(start, i - start);
    skip_ws();
    if (i < s.size() && s[i] == '(') {
      ++i;
      return parse_call(name);
    }
    Expr node;
    node.op = Expr::Op::Var;
    node.var = name;
    return node;
  }

  Expr parse_call(const std::string& name) {
    Expr node;
    if (name == "ind") {
      Expr a = parse_expr();
      skip_ws();
      if (eat('=')) {
        node.op = Expr::Op::IndEq;
      } else if (eat('<')) {
        node.op = Expr::Op::IndLt;
      } else {
        fail("ind expects '=' or '<'");
      }
      Expr b = parse_expr();
      expect(')');
      node.args = {std::move(a), std::move(b)};
      return node;
    }
    int arity;
    if (name == "mod") { node.op = Expr::Op::Mod; arity = 2; }
    else if (name == "and") { node.op = Expr::Op::And; arity = 2; }
    else if (name == "or") { node.op = Expr::Op::Or; arity = 2; }
    else if (name == "xor") { node.op = Expr::Op::Xor; arity = 2; }
    else if (name == "not") { node.op = Expr::Op::Not; arity = 1; }
    else if (name == "if") { node.op = Expr::Op::If; arity = 3; }
    else fail("unknown function '" + name + "'");
    for (int k = 0; k < arity; ++k) {
      if (k > 0) expect(',');
      node.args.push_back(parse_expr());
    }
    expect(')');
    return node;
  }
};

BigInt as_int(const Rational& r, const char* ctx) {
  if (!r.is_integer())
    throw Error(Errc::PartialFunction, std::string(ctx) + " requires integer operands");
  return r.num();
}

BigInt as_bool(const Rational& r, const char* ctx) {
  BigInt v = as_int(r, ctx);
  if (v != 0 && v != 1)
    throw Error(Errc::PartialFunction, std::string(ctx) + " requires 0-1 operands");
  return v;
}

}  // namespace

Rational Expr::eval(const std::function<Rational(const std::string&)>& env) const {
  switch (op) {
    case Op::Lit:
      return lit;
    case Op::Var:
      return env(var);
    case Op::Neg:
      return -args[0].eval(env);
    case Op::Add:
      return args[0].eval(env) + args[1].eval(env);
    case Op::Sub:
      return args[0].eval(env) - args[1].eval(env);
    case Op::Mul:
      return args[0].eval(env) * args[1].eval(env);
    case Op::Mod: {
      BigInt a = as_int(args[0].eval(env), "mod");
      BigInt b = as_int(args[1].eval(env), "mod");
      if (b == 0) throw Error(Errc::PartialFunction, "mod by zero");
      BigInt r = a % b;
      if (r < 0) r += (b < 0 ? -b : b);  // mathematical remainder, always >= 0
      return Rational(r);
    }
    case Op::And:
      return Rational(as_bool(args[0].eval(env), "and") & as_bool(args[1].eval(env), "and"));
    case Op::Or:
      return Rational(as_bool(args[0].eval(env), "or") | as_bool(args[1].eval(env), "or"));
    case Op::Xor:
      return Rational(as_bool(args[0].eval(env), "xor") ^ as_bool(args[1].eval(env), "xor"));
    case Op::Not:
      return Rational(1 - as_bool(args[0].eval(env), "not"));
    case Op::IndEq:
      return Rational(args[0].eval(env) == args[1].eval(env) ? 1 : 0);
    case Op::IndLt:
      return Rational(args[0].eval(env) < args[1].eval(env) ? 1 : 0);
    case Op::If:
      return as_bool(args[0].eval(env), "if") == 1 ? args[1].eval(env) : args[2].eval(env);
  }
  throw Error(Errc::ParseError, "corrupt expression node");
}

namespace {
void collect_vars(const Expr& e, std::vector<std::string>& out) {
  if (e.op == Expr::Op::Var) {
    for (const auto& v : out)
      if (v == e.var) return;
    out.push_back(e.var);
    return;
  }
  for (const auto& a : e.args) collect_vars(a, out);
}
}  // namespace

std::vector<std::string> Expr::variables() const {
  std::vector<std::string> out;
  collect_vars(*this, out);
  return out;
}

std::string Expr::str() const {
  switch (op) {
    case Op::Lit:
      return lit.str();
    case Op::Var:
      return var;
    case Op::Neg:
      return "-" + args[0].str();
    case Op::Add:
      return "(" + args[0].str() + " + " + args[1].str() + ")";
    case Op::Sub:
      return "(" + args[0].str() + " - " + args[1].str() + ")";
    case Op::Mul:
      return "(" + args[0].str() + " * " + args[1].str() + ")";
    case Op::Mod:
      return "mod(" + args[0].str() + "," + args[1].str() + ")";
    case Op::And:
      return "and(" + args[0].str() + "," + args[1].str() + ")";
    case Op::Or:
      return "or(" + args[0].str() + "," + args[1].str() + ")";
    case Op::Xor:
      return "xor(" + args[0].str() + "," + args[1].str() + ")";
    case Op::Not:
      return "not(" + args[0].str() + ")";
    case Op::IndEq:
      return "ind(" + args[0].str() + "=" + args[1].str() + ")";
    case Op::IndLt:
      return "ind(" + args[0].str() + "<" + args[1].str() + ")";
    case Op::If:
      return "if(" + args[0].str() + "," + args[1].str() + "," + args[2].str() + ")";
  }
  return "?";
}

Expr Expr::parse(const std::string& text, int base_line) {
  Parser p(text, base_line);
  Expr e = p.parse_expr();
  if (!p.at_end()) p.fail("trailing characters");
  return e;
}

}  // namespace scim
