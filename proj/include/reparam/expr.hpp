#pragma once

// Recursive-descent parser and expression trees for periodic functions given
// on the command line, with symbolic derivatives.
//
// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' integer)?
//   base   := number | 'x' | 'pi' | func '(' expr ')' | '(' expr ')'
//   func   := sin | cos | tan | exp | abs
//
// A leading '-' is accepted in base as a convenience.

#include <cctype>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "reparam/errors.hpp"

namespace reparam {

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

class Expr {
public:
  enum class Kind { Const, Var, Add, Sub, Mul, Div, Pow, Sin, Cos, Tan, Exp, Abs, Neg };

  Kind kind;
  double value = 0.0;   // Const
  int exponent = 0;     // Pow
  ExprPtr lhs, rhs;

  static ExprPtr constant(double v) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Const;
    e->value = v;
    return e;
  }
  static ExprPtr var() {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Var;
    return e;
  }
  static ExprPtr binary(Kind k, ExprPtr a, ExprPtr b) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->lhs = std::move(a);
    e->rhs = std::move(b);
    return e;
  }
  static ExprPtr unary(Kind k, ExprPtr a) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->lhs = std::move(a);
    return e;
  }
  static ExprPtr pow(ExprPtr a, int n) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Pow;
    e->lhs = std::move(a);
    e->exponent = n;
    return e;
  }

  double eval(double x) const {
    switch (kind) {
      case Kind::Const: return value;
      case Kind::Var:   return x;
      case Kind::Add:   return lhs->eval(x) + rhs->eval(x);
      case Kind::Sub:   return lhs->eval(x) - rhs->eval(x);
      case Kind::Mul:   return lhs->eval(x) * rhs->eval(x);
      case Kind::Div:   return lhs->eval(x) / rhs->eval(x);
      case Kind::Pow:   return std::pow(lhs->eval(x), exponent);
      case Kind::Sin:   return std::sin(lhs->eval(x));
      case Kind::Cos:   return std::cos(lhs->eval(x));
      case Kind::Tan:   return std::tan(lhs->eval(x));
      case Kind::Exp:   return std::exp(lhs->eval(x));
      case Kind::Abs:   return std::abs(lhs->eval(x));
      case Kind::Neg:   return -lhs->eval(x);
    }
    return 0.0;
  }

  ExprPtr derivative() const {
    using K = Kind;
    switch (kind) {
      case K::Const: return constant(0.0);
      case K::Var:   return constant(1.0);
      case K::Add:   return binary(K::Add, lhs->derivative(), rhs->derivative());
      case K::Sub:   return binary(K::Sub, lhs->derivative(), rhs->derivative());
      case K::Mul:
        return binary(K::Add, binary(K::Mul, lhs->derivative(), rhs),
                      binary(K::Mul, lhs, rhs->derivative()));
      case K::Div:
        // (u/v)' = (u'v - uv') / v^2
        return binary(K::Div,
                      binary(K::Sub, binary(K::Mul, lhs->derivative(), rhs),
                             binary(K::Mul, lhs, rhs->derivative())),
                      pow(rhs, 2));
      case K::Pow: {
        if (exponent == 0) return constant(0.0);
        return binary(K::Mul, binary(K::Mul, constant(double(exponent)),
                                     pow(lhs, exponent - 1)),
                      lhs->derivative());
      }
      case K::Sin:
        return binary(K::Mul, unary(K::Cos, lhs), lhs->derivative());
      case K::Cos:
        return binary(K::Mul, unary(K::Neg, unary(K::Sin, lhs)), lhs->derivative());
      case K::Tan: {
        // tan' = 1 + tan^2
        auto t = unary(K::Tan, lhs);
        return binary(K::Mul, binary(K::Add, constant(1.0), pow(t, 2)),
                      lhs->derivative());
      }
      case K::Exp:
        return binary(K::Mul, unary(K::Exp, lhs), lhs->derivative());
      case K::Abs: {
        // a.e. derivative: sign(u) * u'
        auto sign = binary(K::Div, lhs, unary(K::Abs, lhs));
        return binary(K::Mul, sign, lhs->derivative());
      }
      case K::Neg:
        return unary(K::Neg, lhs->derivative());
    }
    return constant(0.0);
  }
};

namespace detail {

class ExprParser {
public:
  explicit ExprParser(std::string text) : text_(std::move(text)) {}

  ExprPtr parse() {
    auto e = parse_expr();
    skip_ws();
    if (pos_ != text_.size())
      throw ParseError("unexpected trailing input", pos_);
    return e;
  }

private:
  std::string text_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) { ++pos_; return true; }
    return false;
  }
  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  ExprPtr parse_expr() {
    auto e = parse_term();
    for (;;) {
      if (eat('+')) e = Expr::binary(Expr::Kind::Add, e, parse_term());
      else if (eat('-')) e = Expr::binary(Expr::Kind::Sub, e, parse_term());
      else return e;
    }
  }

  ExprPtr parse_term() {
    auto e = parse_factor();
    for (;;) {
      if (eat('*')) e = Expr::binary(Expr::Kind::Mul, e, parse_factor());
      else if (eat('/')) e = Expr::binary(Expr::Kind::Div, e, parse_factor());
      else return e;
    }
  }

  ExprPtr parse_factor() {
    auto e = parse_base();
    if (eat('^')) {
      skip_ws();
      bool neg = eat('-');
      std::size_t start = pos_;
      long n = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        n = n * 10 + (text_[pos_] - '0');
        ++pos_;
      }
      if (pos_ == start) throw ParseError("expected integer exponent", pos_);
      int exp = static_cast<int>(neg ? -n : n);
      if (exp < 0)
        e = Expr::binary(Expr::Kind::Div, Expr::constant(1.0), Expr::pow(e, -exp));
      else
        e = Expr::pow(e, exp);
    }
    return e;
  }

  ExprPtr parse_base() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    char c = text_[pos_];
    if (c == '-') {
      ++pos_;
      return Expr::unary(Expr::Kind::Neg, parse_base());
    }
    if (c == '(') {
      ++pos_;
      auto e = parse_expr();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  ExprPtr parse_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    // scientific suffix
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    try {
      return Expr::constant(std::stod(text_.substr(start, pos_ - start)));
    } catch (const std::exception&) {
      throw ParseError("malformed number", start);
    }
  }

  ExprPtr parse_ident() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::string name = text_.substr(start, pos_ - start);
    if (name == "x") return Expr::var();
    if (name == "pi") return Expr::constant(3.14159265358979323846);
    Expr::Kind k;
    if (name == "sin") k = Expr::Kind::Sin;
    else if (name == "cos") k = Expr::Kind::Cos;
    else if (name == "tan") k = Expr::Kind::Tan;
    else if (name == "exp") k = Expr::Kind::Exp;
    else if (name == "abs") k = Expr::Kind::Abs;
    else throw ParseError("unknown identifier '" + name + "'", start);
    if (!eat('(')) throw ParseError("expected '(' after '" + name + "'", pos_);
    auto arg = parse_expr();
    if (!eat(')')) throw ParseError("expected ')'", pos_);
    return Expr::unary(k, arg);
  }
};

}  // namespace detail

inline ExprPtr parse_expr_tree(const std::string& text) {
  return detail::ExprParser(text).parse();
}

}  // namespace reparam
