#pragma once

#include <cctype>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "symmcomp/error.hpp"
#include "symmcomp/mesh.hpp"

namespace symmcomp {

/// A scalar expression of the point x = (x, y), parsed once and evaluated
/// many times. Variables: x, y (also x1, x2), r = |x|. Constants: pi, e.
/// Operators + - * / ^ and the functions sin cos tan exp log sqrt abs
/// atan2 min max pow.
class Expression {
 public:
  Expression() = default;

  explicit Expression(std::string text) : text_(std::move(text)) {
    Parser p{text_, 0};
    eval_ = p.expression();
    p.skip();
    if (p.pos != text_.size()) p.fail("unexpected '" + std::string(1, text_[p.pos]) + "'");
  }

  double operator()(Vec2 x) const { return eval_(x); }
  const std::string& text() const { return text_; }
  bool empty() const { return !eval_; }

 private:
  using Fn = std::function<double(Vec2)>;

  struct Parser {
    const std::string& s;
    std::size_t pos;

    [[noreturn]] void fail(const std::string& what) const {
      throw Error(ErrorKind::parse, "expression '" + s + "' at column " + std::to_string(pos + 1) + ": " + what);
    }

    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    bool accept(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    Fn expression() {
      Fn lhs = term();
      for (;;) {
        if (accept('+')) {
          lhs = [a = lhs, b = term()](Vec2 x) { return a(x) + b(x); };
        } else if (accept('-')) {
          lhs = [a = lhs, b = term()](Vec2 x) { return a(x) - b(x); };
        } else {
          return lhs;
        }
      }
    }

    Fn term() {
      Fn lhs = unary();
      for (;;) {
        if (accept('*')) {
          lhs = [a = lhs, b = unary()](Vec2 x) { return a(x) * b(x); };
        } else if (accept('/')) {
          lhs = [a = lhs, b = unary()](Vec2 x) { return a(x) / b(x); };
        } else {
          return lhs;
        }
      }
    }

    Fn unary() {
      if (accept('-')) return [a = unary()](Vec2 x) { return -a(x); };
      if (accept('+')) return unary();
      Fn base = primary();
      if (accept('^')) return [a = base, b = unary()](Vec2 x) { return std::pow(a(x), b(x)); };
      return base;
    }

    std::vector<Fn> arguments() {
      std::vector<Fn> args;
      if (accept(')')) return args;
      do args.push_back(expression());
      while (accept(','));
      if (!accept(')')) fail("expected ')'");
      return args;
    }

    Fn primary() {
      skip();
      if (pos >= s.size()) fail("unexpected end of input");
      if (accept('(')) {
        Fn inner = expression();
        if (!accept(')')) fail("expected ')'");
        return inner;
      }
      const char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(s.substr(pos), &used);
        } catch (const std::exception&) {
          fail("bad number");
        }
        pos += used;
        return [v](Vec2) { return v; };
      }
      if (!std::isalpha(static_cast<unsigned char>(c))) fail("unexpected '" + std::string(1, c) + "'");
      const std::size_t start = pos;
      while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
      const std::string name = s.substr(start, pos - start);
      if (accept('(')) return call(name, arguments());
      if (name == "x" || name == "x1") return [](Vec2 x) { return x.x; };
      if (name == "y" || name == "x2") return [](Vec2 x) { return x.y; };
      if (name == "r") return [](Vec2 x) { return norm(x); };
      if (name == "pi") return [](Vec2) { return std::numbers::pi; };
      if (name == "e") return [](Vec2) { return std::numbers::e; };
      pos = start;
      fail("unknown name '" + name + "'");
    }

    Fn call(const std::string& name, std::vector<Fn> a) {
      using F1 = double (*)(double);
      static const std::pair<const char*, F1> unary_fns[] = {
          {"sin", [](double v) { return std::sin(v); }},   {"cos", [](double v) { return std::cos(v); }},
          {"tan", [](double v) { return std::tan(v); }},   {"exp", [](double v) { return std::exp(v); }},
          {"log", [](double v) { return std::log(v); }},   {"sqrt", [](double v) { return std::sqrt(v); }},
          {"abs", [](double v) { return std::abs(v); }},
      };
      for (const auto& [n, f] : unary_fns) {
        if (name != n) continue;
        if (a.size() != 1) fail(name + " takes one argument");
        return [f, g = a[0]](Vec2 x) { return f(g(x)); };
      }
      using F2 = double (*)(double, double);
      static const std::pair<const char*, F2> binary_fns[] = {
          {"atan2", [](double u, double v) { return std::atan2(u, v); }},
          {"min", [](double u, double v) { return std::min(u, v); }},
          {"max", [](double u, double v) { return std::max(u, v); }},
          {"pow", [](double u, double v) { return std::pow(u, v); }},
      };
      for (const auto& [n, f] : binary_fns) {
        if (name != n) continue;
        if (a.size() != 2) fail(name + " takes two arguments");
        return [f, g = a[0], h = a[1]](Vec2 x) { return f(g(x), h(x)); };
      }
      fail("unknown function '" + name + "'");
    }
  };

  std::string text_;
  Fn eval_;
};

}  // namespace symmcomp
