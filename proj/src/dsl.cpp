#include "gencc/dsl.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

namespace gencc::dsl {

namespace {

struct VarEntry {
  const char* name;
  Var var;
};

constexpr std::array<VarEntry, 7> kVars = {{
    {"x", Var::X},
    {"a", Var::A},
    {"b", Var::B},
    {"xn", Var::Xn},
    {"L", Var::Loss},
    {"rtt_grad", Var::RttGrad},
    {"rtt_dev", Var::RttDev},
}};

struct FnEntry {
  const char* name;
  int arity;
  UnOp un;    // arity 1
  BinOp bin;  // arity 2
};

constexpr std::array<FnEntry, 7> kFns = {{
    {"arctan", 1, UnOp::Arctan, BinOp::Add},
    {"exp", 1, UnOp::Exp, BinOp::Add},
    {"log", 1, UnOp::Log, BinOp::Add},
    {"sqrt", 1, UnOp::Sqrt, BinOp::Add},
    {"abs", 1, UnOp::Abs, BinOp::Add},
    {"max", 2, UnOp::Neg, BinOp::Max},
    {"min", 2, UnOp::Neg, BinOp::Min},
}};

}  // namespace

const char* var_name(Var v) {
  for (const auto& e : kVars) {
    if (e.var == v) return e.name;
  }
  return "?";
}

ExprPtr Expr::number(double v) {
  if (std::signbit(v)) return unary(UnOp::Neg, number(-v));
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Number;
  e->value = v;
  return e;
}

ExprPtr Expr::pi() {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Pi;
  return e;
}

ExprPtr Expr::variable(Var v) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Variable;
  e->var = v;
  return e;
}

ExprPtr Expr::unary(UnOp op, ExprPtr child) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Unary;
  e->un = op;
  e->lhs = std::move(child);
  return e;
}

ExprPtr Expr::binary(BinOp op, ExprPtr lhs, ExprPtr rhs) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::Binary;
  e->bin = op;
  e->lhs = std::move(lhs);
  e->rhs = std::move(rhs);
  return e;
}

bool equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::Number:
      return a.value == b.value;
    case Expr::Kind::Pi:
      return true;
    case Expr::Kind::Variable:
      return a.var == b.var;
    case Expr::Kind::Unary:
      return a.un == b.un && equal(*a.lhs, *b.lhs);
    case Expr::Kind::Binary:
      return a.bin == b.bin && equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
  }
  return false;
}

StatVector StatVector::from(double x, double a, double b, double loss,
                            double rtt_grad, double rtt_dev) {
  StatVector s;
  s.x = x;
  s.a = a;
  s.b = b;
  s.xn = (x - a) / (b - a);
  s.loss = loss;
  s.rtt_grad = rtt_grad;
  s.rtt_dev = rtt_dev;
  return s;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  ExprPtr run() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("empty expression", 0);
    ExprPtr e = parse_expr();
    skip_ws();
    if (pos_ < text_.size())
      fail("unexpected trailing input '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg + " at position " + std::to_string(pos_), pos_);
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  // expr := term (('+' | '-') term)*
  ExprPtr parse_expr() {
    ExprPtr lhs = parse_term();
    for (;;) {
      if (eat('+'))
        lhs = Expr::binary(BinOp::Add, lhs, parse_term());
      else if (eat('-'))
        lhs = Expr::binary(BinOp::Sub, lhs, parse_term());
      else
        return lhs;
    }
  }

  // term := unary (('*' | '/') unary)*
  ExprPtr parse_term() {
    ExprPtr lhs = parse_unary();
    for (;;) {
      if (eat('*'))
        lhs = Expr::binary(BinOp::Mul, lhs, parse_unary());
      else if (eat('/'))
        lhs = Expr::binary(BinOp::Div, lhs, parse_unary());
      else
        return lhs;
    }
  }

  // unary := '-' unary | power
  ExprPtr parse_unary() {
    if (eat('-')) return Expr::unary(UnOp::Neg, parse_unary());
    return parse_power();
  }

  // power := atom ('^' unary)?   (right-associative, binds above unary '-')
  ExprPtr parse_power() {
    ExprPtr base = parse_atom();
    if (eat('^')) return Expr::binary(BinOp::Pow, base, parse_unary());
    return base;
  }

  ExprPtr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      ExprPtr inner = parse_expr();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
      return parse_ident();
    fail(std::string("unexpected character '") + c + "'");
  }

  ExprPtr parse_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           std::isdigit(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_])))
        ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-'))
        ++pos_;
      if (pos_ < text_.size() &&
          std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        while (pos_ < text_.size() &&
               std::isdigit(static_cast<unsigned char>(text_[pos_])))
          ++pos_;
      } else {
        pos_ = mark;  // bare 'e' belongs to the next token, not this number
      }
    }
    std::string token = text_.substr(start, pos_ - start);
    if (token == ".") {
      pos_ = start;
      fail("malformed number '.'");
    }
    std::string norm = token[0] == '.' ? "0" + token : token;
    double v = 0.0;
    auto [ptr, ec] =
        std::from_chars(norm.data(), norm.data() + norm.size(), v);
    if (ec != std::errc() || ptr != norm.data() + norm.size() ||
        !std::isfinite(v)) {
      pos_ = start;
      fail("malformed number '" + token + "'");
    }
    return Expr::number(v);
  }

  ExprPtr parse_ident() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '_'))
      ++pos_;
    std::string name = text_.substr(start, pos_ - start);

    if (peek() == '(') {
      for (const auto& fn : kFns) {
        if (name == fn.name) {
          expect('(');
          ExprPtr first = parse_expr();
          if (fn.arity == 1) {
            expect(')');
            return Expr::unary(fn.un, first);
          }
          if (!eat(',')) fail(name + " expects exactly two arguments");
          ExprPtr second = parse_expr();
          if (peek() == ',') fail(name + " expects exactly two arguments");
          expect(')');
          return Expr::binary(fn.bin, first, second);
        }
      }
      pos_ = start;
      fail("unknown function '" + name + "'");
    }

    if (name == "pi") return Expr::pi();
    for (const auto& v : kVars) {
      if (name == v.name) return Expr::variable(v.var);
    }
    pos_ = start;
    fail("unknown identifier '" + name + "'");
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

}  // namespace

ExprPtr parse(const std::string& text) { return Parser(text).run(); }

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

namespace {

// Precedence levels used for minimal parenthesisation.
constexpr int kPrecAdd = 1;
constexpr int kPrecMul = 2;
constexpr int kPrecNeg = 3;
constexpr int kPrecPow = 4;
constexpr int kPrecAtom = 5;

int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Number:
    case Expr::Kind::Pi:
    case Expr::Kind::Variable:
      return kPrecAtom;
    case Expr::Kind::Unary:
      return e.un == UnOp::Neg ? kPrecNeg : kPrecAtom;  // calls are atoms
    case Expr::Kind::Binary:
      switch (e.bin) {
        case BinOp::Add:
        case BinOp::Sub:
          return kPrecAdd;
        case BinOp::Mul:
        case BinOp::Div:
          return kPrecMul;
        case BinOp::Pow:
          return kPrecPow;
        case BinOp::Max:
        case BinOp::Min:
          return kPrecAtom;
      }
  }
  return kPrecAtom;
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

void print_node(const Expr& e, int min_prec, std::string& out) {
  const int prec = precedence(e);
  const bool wrap = prec < min_prec;
  if (wrap) out += '(';
  switch (e.kind) {
    case Expr::Kind::Number:
      out += format_number(e.value);
      break;
    case Expr::Kind::Pi:
      out += "pi";
      break;
    case Expr::Kind::Variable:
      out += var_name(e.var);
      break;
    case Expr::Kind::Unary:
      switch (e.un) {
        case UnOp::Neg:
          out += '-';
          print_node(*e.lhs, kPrecNeg, out);
          break;
        case UnOp::Arctan:
        case UnOp::Exp:
        case UnOp::Log:
        case UnOp::Sqrt:
        case UnOp::Abs: {
          const char* name = e.un == UnOp::Arctan ? "arctan"
                             : e.un == UnOp::Exp  ? "exp"
                             : e.un == UnOp::Log  ? "log"
                             : e.un == UnOp::Sqrt ? "sqrt"
                                                  : "abs";
          out += name;
          out += '(';
          print_node(*e.lhs, 0, out);
          out += ')';
          break;
        }
      }
      break;
    case Expr::Kind::Binary:
      switch (e.bin) {
        case BinOp::Add:
        case BinOp::Sub:
          print_node(*e.lhs, kPrecAdd, out);
          out += e.bin == BinOp::Add ? " + " : " - ";
          print_node(*e.rhs, kPrecAdd + 1, out);
          break;
        case BinOp::Mul:
        case BinOp::Div:
          print_node(*e.lhs, kPrecMul, out);
          out += e.bin == BinOp::Mul ? " * " : " / ";
          print_node(*e.rhs, kPrecMul + 1, out);
          break;
        case BinOp::Pow:
          // Base must be an atom ('-x^2' reads as -(x^2)); exponent may be a
          // unary chain ('x^-2' is fine).
          print_node(*e.lhs, kPrecAtom, out);
          out += '^';
          print_node(*e.rhs, kPrecNeg, out);
          break;
        case BinOp::Max:
        case BinOp::Min:
          out += e.bin == BinOp::Max ? "max(" : "min(";
          print_node(*e.lhs, 0, out);
          out += ", ";
          print_node(*e.rhs, 0, out);
          out += ')';
          break;
      }
      break;
  }
  if (wrap) out += ')';
}

}  // namespace

std::string print(const Expr& e) {
  std::string out;
  print_node(e, 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

struct Eval {
  const StatVector& s;
  const Expr* fault_node = nullptr;
  const char* fault_reason = nullptr;

  double fault(const Expr& node, const char* reason) {
    if (fault_reason == nullptr) {
      fault_node = &node;
      fault_reason = reason;
    }
    return 0.0;
  }

  double run(const Expr& e) {
    if (fault_reason != nullptr) return 0.0;
    switch (e.kind) {
      case Expr::Kind::Number:
        return e.value;
      case Expr::Kind::Pi:
        return std::numbers::pi;
      case Expr::Kind::Variable:
        switch (e.var) {
          case Var::X:
            return s.x;
          case Var::A:
            return s.a;
          case Var::B:
            return s.b;
          case Var::Xn:
            return s.xn;
          case Var::Loss:
            return s.loss;
          case Var::RttGrad:
            return s.rtt_grad;
          case Var::RttDev:
            return s.rtt_dev;
        }
        return 0.0;
      case Expr::Kind::Unary: {
        double v = run(*e.lhs);
        if (fault_reason != nullptr) return 0.0;
        double r = 0.0;
        switch (e.un) {
          case UnOp::Neg:
            r = -v;
            break;
          case UnOp::Arctan:
            r = std::atan(v);
            break;
          case UnOp::Exp:
            r = std::exp(v);
            break;
          case UnOp::Log:
            if (v <= 0.0) return fault(e, "log of non-positive value");
            r = std::log(v);
            break;
          case UnOp::Sqrt:
            if (v < 0.0) return fault(e, "sqrt of negative value");
            r = std::sqrt(v);
            break;
          case UnOp::Abs:
            r = std::fabs(v);
            break;
        }
        if (!std::isfinite(r)) return fault(e, "non-finite result");
        return r;
      }
      case Expr::Kind::Binary: {
        double l = run(*e.lhs);
        double r = run(*e.rhs);
        if (fault_reason != nullptr) return 0.0;
        double out = 0.0;
        switch (e.bin) {
          case BinOp::Add:
            out = l + r;
            break;
          case BinOp::Sub:
            out = l - r;
            break;
          case BinOp::Mul:
            out = l * r;
            break;
          case BinOp::Div:
            if (r == 0.0) return fault(e, "division by zero");
            out = l / r;
            break;
          case BinOp::Pow:
            if (l < 0.0 && !is_integer(r))
              return fault(e, "negative base with non-integer exponent");
            if (l == 0.0 && r < 0.0)
              return fault(e, "zero base with negative exponent");
            out = std::pow(l, r);
            break;
          case BinOp::Max:
            out = std::fmax(l, r);
            break;
          case BinOp::Min:
            out = std::fmin(l, r);
            break;
        }
        if (!std::isfinite(out)) return fault(e, "non-finite result");
        return out;
      }
    }
    return 0.0;
  }
};

}  // namespace

EvalResult evaluate(const Expr& e, const StatVector& stats) {
  Eval ev{stats};
  double v = ev.run(e);
  EvalResult res;
  if (ev.fault_reason != nullptr) {
    res.fault_node = ev.fault_node;
    res.fault_reason = ev.fault_reason;
  } else {
    res.value = v;
  }
  return res;
}

bool references_rate(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Number:
    case Expr::Kind::Pi:
      return false;
    case Expr::Kind::Variable:
      return e.var == Var::X || e.var == Var::Xn;
    case Expr::Kind::Unary:
      return references_rate(*e.lhs);
    case Expr::Kind::Binary:
      return references_rate(*e.lhs) || references_rate(*e.rhs);
  }
  return false;
}

// ---------------------------------------------------------------------------
// Built-in reference functions
// ---------------------------------------------------------------------------

ExprPtr hercules(const HerculesParams& p) {
  using E = Expr;
  ExprPtr x = E::variable(Var::X);
  ExprPtr xn = E::variable(Var::Xn);
  // H(xn) = arctan(d * (xn - 1/2)) / pi + 1/2
  ExprPtr h = E::binary(
      BinOp::Add,
      E::binary(BinOp::Div,
                E::unary(UnOp::Arctan,
                         E::binary(BinOp::Mul, E::number(p.d),
                                   E::binary(BinOp::Sub, xn, E::number(0.5)))),
                E::pi()),
      E::number(0.5));
  // beta*L + gamma*max(0, rtt_grad) + phi*rtt_dev
  ExprPtr penalties = E::binary(
      BinOp::Add,
      E::binary(
          BinOp::Add,
          E::binary(BinOp::Mul, E::number(p.beta), E::variable(Var::Loss)),
          E::binary(BinOp::Mul, E::number(p.gamma),
                    E::binary(BinOp::Max, E::number(0.0),
                              E::variable(Var::RttGrad)))),
      E::binary(BinOp::Mul, E::number(p.phi), E::variable(Var::RttDev)));
  return E::binary(
      BinOp::Sub, E::binary(BinOp::Pow, x, E::number(p.t)),
      E::binary(BinOp::Mul, E::binary(BinOp::Mul, x, h), penalties));
}

ExprPtr vivace(double t, double beta, double gamma) {
  using E = Expr;
  ExprPtr x = E::variable(Var::X);
  return E::binary(
      BinOp::Sub,
      E::binary(BinOp::Sub, E::binary(BinOp::Pow, x, E::number(t)),
                E::binary(BinOp::Mul,
                          E::binary(BinOp::Mul, E::number(beta), x),
                          E::variable(Var::Loss))),
      E::binary(BinOp::Mul, E::binary(BinOp::Mul, E::number(gamma), x),
                E::binary(BinOp::Max, E::number(0.0),
                          E::variable(Var::RttGrad))));
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

std::vector<StatVector> default_probe_grid() {
  const double a = 1.0;
  const double b = 1.5;
  const double xs[] = {0.1 * a, a, (a + b) / 2.0, b, 2.0 * b};
  const double losses[] = {0.0, 0.05, 0.5};
  const double grads[] = {-1.0, 0.0, 1.0};
  const double devs[] = {0.0, 10.0};
  std::vector<StatVector> grid;
  grid.reserve(90);
  for (double x : xs)
    for (double loss : losses)
      for (double grad : grads)
        for (double dev : devs)
          grid.push_back(StatVector::from(x, a, b, loss, grad, dev));
  return grid;
}

ValidityReport validate(const Expr& e, const std::vector<StatVector>& probes) {
  ValidityReport report;
  if (!references_rate(e)) {
    report.failures.push_back(
        {StatVector{}, "expression does not reference the sending rate"});
  }
  for (const auto& probe : probes) {
    EvalResult r = evaluate(e, probe);
    if (!r.ok()) {
      std::ostringstream msg;
      msg << r.fault_reason << " in '" << print(*r.fault_node) << "' at x="
          << probe.x << " L=" << probe.loss << " rtt_grad=" << probe.rtt_grad
          << " rtt_dev=" << probe.rtt_dev;
      report.failures.push_back({probe, msg.str()});
    }
  }
  report.valid = report.failures.empty();
  return report;
}

}  // namespace gencc::dsl
