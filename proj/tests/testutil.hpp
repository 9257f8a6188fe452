// Shared test helpers: a random expression generator and an independent
// reference evaluator used to cross-check the DSL interpreter.
#pragma once

#include <cmath>
#include <optional>
#include <random>

#include "gencc/dsl.hpp"

namespace testutil {

using gencc::dsl::BinOp;
using gencc::dsl::Expr;
using gencc::dsl::ExprPtr;
using gencc::dsl::StatVector;
using gencc::dsl::UnOp;
using gencc::dsl::Var;

inline ExprPtr random_expr(std::mt19937_64& rng, int max_depth) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double roll = unit(rng);
  // Leaves more likely as depth runs out.
  if (max_depth <= 0 || roll < 0.35) {
    const double leaf = unit(rng);
    if (leaf < 0.40) {
      std::uniform_int_distribution<int> pick(0, 6);
      static const Var vars[] = {Var::X,       Var::A,      Var::B, Var::Xn,
                                 Var::Loss,    Var::RttGrad, Var::RttDev};
      return Expr::variable(vars[pick(rng)]);
    }
    if (leaf < 0.45) return Expr::pi();
    // Mixed-magnitude positive literal; occasionally an integer.
    std::uniform_real_distribution<double> mag(-3.0, 3.0);
    double v = std::pow(10.0, mag(rng));
    if (unit(rng) < 0.3) v = std::floor(v) + 1.0;
    return Expr::number(v);
  }
  if (roll < 0.55) {
    std::uniform_int_distribution<int> pick(0, 5);
    static const UnOp ops[] = {UnOp::Neg, UnOp::Arctan, UnOp::Exp,
                               UnOp::Log, UnOp::Sqrt,   UnOp::Abs};
    return Expr::unary(ops[pick(rng)], random_expr(rng, max_depth - 1));
  }
  std::uniform_int_distribution<int> pick(0, 6);
  static const BinOp ops[] = {BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div,
                              BinOp::Pow, BinOp::Max, BinOp::Min};
  return Expr::binary(ops[pick(rng)], random_expr(rng, max_depth - 1),
                      random_expr(rng, max_depth - 1));
}

inline StatVector random_stats(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double a = 0.1 + 49.9 * unit(rng);
  double b = a * (1.01 + 2.0 * unit(rng));
  double x = 100.0 * unit(rng);
  return StatVector::from(x, a, b, unit(rng), 10.0 * unit(rng) - 5.0,
                          50.0 * unit(rng));
}

// Reference tree walk, written separately from dsl::evaluate: nullopt on any
// domain error or non-finite intermediate.
inline std::optional<double> oracle_eval(const Expr& e, const StatVector& s) {
  auto finite = [](double v) -> std::optional<double> {
    if (!std::isfinite(v)) return std::nullopt;
    return v;
  };
  switch (e.kind) {
    case Expr::Kind::Number:
      return e.value;
    case Expr::Kind::Pi:
      return 3.14159265358979323846;
    case Expr::Kind::Variable:
      switch (e.var) {
        case Var::X: return s.x;
        case Var::A: return s.a;
        case Var::B: return s.b;
        case Var::Xn: return s.xn;
        case Var::Loss: return s.loss;
        case Var::RttGrad: return s.rtt_grad;
        case Var::RttDev: return s.rtt_dev;
      }
      return std::nullopt;
    case Expr::Kind::Unary: {
      auto v = oracle_eval(*e.lhs, s);
      if (!v) return std::nullopt;
      switch (e.un) {
        case UnOp::Neg: return finite(-*v);
        case UnOp::Arctan: return finite(std::atan(*v));
        case UnOp::Exp: return finite(std::exp(*v));
        case UnOp::Log:
          if (*v <= 0.0) return std::nullopt;
          return finite(std::log(*v));
        case UnOp::Sqrt:
          if (*v < 0.0) return std::nullopt;
          return finite(std::sqrt(*v));
        case UnOp::Abs: return finite(std::fabs(*v));
      }
      return std::nullopt;
    }
    case Expr::Kind::Binary: {
      auto l = oracle_eval(*e.lhs, s);
      auto r = oracle_eval(*e.rhs, s);
      if (!l || !r) return std::nullopt;
      switch (e.bin) {
        case BinOp::Add: return finite(*l + *r);
        case BinOp::Sub: return finite(*l - *r);
        case BinOp::Mul: return finite(*l * *r);
        case BinOp::Div:
          if (*r == 0.0) return std::nullopt;
          return finite(*l / *r);
        case BinOp::Pow:
          if (*l < 0.0 && *r != std::floor(*r)) return std::nullopt;
          if (*l == 0.0 && *r < 0.0) return std::nullopt;
          return finite(std::pow(*l, *r));
        case BinOp::Max: return finite(std::fmax(*l, *r));
        case BinOp::Min: return finite(std::fmin(*l, *r));
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

inline bool close_rel(double a, double b, double tol) {
  double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) <= tol * scale;
}

}  // namespace testutil
