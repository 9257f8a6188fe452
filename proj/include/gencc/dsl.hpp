// Arithmetic DSL for candidate utility functions.
//
// Candidate functions are small expressions over one monitor interval's
// statistics (sending rate, requirement band, loss, RTT gradient / deviation).
// They are exchanged as text, parsed into an immutable AST, and interpreted.
// Evaluation is total: it either yields a finite double or a fault, never
// inf/nan.
#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace gencc::dsl {

// The fixed variable set. Anything else is a parse error.
enum class Var : std::uint8_t { X, A, B, Xn, Loss, RttGrad, RttDev };

const char* var_name(Var v);

enum class UnOp : std::uint8_t { Neg, Arctan, Exp, Log, Sqrt, Abs };
enum class BinOp : std::uint8_t { Add, Sub, Mul, Div, Pow, Max, Min };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Immutable expression node. Number literals are kept non-negative; negative
// constants are represented as Neg(literal) so printing round-trips exactly.
struct Expr {
  enum class Kind : std::uint8_t { Number, Pi, Variable, Unary, Binary };

  Kind kind;
  double value = 0.0;  // Number
  Var var = Var::X;    // Variable
  UnOp un = UnOp::Neg;
  BinOp bin = BinOp::Add;
  ExprPtr lhs;  // Unary child lives here
  ExprPtr rhs;

  static ExprPtr number(double v);
  static ExprPtr pi();
  static ExprPtr variable(Var v);
  static ExprPtr unary(UnOp op, ExprPtr child);
  static ExprPtr binary(BinOp op, ExprPtr lhs, ExprPtr rhs);
};

bool equal(const Expr& a, const Expr& b);

// One monitor interval's inputs to a utility function. xn is the normalized
// rate (x - a) / (b - a); callers building a StatVector from requirements use
// from(), which fills it in.
struct StatVector {
  double x = 0.0;
  double a = 0.0;
  double b = 0.0;
  double xn = 0.0;
  double loss = 0.0;
  double rtt_grad = 0.0;
  double rtt_dev = 0.0;

  static StatVector from(double x, double a, double b, double loss,
                         double rtt_grad, double rtt_dev);
};

struct ParseError : std::runtime_error {
  ParseError(std::string message, std::size_t position)
      : std::runtime_error(std::move(message)), position(position) {}
  std::size_t position;  // byte offset into the input
};

// Parses the interchange text form. Precedence, tightest first:
// ^ (right-assoc), unary -, * /, + -. max/min/arctan/... are calls.
ExprPtr parse(const std::string& text);

// Canonical text form; parse(print(e)) is structurally equal to e.
std::string print(const Expr& e);

struct EvalResult {
  double value = 0.0;
  const Expr* fault_node = nullptr;
  const char* fault_reason = nullptr;

  bool ok() const { return fault_reason == nullptr; }
};

EvalResult evaluate(const Expr& e, const StatVector& stats);

// True if the expression reads the sending rate (x or its normalized form xn).
bool references_rate(const Expr& e);

struct HerculesParams {
  double t = 0.9;      // rate reward exponent, 0 < t <= 1
  double beta = 11.35; // loss penalty weight
  double gamma = 900.0;  // RTT-gradient penalty weight
  double phi = 11.35;  // RTT-deviation penalty weight
  double d = 4.0;      // scaling-factor steepness
};

// x^t - x * H(xn) * (beta*L + gamma*max(0, rtt_grad) + phi*rtt_dev)
// with H(xn) = arctan(d * (xn - 0.5)) / pi + 0.5.
ExprPtr hercules(const HerculesParams& params = {});

// Vivace-style loss/latency utility, kept as a second built-in reference:
// x^t - beta*x*L - gamma*x*max(0, rtt_grad).
ExprPtr vivace(double t = 0.9, double beta = 11.35, double gamma = 900.0);

struct ProbeFailure {
  StatVector probe;
  std::string diagnostic;
};

struct ValidityReport {
  bool valid = false;
  std::vector<ProbeFailure> failures;
};

// Default screening grid: x in {0.1a, a, (a+b)/2, b, 2b} x L in {0, .05, .5}
// x rtt_grad in {-1, 0, 1} x rtt_dev in {0, 10}, with (a, b) = (1, 1.5).
std::vector<StatVector> default_probe_grid();

// Valid iff every probe evaluates to a finite value and the expression
// references the rate at least once.
ValidityReport validate(const Expr& e, const std::vector<StatVector>& probes);

}  // namespace gencc::dsl
