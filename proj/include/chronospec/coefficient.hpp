#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "chronospec/linalg.hpp"

namespace chronospec {

/// Malformed coefficient descriptor or expression. `position()` is the
/// character offset into the expression text, or -1 when not applicable.
class ParseError : public std::invalid_argument {
 public:
  ParseError(const std::string& what, long position = -1)
      : std::invalid_argument(what), position_(position) {}
  long position() const { return position_; }

 private:
  long position_;
};

namespace expr {
struct Node;
}

/// Scalar time-dependent coefficient g(t).
class CoefficientFn {
 public:
  struct Constant {
    cplx value;
  };
  /// sum_k coeffs[k] t^k
  struct Polynomial {
    std::vector<cplx> coeffs;
  };
  /// amplitude * f(frequency * t + phase), f = cos or sin
  struct Trig {
    cplx amplitude;
    double frequency = 1.0;
    double phase = 0.0;
    bool use_sine = false;
  };
  /// amplitude * exp(-(t - center)^2 / (2 width^2))
  struct Gaussian {
    cplx amplitude;
    double center = 0.0;
    double width = 1.0;
  };
  /// Natural cubic spline through (t, value) samples.
  struct SplineTable {
    std::vector<double> t;
    std::vector<double> values;
    std::vector<double> second_derivs;
  };
  struct Expression {
    std::string text;
    std::shared_ptr<const expr::Node> root;
  };
  /// Sum of merged coefficients (duplicate Pauli strings).
  struct Sum {
    std::vector<CoefficientFn> parts;
  };

  using Variant = std::variant<Constant, Polynomial, Trig, Gaussian, SplineTable, Expression, Sum>;

  CoefficientFn() : v_(Constant{cplx{0.0, 0.0}}) {}
  explicit CoefficientFn(Variant v) : v_(std::move(v)) {}

  static CoefficientFn constant(cplx value) { return CoefficientFn(Constant{value}); }
  static CoefficientFn polynomial(std::vector<cplx> coeffs);
  static CoefficientFn trig(cplx amplitude, double frequency, double phase, bool use_sine = false);
  static CoefficientFn gaussian(cplx amplitude, double center, double width);
  static CoefficientFn spline(std::vector<double> t, std::vector<double> values);
  /// Grammar: + - * / ^ ( ) t sin cos exp and numeric literals.
  static CoefficientFn expression(const std::string& text);
  static CoefficientFn sum(std::vector<CoefficientFn> parts);

  cplx operator()(double t) const;

  const Variant& variant() const { return v_; }
  /// "constant", "polynomial", ... "sum"
  std::string tag() const;
  nlohmann::json to_json() const;

 private:
  Variant v_;
};

/// Builds a coefficient from a structured descriptor such as
/// {"type": "gaussian", "amplitude": 1, "center": 0, "width": 1}.
/// A bare number is a constant and a bare string an expression.
CoefficientFn parse_coefficient(const nlohmann::json& spec);

}  // namespace chronospec
