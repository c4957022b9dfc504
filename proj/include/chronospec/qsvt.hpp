#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chronospec/linalg.hpp"

namespace chronospec {

// ---------------------------------------------------------------------------
// Block encoding
// ---------------------------------------------------------------------------

/// Unitary dilation
///
///   U = [ L/a                   sqrt(I - L L^+ / a^2) ]
///       [ sqrt(I - L^+ L / a^2)  -L^+/a               ]
///
/// with a = largest singular value of L. Rows/columns [0, N) form the block
/// flagged by the encoding ancilla in |0>.
struct BlockEncoding {
  MatrixXc unitary;
  double normalization = 1.0;
  Eigen::Index source_dim = 0;

  auto top_left() const { return unitary.topLeftCorner(source_dim, source_dim); }
};

BlockEncoding build_block_encoding(const MatrixXc& L);

// ---------------------------------------------------------------------------
// Odd polynomial approximation of s/x
// ---------------------------------------------------------------------------

/// P(x) = sum_j a_j T_{2j+1}(x) approximating scale / x on [x_min, 1].
struct InversePolynomial {
  /// a_j multiplies T_{2j+1}; already includes `scale`.
  VectorXr odd_coeffs;
  double kappa = 1.0;
  double epsilon = 0.0;
  double x_min = 1.0;
  double scale = 0.5;
  /// Guaranteed bound on |P(x) - scale/x| over [x_min, 1].
  double error_bound = 0.0;
  /// Largest |P(x) - scale/x| seen on the verification grid.
  double measured_error = 0.0;
  /// Largest |P(x)| on [-1, 1] seen on the verification grid.
  double max_abs = 0.0;
  long binomial_order = 0;
  int degree = 1;

  /// Full Chebyshev coefficient vector of length degree + 1 (even entries zero).
  VectorXr chebyshev() const;
  double operator()(double x) const;
  nlohmann::json to_json() const;
};

struct InversePolynomialOptions {
  /// Upper bound imposed on max |P| over [-1, 1].
  double headroom = 0.9;
  /// Force an odd degree instead of the minimal one (0 = minimal).
  int degree_override = 0;
  int verify_points = 10000;
};

/// Truncated binomial-kernel series (1 - (1 - x^2)^b) / x with
/// b = ceil(kappa^2 ln(2 kappa / eps)), scaled by
/// s = min(1/(2 kappa), headroom / max|series|).
InversePolynomial build_inverse_polynomial(double kappa, double epsilon,
                                           const InversePolynomialOptions& options = {});

/// Minimal odd degree meeting the unscaled error budget for (kappa, eps).
int inverse_polynomial_degree(double kappa, double epsilon);

// ---------------------------------------------------------------------------
// Phase factors
// ---------------------------------------------------------------------------

enum class Parity { Even, Odd };

struct PhaseSequence {
  std::vector<double> phases;
  Parity parity = Parity::Odd;
  /// max |Re response - P| on the fitting grid.
  double residual = 0.0;
  /// max |Im response| on the fitting grid.
  double imag_residual = 0.0;
  int iterations = 0;

  int degree() const { return static_cast<int>(phases.size()); }
  /// Sign-flipped copy; its response is the complex conjugate.
  PhaseSequence conjugated() const;
  nlohmann::json to_json() const;
  static PhaseSequence from_json(const nlohmann::json& j);
};

struct PhaseOptions {
  double tolerance = 1e-10;
  int max_iterations = 100;
};

/// Fits phases so Re qsp_response matches the given definite-parity Chebyshev
/// series, by damped Gauss-Newton on the Chebyshev sample grid.
PhaseSequence compute_phase_factors(const VectorXr& chebyshev_coeffs, const PhaseOptions& options = {});
PhaseSequence compute_phase_factors(const InversePolynomial& poly, const PhaseOptions& options = {});

/// (0,0) entry of Pi_{phi_1} R Pi_{phi_2} R ... Pi_{phi_d} R with
/// R = [[x, sqrt(1-x^2)], [sqrt(1-x^2), -x]] and Pi_phi = diag(e^{i phi}, e^{-i phi}).
cplx qsp_response(std::span<const double> phases, double x);
inline cplx qsp_response(const PhaseSequence& seq, double x) { return qsp_response(seq.phases, x); }

/// U_phi |state>, with U and U^+ alternating so the rightmost factor is U.
VectorXc apply_qsvt_sequence(const BlockEncoding& be, std::span<const double> phases, const VectorXc& state);

/// Layer count: one U or U^+ call plus a three-gate projector phase per
/// phase factor, plus ancilla preparation and measurement.
constexpr int circuit_depth_layers(int degree) { return 4 * degree + 2; }

// ---------------------------------------------------------------------------
// Linear-system solve
// ---------------------------------------------------------------------------

enum class QsvtMode { Ideal, Circuit };

std::string to_string(QsvtMode m);

struct QsvtOptions {
  double epsilon = 1e-6;
  QsvtMode mode = QsvtMode::Ideal;
  double kappa_cap = 1e4;
  /// Circuit mode refuses polynomials above this degree.
  int max_circuit_degree = 4001;
  InversePolynomialOptions polynomial;
  PhaseOptions phase;
};

/// Polynomial (and, in circuit mode, phases) valid for any system with
/// condition number at most `kappa`.
struct QsvtKernel {
  InversePolynomial poly;
  std::optional<PhaseSequence> phases;
  QsvtMode mode = QsvtMode::Ideal;
};

QsvtKernel prepare_qsvt(double kappa, const QsvtOptions& options);

struct QsvtRun {
  /// Estimate of L^{-1} b (classically rescaled).
  VectorXc solution;
  /// Postselected, normalized output state.
  VectorXc normalized_output;
  double success_probability = 0.0;
  QsvtMode mode = QsvtMode::Ideal;
  int degree = 0;
  double kappa = 1.0;
  double alpha_enc = 1.0;
  double scale = 0.5;
  /// ||L x - b|| / ||b||
  double residual = 0.0;
  /// Norm of the discarded imaginary-part component (circuit mode).
  double imag_leak = 0.0;
};

/// Solves L x = b. The polynomial is applied to the singular values of
/// L^+ / a so that the transformed operator approximates s a L^{-1}.
QsvtRun qsvt_solve(const MatrixXc& L, const VectorXc& b, const QsvtOptions& options);
QsvtRun qsvt_solve(const MatrixXc& L, const VectorXc& b, const QsvtKernel& kernel);

template <typename System>
  requires requires(const System& s) {
    s.matrix;
    s.rhs;
  }
QsvtRun qsvt_solve(const System& system, const QsvtOptions& options) {
  return qsvt_solve(system.matrix, system.rhs, options);
}

}  // namespace chronospec
