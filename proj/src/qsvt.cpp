#include "chronospec/qsvt.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "chronospec/spectral.hpp"

namespace chronospec {
namespace {

using Vec2 = std::array<cplx, 2>;

constexpr double kPi = std::numbers::pi;

// Log of C(2b, b+i) / 4^b.
double log_central_binomial_weight(long b, long i) {
  const double bb = static_cast<double>(b);
  return std::lgamma(2.0 * bb + 1.0) - std::lgamma(bb + static_cast<double>(i) + 1.0) -
         std::lgamma(bb - static_cast<double>(i) + 1.0) - 2.0 * bb * std::numbers::ln2;
}

/// a_j of (1 - (1 - x^2)^b) / x = sum_j a_j T_{2j+1}(x), for j < count.
/// Terms beyond `count` underflow to zero.
std::vector<double> binomial_kernel_coeffs(long b) {
  const long cut = std::min<long>(b, static_cast<long>(std::ceil(std::sqrt(745.0 * static_cast<double>(b)))) + 1);
  std::vector<double> w(static_cast<std::size_t>(cut) + 2, 0.0);
  for (long i = 0; i <= cut; ++i) w[static_cast<std::size_t>(i)] = std::exp(log_central_binomial_weight(b, i));
  // tail[j] = sum_{i=j+1}^{cut} w_i, accumulated from the small end.
  std::vector<double> a(static_cast<std::size_t>(std::min(cut, b)), 0.0);
  double tail = 0.0;
  for (long j = cut; j >= 0; --j) {
    if (j < static_cast<long>(a.size())) a[static_cast<std::size_t>(j)] = 4.0 * ((j % 2) ? -tail : tail);
    tail += w[static_cast<std::size_t>(j)];
  }
  return a;
}

struct Truncation {
  int J = 0;
  double dropped = 0.0;
};

/// Smallest J with sum_{j > J} |a_j| <= budget.
Truncation truncate_series(const std::vector<double>& a, double budget) {
  std::vector<double> suffix(a.size() + 1, 0.0);
  for (std::size_t j = a.size(); j-- > 0;) suffix[j] = suffix[j + 1] + std::abs(a[j]);
  for (std::size_t J = 0; J < a.size(); ++J)
    if (suffix[J + 1] <= budget) return {static_cast<int>(J), suffix[J + 1]};
  return {static_cast<int>(a.size()) - 1, 0.0};
}

VectorXr odd_to_full(const VectorXr& odd) {
  VectorXr full = VectorXr::Zero(2 * odd.size());
  for (Eigen::Index j = 0; j < odd.size(); ++j) full(2 * j + 1) = odd(j);
  return full;
}

double golden_max_abs(const VectorXr& full, double lo, double hi) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  auto f = [&](double x) { return std::abs(eval_expansion(full, x)); };
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 60; ++it) {
    if (fc > fd) {
      b = d; d = c; fd = fc; c = b - r * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd; d = a + r * (b - a); fd = f(d);
    }
  }
  return std::max(fc, fd);
}

/// Response and its phase gradient at one point.
/// grad(k) = d/d phi_k of the (0,0) entry.
cplx response_with_gradient(std::span<const double> phases, double x, cplx* grad) {
  const std::size_t d = phases.size();
  const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
  std::vector<cplx> ep(d), em(d);
  for (std::size_t k = 0; k < d; ++k) {
    ep[k] = std::polar(1.0, phases[k]);
    em[k] = std::conj(ep[k]);
  }
  // suffix[k] = (E_k R E_{k+1} R ... E_d R) e_0 as a column
  std::vector<Vec2> suffix(d + 1);
  suffix[d] = {cplx{1.0, 0.0}, cplx{0.0, 0.0}};
  for (std::size_t k = d; k-- > 0;) {
    const Vec2& v = suffix[k + 1];
    const cplx r0 = x * v[0] + s * v[1];
    const cplx r1 = s * v[0] - x * v[1];
    suffix[k] = {ep[k] * r0, em[k] * r1};
  }
  if (grad) {
    Vec2 row{cplx{1.0, 0.0}, cplx{0.0, 0.0}};  // e_0^T E_1 R ... E_{k-1} R
    for (std::size_t k = 0; k < d; ++k) {
      const Vec2& v = suffix[k + 1];
      const cplx r0 = x * v[0] + s * v[1];
      const cplx r1 = s * v[0] - x * v[1];
      // d/dphi of diag(e^{i phi}, e^{-i phi}) = diag(i e^{i phi}, -i e^{-i phi})
      grad[k] = row[0] * (kI * ep[k] * r0) - row[1] * (kI * em[k] * r1);
      const cplx a0 = row[0] * ep[k], a1 = row[1] * em[k];
      row = {a0 * x + a1 * s, a0 * s - a1 * x};
    }
  }
  return suffix[0][0];
}

}  // namespace

// ---------------------------------------------------------------------------

BlockEncoding build_block_encoding(const MatrixXc& L) {
  if (L.rows() != L.cols() || L.size() == 0) throw DomainError("build_block_encoding: matrix must be square and nonempty");
  if (!L.allFinite()) throw DomainError("build_block_encoding: matrix has non-finite entries");
  Eigen::BDCSVD<MatrixXc> svd(L, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw NumericalError("build_block_encoding: SVD failed");
  const VectorXr& sig = svd.singularValues();
  const double a = sig(0);
  if (!(a > 0.0)) throw DomainError("build_block_encoding: zero matrix");

  const Eigen::Index n = L.rows();
  VectorXr comp(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = std::min(1.0, sig(i) / a);
    comp(i) = std::sqrt(std::max(0.0, 1.0 - r * r));
  }
  const MatrixXc& V = svd.matrixU();  // left singular vectors |v>
  const MatrixXc& W = svd.matrixV();  // right singular vectors |w>

  BlockEncoding be;
  be.normalization = a;
  be.source_dim = n;
  be.unitary.resize(2 * n, 2 * n);
  be.unitary.topLeftCorner(n, n) = L / a;
  be.unitary.topRightCorner(n, n) = V * comp.cast<cplx>().asDiagonal() * V.adjoint();
  be.unitary.bottomLeftCorner(n, n) = W * comp.cast<cplx>().asDiagonal() * W.adjoint();
  be.unitary.bottomRightCorner(n, n) = -L.adjoint() / a;
  return be;
}

// ---------------------------------------------------------------------------

VectorXr InversePolynomial::chebyshev() const { return odd_to_full(odd_coeffs); }

double InversePolynomial::operator()(double x) const { return eval_expansion(chebyshev(), x); }

nlohmann::json InversePolynomial::to_json() const {
  std::vector<double> c(odd_coeffs.data(), odd_coeffs.data() + odd_coeffs.size());
  return {{"parity", "odd"},
          {"basis", "chebyshev T_{2j+1}"},
          {"coefficients", c},
          {"degree", degree},
          {"kappa", kappa},
          {"epsilon", epsilon},
          {"x_min", x_min},
          {"scale", scale},
          {"error_bound", error_bound},
          {"measured_error", measured_error},
          {"max_abs", max_abs},
          {"binomial_order", binomial_order}};
}

int inverse_polynomial_degree(double kappa, double epsilon) {
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) throw DomainError("inverse polynomial: kappa must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("inverse polynomial: epsilon must lie in (0, 1)");
  const long b = static_cast<long>(std::ceil(kappa * kappa * std::log(2.0 * kappa / epsilon)));
  const auto a = binomial_kernel_coeffs(b);
  return 2 * truncate_series(a, epsilon / 2.0).J + 1;
}

InversePolynomial build_inverse_polynomial(double kappa, double epsilon, const InversePolynomialOptions& options) {
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) throw DomainError("inverse polynomial: kappa must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("inverse polynomial: epsilon must lie in (0, 1)");
  if (!(options.headroom > 0.0 && options.headroom <= 1.0))
    throw DomainError("inverse polynomial: headroom must lie in (0, 1]");

  InversePolynomial p;
  p.kappa = kappa;
  p.epsilon = epsilon;
  p.x_min = 1.0 / kappa;
  p.binomial_order = static_cast<long>(std::ceil(kappa * kappa * std::log(2.0 * kappa / epsilon)));

  // Unscaled budget: kernel error <= eps/2 on [1/kappa, 1] by the choice of b,
  // truncation tail <= eps/2.
  const auto a = binomial_kernel_coeffs(p.binomial_order);
  double l1 = 0.0;
  for (double v : a) l1 += std::abs(v);
  if (epsilon / 2.0 < 1e3 * std::numeric_limits<double>::epsilon() * l1)
    throw DomainError("inverse polynomial: epsilon " + std::to_string(epsilon) +
                      " is below the achievable floor for double-precision coefficients");

  Truncation tr = truncate_series(a, epsilon / 2.0);
  if (options.degree_override > 0) {
    if (options.degree_override % 2 == 0) throw DomainError("inverse polynomial: degree override must be odd");
    tr.J = std::min<int>((options.degree_override - 1) / 2, static_cast<int>(a.size()) - 1);
    tr.dropped = 0.0;
    for (std::size_t j = static_cast<std::size_t>(tr.J) + 1; j < a.size(); ++j) tr.dropped += std::abs(a[j]);
  }
  p.degree = 2 * tr.J + 1;
  VectorXr odd(tr.J + 1);
  for (int j = 0; j <= tr.J; ++j) odd(j) = a[static_cast<std::size_t>(j)];

  // Sup norm of the unscaled series on [0, 1] (odd symmetry covers [-1, 0]).
  const VectorXr full = odd_to_full(odd);
  const int n = std::max(options.verify_points, 100);
  double gmax = 0.0, xbest = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double x = static_cast<double>(k) / n;
    const double v = std::abs(eval_expansion(full, x));
    if (v > gmax) { gmax = v; xbest = x; }
  }
  gmax = std::max(gmax, golden_max_abs(full, std::max(0.0, xbest - 1.0 / n), std::min(1.0, xbest + 1.0 / n)));

  p.scale = std::min(1.0 / (2.0 * kappa), options.headroom / gmax);
  p.odd_coeffs = p.scale * odd;
  p.max_abs = p.scale * gmax;
  const double kernel_error = kappa * std::pow(1.0 - 1.0 / (kappa * kappa), static_cast<double>(p.binomial_order));
  p.error_bound = p.scale * (kernel_error + tr.dropped);

  const VectorXr scaled = p.chebyshev();
  double err = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double x = p.x_min + (1.0 - p.x_min) * k / n;
    err = std::max(err, std::abs(eval_expansion(scaled, x) - p.scale / x));
  }
  p.measured_error = err;
  if (options.degree_override == 0 && err > p.scale * epsilon * (1.0 + 1e-6))
    throw NumericalError("inverse polynomial: verification error " + std::to_string(err) +
                         " exceeds the requested bound");
  return p;
}

// ---------------------------------------------------------------------------

PhaseSequence PhaseSequence::conjugated() const {
  PhaseSequence c = *this;
  for (double& p : c.phases) p = -p;
  return c;
}

nlohmann::json PhaseSequence::to_json() const {
  return {{"phases", phases},
          {"parity", parity == Parity::Odd ? "odd" : "even"},
          {"degree", degree()},
          {"residual", residual},
          {"imag_residual", imag_residual},
          {"iterations", iterations}};
}

PhaseSequence PhaseSequence::from_json(const nlohmann::json& j) {
  PhaseSequence s;
  if (j.is_array()) {
    s.phases = j.get<std::vector<double>>();
  } else {
    s.phases = j.at("phases").get<std::vector<double>>();
    s.residual = j.value("residual", 0.0);
    s.imag_residual = j.value("imag_residual", 0.0);
    s.iterations = j.value("iterations", 0);
  }
  s.parity = (s.phases.size() % 2) ? Parity::Odd : Parity::Even;
  return s;
}

cplx qsp_response(std::span<const double> phases, double x) {
  if (!(std::abs(x) <= 1.0 + 1e-14)) throw DomainError("qsp_response: |x| must be <= 1");
  return response_with_gradient(phases, std::clamp(x, -1.0, 1.0), nullptr);
}

PhaseSequence compute_phase_factors(const VectorXr& c, const PhaseOptions& options) {
  Eigen::Index d = c.size() - 1;
  const double cmax = c.size() ? c.cwiseAbs().maxCoeff() : 0.0;
  while (d > 0 && std::abs(c(d)) <= 1e-15 * cmax) --d;
  if (d < 0 || cmax == 0.0) throw DomainError("compute_phase_factors: zero target polynomial");
  for (Eigen::Index k = (d + 1) % 2; k <= d; k += 2)
    if (std::abs(c(k)) > 1e-14 * cmax)
      throw DomainError("compute_phase_factors: target does not have definite parity matching its degree");

  PhaseSequence seq;
  seq.parity = (d % 2) ? Parity::Odd : Parity::Even;
  if (d == 0) {
    if (std::abs(c(0) - 1.0) > options.tolerance)
      throw DomainError("compute_phase_factors: a degree-0 target must be the constant 1");
    return seq;
  }

  // Fitting grid: positive Chebyshev nodes, one per free coefficient.
  const Eigen::Index m = (d + 2) / 2;
  std::vector<double> xs(static_cast<std::size_t>(m));
  VectorXr target(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    xs[static_cast<std::size_t>(j)] = std::cos((2.0 * (j + 1) - 1.0) * kPi / (4.0 * m));
    target(j) = eval_expansion(c.head(d + 1), xs[static_cast<std::size_t>(j)]);
  }
  if (target.cwiseAbs().maxCoeff() > 1.0)
    throw DomainError("compute_phase_factors: target exceeds 1 in magnitude");

  // Start where Re(response) vanishes identically.
  std::vector<double> phi(static_cast<std::size_t>(d), kPi / 2.0);
  if (d % 2 == 0) phi[0] = 0.0;

  MatrixXr J(m, d);
  VectorXr resid(m);
  std::vector<cplx> grad(static_cast<std::size_t>(d));
  double imag_max = 0.0;
  auto evaluate = [&](const std::vector<double>& ph, bool with_jacobian) {
    imag_max = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      const cplx r = response_with_gradient(ph, xs[static_cast<std::size_t>(j)], with_jacobian ? grad.data() : nullptr);
      resid(j) = r.real() - target(j);
      imag_max = std::max(imag_max, std::abs(r.imag()));
      if (with_jacobian)
        for (Eigen::Index k = 0; k < d; ++k) J(j, k) = grad[static_cast<std::size_t>(k)].real();
    }
    return resid.cwiseAbs().maxCoeff();
  };

  double err = evaluate(phi, true);
  double damping = 1e-12;
  int it = 0;
  // The grid error bounds the error between nodes only up to the interpolation
  // constant, so iterate past the tolerance while progress is cheap.
  const double polish = 1e-3 * options.tolerance;
  for (; it < options.max_iterations && err > polish; ++it) {
    // Minimum-norm Gauss-Newton step with Levenberg damping.
    MatrixXr G = J * J.transpose();
    G.diagonal().array() += damping * std::max(1.0, G.diagonal().maxCoeff());
    const VectorXr y = G.ldlt().solve(resid);
    const VectorXr step = J.transpose() * y;
    const VectorXr saved = resid;
    bool accepted = false;
    for (double t = 1.0; t > 1e-4; t *= 0.5) {
      std::vector<double> trial = phi;
      for (Eigen::Index k = 0; k < d; ++k) trial[static_cast<std::size_t>(k)] -= t * step(k);
      const double e = evaluate(trial, false);
      if (e < err) {
        phi = std::move(trial);
        err = evaluate(phi, true);
        accepted = true;
        break;
      }
      resid = saved;
    }
    if (!accepted) {
      if (err <= options.tolerance) break;
      damping = std::min(1.0, damping * 100.0);
      evaluate(phi, true);
    } else {
      damping = std::max(1e-14, damping / 10.0);
    }
  }
  seq.phases = std::move(phi);
  seq.residual = err;
  seq.imag_residual = imag_max;
  seq.iterations = it;
  if (err > options.tolerance)
    throw NumericalError("compute_phase_factors: no convergence after " + std::to_string(it) +
                         " iterations (best residual " + std::to_string(err) + ")");
  return seq;
}

PhaseSequence compute_phase_factors(const InversePolynomial& poly, const PhaseOptions& options) {
  return compute_phase_factors(poly.chebyshev(), options);
}

VectorXc apply_qsvt_sequence(const BlockEncoding& be, std::span<const double> phases, const VectorXc& state) {
  const Eigen::Index n = be.source_dim;
  if (state.size() != 2 * n) throw DomainError("apply_qsvt_sequence: state dimension mismatch");
  VectorXc v = state;
  VectorXc tmp(2 * n);
  const std::size_t d = phases.size();
  for (std::size_t j = d; j-- > 0;) {
    // Factor to the right of Pi_{phi_{j+1}} (1-based): U when (d - 1 - j) is even.
    if ((d - 1 - j) % 2 == 0) tmp.noalias() = be.unitary * v;
    else tmp.noalias() = be.unitary.adjoint() * v;
    const cplx ep = std::polar(1.0, phases[j]);
    v.head(n) = ep * tmp.head(n);
    v.tail(n) = std::conj(ep) * tmp.tail(n);
  }
  return v;
}

// ---------------------------------------------------------------------------

std::string to_string(QsvtMode m) { return m == QsvtMode::Ideal ? "ideal" : "circuit"; }

QsvtKernel prepare_qsvt(double kappa, const QsvtOptions& options) {
  if (kappa > options.kappa_cap)
    throw DomainError("qsvt: condition number " + std::to_string(kappa) + " exceeds the cap " +
                      std::to_string(options.kappa_cap));
  QsvtKernel k;
  k.mode = options.mode;
  k.poly = build_inverse_polynomial(std::max(1.0, kappa), options.epsilon, options.polynomial);
  if (options.mode == QsvtMode::Circuit) {
    if (k.poly.degree > options.max_circuit_degree)
      throw DomainError("qsvt: circuit degree " + std::to_string(k.poly.degree) + " exceeds the cap " +
                        std::to_string(options.max_circuit_degree));
    k.phases = compute_phase_factors(k.poly, options.phase);
  }
  return k;
}

QsvtRun qsvt_solve(const MatrixXc& L, const VectorXc& b, const QsvtKernel& kernel) {
  if (L.rows() != L.cols() || L.rows() != b.size()) throw DomainError("qsvt_solve: dimension mismatch");
  const double bnorm = b.norm();
  if (!(bnorm > 0.0)) throw DomainError("qsvt_solve: right-hand side is zero");
  const Eigen::Index n = L.rows();

  Eigen::BDCSVD<MatrixXc> svd(L, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXr& sig = svd.singularValues();
  const double kappa = sig(n - 1) > 0.0 ? sig(0) / sig(n - 1) : std::numeric_limits<double>::infinity();
  if (kappa > kernel.poly.kappa * (1.0 + 1e-9))
    throw DomainError("qsvt_solve: system condition number " + std::to_string(kappa) +
                      " exceeds the polynomial's design value " + std::to_string(kernel.poly.kappa));

  QsvtRun run;
  run.mode = kernel.mode;
  run.degree = kernel.poly.degree;
  run.kappa = kappa;
  run.alpha_enc = sig(0);
  run.scale = kernel.poly.scale;
  const VectorXc bhat = b / bnorm;

  VectorXc y;
  if (kernel.mode == QsvtMode::Ideal) {
    // sum_i P(sigma_i / a) |w_i><v_i| b
    const VectorXr full = kernel.poly.chebyshev();
    VectorXc weights = svd.matrixU().adjoint() * bhat;
    for (Eigen::Index i = 0; i < n; ++i) weights(i) *= eval_expansion(full, std::min(1.0, sig(i) / run.alpha_enc));
    y = svd.matrixV() * weights;
  } else {
    if (!kernel.phases) throw DomainError("qsvt_solve: circuit kernel has no phase sequence");
    const BlockEncoding be = build_block_encoding(L.adjoint());
    VectorXc in = VectorXc::Zero(2 * n);
    in.head(n) = bhat;
    const VectorXc plus = apply_qsvt_sequence(be, kernel.phases->phases, in);
    const VectorXc minus = apply_qsvt_sequence(be, kernel.phases->conjugated().phases, in);
    // Averaging phi and -phi keeps the real polynomial; the difference is the discarded part.
    y = 0.5 * (plus.head(n) + minus.head(n));
    run.imag_leak = (0.5 * (plus.head(n) - minus.head(n))).norm();
  }
  run.success_probability = y.squaredNorm();
  if (!(run.success_probability > 0.0)) throw NumericalError("qsvt_solve: postselection amplitude vanished");
  run.normalized_output = y / std::sqrt(run.success_probability);
  run.solution = y * (bnorm / (run.scale * run.alpha_enc));
  run.residual = (L * run.solution - b).norm() / bnorm;
  return run;
}

QsvtRun qsvt_solve(const MatrixXc& L, const VectorXc& b, const QsvtOptions& options) {
  if (L.rows() != L.cols() || L.rows() != b.size()) throw DomainError("qsvt_solve: dimension mismatch");
  if (!(b.norm() > 0.0)) throw DomainError("qsvt_solve: right-hand side is zero");
  const double kappa = condition_number(L);
  return qsvt_solve(L, b, prepare_qsvt(kappa, options));
}

}  // namespace chronospec
