#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chronospec/linalg.hpp"

namespace chronospec {

// ---------------------------------------------------------------------------
// Chebyshev collocation on [-1, 1]
// ---------------------------------------------------------------------------

/// Degree-n Chebyshev-Gauss-Lobatto machinery.
///
///   nodes(l) = cos(l pi / n), l = 0..n (so nodes(0) = 1, nodes(n) = -1)
///   P(k, l)  = cos(k l pi / n): (P c)_l = sum_k c_k T_k(nodes(l))
///   D(k, l)  = 2 l / sigma_k for k + l odd and l > k, sigma_0 = 2, else 1;
///              D maps coefficients of f to coefficients of f'.
template <typename Scalar = double>
struct ChebyshevGrid {
  int degree = 0;
  Vec<Scalar> nodes;
  Mat<Scalar> P;
  Mat<Scalar> D;
};

template <typename Scalar = double>
ChebyshevGrid<Scalar> build_chebyshev_grid(int n) {
  if (n < 1) throw DomainError("build_chebyshev_grid: degree must be >= 1");
  const double pi = std::numbers::pi;
  ChebyshevGrid<Scalar> g;
  g.degree = n;
  g.nodes.resize(n + 1);
  g.P.resize(n + 1, n + 1);
  g.D = Mat<Scalar>::Zero(n + 1, n + 1);
  for (int l = 0; l <= n; ++l) {
    // Exact endpoints; symmetric about zero for the interior.
    g.nodes(l) = (2 * l == n) ? Scalar(0) : Scalar(std::cos(l * pi / n));
  }
  g.nodes(0) = Scalar(1);
  g.nodes(n) = Scalar(-1);
  for (int k = 0; k <= n; ++k)
    for (int l = 0; l <= n; ++l) {
      // cos(k l pi / n) with the argument reduced mod 2n for accuracy.
      const int m = (k * l) % (2 * n);
      g.P(k, l) = Scalar(std::cos(m * pi / n));
    }
  for (int k = 0; k <= n; ++k)
    for (int l = k + 1; l <= n; l += 2) g.D(k, l) = Scalar(2.0 * l / (k == 0 ? 2.0 : 1.0));
  return g;
}

/// sum_k c_k T_k(x) by Clenshaw's recurrence.
template <typename Derived>
typename Derived::Scalar eval_expansion(const Eigen::MatrixBase<Derived>& c, double x) {
  using Scalar = typename Derived::Scalar;
  if (!(x >= -1.0 - 1e-14 && x <= 1.0 + 1e-14))
    throw DomainError("eval_expansion: argument " + std::to_string(x) + " outside [-1, 1]");
  const Eigen::Index n = c.size();
  if (n == 0) return Scalar(0);
  Scalar b1(0), b2(0);
  for (Eigen::Index k = n - 1; k >= 1; --k) {
    const Scalar b0 = c(k) + 2.0 * x * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return c(0) + x * b1 - b2;
}

/// Row-wise Clenshaw: each row of `c` is one expansion.
template <typename Derived>
Vec<typename Derived::Scalar> eval_expansion_rows(const Eigen::MatrixBase<Derived>& c, double x) {
  Vec<typename Derived::Scalar> out(c.rows());
  for (Eigen::Index r = 0; r < c.rows(); ++r) out(r) = eval_expansion(c.row(r).transpose(), x);
  return out;
}

// ---------------------------------------------------------------------------
// Segmentation of [0, T]
// ---------------------------------------------------------------------------

enum class SegmentationMode { Uniform, Adaptive };

struct Segmentation {
  std::vector<double> boundaries;
  SegmentationMode mode = SegmentationMode::Uniform;
  /// Norm used for ||A(t)||; recorded in output metadata.
  std::string norm = "spectral (largest singular value)";
  /// Adaptive mode: integral of ||A||/2 over each segment.
  std::vector<double> segment_integrals;
  /// Uniform mode: (T / 2 N) max ||A|| over the sample grid.
  double max_scaled_norm = 0.0;

  int count() const { return static_cast<int>(boundaries.size()) - 1; }
  double horizon() const { return boundaries.back(); }
  double width(int h) const { return boundaries.at(h + 1) - boundaries.at(h); }
  nlohmann::json to_json() const;
};

/// Reported when the requested adaptive segment count violates the unit budget.
class InfeasibleSegmentation : public std::runtime_error {
 public:
  InfeasibleSegmentation(const std::string& what, int minimal) : std::runtime_error(what), minimal_(minimal) {}
  int minimal_feasible() const { return minimal_; }

 private:
  int minimal_;
};

inline constexpr double kDefaultSamplesPerUnitTime = 64.0;

/// Sample count for norm envelopes on [0, T].
int default_sample_count(double horizon, double per_unit = kDefaultSamplesPerUnitTime);

/// Equally spaced boundaries into the given number of segments.
Segmentation uniform_boundaries(double horizon, int n_tau);

/// N = ceil((T / 2) max ||A||) (at least 1) with max over `samples` equispaced
/// points; the resulting segmentation has (T / 2N) max ||A|| <= 1 on the grid.
Segmentation segment_uniform(double horizon, const MatrixFn& A, int samples);

/// Equal-mass partition of integral ||A(t)||/2 dt into n_tau segments.
/// Throws InfeasibleSegmentation if a segment would carry more than 1.
Segmentation segment_adaptive(double horizon, const MatrixFn& A, int n_tau);

/// ceil(integral_0^T ||A||/2 dt), at least 1.
int minimal_adaptive_segments(double horizon, const MatrixFn& A);

/// Adaptive Simpson quadrature of f on [a, b] to absolute tolerance `tol`.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth = 50);

// ---------------------------------------------------------------------------
// Per-interval rescaling
// ---------------------------------------------------------------------------

/// Segment [T_h, T_{h+1}] mapped to t' in [-1, 1] with t'(T_h) = 1 and
/// t'(T_{h+1}) = -1; A_h(t') = ((T_h - T_{h+1}) / 2) A(t(t')).
struct RescaledInterval {
  int index = 0;
  double t_begin = 0.0;
  double t_end = 0.0;
  MatrixFn A;

  double to_physical(double tp) const {
    if (tp == 1.0) return t_begin;
    if (tp == -1.0) return t_end;
    return t_begin + (1.0 - tp) * (t_end - t_begin) / 2.0;
  }
  double to_canonical(double t) const {
    if (t == t_begin) return 1.0;
    if (t == t_end) return -1.0;
    return 1.0 - 2.0 * (t - t_begin) / (t_end - t_begin);
  }
  double prefactor() const { return (t_begin - t_end) / 2.0; }
  MatrixXc operator()(double tp) const { return prefactor() * A(to_physical(tp)); }
};

RescaledInterval rescale_interval(const Segmentation& seg, int h, const MatrixFn& A);

}  // namespace chronospec
