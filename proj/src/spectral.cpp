#include "chronospec/spectral.hpp"

#include <algorithm>
#include <limits>

namespace chronospec {
namespace {

constexpr double kQuadratureTol = 1e-10;
constexpr double kBisectionTol = 1e-12;

double norm_at(const MatrixFn& A, double t) {
  const MatrixXc m = A(t);
  const double v = m.allFinite() ? spectral_norm(m) : std::numeric_limits<double>::quiet_NaN();
  if (!std::isfinite(v)) throw NumericalError("norm of A(t) is not finite at t=" + std::to_string(t));
  return v;
}

double simpson(double fa, double fm, double fb, double a, double b) { return (b - a) / 6.0 * (fa + 4.0 * fm + fb); }

double simpson_recurse(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                       double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(fa, flm, fm, a, m);
  const double right = simpson(fm, frm, fb, m, b);
  const double delta = left + right - whole;
  if (depth <= 0) {
    if (std::abs(delta) > 15.0 * tol) throw NumericalError("adaptive Simpson: recursion depth exhausted");
    return left + right + delta / 15.0;
  }
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         simpson_recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

}  // namespace

nlohmann::json Segmentation::to_json() const {
  nlohmann::json j{{"mode", mode == SegmentationMode::Uniform ? "uniform" : "adaptive"},
                   {"count", count()},
                   {"norm", norm},
                   {"boundaries", boundaries}};
  if (!segment_integrals.empty()) j["segment_integrals"] = segment_integrals;
  if (mode == SegmentationMode::Uniform) j["max_scaled_norm"] = max_scaled_norm;
  return j;
}

int default_sample_count(double horizon, double per_unit) {
  return std::max(2, static_cast<int>(std::ceil(per_unit * horizon)) + 1);
}

Segmentation uniform_boundaries(double horizon, int n_tau) {
  if (!(horizon > 0.0)) throw DomainError("segmentation: horizon must be positive");
  if (n_tau < 1) throw DomainError("segmentation: need at least one segment");
  Segmentation seg;
  seg.mode = SegmentationMode::Uniform;
  seg.boundaries.resize(static_cast<std::size_t>(n_tau) + 1);
  for (int h = 0; h <= n_tau; ++h) seg.boundaries[static_cast<std::size_t>(h)] = horizon * h / n_tau;
  seg.boundaries.back() = horizon;
  return seg;
}

Segmentation segment_uniform(double horizon, const MatrixFn& A, int samples) {
  if (!(horizon > 0.0)) throw DomainError("segment_uniform: horizon must be positive");
  if (samples < 2) throw DomainError("segment_uniform: need at least 2 samples");
  double max_norm = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double t = (s == samples - 1) ? horizon : horizon * s / (samples - 1);
    max_norm = std::max(max_norm, norm_at(A, t));
  }
  const int n_tau = std::max(1, static_cast<int>(std::ceil(0.5 * horizon * max_norm - 1e-12)));
  Segmentation seg = uniform_boundaries(horizon, n_tau);
  seg.max_scaled_norm = horizon / (2.0 * n_tau) * max_norm;
  return seg;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int max_depth) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return simpson_recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth);
}

int minimal_adaptive_segments(double horizon, const MatrixFn& A) {
  const auto half_norm = [&](double t) { return 0.5 * norm_at(A, t); };
  const double total = adaptive_simpson(half_norm, 0.0, horizon, kQuadratureTol);
  return std::max(1, static_cast<int>(std::ceil(total - 1e-9)));
}

Segmentation segment_adaptive(double horizon, const MatrixFn& A, int n_tau) {
  if (!(horizon > 0.0)) throw DomainError("segment_adaptive: horizon must be positive");
  if (n_tau < 1) throw DomainError("segment_adaptive: need at least one segment");
  const auto half_norm = [&](double t) { return 0.5 * norm_at(A, t); };
  const double total = adaptive_simpson(half_norm, 0.0, horizon, kQuadratureTol);
  const double per_segment = total / n_tau;
  if (per_segment > 1.0 + 1e-9) {
    const int minimal = std::max(1, static_cast<int>(std::ceil(total - 1e-9)));
    throw InfeasibleSegmentation("segment_adaptive: " + std::to_string(n_tau) +
                                     " segments carry " + std::to_string(per_segment) +
                                     " each (> 1); minimal feasible count is " + std::to_string(minimal),
                                 minimal);
  }

  Segmentation seg;
  seg.mode = SegmentationMode::Adaptive;
  seg.boundaries.push_back(0.0);
  if (total == 0.0) {
    seg = uniform_boundaries(horizon, n_tau);
    seg.mode = SegmentationMode::Adaptive;
    seg.segment_integrals.assign(static_cast<std::size_t>(n_tau), 0.0);
    return seg;
  }
  double left = 0.0;
  for (int h = 1; h < n_tau; ++h) {
    // Bisection on G(t) = int_left^t ||A||/2 - per_segment, monotone in t.
    double lo = left, hi = horizon;
    while (hi - lo > kBisectionTol * std::max(1.0, horizon)) {
      const double mid = 0.5 * (lo + hi);
      const double mass = adaptive_simpson(half_norm, left, mid, kQuadratureTol / n_tau);
      (mass < per_segment ? lo : hi) = mid;
    }
    const double b = 0.5 * (lo + hi);
    seg.boundaries.push_back(b);
    left = b;
  }
  seg.boundaries.push_back(horizon);
  for (int h = 0; h < n_tau; ++h)
    seg.segment_integrals.push_back(adaptive_simpson(half_norm, seg.boundaries[static_cast<std::size_t>(h)],
                                                     seg.boundaries[static_cast<std::size_t>(h) + 1],
                                                     kQuadratureTol / n_tau));
  for (std::size_t h = 1; h < seg.boundaries.size(); ++h)
    if (!(seg.boundaries[h] > seg.boundaries[h - 1]))
      throw NumericalError("segment_adaptive: boundaries are not strictly increasing");
  return seg;
}

RescaledInterval rescale_interval(const Segmentation& seg, int h, const MatrixFn& A) {
  if (h < 0 || h >= seg.count())
    throw DomainError("rescale_interval: index " + std::to_string(h) + " out of range");
  return RescaledInterval{h, seg.boundaries[static_cast<std::size_t>(h)],
                          seg.boundaries[static_cast<std::size_t>(h) + 1], A};
}

}  // namespace chronospec
