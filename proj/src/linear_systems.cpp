#include "chronospec/linear_systems.hpp"

#include <algorithm>
#include <cmath>

namespace chronospec {
namespace {

constexpr double kPivotTolerance = 1e-14;

VectorXc block_endpoint(const MatrixXc& c) {
  VectorXc e = VectorXc::Zero(c.rows());
  for (Eigen::Index k = 0; k < c.cols(); ++k) e += (k % 2 ? -1.0 : 1.0) * c.col(k);
  return e;
}

MatrixXc reshape_block(const VectorXc& x, Eigen::Index offset, int n_alpha, int degree) {
  MatrixXc c(n_alpha, degree + 1);
  for (int i = 0; i < n_alpha; ++i)
    for (int k = 0; k <= degree; ++k) c(i, k) = x(offset + static_cast<Eigen::Index>(i) * (degree + 1) + k);
  return c;
}

struct Solved {
  VectorXc x;
  SolveDiagnostics diag;
};

Solved solve_with(SolverKind solver, const MatrixXc& L, const VectorXc& b, const QsvtKernel* kernel) {
  Solved out;
  out.diag.dimension = L.rows();
  if (solver == SolverKind::Direct) {
    DirectSolve d = solve_direct(L, b);
    out.x = std::move(d.x);
    out.diag.residual = d.residual;
    out.diag.kappa = condition_number(L);
  } else {
    QsvtRun r = qsvt_solve(L, b, *kernel);
    out.x = std::move(r.solution);
    out.diag.residual = r.residual;
    out.diag.kappa = r.kappa;
    out.diag.success_probability = r.success_probability;
    out.diag.qsvt_degree = r.degree;
  }
  return out;
}

QsvtKernel kernel_for(SolverKind solver, double kappa, QsvtOptions opts) {
  opts.mode = solver == SolverKind::QsvtCircuit ? QsvtMode::Circuit : QsvtMode::Ideal;
  return prepare_qsvt(kappa, opts);
}

}  // namespace

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

MatrixXc assemble_interval_block(const RescaledInterval& interval, const ChebyshevGrid<>& grid, int n_alpha) {
  if (n_alpha < 1) throw DomainError("assemble_interval_block: N_alpha must be >= 1");
  const int n = grid.degree;
  if (n < 1) throw DomainError("assemble_interval_block: grid degree must be >= 1");
  const Eigen::Index m = n + 1;
  const MatrixXr PD = grid.P * grid.D;

  MatrixXc L = MatrixXc::Zero(n_alpha * m, n_alpha * m);
  for (int l = 1; l <= n; ++l) {
    const MatrixXc Ah = interval(grid.nodes(l));
    if (Ah.rows() != n_alpha || Ah.cols() != n_alpha)
      throw DomainError("assemble_interval_block: A_h is " + std::to_string(Ah.rows()) + "x" +
                        std::to_string(Ah.cols()) + ", expected N_alpha=" + std::to_string(n_alpha));
    for (int i = 0; i < n_alpha; ++i) {
      const Eigen::Index row = i * m + l;
      L.row(row).segment(i * m, m) += PD.row(l).cast<cplx>();
      for (int j = 0; j < n_alpha; ++j)
        if (Ah(i, j) != cplx{0.0, 0.0}) L.row(row).segment(j * m, m) -= Ah(i, j) * grid.P.row(l).cast<cplx>();
    }
  }
  for (int i = 0; i < n_alpha; ++i) L.row(i * m).segment(i * m, m) = grid.P.row(0).cast<cplx>();
  return L;
}

MatrixXc assemble_continuity_block(int n_alpha, int degree) {
  if (n_alpha < 1 || degree < 1) throw DomainError("assemble_continuity_block: sizes must be positive");
  const Eigen::Index m = degree + 1;
  MatrixXc L3 = MatrixXc::Zero(n_alpha * m, n_alpha * m);
  for (int i = 0; i < n_alpha; ++i)
    for (int k = 0; k <= degree; ++k) L3(i * m, i * m + k) = (k % 2) ? -1.0 : 1.0;
  return L3;
}

GlobalSystem assemble_global(const ReducedDynamics& rd, const Segmentation& seg, const ChebyshevGrid<>& grid,
                             const VectorXc& alpha0) {
  const auto na = static_cast<int>(rd.dim());
  if (alpha0.size() != na)
    throw DomainError("assemble_global: alpha0 has length " + std::to_string(alpha0.size()) + ", expected " +
                      std::to_string(na));
  if (!(alpha0.norm() > 0.0)) throw DomainError("assemble_global: alpha0 is zero");
  if (seg.count() < 1) throw DomainError("assemble_global: empty segmentation");

  GlobalSystem sys;
  sys.n_alpha = na;
  sys.degree = grid.degree;
  sys.segmentation = seg;
  const Eigen::Index bs = sys.block_size();
  const Eigen::Index dim = bs * seg.count();
  sys.matrix = MatrixXc::Zero(dim, dim);
  sys.rhs = VectorXc::Zero(dim);

  const MatrixFn A = coefficient_matrix_fn(rd);
  const MatrixXc L3 = assemble_continuity_block(na, grid.degree);
  for (int h = 0; h < seg.count(); ++h) {
    sys.matrix.block(h * bs, h * bs, bs, bs) = assemble_interval_block(rescale_interval(seg, h, A), grid, na);
    if (h > 0) sys.matrix.block(h * bs, (h - 1) * bs, bs, bs) = -L3;
  }
  for (int i = 0; i < na; ++i) sys.rhs(i * (grid.degree + 1)) = alpha0(i);
  return sys;
}

SequentialStep assemble_sequential_step(const RescaledInterval& interval, const ChebyshevGrid<>& grid,
                                        const VectorXc& alpha_prev) {
  const auto na = static_cast<int>(alpha_prev.size());
  if (na < 1 || !(alpha_prev.norm() > 0.0)) throw DomainError("assemble_sequential_step: alpha_prev is zero");
  SequentialStep step;
  step.interval = interval.index;
  step.n_alpha = na;
  step.degree = grid.degree;
  const Eigen::Index bs = step.block_size();
  step.matrix = MatrixXc::Zero(2 * bs, 2 * bs);
  step.matrix.topLeftCorner(bs, bs) = assemble_interval_block(interval, grid, na);
  step.matrix.bottomLeftCorner(bs, bs) = -assemble_continuity_block(na, grid.degree);
  step.matrix.bottomRightCorner(bs, bs).setIdentity();
  step.rhs = VectorXc::Zero(2 * bs);
  for (int i = 0; i < na; ++i) step.rhs(i * (grid.degree + 1)) = alpha_prev(i);
  return step;
}

// ---------------------------------------------------------------------------
// Solve and decode
// ---------------------------------------------------------------------------

DirectSolve solve_direct(const MatrixXc& L, const VectorXc& b) {
  if (L.rows() != L.cols() || L.rows() != b.size()) throw DomainError("solve_direct: dimension mismatch");
  if (!L.allFinite() || !b.allFinite()) throw DomainError("solve_direct: non-finite entries");
  const Eigen::PartialPivLU<MatrixXc> lu(L);
  const double scale = L.cwiseAbs().rowwise().sum().maxCoeff();
  const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(min_pivot > kPivotTolerance * scale))
    throw NumericalError("solve_direct: numerically singular (pivot " + std::to_string(min_pivot) + ")");
  DirectSolve out;
  out.x = lu.solve(b);
  const double bn = b.norm();
  out.residual = bn > 0.0 ? (L * out.x - b).norm() / bn : (L * out.x).norm();
  return out;
}

VectorXc SpectralSolution::evaluate_in(int h, double t) const {
  if (h < 0 || h >= n_tau()) throw DomainError("SpectralSolution: interval index out of range");
  const double a = segmentation.boundaries[static_cast<std::size_t>(h)];
  const double b = segmentation.boundaries[static_cast<std::size_t>(h) + 1];
  const double tol = 1e-12 * std::max(1.0, b - a);
  if (!(t >= a - tol && t <= b + tol))
    throw DomainError("SpectralSolution: t=" + std::to_string(t) + " outside interval " + std::to_string(h));
  const RescaledInterval ri{h, a, b, {}};
  const double tp = std::clamp(ri.to_canonical(std::clamp(t, a, b)), -1.0, 1.0);
  VectorXc v = eval_expansion_rows(coefficients[static_cast<std::size_t>(h)], tp);
  if (renormalized) {
    const double nv = v.norm();
    if (nv > 0.0) v /= nv;
  }
  return v;
}

VectorXc SpectralSolution::evaluate(double t) const {
  const auto& tb = segmentation.boundaries;
  const double T = segmentation.horizon();
  const double tol = 1e-12 * std::max(1.0, T);
  if (!(t >= -tol && t <= T + tol)) throw DomainError("SpectralSolution: t=" + std::to_string(t) + " outside [0, T]");
  const auto it = std::upper_bound(tb.begin(), tb.end(), t);
  const int h = std::clamp(static_cast<int>(it - tb.begin()) - 1, 0, n_tau() - 1);
  return evaluate_in(h, t);
}

VectorXc SpectralSolution::final_state() const {
  VectorXc v = endpoints.back();
  if (renormalized && v.norm() > 0.0) v.normalize();
  return v;
}

SpectralSolution decode_global(const VectorXc& x, const GlobalSystem& system) {
  if (x.size() != system.matrix.rows())
    throw DomainError("decode_global: solution length " + std::to_string(x.size()) + " does not match system");
  SpectralSolution s;
  s.segmentation = system.segmentation;
  s.n_alpha = system.n_alpha;
  s.degree = system.degree;
  for (int h = 0; h < system.n_tau(); ++h) {
    s.coefficients.push_back(reshape_block(x, h * system.block_size(), system.n_alpha, system.degree));
    s.endpoints.push_back(block_endpoint(s.coefficients.back()));
  }
  return s;
}

SequentialDecode decode_sequential_step(const VectorXc& x, const SequentialStep& step) {
  const Eigen::Index bs = step.block_size();
  if (x.size() != 2 * bs) throw DomainError("decode_sequential_step: solution length does not match step");
  SequentialDecode d;
  d.coefficients = reshape_block(x, 0, step.n_alpha, step.degree);
  d.endpoint = VectorXc(step.n_alpha);
  for (int i = 0; i < step.n_alpha; ++i) d.endpoint(i) = x(bs + static_cast<Eigen::Index>(i) * (step.degree + 1));
  const double total = x.squaredNorm();
  d.index_probability = total > 0.0 ? x.tail(bs).squaredNorm() / total : 0.0;
  d.endpoint_norm = d.endpoint.norm();
  if (!(d.endpoint_norm > 0.0)) throw NumericalError("decode_sequential_step: endpoint vanished");
  d.endpoint /= d.endpoint_norm;
  return d;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

std::string to_string(PipelineMode m) { return m == PipelineMode::Global ? "global" : "sequential"; }

std::string to_string(SolverKind s) {
  switch (s) {
    case SolverKind::Direct: return "direct";
    case SolverKind::QsvtIdeal: return "qsvt_ideal";
    case SolverKind::QsvtCircuit: return "qsvt_circuit";
  }
  return "?";
}

std::string to_string(SegmentationMode m) { return m == SegmentationMode::Uniform ? "uniform" : "adaptive"; }

PipelineMode parse_pipeline_mode(const std::string& s) {
  if (s == "global") return PipelineMode::Global;
  if (s == "sequential") return PipelineMode::Sequential;
  throw DomainError("unknown mode '" + s + "' (expected global|sequential)");
}

SolverKind parse_solver_kind(const std::string& s) {
  if (s == "direct") return SolverKind::Direct;
  if (s == "qsvt_ideal" || s == "qsvt-ideal") return SolverKind::QsvtIdeal;
  if (s == "qsvt_circuit" || s == "qsvt-circuit") return SolverKind::QsvtCircuit;
  throw DomainError("unknown solver '" + s + "' (expected direct|qsvt_ideal|qsvt_circuit)");
}

SegmentationMode parse_segmentation_mode(const std::string& s) {
  if (s == "uniform") return SegmentationMode::Uniform;
  if (s == "adaptive") return SegmentationMode::Adaptive;
  throw DomainError("unknown segmentation '" + s + "' (expected uniform|adaptive)");
}

Segmentation make_segmentation(const MatrixFn& A, double horizon, const SegmentationOptions& options) {
  if (options.mode == SegmentationMode::Adaptive) {
    const int n = options.n_tau > 0 ? options.n_tau : minimal_adaptive_segments(horizon, A);
    return segment_adaptive(horizon, A, n);
  }
  const int samples = default_sample_count(horizon, options.samples_per_unit_time);
  Segmentation minimal = segment_uniform(horizon, A, samples);
  if (options.n_tau == 0 || options.n_tau == minimal.count()) return minimal;
  if (options.n_tau < minimal.count())
    throw InfeasibleSegmentation("uniform segmentation: " + std::to_string(options.n_tau) +
                                     " segments violate the per-segment norm bound; minimal feasible count is " +
                                     std::to_string(minimal.count()),
                                 minimal.count());
  Segmentation seg = uniform_boundaries(horizon, options.n_tau);
  seg.max_scaled_norm = minimal.max_scaled_norm * minimal.count() / options.n_tau;
  return seg;
}

double PipelineResult::max_kappa() const {
  double k = 0.0;
  for (const auto& s : solves) k = std::max(k, s.kappa);
  return k;
}

double PipelineResult::max_residual() const {
  double r = 0.0;
  for (const auto& s : solves) r = std::max(r, s.residual);
  return r;
}

PipelineResult run_pipeline(const ReducedDynamics& rd, const VectorXc& alpha0, const PipelineOptions& options) {
  const Segmentation seg = make_segmentation(coefficient_matrix_fn(rd), rd.horizon, options.segmentation);
  return run_pipeline(rd, alpha0, seg, options);
}

PipelineResult run_pipeline(const ReducedDynamics& rd, const VectorXc& alpha0, const Segmentation& seg,
                            const PipelineOptions& options) {
  if (std::abs(seg.horizon() - rd.horizon) > 1e-12 * std::max(1.0, rd.horizon))
    throw DomainError("run_pipeline: segmentation horizon does not match the problem");
  const ChebyshevGrid<> grid = build_chebyshev_grid(options.degree);
  PipelineResult result;

  if (options.mode == PipelineMode::Global) {
    const GlobalSystem sys = assemble_global(rd, seg, grid, alpha0);
    std::optional<QsvtKernel> kernel;
    if (options.solver != SolverKind::Direct)
      kernel = kernel_for(options.solver, condition_number(sys.matrix), options.qsvt);
    Solved s = solve_with(options.solver, sys.matrix, sys.rhs, kernel ? &*kernel : nullptr);
    result.solution = decode_global(s.x, sys);
    result.solution.renormalized = options.renormalize;
    result.solves.push_back(s.diag);
    return result;
  }

  // Sequential: one polynomial covers every step, so size it for the worst block.
  const MatrixFn A = coefficient_matrix_fn(rd);
  std::vector<RescaledInterval> intervals;
  for (int h = 0; h < seg.count(); ++h) intervals.push_back(rescale_interval(seg, h, A));
  std::optional<QsvtKernel> kernel;
  if (options.solver != SolverKind::Direct) {
    double kmax = 1.0;
    for (const auto& ri : intervals)
      kmax = std::max(kmax, condition_number(assemble_sequential_step(ri, grid, alpha0).matrix));
    kernel = kernel_for(options.solver, kmax, options.qsvt);
  }

  SpectralSolution& sol = result.solution;
  sol.segmentation = seg;
  sol.n_alpha = static_cast<int>(alpha0.size());
  sol.degree = options.degree;
  VectorXc prev = alpha0;
  for (const auto& ri : intervals) {
    try {
      const SequentialStep step = assemble_sequential_step(ri, grid, prev);
      Solved s = solve_with(options.solver, step.matrix, step.rhs, kernel ? &*kernel : nullptr);
      SequentialDecode d = decode_sequential_step(s.x, step);
      s.diag.interval = ri.index;
      s.diag.index_probability = d.index_probability;
      result.solves.push_back(s.diag);
      sol.coefficients.push_back(std::move(d.coefficients));
      sol.endpoint_norms.push_back(d.endpoint_norm);
      sol.endpoints.push_back(d.endpoint);
      prev = std::move(d.endpoint);
    } catch (const DomainError& e) {
      throw DomainError("interval " + std::to_string(ri.index) + ": " + e.what());
    } catch (const std::exception& e) {
      throw NumericalError("interval " + std::to_string(ri.index) + ": " + e.what());
    }
  }
  return result;
}

}  // namespace chronospec
