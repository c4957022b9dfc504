#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chronospec/qsvt.hpp"
#include "chronospec/spectral.hpp"
#include "chronospec/variational.hpp"

namespace chronospec {

// Register layout everywhere: (interval h) x (component i) x (Chebyshev order k),
// flat index h * N_alpha (n+1) + i (n+1) + k.

struct GlobalSystem {
  MatrixXc matrix;
  VectorXc rhs;
  int n_alpha = 0;
  int degree = 0;
  Segmentation segmentation;

  int n_tau() const { return segmentation.count(); }
  Eigen::Index block_size() const { return static_cast<Eigen::Index>(n_alpha) * (degree + 1); }
};

/// [[L1 + L2(A_h), 0], [-L3, I]] acting on (q) x (i) x (k).
struct SequentialStep {
  MatrixXc matrix;
  VectorXc rhs;
  int interval = 0;
  int n_alpha = 0;
  int degree = 0;

  Eigen::Index block_size() const { return static_cast<Eigen::Index>(n_alpha) * (degree + 1); }
};

/// Collocation block for one interval: row (i, 0) fixes the value at t' = 1,
/// rows (i, l >= 1) impose alpha'(t'_l) - A_h(t'_l) alpha(t'_l) = 0.
MatrixXc assemble_interval_block(const RescaledInterval& interval, const ChebyshevGrid<>& grid, int n_alpha);

/// L3: writes sum_k (-1)^k c_{i,k} (the value at t' = -1) into the k = 0 slots.
MatrixXc assemble_continuity_block(int n_alpha, int degree);

GlobalSystem assemble_global(const ReducedDynamics& rd, const Segmentation& seg, const ChebyshevGrid<>& grid,
                             const VectorXc& alpha0);

SequentialStep assemble_sequential_step(const RescaledInterval& interval, const ChebyshevGrid<>& grid,
                                        const VectorXc& alpha_prev);

struct DirectSolve {
  VectorXc x;
  /// ||L x - b|| / ||b||
  double residual = 0.0;
};

/// Dense LU with partial pivoting. Rejects pivots below 1e-14 ||L||.
DirectSolve solve_direct(const MatrixXc& L, const VectorXc& b);

template <typename System>
  requires requires(const System& s) {
    s.matrix;
    s.rhs;
  }
DirectSolve solve_direct(const System& system) {
  return solve_direct(system.matrix, system.rhs);
}

/// Piecewise Chebyshev trajectory alpha(t).
struct SpectralSolution {
  Segmentation segmentation;
  int n_alpha = 0;
  int degree = 0;
  /// Per interval: N_alpha x (n+1) coefficients c_{h,i,k}.
  std::vector<MatrixXc> coefficients;
  /// alpha_h(t' = -1), after renormalization in sequential mode.
  std::vector<VectorXc> endpoints;
  /// Sequential mode: endpoint norms before renormalization.
  std::vector<double> endpoint_norms;
  /// Scale reconstructed states to unit norm on evaluation.
  bool renormalized = false;

  int n_tau() const { return segmentation.count(); }
  /// Value from interval h at physical time t (must lie in that interval).
  VectorXc evaluate_in(int h, double t) const;
  /// Value at t; interval boundaries belong to the later interval, T to the last.
  VectorXc evaluate(double t) const;
  VectorXc final_state() const;
};

SpectralSolution decode_global(const VectorXc& x, const GlobalSystem& system);

struct SequentialDecode {
  MatrixXc coefficients;
  VectorXc endpoint;
  double endpoint_norm = 0.0;
  /// ||q = 1 block||^2 / ||x||^2
  double index_probability = 0.0;
};

/// Splits the q = 0 coefficients and q = 1 endpoint and renormalizes the endpoint.
SequentialDecode decode_sequential_step(const VectorXc& x, const SequentialStep& step);

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

enum class PipelineMode { Global, Sequential };
enum class SolverKind { Direct, QsvtIdeal, QsvtCircuit };

std::string to_string(PipelineMode m);
std::string to_string(SolverKind s);
PipelineMode parse_pipeline_mode(const std::string& s);
SolverKind parse_solver_kind(const std::string& s);
SegmentationMode parse_segmentation_mode(const std::string& s);
std::string to_string(SegmentationMode m);

struct SegmentationOptions {
  SegmentationMode mode = SegmentationMode::Uniform;
  /// 0 selects the minimal count satisfying the per-segment bound.
  int n_tau = 0;
  double samples_per_unit_time = kDefaultSamplesPerUnitTime;
};

/// Uniform: requested counts below the bound-satisfying minimum raise
/// InfeasibleSegmentation. Adaptive: see segment_adaptive.
Segmentation make_segmentation(const MatrixFn& A, double horizon, const SegmentationOptions& options);

struct PipelineOptions {
  PipelineMode mode = PipelineMode::Global;
  SolverKind solver = SolverKind::Direct;
  int degree = 4;
  SegmentationOptions segmentation;
  QsvtOptions qsvt;
  /// Global mode: renormalize reconstructed states.
  bool renormalize = false;
};

struct SolveDiagnostics {
  /// -1 for the single global solve.
  int interval = -1;
  Eigen::Index dimension = 0;
  double kappa = 0.0;
  double residual = 0.0;
  /// QSVT postselection probability (1 for direct solves).
  double success_probability = 1.0;
  /// Sequential mode: weight of the q = 1 register block.
  double index_probability = 1.0;
  int qsvt_degree = 0;
};

struct PipelineResult {
  SpectralSolution solution;
  std::vector<SolveDiagnostics> solves;

  double max_kappa() const;
  double max_residual() const;
};

/// Errors from a sequential step are rethrown with the interval index prepended.
PipelineResult run_pipeline(const ReducedDynamics& rd, const VectorXc& alpha0, const PipelineOptions& options);

/// Same, on a fixed segmentation.
PipelineResult run_pipeline(const ReducedDynamics& rd, const VectorXc& alpha0, const Segmentation& seg,
                            const PipelineOptions& options);

// ---------------------------------------------------------------------------
// Resource accounting
// ---------------------------------------------------------------------------

struct ResourceEstimate {
  long long dimension = 0;
  int qubits = 0;
  long long invocations = 0;

  friend constexpr bool operator==(const ResourceEstimate&, const ResourceEstimate&) = default;
};

constexpr int ceil_log2(long long v) {
  int bits = 0;
  while ((1LL << bits) < v) ++bits;
  return bits;
}

/// Register qubits ceil(log2 dim) plus one QSVT ancilla.
constexpr ResourceEstimate estimate_resources(long long n_tau, long long n_alpha, long long degree,
                                              PipelineMode mode) {
  const long long block = n_alpha * (degree + 1);
  const long long dim = mode == PipelineMode::Global ? n_tau * block : 2 * block;
  return {dim, ceil_log2(dim) + 1, mode == PipelineMode::Global ? 1 : n_tau};
}

}  // namespace chronospec
