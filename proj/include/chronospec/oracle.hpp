#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chronospec/hamiltonian.hpp"
#include "chronospec/linear_systems.hpp"

namespace chronospec {

struct IntegratorOptions {
  double rtol = 1e-12;
  double atol = 1e-14;
  long max_steps = 5'000'000;
};

struct IntegratorStats {
  long steps = 0;
  long rejected = 0;
  long evaluations = 0;
  double rtol = 0.0;
  double atol = 0.0;

  nlohmann::json to_json() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<VectorXc> states;
  IntegratorStats stats;

  std::size_t size() const { return times.size(); }
  const VectorXc& final_state() const { return states.back(); }
};

/// dy/dt written into `dy`.
using OdeRhs = std::function<void(double t, const VectorXc& y, VectorXc& dy)>;

/// Dormand-Prince 5(4) with PI step control and continuous extension. States
/// are reported at `samples`, which must be increasing and inside [t0, t1].
Trajectory integrate_dopri5(const OdeRhs& f, const VectorXc& y0, double t0, double t1,
                            const std::vector<double>& samples, const IntegratorOptions& options = {});

/// `count` equispaced times on [0, T], both ends included.
std::vector<double> uniform_samples(double horizon, int count);

/// d alpha/dt = A(t) alpha on [0, T].
Trajectory integrate_reduced_ode(const MatrixFn& A, const VectorXc& alpha0, double horizon,
                                 const std::vector<double>& samples, const IntegratorOptions& options = {});

/// i d psi/dt = H(t) psi with matrix-free Pauli action.
Trajectory propagate_full_hilbert(const LcuHamiltonian& h, const VectorXc& psi0, const std::vector<double>& samples,
                                  const IntegratorOptions& options = {},
                                  int qubit_cap = LcuHamiltonian::kDefaultDenseQubitCap);

/// t, Re/Im of every component, norm.
void write_trajectory_csv(std::ostream& os, const std::vector<double>& times, const std::vector<VectorXc>& states);

// ---------------------------------------------------------------------------
// Observables and metrics
// ---------------------------------------------------------------------------

/// Projector onto span(targets); targets are orthonormal.
struct ObservableSpec {
  std::vector<VectorXc> targets;
  std::string label;

  /// Throws DomainError unless the targets are orthonormal to 1e-10.
  void validate() const;
  nlohmann::json to_json() const;
};

/// Computational basis targets |b> for b in `indices`.
ObservableSpec basis_observable(int n_qubits, const std::vector<std::uint64_t>& indices, std::string label);

/// sum_targets |<target|psi>|^2. Rejects ||psi|| off 1 by more than 1e-6.
double projection_probability(const VectorXc& psi, const ObservableSpec& obs);

/// |<a|b>|^2
double fidelity(const VectorXc& a, const VectorXc& b);

struct ErrorMetrics {
  std::vector<double> times;
  std::vector<double> fidelity;
  std::vector<double> probability;
  std::vector<double> probability_exact;
  std::vector<double> norm;
  /// |P(T) - P_exact(T)| / P_exact(T), or the absolute difference when P_exact(T) = 0.
  double delta_p = 0.0;
  bool delta_p_relative = true;
  double min_fidelity = 1.0;
  double max_norm_drift = 0.0;

  nlohmann::json summary_json() const;
};

/// Maps a state of the approximation into the reference's space.
using StateLift = std::function<VectorXc(const VectorXc&)>;

/// Metrics for states sampled at ref.times. Probabilities are taken on
/// normalized states; norm drift on the raw approximation.
ErrorMetrics error_metrics(const std::vector<VectorXc>& approx, const Trajectory& ref, const ObservableSpec& obs,
                           const StateLift& lift = {});
ErrorMetrics error_metrics(const Trajectory& approx, const Trajectory& ref, const ObservableSpec& obs,
                           const StateLift& lift = {});
ErrorMetrics error_metrics(const SpectralSolution& approx, const Trajectory& ref, const ObservableSpec& obs,
                           const StateLift& lift = {});

}  // namespace chronospec
