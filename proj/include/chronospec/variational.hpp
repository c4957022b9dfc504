#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "chronospec/hamiltonian.hpp"

namespace chronospec {

/// Variational basis |phi_i> = U_i |phi_0>, U_0 = I.
///
/// For a computational-basis reference every basis state is a phased basis
/// vector; `images`/`phases` hold that sparse form and `states` the dense form
/// (filled up to the dense qubit cap).
struct VariationalBasis {
  int n_qubits = 0;
  std::vector<PauliString> generators;
  std::optional<std::uint64_t> reference_index;
  VectorXc reference_state;
  std::vector<VectorXc> states;
  std::vector<std::uint64_t> images;
  std::vector<cplx> phases;
  bool orthonormal = false;
  /// Recorded in outputs: which reading of the ansatz produced this basis.
  std::string construction;

  std::size_t size() const { return generators.size(); }
  bool is_computational() const { return !images.empty(); }
  nlohmann::json to_json() const;
};

/// alpha(t) at a given time.
struct VariationalState {
  VectorXc parameters;
  double time = 0.0;
};

struct ReducedDynamics {
  MatrixXc overlap;
  std::vector<MatrixXc> couplings;
  /// pinv(N) * M_gamma
  std::vector<MatrixXc> precomputed;
  std::vector<CoefficientFn> coeffs;
  double horizon = 0.0;
  /// Numerical rank of N (singular values above 1e-12).
  int overlap_rank = 0;

  Eigen::Index dim() const { return overlap.rows(); }
};

/// Cumulative K-moment basis: products of at most K Hamiltonian strings applied
/// to |reference>, in ascending order then lexicographic term tuples, keeping
/// the first product reaching each image basis state.
VariationalBasis build_kmoment_basis(const LcuHamiltonian& h, std::uint64_t reference, int K);

/// Same generator enumeration for a dense (non-basis) reference state, with
/// twice-applied modified Gram-Schmidt; candidates whose residual norm falls
/// below `threshold` are dropped. Basis states are the orthonormalized vectors.
VariationalBasis build_kmoment_basis_dense(const LcuHamiltonian& h, const VectorXc& reference, int K,
                                           double threshold = 1e-10);

ReducedDynamics compute_reduced_operators(const VariationalBasis& basis, const LcuHamiltonian& h);

/// A(t) = -i sum_gamma g_gamma(t) pinv(N) M_gamma
MatrixXc assemble_A(const ReducedDynamics& rd, double t);

/// t -> assemble_A(rd, t)
MatrixFn coefficient_matrix_fn(const ReducedDynamics& rd);

/// sum_i alpha_i |phi_i> as a dense statevector.
VectorXc reconstruct_state(const VariationalBasis& basis, const VectorXc& alpha);
inline VectorXc reconstruct_state(const VariationalBasis& basis, const VariationalState& vs) {
  return reconstruct_state(basis, vs.parameters);
}

/// Unit vector selecting the reference (alpha_0 = 1).
VectorXc reference_parameters(const VariationalBasis& basis);

}  // namespace chronospec
