#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "chronospec/coefficient.hpp"
#include "chronospec/pauli.hpp"

namespace chronospec {

struct LcuTerm {
  CoefficientFn coeff;
  PauliString op;
};

/// H(t) = sum_gamma g_gamma(t) H_gamma on [0, horizon].
///
/// Terms are phase-free Pauli strings. Repeated strings are merged into a
/// single term whose coefficient is the sum of the originals, keeping the
/// position of the first occurrence.
class LcuHamiltonian {
 public:
  static constexpr int kDefaultDenseQubitCap = 12;

  LcuHamiltonian(int n_qubits, std::vector<LcuTerm> terms, double horizon);

  int n_qubits() const { return n_qubits_; }
  double horizon() const { return horizon_; }
  std::size_t size() const { return terms_.size(); }
  const std::vector<LcuTerm>& terms() const { return terms_; }
  const LcuTerm& term(std::size_t g) const { return terms_.at(g); }

  /// Throws DomainError unless 0 <= t <= horizon (up to rounding).
  void check_time(double t) const;

  /// {"n_qubits":..,"horizon":..,"terms":[{"pauli":"XZ","coeff":{..}}]}
  nlohmann::json to_json() const;

 private:
  int n_qubits_;
  std::vector<LcuTerm> terms_;
  double horizon_;
};

/// Parses the Hamiltonian problem-file schema. Field paths appear in errors.
LcuHamiltonian hamiltonian_from_json(const nlohmann::json& j);

/// (g_0(t), ..., g_{N-1}(t))
VectorXc eval_coefficients(const LcuHamiltonian& h, double t);

/// sum_gamma g_gamma(t) * matrix(H_gamma)
MatrixXc dense_hamiltonian(const LcuHamiltonian& h, double t,
                           int qubit_cap = LcuHamiltonian::kDefaultDenseQubitCap);

/// H(t) psi without forming the matrix.
VectorXc apply_hamiltonian(const LcuHamiltonian& h, double t, const VectorXc& psi);

}  // namespace chronospec
