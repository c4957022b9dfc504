#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

#include "chronospec/linalg.hpp"

namespace chronospec {

/// N-qubit Pauli string with an exact global phase i^phase_exp.
///
/// Qubit q is bit q of a computational-basis index (qubit 0 is the least
/// significant bit). A site with both x and z bits set is a Y. The operator is
///
///   i^phase_exp * (tensor over sites of I, X, Y or Z)
///
/// and Y = i X Z, so on basis states Z acts first:
///   P|b> = i^(phase_exp + #Y) (-1)^popcount(z & b) |b ^ x>.
class PauliString {
 public:
  static constexpr int kMaxQubits = 63;

  PauliString() = default;
  PauliString(int n_qubits, std::uint64_t x_mask, std::uint64_t z_mask, int phase_exp = 0);

  static PauliString identity(int n_qubits);
  /// Parses text such as "XZIY"; the leftmost character is the highest qubit.
  static PauliString from_text(std::string_view text);
  /// Single-site operator ('I','X','Y','Z') on `qubit`.
  static PauliString single(int n_qubits, int qubit, char op);

  int n_qubits() const { return n_qubits_; }
  std::uint64_t x_mask() const { return x_; }
  std::uint64_t z_mask() const { return z_; }
  int phase_exp() const { return phase_; }
  std::uint64_t y_mask() const { return x_ & z_; }

  bool is_identity() const { return x_ == 0 && z_ == 0 && phase_ == 0; }
  /// Equality of the Hermitian Pauli factor, ignoring the global phase.
  bool same_operator(const PauliString& o) const {
    return n_qubits_ == o.n_qubits_ && x_ == o.x_ && z_ == o.z_;
  }
  PauliString without_phase() const { return {n_qubits_, x_, z_, 0}; }

  /// Text without phase prefix, leftmost = highest qubit.
  std::string to_text() const;
  /// Text with a "+", "+i", "-", "-i" prefix.
  std::string to_signed_text() const;

  friend bool operator==(const PauliString&, const PauliString&) = default;

 private:
  int n_qubits_ = 0;
  std::uint64_t x_ = 0;
  std::uint64_t z_ = 0;
  int phase_ = 0;
};

/// i^k for integer k.
cplx ipow(int k);

/// a*b with the exact accumulated phase.
PauliString pauli_product(const PauliString& a, const PauliString& b);

/// Action on a computational basis state: returns (image index, unit phase).
std::pair<std::uint64_t, cplx> pauli_apply_basis(const PauliString& p, std::uint64_t basis_index);

/// Dense 2^n x 2^n matrix of the string (phase included).
MatrixXc pauli_matrix(const PauliString& p);

/// out += coeff * P * in, matrix-free.
void pauli_apply_accumulate(const PauliString& p, cplx coeff, const VectorXc& in, VectorXc& out);

}  // namespace chronospec
