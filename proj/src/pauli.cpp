#include "chronospec/pauli.hpp"

#include <bit>

namespace chronospec {
namespace {

std::uint64_t low_bits(int n) { return n >= 64 ? ~0ULL : ((1ULL << n) - 1); }

int popcount(std::uint64_t v) { return std::popcount(v); }

}  // namespace

cplx ipow(int k) {
  switch (((k % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

PauliString::PauliString(int n_qubits, std::uint64_t x_mask, std::uint64_t z_mask, int phase_exp)
    : n_qubits_(n_qubits), x_(x_mask), z_(z_mask), phase_(((phase_exp % 4) + 4) % 4) {
  if (n_qubits < 1 || n_qubits > kMaxQubits)
    throw DomainError("PauliString: qubit count must be in [1, 63], got " + std::to_string(n_qubits));
  if ((x_mask | z_mask) & ~low_bits(n_qubits))
    throw DomainError("PauliString: mask has bits beyond qubit count");
}

PauliString PauliString::identity(int n_qubits) { return {n_qubits, 0, 0, 0}; }

PauliString PauliString::from_text(std::string_view text) {
  const int n = static_cast<int>(text.size());
  if (n == 0) throw DomainError("PauliString: empty text");
  std::uint64_t x = 0, z = 0;
  for (int pos = 0; pos < n; ++pos) {
    const int q = n - 1 - pos;
    const std::uint64_t bit = 1ULL << q;
    switch (text[pos]) {
      case 'I': break;
      case 'X': x |= bit; break;
      case 'Z': z |= bit; break;
      case 'Y': x |= bit; z |= bit; break;
      default:
        throw DomainError("PauliString: invalid character '" + std::string(1, text[pos]) +
                          "' at position " + std::to_string(pos));
    }
  }
  return {n, x, z, 0};
}

PauliString PauliString::single(int n_qubits, int qubit, char op) {
  if (qubit < 0 || qubit >= n_qubits) throw DomainError("PauliString: qubit index out of range");
  const std::uint64_t bit = 1ULL << qubit;
  switch (op) {
    case 'I': return {n_qubits, 0, 0};
    case 'X': return {n_qubits, bit, 0};
    case 'Y': return {n_qubits, bit, bit};
    case 'Z': return {n_qubits, 0, bit};
    default: throw DomainError("PauliString: invalid operator");
  }
}

std::string PauliString::to_text() const {
  std::string s(static_cast<std::size_t>(n_qubits_), 'I');
  for (int q = 0; q < n_qubits_; ++q) {
    const bool xb = (x_ >> q) & 1ULL;
    const bool zb = (z_ >> q) & 1ULL;
    s[static_cast<std::size_t>(n_qubits_ - 1 - q)] = xb ? (zb ? 'Y' : 'X') : (zb ? 'Z' : 'I');
  }
  return s;
}

std::string PauliString::to_signed_text() const {
  static const char* prefix[4] = {"+", "+i", "-", "-i"};
  return prefix[phase_] + to_text();
}

PauliString pauli_product(const PauliString& a, const PauliString& b) {
  if (a.n_qubits() != b.n_qubits())
    throw DomainError("pauli_product: length mismatch (" + std::to_string(a.n_qubits()) + " vs " +
                      std::to_string(b.n_qubits()) + ")");
  // Write each factor as i^(phase + #Y) X^x Z^z; moving Z^za past X^xb costs (-1)^popcount(za & xb).
  const std::uint64_t x = a.x_mask() ^ b.x_mask();
  const std::uint64_t z = a.z_mask() ^ b.z_mask();
  const int k = a.phase_exp() + b.phase_exp() + popcount(a.y_mask()) + popcount(b.y_mask()) +
                2 * popcount(a.z_mask() & b.x_mask()) - popcount(x & z);
  return {a.n_qubits(), x, z, k};
}

std::pair<std::uint64_t, cplx> pauli_apply_basis(const PauliString& p, std::uint64_t basis_index) {
  if (basis_index >= (1ULL << p.n_qubits()))
    throw DomainError("pauli_apply_basis: basis index " + std::to_string(basis_index) +
                      " out of range");
  const int k = p.phase_exp() + popcount(p.y_mask()) + 2 * popcount(p.z_mask() & basis_index);
  return {basis_index ^ p.x_mask(), ipow(k)};
}

MatrixXc pauli_matrix(const PauliString& p) {
  if (p.n_qubits() > 20) throw DomainError("pauli_matrix: too many qubits for a dense matrix");
  const Eigen::Index dim = Eigen::Index{1} << p.n_qubits();
  MatrixXc m = MatrixXc::Zero(dim, dim);
  for (Eigen::Index col = 0; col < dim; ++col) {
    const auto [row, phase] = pauli_apply_basis(p, static_cast<std::uint64_t>(col));
    m(static_cast<Eigen::Index>(row), col) = phase;
  }
  return m;
}

void pauli_apply_accumulate(const PauliString& p, cplx coeff, const VectorXc& in, VectorXc& out) {
  const std::uint64_t dim = 1ULL << p.n_qubits();
  if (static_cast<std::uint64_t>(in.size()) != dim || out.size() != in.size())
    throw DomainError("pauli_apply_accumulate: vector dimension mismatch");
  const cplx base = coeff * ipow(p.phase_exp() + popcount(p.y_mask()));
  const std::uint64_t x = p.x_mask(), z = p.z_mask();
  for (std::uint64_t b = 0; b < dim; ++b) {
    const cplx v = (popcount(z & b) & 1) ? -base : base;
    out(static_cast<Eigen::Index>(b ^ x)) += v * in(static_cast<Eigen::Index>(b));
  }
}

}  // namespace chronospec
