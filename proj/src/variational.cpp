#include "chronospec/variational.hpp"

#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace chronospec {
namespace {

constexpr double kPinvCutoff = 1e-12;
constexpr double kEnumerationCap = 5e6;

/// Visits products of up to K term strings in ascending order, then
/// lexicographic index tuples. `visit` returns false to stop early.
template <typename Visit>
void enumerate_products(const LcuHamiltonian& h, int K, Visit&& visit) {
  if (K < 0) throw DomainError("K-moment order must be non-negative");
  const std::size_t ng = h.size();
  double total = 0.0, layer = 1.0;
  for (int m = 0; m <= K; ++m, layer *= static_cast<double>(ng)) total += layer;
  if (total > kEnumerationCap)
    throw DomainError("K-moment enumeration too large (" + std::to_string(total) + " products)");

  for (int m = 0; m <= K; ++m) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(m), 0);
    for (;;) {
      PauliString u = PauliString::identity(h.n_qubits());
      for (std::size_t i : idx) u = pauli_product(u, h.term(i).op);
      if (!visit(u)) return;
      // Odometer increment, last index fastest.
      int pos = m - 1;
      while (pos >= 0 && ++idx[static_cast<std::size_t>(pos)] == ng) idx[static_cast<std::size_t>(pos--)] = 0;
      if (pos < 0) break;
    }
  }
}

VectorXc dense_apply(const PauliString& p, const VectorXc& v) {
  VectorXc out = VectorXc::Zero(v.size());
  pauli_apply_accumulate(p, cplx{1.0, 0.0}, v, out);
  return out;
}

}  // namespace

nlohmann::json VariationalBasis::to_json() const {
  nlohmann::json gens = nlohmann::json::array();
  for (const auto& g : generators) gens.push_back(g.to_signed_text());
  nlohmann::json j{{"n_qubits", n_qubits},
                   {"generators", gens},
                   {"size", size()},
                   {"orthonormal", orthonormal},
                   {"construction", construction}};
  if (reference_index) j["reference_index"] = *reference_index;
  if (!images.empty()) j["images"] = images;
  return j;
}

VariationalBasis build_kmoment_basis(const LcuHamiltonian& h, std::uint64_t reference, int K) {
  const int n = h.n_qubits();
  if (reference >= (1ULL << n))
    throw DomainError("build_kmoment_basis: reference index " + std::to_string(reference) +
                      " out of range");
  VariationalBasis basis;
  basis.n_qubits = n;
  basis.reference_index = reference;
  basis.orthonormal = true;
  basis.construction = "cumulative K-moment products, deduplicated by image basis index (K=" +
                       std::to_string(K) + ")";

  std::unordered_set<std::uint64_t> seen;
  enumerate_products(h, K, [&](const PauliString& u) {
    const auto [image, phase] = pauli_apply_basis(u, reference);
    if (seen.insert(image).second) {
      basis.generators.push_back(u);
      basis.images.push_back(image);
      basis.phases.push_back(phase);
    }
    return seen.size() < (1ULL << n);
  });

  if (n <= LcuHamiltonian::kDefaultDenseQubitCap) {
    const Eigen::Index dim = Eigen::Index{1} << n;
    basis.reference_state = VectorXc::Zero(dim);
    basis.reference_state(static_cast<Eigen::Index>(reference)) = 1.0;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      VectorXc s = VectorXc::Zero(dim);
      s(static_cast<Eigen::Index>(basis.images[i])) = basis.phases[i];
      basis.states.push_back(std::move(s));
    }
  }
  return basis;
}

VariationalBasis build_kmoment_basis_dense(const LcuHamiltonian& h, const VectorXc& reference, int K,
                                           double threshold) {
  const int n = h.n_qubits();
  if (n > LcuHamiltonian::kDefaultDenseQubitCap)
    throw DomainError("build_kmoment_basis_dense: qubit cap exceeded");
  if (reference.size() != (Eigen::Index{1} << n))
    throw DomainError("build_kmoment_basis_dense: reference has wrong dimension");
  const double rn = reference.norm();
  if (!(rn > 0.0)) throw DomainError("build_kmoment_basis_dense: zero reference state");

  VariationalBasis basis;
  basis.n_qubits = n;
  basis.reference_state = reference / rn;
  basis.orthonormal = true;
  basis.construction = "cumulative K-moment products, modified Gram-Schmidt (two passes, threshold " +
                       std::to_string(threshold) + ", K=" + std::to_string(K) + ")";
  const std::size_t max_size = std::size_t{1} << n;

  enumerate_products(h, K, [&](const PauliString& u) {
    VectorXc v = dense_apply(u, basis.reference_state);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis.states) v -= q.dot(v) * q;
    const double norm = v.norm();
    if (norm >= threshold) {
      basis.generators.push_back(u);
      basis.states.push_back(v / norm);
    }
    return basis.size() < max_size;
  });
  return basis;
}

ReducedDynamics compute_reduced_operators(const VariationalBasis& basis, const LcuHamiltonian& h) {
  if (basis.n_qubits != h.n_qubits())
    throw DomainError("compute_reduced_operators: basis and Hamiltonian qubit counts differ");
  const auto na = static_cast<Eigen::Index>(basis.size());
  if (na == 0) throw DomainError("compute_reduced_operators: empty basis");

  ReducedDynamics rd;
  rd.horizon = h.horizon();
  rd.overlap = MatrixXc::Zero(na, na);
  rd.couplings.assign(h.size(), MatrixXc::Zero(na, na));

  if (basis.is_computational()) {
    for (Eigen::Index i = 0; i < na; ++i)
      for (Eigen::Index j = 0; j < na; ++j)
        if (basis.images[static_cast<std::size_t>(i)] == basis.images[static_cast<std::size_t>(j)])
          rd.overlap(i, j) = std::conj(basis.phases[static_cast<std::size_t>(i)]) *
                             basis.phases[static_cast<std::size_t>(j)];
    // Row lookup: image index -> basis position.
    std::unordered_map<std::uint64_t, Eigen::Index> where;
    for (Eigen::Index i = 0; i < na; ++i) where.emplace(basis.images[static_cast<std::size_t>(i)], i);
    for (std::size_t g = 0; g < h.size(); ++g) {
      for (Eigen::Index j = 0; j < na; ++j) {
        const auto [image, phase] = pauli_apply_basis(h.term(g).op, basis.images[static_cast<std::size_t>(j)]);
        const auto it = where.find(image);
        if (it == where.end()) continue;
        const Eigen::Index i = it->second;
        rd.couplings[g](i, j) = std::conj(basis.phases[static_cast<std::size_t>(i)]) * phase *
                                basis.phases[static_cast<std::size_t>(j)];
      }
    }
  } else {
    for (Eigen::Index i = 0; i < na; ++i)
      for (Eigen::Index j = 0; j < na; ++j)
        rd.overlap(i, j) = basis.states[static_cast<std::size_t>(i)].dot(basis.states[static_cast<std::size_t>(j)]);
    for (std::size_t g = 0; g < h.size(); ++g)
      for (Eigen::Index j = 0; j < na; ++j) {
        const VectorXc hv = dense_apply(h.term(g).op, basis.states[static_cast<std::size_t>(j)]);
        for (Eigen::Index i = 0; i < na; ++i) rd.couplings[g](i, j) = basis.states[static_cast<std::size_t>(i)].dot(hv);
      }
  }

  Eigen::JacobiSVD<MatrixXc> svd(rd.overlap, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXr& s = svd.singularValues();
  VectorXr inv = VectorXr::Zero(s.size());
  rd.overlap_rank = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) > kPinvCutoff) {
      inv(k) = 1.0 / s(k);
      ++rd.overlap_rank;
    }
  const MatrixXc pinv = svd.matrixV() * inv.cast<cplx>().asDiagonal() * svd.matrixU().adjoint();
  for (const auto& m : rd.couplings) rd.precomputed.push_back(pinv * m);
  for (const auto& t : h.terms()) rd.coeffs.push_back(t.coeff);
  return rd;
}

MatrixXc assemble_A(const ReducedDynamics& rd, double t) {
  const double tol = 1e-12 * std::max(1.0, rd.horizon);
  if (!(t >= -tol && t <= rd.horizon + tol))
    throw DomainError("assemble_A: time " + std::to_string(t) + " outside [0, horizon]");
  MatrixXc a = MatrixXc::Zero(rd.dim(), rd.dim());
  for (std::size_t g = 0; g < rd.coeffs.size(); ++g) {
    const cplx c = rd.coeffs[g](t);
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw NumericalError("assemble_A: coefficient " + std::to_string(g) + " not finite");
    if (c != cplx{0.0, 0.0}) a.noalias() += (-kI * c) * rd.precomputed[g];
  }
  return a;
}

MatrixFn coefficient_matrix_fn(const ReducedDynamics& rd) {
  return [rd](double t) { return assemble_A(rd, t); };
}

VectorXc reconstruct_state(const VariationalBasis& basis, const VectorXc& alpha) {
  if (alpha.size() != static_cast<Eigen::Index>(basis.size()))
    throw DomainError("reconstruct_state: parameter length " + std::to_string(alpha.size()) +
                      " does not match basis size " + std::to_string(basis.size()));
  if (basis.states.empty()) throw DomainError("reconstruct_state: basis has no dense states");
  VectorXc psi = VectorXc::Zero(basis.states.front().size());
  for (std::size_t i = 0; i < basis.size(); ++i) psi += alpha(static_cast<Eigen::Index>(i)) * basis.states[i];
  return psi;
}

VectorXc reference_parameters(const VariationalBasis& basis) {
  VectorXc a = VectorXc::Zero(static_cast<Eigen::Index>(basis.size()));
  if (a.size() == 0) throw DomainError("reference_parameters: empty basis");
  // Generator 0 is the identity, so alpha = e_0 reproduces the reference up to its stored phase.
  a(0) = 1.0;
  return a;
}

}  // namespace chronospec
