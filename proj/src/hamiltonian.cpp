#include "chronospec/hamiltonian.hpp"

#include <cmath>

namespace chronospec {

LcuHamiltonian::LcuHamiltonian(int n_qubits, std::vector<LcuTerm> terms, double horizon)
    : n_qubits_(n_qubits), horizon_(horizon) {
  if (n_qubits < 1 || n_qubits > PauliString::kMaxQubits)
    throw DomainError("LcuHamiltonian: invalid qubit count " + std::to_string(n_qubits));
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw DomainError("LcuHamiltonian: horizon must be positive and finite");
  if (terms.empty()) throw DomainError("LcuHamiltonian: term list is empty");

  std::vector<std::vector<CoefficientFn>> merged;
  for (auto& t : terms) {
    if (t.op.n_qubits() != n_qubits)
      throw DomainError("LcuHamiltonian: Pauli string " + t.op.to_text() + " has " +
                        std::to_string(t.op.n_qubits()) + " qubits, expected " +
                        std::to_string(n_qubits));
    if (t.op.phase_exp() != 0)
      throw DomainError("LcuHamiltonian: term strings must carry no global phase");
    std::size_t slot = terms_.size();
    for (std::size_t i = 0; i < terms_.size(); ++i)
      if (terms_[i].op.same_operator(t.op)) slot = i;
    if (slot == terms_.size()) {
      terms_.push_back({t.coeff, t.op});
      merged.push_back({std::move(t.coeff)});
    } else {
      merged[slot].push_back(std::move(t.coeff));
    }
  }
  for (std::size_t i = 0; i < terms_.size(); ++i)
    if (merged[i].size() > 1) terms_[i].coeff = CoefficientFn::sum(std::move(merged[i]));
}

void LcuHamiltonian::check_time(double t) const {
  const double tol = 1e-12 * std::max(1.0, horizon_);
  if (!(t >= -tol && t <= horizon_ + tol))
    throw DomainError("time " + std::to_string(t) + " outside [0, " + std::to_string(horizon_) + "]");
}

nlohmann::json LcuHamiltonian::to_json() const {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : terms_) terms.push_back({{"pauli", t.op.to_text()}, {"coeff", t.coeff.to_json()}});
  return {{"n_qubits", n_qubits_}, {"horizon", horizon_}, {"terms", terms}};
}

LcuHamiltonian hamiltonian_from_json(const nlohmann::json& j) {
  auto fail = [](const std::string& path, const std::string& msg) -> ParseError {
    return ParseError(path + ": " + msg);
  };
  if (!j.is_object()) throw fail("$", "expected an object");
  if (!j.contains("n_qubits") || !j["n_qubits"].is_number_integer())
    throw fail("$.n_qubits", "required integer");
  if (!j.contains("horizon") || !j["horizon"].is_number()) throw fail("$.horizon", "required number");
  if (!j.contains("terms") || !j["terms"].is_array()) throw fail("$.terms", "required array");
  const int n = j["n_qubits"].get<int>();
  std::vector<LcuTerm> terms;
  for (std::size_t i = 0; i < j["terms"].size(); ++i) {
    const auto& t = j["terms"][i];
    const std::string path = "$.terms[" + std::to_string(i) + "]";
    if (!t.is_object()) throw fail(path, "expected an object");
    if (!t.contains("pauli") || !t["pauli"].is_string()) throw fail(path + ".pauli", "required string");
    if (!t.contains("coeff")) throw fail(path + ".coeff", "required field");
    const std::string text = t["pauli"].get<std::string>();
    if (static_cast<int>(text.size()) != n)
      throw fail(path + ".pauli", "length " + std::to_string(text.size()) + " does not match n_qubits");
    try {
      terms.push_back({parse_coefficient(t["coeff"]), PauliString::from_text(text)});
    } catch (const std::invalid_argument& e) {
      throw fail(path, e.what());
    }
  }
  try {
    return LcuHamiltonian(n, std::move(terms), j["horizon"].get<double>());
  } catch (const DomainError& e) {
    throw fail("$", e.what());
  }
}

VectorXc eval_coefficients(const LcuHamiltonian& h, double t) {
  h.check_time(t);
  VectorXc g(static_cast<Eigen::Index>(h.size()));
  for (std::size_t i = 0; i < h.size(); ++i) {
    const cplx v = h.term(i).coeff(t);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw NumericalError("coefficient " + std::to_string(i) + " is not finite at t=" + std::to_string(t));
    g(static_cast<Eigen::Index>(i)) = v;
  }
  return g;
}

MatrixXc dense_hamiltonian(const LcuHamiltonian& h, double t, int qubit_cap) {
  if (h.n_qubits() > qubit_cap)
    throw DomainError("dense_hamiltonian: " + std::to_string(h.n_qubits()) +
                      " qubits exceed the cap of " + std::to_string(qubit_cap));
  const VectorXc g = eval_coefficients(h, t);
  const Eigen::Index dim = Eigen::Index{1} << h.n_qubits();
  MatrixXc m = MatrixXc::Zero(dim, dim);
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& op = h.term(i).op;
    for (Eigen::Index col = 0; col < dim; ++col) {
      const auto [row, phase] = pauli_apply_basis(op, static_cast<std::uint64_t>(col));
      m(static_cast<Eigen::Index>(row), col) += g(static_cast<Eigen::Index>(i)) * phase;
    }
  }
  return m;
}

VectorXc apply_hamiltonian(const LcuHamiltonian& h, double t, const VectorXc& psi) {
  const VectorXc g = eval_coefficients(h, t);
  VectorXc out = VectorXc::Zero(psi.size());
  for (std::size_t i = 0; i < h.size(); ++i)
    pauli_apply_accumulate(h.term(i).op, g(static_cast<Eigen::Index>(i)), psi, out);
  return out;
}

}  // namespace chronospec
