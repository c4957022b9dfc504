#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "chronospec/hamiltonian.hpp"
#include "support.hpp"

using namespace chronospec;
using json = nlohmann::json;

TEST(Coefficient, ConstantIsConstant) {
  const auto g = parse_coefficient({{"type", "constant"}, {"value", 2.5}});
  for (double t : {0.0, 1.0, 7.5}) EXPECT_EQ(g(t), cplx(2.5, 0.0));
}

TEST(Coefficient, GaussianPeak) {
  const auto g = parse_coefficient({{"type", "gaussian"}, {"amplitude", 1.0}, {"center", 0.0}, {"width", 1.0}});
  EXPECT_DOUBLE_EQ(g(0.0).real(), 1.0);
  EXPECT_NEAR(g(1.0).real(), std::exp(-0.5), 1e-15);
}

TEST(Coefficient, ExpressionCos) {
  EXPECT_DOUBLE_EQ(parse_coefficient({{"type", "expression"}, {"text", "0.5*cos(2*t)"}})(0.0).real(), 0.5);
  EXPECT_NEAR(parse_coefficient("cos(t)")(std::numbers::pi).real(), -1.0, 1e-15);
}

TEST(Coefficient, ExpressionGrammar) {
  const auto g = CoefficientFn::expression("-(t-1)^2/2 + 3*sin(t)^2 - exp(-t)");
  for (double t : {0.0, 0.3, 2.0}) {
    const double expected = -(t - 1) * (t - 1) / 2 + 3 * std::pow(std::sin(t), 2) - std::exp(-t);
    EXPECT_NEAR(g(t).real(), expected, 1e-14);
  }
  EXPECT_DOUBLE_EQ(CoefficientFn::expression("2^3^2")(0.0).real(), 512.0);
  EXPECT_DOUBLE_EQ(CoefficientFn::expression("1.5e-1*4")(0.0).real(), 0.6);
}

TEST(Coefficient, MalformedExpressionReportsPosition) {
  try {
    CoefficientFn::expression("1 + * t");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 4u);
  }
  EXPECT_THROW(CoefficientFn::expression("sin(t"), ParseError);
  EXPECT_THROW(CoefficientFn::expression("tan(t)"), ParseError);
}

TEST(Coefficient, UnknownVariantAndBadSpline) {
  EXPECT_THROW(parse_coefficient({{"type", "bessel"}}), ParseError);
  EXPECT_THROW(parse_coefficient({{"type", "spline_table"}, {"t", {0, 1, 1, 2}}, {"values", {0, 1, 2, 3}}}),
               ParseError);
  EXPECT_THROW(parse_coefficient({{"type", "spline_table"}, {"t", {0, 1, 2}}, {"values", {0, 1, 2}}}), ParseError);
}

TEST(Coefficient, SplineReproducesLinearData) {
  // A natural cubic spline reproduces linear data exactly.
  const auto g = parse_coefficient({{"type", "spline_table"}, {"t", {0, 1, 2.5, 4}}, {"values", {1, 3, 6, 9}}});
  for (double t : {0.0, 0.7, 2.0, 3.9}) EXPECT_NEAR(g(t).real(), 1 + 2 * t, 1e-13);
}

TEST(Coefficient, JsonRoundTrip) {
  for (const json& spec : {json{{"type", "trig"}, {"amplitude", 0.5}, {"frequency", 2.0}, {"phase", 0.1}},
                           json{{"type", "polynomial"}, {"coeffs", {1.0, -2.0, 0.5}}},
                           json{{"type", "expression"}, {"text", "exp(-t)*cos(t)"}}}) {
    const auto g = parse_coefficient(spec);
    const auto h = parse_coefficient(g.to_json());
    for (double t : {0.0, 0.4, 1.3}) EXPECT_EQ(g(t), h(t));
  }
}

namespace {

LcuHamiltonian two_term(CoefficientFn a, const char* pa, CoefficientFn b, const char* pb, double T = 5.0) {
  return LcuHamiltonian(static_cast<int>(std::string(pa).size()),
                        {{std::move(a), PauliString::from_text(pa)}, {std::move(b), PauliString::from_text(pb)}}, T);
}

}  // namespace

TEST(Hamiltonian, EvalCoefficients) {
  const auto h = two_term(CoefficientFn::constant(1.0), "X", CoefficientFn::constant(-2.0), "Z");
  const VectorXc g = eval_coefficients(h, 3.0);
  EXPECT_EQ(g(0), cplx(1.0, 0.0));
  EXPECT_EQ(g(1), cplx(-2.0, 0.0));
  EXPECT_THROW(eval_coefficients(h, 5.5), DomainError);
  EXPECT_THROW(eval_coefficients(h, -0.1), DomainError);

  const auto hg = two_term(CoefficientFn::gaussian(1.0, 1.0, 1.0), "X", CoefficientFn::expression("cos(t)"), "Z");
  EXPECT_DOUBLE_EQ(eval_coefficients(hg, 1.0)(0).real(), 1.0);
  EXPECT_NEAR(eval_coefficients(hg, std::numbers::pi)(1).real(), -1.0, 1e-15);
}

TEST(Hamiltonian, DuplicateStringsAreMerged) {
  const LcuHamiltonian h(1,
                         {{CoefficientFn::constant(1.0), PauliString::from_text("X")},
                          {CoefficientFn::constant(2.0), PauliString::from_text("Z")},
                          {CoefficientFn::constant(0.5), PauliString::from_text("X")}},
                         1.0);
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h.term(0).op.to_text(), "X");
  EXPECT_EQ(h.term(0).coeff(0.3), cplx(1.5, 0.0));
}

TEST(Hamiltonian, Validation) {
  EXPECT_THROW(LcuHamiltonian(1, {}, 1.0), DomainError);
  EXPECT_THROW(LcuHamiltonian(2, {{CoefficientFn::constant(1.0), PauliString::from_text("X")}}, 1.0), DomainError);
  EXPECT_THROW(LcuHamiltonian(1, {{CoefficientFn::constant(1.0), PauliString::from_text("X")}}, 0.0), DomainError);
}

TEST(Hamiltonian, DenseMatrices) {
  const LcuHamiltonian z(1, {{CoefficientFn::constant(1.0), PauliString::from_text("Z")}}, 1.0);
  MatrixXc expected(2, 2);
  expected << 1, 0, 0, -1;
  EXPECT_LT((dense_hamiltonian(z, 0.5) - expected).norm(), 1e-15);

  const auto xz = two_term(CoefficientFn::constant(1.0), "X", CoefficientFn::constant(1.0), "Z");
  expected << 1, 1, 1, -1;
  EXPECT_LT((dense_hamiltonian(xz, 2.0) - expected).norm(), 1e-15);
}

TEST(Hamiltonian, DenseIsHermitianForRealCoefficients) {
  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<LcuTerm> terms;
    for (int k = 0; k < 6; ++k)
      terms.push_back({CoefficientFn::constant(g(rng)),
                       PauliString::from_text(chronospec::testing::random_pauli_text(4, rng))});
    const LcuHamiltonian h(4, terms, 1.0);
    EXPECT_LT(hermiticity_defect(dense_hamiltonian(h, 0.5)), 1e-14);
  }
}

TEST(Hamiltonian, QubitCap) {
  const LcuHamiltonian h(13, {{CoefficientFn::constant(1.0), PauliString::identity(13)}}, 1.0);
  EXPECT_THROW(dense_hamiltonian(h, 0.0), DomainError);
}

TEST(Hamiltonian, MatrixFreeMatchesDense) {
  std::mt19937 rng(4);
  const LcuHamiltonian h(3,
                         {{CoefficientFn::expression("cos(t)"), PauliString::from_text("XYZ")},
                          {CoefficientFn::gaussian(0.7, 0.5, 0.3), PauliString::from_text("ZIZ")},
                          {CoefficientFn::constant(-0.2), PauliString::from_text("IXI")}},
                         1.0);
  const VectorXc v = chronospec::testing::random_vector(8, rng);
  EXPECT_LT((apply_hamiltonian(h, 0.4, v) - dense_hamiltonian(h, 0.4) * v).norm(), 1e-14);
}

TEST(HamiltonianJson, ParsesAndReportsFieldPaths) {
  const json good = {{"n_qubits", 2},
                     {"horizon", 3.0},
                     {"terms", {{{"pauli", "XZ"}, {"coeff", 1.0}}, {{"pauli", "IY"}, {"coeff", "sin(t)"}}}}};
  const auto h = hamiltonian_from_json(good);
  EXPECT_EQ(h.n_qubits(), 2);
  EXPECT_EQ(h.size(), 2u);
  EXPECT_EQ(hamiltonian_from_json(h.to_json()).term(1).op.to_text(), "IY");

  json bad = good;
  bad["terms"][1]["pauli"] = "Y";
  try {
    hamiltonian_from_json(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("$.terms[1].pauli"), std::string::npos) << e.what();
  }
  bad = good;
  bad.erase("horizon");
  EXPECT_THROW(hamiltonian_from_json(bad), ParseError);
}
