#include <gtest/gtest.h>

#include "chronospec/hamiltonian.hpp"
#include "support.hpp"

using namespace chronospec;
using chronospec::testing::kron_pauli;
using chronospec::testing::random_pauli_text;

TEST(PauliString, IdentityHasZeroMasksAndPhase) {
  const auto id = PauliString::identity(3);
  EXPECT_EQ(id.x_mask(), 0u);
  EXPECT_EQ(id.z_mask(), 0u);
  EXPECT_EQ(id.phase_exp(), 0);
  EXPECT_TRUE(id.is_identity());
}

TEST(PauliString, TextRoundTripUsesLeftmostAsHighestQubit) {
  const auto p = PauliString::from_text("XIZ");
  EXPECT_EQ(p.x_mask(), 0b100u);
  EXPECT_EQ(p.z_mask(), 0b001u);
  EXPECT_EQ(p.to_text(), "XIZ");
}

TEST(PauliString, RejectsBadInput) {
  EXPECT_THROW(PauliString::from_text(""), std::invalid_argument);
  EXPECT_THROW(PauliString::from_text("XQ"), std::invalid_argument);
  EXPECT_THROW(PauliString(2, 0b100, 0), DomainError);
}

TEST(PauliProduct, XTimesXIsIdentity) {
  const auto x = PauliString::from_text("X");
  const auto c = pauli_product(x, x);
  EXPECT_TRUE(c.is_identity());
}

TEST(PauliProduct, XTimesZIsMinusIY) {
  const auto c = pauli_product(PauliString::from_text("X"), PauliString::from_text("Z"));
  EXPECT_TRUE(c.same_operator(PauliString::from_text("Y")));
  EXPECT_EQ(c.phase_exp(), 3);
}

TEST(PauliProduct, DisjointSupportsCommute) {
  const auto c = pauli_product(PauliString::from_text("XI"), PauliString::from_text("IZ"));
  EXPECT_EQ(c, PauliString::from_text("XZ"));
}

TEST(PauliProduct, LengthMismatchThrows) {
  EXPECT_THROW(pauli_product(PauliString::from_text("X"), PauliString::from_text("XX")), DomainError);
}

TEST(PauliProduct, MatchesDenseProductAndIsAssociative) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 4;
    const auto ta = random_pauli_text(n, rng), tb = random_pauli_text(n, rng), tc = random_pauli_text(n, rng);
    const auto a = PauliString::from_text(ta), b = PauliString::from_text(tb), c = PauliString::from_text(tc);
    const MatrixXc expected = kron_pauli(ta) * kron_pauli(tb);
    EXPECT_LT((pauli_matrix(pauli_product(a, b)) - expected).norm(), 1e-14) << ta << "*" << tb;
    EXPECT_EQ(pauli_product(pauli_product(a, b), c), pauli_product(a, pauli_product(b, c)));
    EXPECT_EQ(pauli_product(PauliString::identity(n), a), a);
  }
}

TEST(PauliMatrix, MatchesKroneckerOracle) {
  for (const char* t : {"I", "X", "Y", "Z", "XY", "ZYX", "YYZI"})
    EXPECT_LT((pauli_matrix(PauliString::from_text(t)) - kron_pauli(t)).norm(), 1e-15) << t;
}

TEST(PauliApplyBasis, SingleQubitActions) {
  auto [iz, pz] = pauli_apply_basis(PauliString::from_text("Z"), 0);
  EXPECT_EQ(iz, 0u);
  EXPECT_EQ(pz, cplx(1.0, 0.0));
  auto [ix, px] = pauli_apply_basis(PauliString::from_text("X"), 0);
  EXPECT_EQ(ix, 1u);
  EXPECT_EQ(px, cplx(1.0, 0.0));
  auto [iy, py] = pauli_apply_basis(PauliString::from_text("Y"), 0);
  EXPECT_EQ(iy, 1u);
  EXPECT_EQ(py, cplx(0.0, 1.0));
}

TEST(PauliApplyBasis, OutOfRangeThrows) {
  EXPECT_THROW(pauli_apply_basis(PauliString::from_text("XX"), 4), DomainError);
}

TEST(PauliApplyBasis, AgreesWithDenseActionOnAllBasisStates) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + trial % 4;
    std::string text = random_pauli_text(n, rng);
    PauliString p = PauliString::from_text(text);
    // Include phased strings via products.
    p = pauli_product(p, PauliString::from_text(random_pauli_text(n, rng)));
    const MatrixXc m = pauli_matrix(p);
    for (std::uint64_t b = 0; b < (1u << n); ++b) {
      const auto [img, ph] = pauli_apply_basis(p, b);
      EXPECT_NEAR(std::abs(ph), 1.0, 1e-15);
      VectorXc col = VectorXc::Zero(m.rows());
      col(static_cast<Eigen::Index>(img)) = ph;
      EXPECT_LT((m.col(static_cast<Eigen::Index>(b)) - col).norm(), 1e-15);
    }
  }
}

TEST(PauliApply, MatrixFreeMatchesDense) {
  std::mt19937 rng(8);
  const auto text = std::string("XYZI");
  const VectorXc v = chronospec::testing::random_vector(16, rng);
  VectorXc out = VectorXc::Zero(16);
  pauli_apply_accumulate(PauliString::from_text(text), cplx(0.5, -1.0), v, out);
  EXPECT_LT((out - cplx(0.5, -1.0) * kron_pauli(text) * v).norm(), 1e-13);
}
