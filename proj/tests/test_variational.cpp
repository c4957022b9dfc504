#include <gtest/gtest.h>

#include "chronospec/variational.hpp"
#include "support.hpp"

using namespace chronospec;

namespace {

LcuHamiltonian constant_h(int n, std::vector<std::pair<double, const char*>> terms) {
  std::vector<LcuTerm> out;
  for (auto& [c, p] : terms) out.push_back({CoefficientFn::constant(c), PauliString::from_text(p)});
  return LcuHamiltonian(n, out, 1.0);
}

}  // namespace

TEST(KMomentBasis, OrderZeroIsReferenceOnly) {
  const auto h = constant_h(2, {{1.0, "XI"}, {0.5, "IZ"}});
  const auto b = build_kmoment_basis(h, 2, 0);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_TRUE(b.generators[0].is_identity());
  EXPECT_EQ(b.images[0], 2u);
}

TEST(KMomentBasis, SingleQubitZPlusX) {
  const auto b = build_kmoment_basis(constant_h(1, {{1.0, "Z"}, {1.0, "X"}}), 0, 1);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b.images, (std::vector<std::uint64_t>{0, 1}));
  EXPECT_EQ(b.generators[1].to_text(), "X");
  EXPECT_TRUE(b.orthonormal);
}

TEST(KMomentBasis, TwoIndependentFlipsReachAllStates) {
  const auto b = build_kmoment_basis(constant_h(2, {{1.0, "XI"}, {1.0, "IX"}}), 0, 2);
  ASSERT_EQ(b.size(), 4u);
  std::vector<std::uint64_t> imgs = b.images;
  std::sort(imgs.begin(), imgs.end());
  EXPECT_EQ(imgs, (std::vector<std::uint64_t>{0, 1, 2, 3}));
}

TEST(KMomentBasis, StatesAreUnitAndOrthogonal) {
  const auto h = constant_h(3, {{1.0, "XYZ"}, {0.3, "ZZI"}, {0.2, "IXY"}, {0.7, "YII"}});
  const auto b = build_kmoment_basis(h, 5, 2);
  for (std::size_t i = 0; i < b.size(); ++i) {
    EXPECT_NEAR(b.states[i].norm(), 1.0, 1e-15);
    // Each state is U_i applied to the reference.
    VectorXc ref = VectorXc::Zero(8);
    ref(5) = 1.0;
    EXPECT_LT((b.states[i] - pauli_matrix(b.generators[i]) * ref).norm(), 1e-14);
    for (std::size_t j = 0; j < i; ++j) EXPECT_LT(std::abs(b.states[i].dot(b.states[j])), 1e-12);
  }
}

TEST(KMomentBasis, Errors) {
  const auto h = constant_h(1, {{1.0, "X"}});
  EXPECT_THROW(build_kmoment_basis(h, 2, 1), DomainError);
  EXPECT_THROW(build_kmoment_basis(h, 0, -1), DomainError);
}

TEST(KMomentBasis, DenseReferenceGramSchmidt) {
  const auto h = constant_h(2, {{1.0, "XI"}, {1.0, "IZ"}});
  VectorXc ref(4);
  ref << 1, 1, 0, 0;
  ref /= std::sqrt(2.0);
  const auto b = build_kmoment_basis_dense(h, ref, 1);
  // IZ|ref> = |0>-|1> is independent of |ref>, XI moves to the other half.
  EXPECT_EQ(b.size(), 3u);
  MatrixXc G(4, static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < b.size(); ++i) G.col(static_cast<Eigen::Index>(i)) = b.states[i];
  EXPECT_LT((G.adjoint() * G - MatrixXc::Identity(G.cols(), G.cols())).norm(), 1e-12);
}

TEST(ReducedOperators, OverlapAndCouplings) {
  const auto h = constant_h(1, {{1.0, "X"}, {1.0, "Z"}});
  const auto b = build_kmoment_basis(h, 0, 1);
  const auto rd = compute_reduced_operators(b, h);
  EXPECT_LT((rd.overlap - MatrixXc::Identity(2, 2)).norm(), 1e-15);
  MatrixXc x(2, 2), z(2, 2);
  x << 0, 1, 1, 0;
  z << 1, 0, 0, -1;
  EXPECT_LT((rd.couplings[0] - x).norm(), 1e-15);
  EXPECT_LT((rd.couplings[1] - z).norm(), 1e-15);
  EXPECT_EQ(rd.overlap_rank, 2);
}

TEST(ReducedOperators, AssembleA) {
  const auto hz = constant_h(1, {{1.0, "Z"}, {0.0, "X"}});
  const auto rd = compute_reduced_operators(build_kmoment_basis(hz, 0, 1), hz);
  MatrixXc expected = MatrixXc::Zero(2, 2);
  expected(0, 0) = cplx(0, -1);
  expected(1, 1) = cplx(0, 1);
  EXPECT_LT((assemble_A(rd, 0.5) - expected).norm(), 1e-15);
  EXPECT_THROW(assemble_A(rd, 2.0), DomainError);

  const auto h0 = constant_h(1, {{0.0, "Z"}, {0.0, "X"}});
  const auto rd0 = compute_reduced_operators(build_kmoment_basis(h0, 0, 1), h0);
  EXPECT_EQ(assemble_A(rd0, 0.1).norm(), 0.0);
}

TEST(ReducedOperators, AntiHermitianAndMatchesDenseInnerProducts) {
  std::mt19937 rng(21);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 3;
    std::vector<LcuTerm> terms;
    for (int k = 0; k < 5; ++k)
      terms.push_back({CoefficientFn::trig(g(rng), 1.0 + k, g(rng)),
                       PauliString::from_text(chronospec::testing::random_pauli_text(n, rng))});
    const LcuHamiltonian h(n, terms, 3.0);
    const auto b = build_kmoment_basis(h, 1, 2);
    const auto rd = compute_reduced_operators(b, h);
    for (std::size_t gi = 0; gi < h.size(); ++gi) {
      const MatrixXc Hg = pauli_matrix(h.term(gi).op);
      for (std::size_t i = 0; i < b.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) {
          const cplx dense = b.states[i].dot(Hg * b.states[j]);
          EXPECT_LT(std::abs(rd.couplings[gi](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - dense),
                    1e-13);
        }
      EXPECT_LT(hermiticity_defect(rd.couplings[gi]), 1e-15);
    }
    for (double t : {0.0, 1.1, 2.9}) {
      const MatrixXc A = assemble_A(rd, t);
      EXPECT_LT((A + A.adjoint()).norm(), 1e-13);
    }
  }
}

TEST(Reconstruct, Examples) {
  const auto h = constant_h(1, {{1.0, "Z"}, {1.0, "X"}});
  const auto b = build_kmoment_basis(h, 0, 1);
  const VectorXc ref = reconstruct_state(b, reference_parameters(b));
  EXPECT_EQ(ref(0), cplx(1.0, 0.0));
  EXPECT_EQ(ref(1), cplx(0.0, 0.0));
  EXPECT_EQ(reconstruct_state(b, VectorXc::Zero(2)).norm(), 0.0);
  VectorXc a(2);
  a << 1, 1;
  a /= std::sqrt(2.0);
  const VectorXc psi = reconstruct_state(b, a);
  EXPECT_NEAR(psi.norm(), 1.0, 1e-15);
  EXPECT_NEAR(psi(0).real(), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(psi(1).real(), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_THROW(reconstruct_state(b, VectorXc::Zero(3)), DomainError);
}
