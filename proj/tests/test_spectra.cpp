#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "nonherm/spectra.hpp"
#include "oracles.hpp"

using namespace nonherm;

namespace {

const PolynomialPotential kCubic = PolynomialPotential::imaginary_cubic();

}  // namespace

TEST(Biorthogonal, OscillatorHasUnitConditionNumbers) {
  const auto sys = biorthogonal_system(build_matrix(parse_potential("x^2"), Discretization::hermite(80)), 8);
  ASSERT_EQ(sys.size(), 8u);
  for (double k : sys.condition_numbers) EXPECT_NEAR(k, 1.0, 1e-10);
  EXPECT_LE(sys.max_cross_overlap, 1e-10);
}

TEST(Biorthogonal, UpperTriangular2x2MatchesHandOverlap) {
  const double delta = 10.0;
  CMatrix h(2, 2);
  h << 1.0, delta, 0.0, 2.0;
  const auto sys = biorthogonal_system(h, 2);
  // psi_0 = (1,0), phi_0 ~ (1,-delta); psi_1 ~ (delta,1), phi_1 = (0,1).
  const double expected = std::sqrt(1.0 + delta * delta);
  EXPECT_NEAR(sys.condition_numbers[0], expected, 1e-12 * expected);
  EXPECT_NEAR(sys.condition_numbers[1], expected, 1e-12 * expected);
  EXPECT_LE(sys.max_cross_overlap, 1e-12);
}

TEST(Biorthogonal, CubicConditionNumbersIncreaseAndAgreeAcrossResolutions) {
  const auto fine = biorthogonal_system(build_matrix(kCubic, Discretization::hermite(400)), 10);
  const auto coarse = biorthogonal_system(build_matrix(kCubic, Discretization::hermite(300)), 10);
  for (std::size_t n = 0; n < 10; ++n) {
    if (n > 0) EXPECT_GT(fine.condition_numbers[n], fine.condition_numbers[n - 1]);
    EXPECT_LE(std::abs(fine.condition_numbers[n] / coarse.condition_numbers[n] - 1.0), 0.01) << n;
  }
}

TEST(Biorthogonal, CubicSpectrumIsRealInConvergedWindow) {
  const auto sys = biorthogonal_system(build_matrix(kCubic, Discretization::hermite(300)), 12);
  for (const auto& l : sys.eigenvalues) EXPECT_LE(std::abs(l.imag()), 1e-6 * std::abs(l));
}

TEST(Biorthogonal, ConditionNumbersAtLeastOneAndBiorthogonal) {
  std::mt19937_64 rng(53);
  for (int t = 0; t < 10; ++t) {
    const auto p = oracle::planted_real_spectrum(6, rng);
    const auto sys = biorthogonal_system(p.a, 6);
    for (double k : sys.condition_numbers) EXPECT_GE(k, 1.0 - 1e-12);
    EXPECT_LE(sys.max_cross_overlap, 1e-10);
  }
}

TEST(Biorthogonal, LeftVectorIsConjugateOfRightForComplexSymmetricSection) {
  const auto m = build_matrix(kCubic, Discretization::finite_difference(300, 6.0));
  const auto sys = biorthogonal_system(m, 8);
  for (Eigen::Index n = 0; n < 8; ++n) {
    const CVector phi = sys.left.col(n);
    const CVector psi_conj = sys.right.col(n).conjugate();
    // Equal up to a unimodular phase.
    EXPECT_NEAR(std::abs(phi.dot(psi_conj)), 1.0, 1e-10) << n;
    EXPECT_NEAR(complex_symmetric_condition(sys.right.col(n)),
                sys.condition_numbers[static_cast<std::size_t>(n)],
                1e-10 * sys.condition_numbers[static_cast<std::size_t>(n)]);
  }
}

TEST(Biorthogonal, PairingFailureNamesIndex) {
  CMatrix h(2, 2);
  h << 1.0, 0.5, 0.0, 3.0;
  CMatrix wrong = h.adjoint();
  wrong(1, 1) += 0.5;
  try {
    biorthogonal_system(h, wrong, 2);
    FAIL() << "expected PairingError";
  } catch (const PairingError& e) {
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(Biorthogonal, JordanBlockIsNearDefect) {
  CMatrix j(2, 2);
  j << 1.0, 1.0, 0.0, 1.0;
  EXPECT_THROW(biorthogonal_system(j, 1), NearDefectError);
}

TEST(Biorthogonal, RejectsTooManyPairsForSection) {
  const auto m = build_matrix(kCubic, Discretization::hermite(40));
  EXPECT_THROW(biorthogonal_system(m, 11), InputError);
  EXPECT_NO_THROW(biorthogonal_system(m, 10));
}

TEST(ConvergenceGate, MarksOnlyStableLowPairs) {
  const auto sys = gated_biorthogonal_system(kCubic, Discretization::hermite(100), 25);
  EXPECT_TRUE(sys.converged.front());
  EXPECT_FALSE(sys.converged.back());
  EXPECT_GE(sys.converged_count(), 5u);
  EXPECT_LT(sys.converged_count(), 25u);
}

TEST(CompletenessRank, TrivialCases) {
  EXPECT_EQ(completeness_rank(CMatrix(CMatrix::Identity(5, 5))).rank, 5u);
  CMatrix j(2, 2);
  j << 0.0, 1.0, 0.0, 0.0;
  EXPECT_EQ(completeness_rank(j).rank, 1u);
}

TEST(CompletenessRank, CubicSectionMinimumShrinksWithN) {
  const auto r200 = completeness_rank(build_matrix(kCubic, Discretization::hermite(200)));
  const auto r100 = completeness_rank(build_matrix(kCubic, Discretization::hermite(100)));
  EXPECT_EQ(r100.rank, 100u);
  // At N = 200 the smallest singular values reach the N eps s_max rank threshold.
  EXPECT_LT(r200.min_singular_value, 1e-3 * r100.min_singular_value);
  EXPECT_GT(r200.min_singular_value, 0.0);
  EXPECT_GE(r200.rank, 190u);
}

TEST(FrameBounds, OrthonormalFamilyIsParseval) {
  std::mt19937_64 rng(59);
  Eigen::HouseholderQR<CMatrix> qr(oracle::random_matrix(20, 7, rng));
  const CMatrix q = qr.householderQ() * CMatrix::Identity(20, 7);
  const auto fb = frame_bounds(q, 200, 1);
  EXPECT_NEAR(fb.lower, 1.0, 1e-12);
  EXPECT_NEAR(fb.upper, 1.0, 1e-12);
}

TEST(FrameBounds, TwoVectorsAtSixtyDegrees) {
  CMatrix v(2, 2);
  v << 1.0, 0.5, 0.0, std::sqrt(3.0) / 2.0;
  const auto fb = frame_bounds(v, 500, 2);
  EXPECT_NEAR(fb.lower, 0.5, 1e-12);
  EXPECT_NEAR(fb.upper, 1.5, 1e-12);
  EXPECT_GE(fb.sampled_min, fb.lower - 1e-12);
  EXPECT_LE(fb.sampled_max, fb.upper + 1e-12);
}

TEST(FrameBounds, CubicEigenvectorRatioGrowsWithK) {
  const auto sys = biorthogonal_system(build_matrix(kCubic, Discretization::hermite(300)), 12);
  double prev = 0.0;
  for (Eigen::Index k : {4, 8, 12}) {
    const double r = frame_bounds(sys.right.leftCols(k), 200, 7).ratio();
    EXPECT_GT(r, prev) << "K = " << k;
    prev = r;
  }
}

TEST(FrameBounds, SamplingIsSeedDeterministic) {
  std::mt19937_64 rng(61);
  const CMatrix v = oracle::random_matrix(10, 4, rng);
  const auto a = frame_bounds(v, 300, 99);
  const auto b = frame_bounds(v, 300, 99);
  EXPECT_EQ(a.sampled_min, b.sampled_min);
  EXPECT_EQ(a.sampled_max, b.sampled_max);
}

TEST(FrameBounds, InputErrors) {
  CMatrix v = CMatrix::Identity(3, 2);
  EXPECT_THROW(frame_bounds(v.leftCols(1), 200, 0), InputError);
  EXPECT_THROW(frame_bounds(v, 50, 0), InputError);
  v.col(1).setZero();
  EXPECT_THROW(frame_bounds(v, 200, 0), InputError);
}

TEST(Dissipativity, DiagonalClosedForm) {
  CMatrix h = CMatrix::Zero(2, 2);
  h(0, 0) = 1.0;
  h(1, 1) = 2.0;
  // Im (-i lambda + 1)^{-1} = lambda / (lambda^2 + 1).
  EXPECT_NEAR(dissipativity_form_check(h, -1.0), std::min(0.5, 0.4), 1e-15);
}

TEST(Dissipativity, ZeroOperatorGivesZero) {
  EXPECT_EQ(dissipativity_form_check(CMatrix(CMatrix::Zero(3, 3)), -2.0), 0.0);
}

TEST(Dissipativity, CubicSectionIsNonNegative) {
  const auto m = build_matrix(kCubic, Discretization::hermite(300));
  EXPECT_GE(dissipativity_form_check(m, -1.0), -1e-10);
}

TEST(Dissipativity, RejectsNonNegativeXiAndSingularShift) {
  EXPECT_THROW(dissipativity_form_check(CMatrix(CMatrix::Identity(2, 2)), 0.0), InputError);
  CMatrix h = CMatrix::Zero(2, 2);
  h(0, 0) = Complex(0.0, -1.0);  // -i h has eigenvalue -1
  EXPECT_THROW(dissipativity_form_check(h, -1.0), ResolventError);
}

TEST(Csv, EigenpairRows) {
  const auto sys = biorthogonal_system(build_matrix(parse_potential("x^2"), Discretization::hermite(40)), 3);
  std::ostringstream os;
  write_eigenpairs_csv(os, sys);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "n,re_lambda,im_lambda,kappa,converged");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 3);
}
