#include <gtest/gtest.h>

#include <random>

#include "nonherm/lacore.hpp"
#include "oracles.hpp"

using namespace nonherm;

namespace {

CMatrix diag(std::initializer_list<Complex> d) {
  CVector v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (auto x : d) v(i++) = x;
  return v.asDiagonal();
}

CMatrix jordan2() {
  CMatrix j(2, 2);
  j << 0.0, 1.0, 0.0, 0.0;
  return j;
}

}  // namespace

TEST(EigDense, IdentityHasUnitEigenvaluesAndZeroResiduals) {
  const auto ed = eig_dense(CMatrix::Identity(3, 3));
  ASSERT_EQ(ed.eigenvalues.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(ed.eigenvalues[i], Complex(1.0, 0.0));
    EXPECT_EQ(ed.residuals[i], 0.0);
  }
}

TEST(EigDense, DiagonalSortedByRealThenImaginary) {
  const auto ed = eig_dense(diag({1.0, {2.0, 1.0}, -3.0}));
  ASSERT_EQ(ed.eigenvalues.size(), 3u);
  EXPECT_NEAR(std::abs(ed.eigenvalues[0] - Complex(-3.0, 0.0)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(ed.eigenvalues[1] - Complex(1.0, 0.0)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(ed.eigenvalues[2] - Complex(2.0, 1.0)), 0.0, 1e-14);

  const auto ties = eig_dense(diag({{1.0, 2.0}, {1.0, -1.0}, {1.0, 0.5}}));
  EXPECT_DOUBLE_EQ(ties.eigenvalues[0].imag(), -1.0);
  EXPECT_DOUBLE_EQ(ties.eigenvalues[1].imag(), 0.5);
  EXPECT_DOUBLE_EQ(ties.eigenvalues[2].imag(), 2.0);
}

TEST(EigDense, RandomMatchesCharacteristicPolynomialRoots) {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 10; ++trial) {
    const CMatrix a = oracle::random_unit_disc_matrix(6, rng);
    const auto ed = eig_dense(a);
    const auto roots = oracle::polynomial_roots(oracle::characteristic_polynomial(a));
    EXPECT_LE(oracle::multiset_distance(ed.eigenvalues, roots), 1e-10) << "trial " << trial;
  }
}

TEST(EigDense, ResidualsWithinToleranceAndVectorsUnitNorm) {
  std::mt19937_64 rng(7);
  const CMatrix a = oracle::random_matrix(40, 40, rng);
  const auto ed = eig_dense(a);
  ASSERT_EQ(ed.eigenvalues.size(), 40u);
  for (Eigen::Index k = 0; k < 40; ++k) {
    EXPECT_NEAR(ed.right_vectors.col(k).norm(), 1.0, 1e-12);
    EXPECT_LE(ed.residuals[static_cast<std::size_t>(k)], 1e-10 * ed.norm);
  }
  for (std::size_t k = 1; k < 40; ++k) {
    const auto& p = ed.eigenvalues[k - 1];
    const auto& q = ed.eigenvalues[k];
    EXPECT_TRUE(p.real() < q.real() || (p.real() == q.real() && p.imag() <= q.imag()));
  }
}

TEST(EigDense, HermitianInputGivesRealSpectrum) {
  std::mt19937_64 rng(11);
  const CMatrix b = oracle::random_matrix(30, 30, rng);
  const CMatrix a = b + b.adjoint();
  const auto ed = eig_dense(a);
  for (const auto& l : ed.eigenvalues) EXPECT_LE(std::abs(l.imag()), 1e-10 * ed.norm);
  EXPECT_NEAR(ed.norm, spectral_norm(a), 1e-10 * ed.norm);
}

TEST(EigDense, HermitianTridiagonalWithComplexOffDiagonal) {
  const int n = 50;
  CMatrix a = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = 0.1 * i;
    if (i + 1 < n) {
      a(i + 1, i) = std::polar(1.0, 0.3 * i);
      a(i, i + 1) = std::conj(a(i + 1, i));
    }
  }
  const auto fast = eig_dense(a);
  const RVector ref = Eigen::SelfAdjointEigenSolver<CMatrix>(a).eigenvalues();
  for (int i = 0; i < n; ++i) {
    EXPECT_NEAR(fast.eigenvalues[static_cast<std::size_t>(i)].real(), ref(i), 1e-12);
    EXPECT_LE(fast.residuals[static_cast<std::size_t>(i)], 1e-12 * fast.norm);
  }
}

TEST(EigDense, InvariantUnderHouseholderSimilarity) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const CMatrix a = oracle::random_matrix(12, 12, rng);
    const CMatrix q = oracle::random_householder(12, rng);
    const auto e1 = eig_dense(a);
    const auto e2 = eig_dense(q * a * q.adjoint());
    EXPECT_LE(oracle::multiset_distance(e1.eigenvalues, e2.eigenvalues), 1e-10 * e1.norm);
  }
}

TEST(EigDense, RejectsNanAndNonSquare) {
  CMatrix a = CMatrix::Identity(3, 3);
  a(1, 2) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(eig_dense(a), InputError);
  EXPECT_THROW(eig_dense(CMatrix::Zero(2, 3)), InputError);
  EXPECT_THROW(eig_dense(CMatrix(0, 0)), InputError);
}

TEST(EigDense, IterationCapFailureNamesDeflationIndex) {
  std::mt19937_64 rng(5);
  const CMatrix a = oracle::random_matrix(20, 20, rng);
  EigOptions o;
  o.sweeps_per_dim = 0;
  try {
    eig_dense(a, o);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.index(), 0u);
    EXPECT_NE(std::string(e.what()).find("deflation stalled at index"), std::string::npos);
  }
}

TEST(SmallestSingularValue, TrivialCases) {
  CMatrix s(1, 1);
  s(0, 0) = 1.0 - 3.0;
  EXPECT_DOUBLE_EQ(smallest_singular_value(s), 2.0);
  EXPECT_NEAR(smallest_singular_value(CMatrix::Identity(4, 4)), 1.0, 1e-15);
  EXPECT_EQ(smallest_singular_value(CMatrix::Zero(3, 3)), 0.0);
}

TEST(SmallestSingularValue, JordanBlockMatchesClosedForm2x2) {
  const Complex z = 0.1;
  const CMatrix a = jordan2() - z * CMatrix::Identity(2, 2);
  const auto [smin, smax] = oracle::svd_2x2(a(0, 0), a(0, 1), a(1, 0), a(1, 1));
  EXPECT_NEAR(smallest_singular_value(a), smin, 1e-12 * smin);
  (void)smax;
}

TEST(SmallestSingularValue, LargeMatrixLanczosPathMatchesFullSvd) {
  std::mt19937_64 rng(17);
  const CMatrix a = oracle::random_matrix(300, 300, rng);
  Eigen::BDCSVD<CMatrix> svd(a);
  const double ref = svd.singularValues()(299);
  EXPECT_NEAR(smallest_singular_value(a), ref, 1e-10 * ref);
}

TEST(SmallestSingularValue, AdjointInvariance) {
  std::mt19937_64 rng(23);
  for (int n : {5, 40, 280}) {
    const CMatrix a = oracle::random_matrix(n, n, rng);
    const double s1 = smallest_singular_value(a);
    const double s2 = smallest_singular_value(a.adjoint());
    // The Lanczos path (n > 256) converges to its own stopping tolerance.
    EXPECT_NEAR(s1, s2, (n > 256 ? 1e-10 : 1e-12) * s1) << "n = " << n;
  }
}

TEST(SmallestSingularValue, BoundedByRayleighQuotient) {
  std::mt19937_64 rng(29);
  const CMatrix a = oracle::random_matrix(25, 25, rng);
  const double smin = smallest_singular_value(a);
  for (int t = 0; t < 50; ++t) {
    CVector v = oracle::random_matrix(25, 1, rng);
    v.normalize();
    EXPECT_LE(smin, (a * v).norm() * (1 + 1e-14));
  }
}

TEST(SmallestSingularValue, RejectsNan) {
  CMatrix a = CMatrix::Identity(2, 2);
  a(0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(smallest_singular_value(a), InputError);
}

TEST(Solve, TrivialSystems) {
  CVector b(3);
  b << 1.0, Complex(2.0, -1.0), -4.0;
  const CVector x = solve(CMatrix::Identity(3, 3), b);
  EXPECT_EQ((x - b).norm(), 0.0);

  CVector b2(2);
  b2 << 2.0, 8.0;
  const CVector x2 = solve(diag({2.0, 4.0}), b2);
  EXPECT_NEAR(std::abs(x2(0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(x2(1) - 2.0), 0.0, 1e-15);
}

TEST(Solve, RandomResidualOracle) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    const CMatrix a = oracle::random_matrix(8, 8, rng);
    const CVector b = oracle::random_matrix(8, 1, rng);
    const CVector x = solve(a, b);
    EXPECT_LE((a * x - b).norm() / b.norm(), 1e-12);
  }
}

TEST(Solve, AdjointSolveMatchesExplicitAdjoint) {
  std::mt19937_64 rng(37);
  const CMatrix a = oracle::random_matrix(10, 10, rng);
  const CVector b = oracle::random_matrix(10, 1, rng);
  const LuFactorization lu(a);
  const CVector x = lu.solve_adjoint(b);
  EXPECT_LE((a.adjoint() * x - b).norm() / b.norm(), 1e-12);
  EXPECT_GE(lu.growth(), 0.0);
}

TEST(Solve, SingularMatrixReportsPivot) {
  CMatrix a(3, 3);
  a << 1, 2, 3, 2, 4, 6, 0, 0, 1;
  CVector b = CVector::Ones(3);
  try {
    solve(a, b);
    FAIL() << "expected SingularMatrixError";
  } catch (const SingularMatrixError& e) {
    EXPECT_LT(e.pivot(), 3u);
    EXPECT_NE(std::string(e.what()).find("pivot"), std::string::npos);
  }
}

TEST(Solve, ShapeMismatchIsInputError) {
  EXPECT_THROW(solve(CMatrix::Identity(3, 3), CVector(CVector::Ones(2))), InputError);
}

TEST(Lanczos, LargestEigenvalueOfDiagonalOperator) {
  const int n = 200;
  RVector d(n);
  for (int i = 0; i < n; ++i) d(i) = 1.0 + i;
  const auto r = lanczos_largest(n, [&](const CVector& v) -> CVector {
    return d.cast<Complex>().cwiseProduct(v);
  });
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.theta, 200.0, 1e-9);
}
