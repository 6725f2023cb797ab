#pragma once

// Dense complex kernels: eigendecomposition, smallest singular value, pivoted
// solves. Everything here is a pure function of its inputs.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nonherm/error.hpp"

namespace nonherm {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

inline void require_finite(const CMatrix& a, const char* what) {
  if (!a.allFinite()) {
    throw InputError(std::string(what) + ": matrix contains NaN or Inf entries");
  }
}

inline void require_square(const CMatrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() < 1) {
    throw InputError(std::string(what) + ": expected a non-empty square matrix, got " +
                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
}

// Exact 2-norm (largest singular value).
inline double spectral_norm(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::BDCSVD<CMatrix> svd(a);
  return svd.singularValues()(0);
}

// Smallest eigenvalue first.
inline RVector hermitian_eigenvalues(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

// ---------------------------------------------------------------------------
// Eigendecomposition

struct EigOptions {
  double tol = 1e-10;            // residual gate relative to ||A||
  int sweeps_per_dim = 60;       // QR sweep cap = sweeps_per_dim * dim
  bool vectors = true;
};

struct EigenDecomposition {
  std::vector<Complex> eigenvalues;  // ascending real part, then imaginary part
  CMatrix right_vectors;             // unit-norm columns (empty if not requested)
  std::vector<double> residuals;     // ||A v - lambda v|| per pair
  double norm = 0.0;                 // ||A||_2
};

namespace detail {

// Eigenvectors of an upper-triangular T, one per diagonal entry, by back
// substitution. Near-equal diagonal entries are perturbed to eps*||T|| so that
// defective blocks still yield (nearly parallel) finite vectors.
inline CMatrix triangular_eigenvectors(const CMatrix& t) {
  const Eigen::Index n = t.rows();
  CMatrix x = CMatrix::Zero(n, n);
  const double small = std::max(kEps * t.cwiseAbs().maxCoeff(),
                                std::numeric_limits<double>::min());
  for (Eigen::Index k = 0; k < n; ++k) {
    const Complex lambda = t(k, k);
    x(k, k) = 1.0;
    for (Eigen::Index i = k - 1; i >= 0; --i) {
      Complex acc = t(i, k);
      for (Eigen::Index j = i + 1; j < k; ++j) acc += t(i, j) * x(j, k);
      Complex d = t(i, i) - lambda;
      if (std::abs(d) < small) d = small;
      x(i, k) = -acc / d;
    }
    // Rescale to keep the column representable when the recursion overflows.
    const double m = x.col(k).head(k + 1).cwiseAbs().maxCoeff();
    if (m > 1e100) x.col(k) /= m;
  }
  return x;
}

inline bool eig_less(const Complex& a, const Complex& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

// Index of the bottom-most subdiagonal entry that never deflated.
inline std::size_t stalled_deflation_index(const CMatrix& t) {
  for (Eigen::Index i = t.rows() - 1; i >= 1; --i) {
    const double scale = std::abs(t(i, i)) + std::abs(t(i - 1, i - 1));
    if (std::abs(t(i, i - 1)) > kEps * std::max(scale, 1e-300)) {
      return static_cast<std::size_t>(i);
    }
  }
  return 0;
}

inline bool is_tridiagonal(const CMatrix& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if ((i > j + 1 || j > i + 1) && a(i, j) != Complex(0.0, 0.0)) return false;
    }
  }
  return true;
}

inline void fill_residuals(const CMatrix& a, EigenDecomposition& out, double tol) {
  const Eigen::Index n = a.rows();
  const CMatrix av = a * out.right_vectors;
  out.residuals.resize(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double r = (av.col(k) - out.eigenvalues[ku] * out.right_vectors.col(k)).norm();
    out.residuals[ku] = r;
    if (r > tol * std::max(out.norm, std::numeric_limits<double>::min())) {
      throw ConvergenceError("eig_dense: eigenpair " + std::to_string(k) + " residual " +
                                 std::to_string(r) + " exceeds tol*||A||",
                             ku);
    }
  }
}

// Hermitian input: real spectrum from the self-adjoint solver. Tridiagonal
// input is phase-scaled to a real symmetric tridiagonal first, which keeps
// large finite-difference sections cheap.
inline EigenDecomposition eig_hermitian(const CMatrix& a, const EigOptions& opt) {
  const Eigen::Index n = a.rows();
  EigenDecomposition out;
  const int mode = opt.vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly;
  RVector values;
  if (is_tridiagonal(a) && n > 1) {
    RVector diag(n);
    RVector sub(n - 1);
    CVector phase(n);
    phase(0) = 1.0;
    for (Eigen::Index k = 0; k < n; ++k) diag(k) = a(k, k).real();
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      const Complex e = a(k + 1, k);
      sub(k) = std::abs(e);
      phase(k + 1) = sub(k) > 0.0 ? phase(k) * e / sub(k) : phase(k);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, mode);
    if (es.info() != Eigen::Success) throw ConvergenceError("eig_dense: tridiagonal QL failed", 0);
    values = es.eigenvalues();
    if (opt.vectors) out.right_vectors = phase.asDiagonal() * es.eigenvectors().cast<Complex>();
    // ||A|| of a Hermitian matrix is its largest |eigenvalue|.
    out.norm = std::max(std::abs(values(0)), std::abs(values(n - 1)));
  } else {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(a, mode);
    if (es.info() != Eigen::Success) throw ConvergenceError("eig_dense: Hermitian solver failed", 0);
    values = es.eigenvalues();
    if (opt.vectors) out.right_vectors = es.eigenvectors();
    out.norm = std::max(std::abs(values(0)), std::abs(values(n - 1)));
  }
  for (Eigen::Index k = 0; k < n; ++k) out.eigenvalues.emplace_back(values(k), 0.0);
  if (opt.vectors) {
    for (Eigen::Index k = 0; k < n; ++k) out.right_vectors.col(k).normalize();
    fill_residuals(a, out, opt.tol);
  }
  return out;
}

}  // namespace detail

inline EigenDecomposition eig_dense(const CMatrix& a, const EigOptions& opt = {}) {
  require_square(a, "eig_dense");
  require_finite(a, "eig_dense");
  if (!(opt.tol > 0.0)) throw InputError("eig_dense: tol must be positive");

  const Eigen::Index n = a.rows();
  if (a == a.adjoint()) return detail::eig_hermitian(a, opt);
  Eigen::ComplexSchur<CMatrix> schur(n);
  schur.setMaxIterations(static_cast<Eigen::Index>(opt.sweeps_per_dim) * n);
  schur.compute(a, opt.vectors);
  if (schur.info() != Eigen::Success) {
    const std::size_t idx = detail::stalled_deflation_index(schur.matrixT());
    throw ConvergenceError("eig_dense: shifted QR did not converge within " +
                               std::to_string(opt.sweeps_per_dim * n) +
                               " sweeps; deflation stalled at index " + std::to_string(idx),
                           idx);
  }

  const CMatrix& t = schur.matrixT();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return detail::eig_less(t(i, i), t(j, j));
  });

  EigenDecomposition out;
  out.norm = spectral_norm(a);
  out.eigenvalues.reserve(static_cast<std::size_t>(n));
  for (auto i : order) out.eigenvalues.push_back(t(i, i));

  if (!opt.vectors) return out;

  const CMatrix y = schur.matrixU() * detail::triangular_eigenvectors(t);
  out.right_vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    CVector v = y.col(order[static_cast<std::size_t>(k)]);
    v /= v.norm();
    out.right_vectors.col(k) = v;
  }
  detail::fill_residuals(a, out, opt.tol);
  return out;
}

// ---------------------------------------------------------------------------
// Pivoted LU with growth monitoring

class LuFactorization {
 public:
  explicit LuFactorization(const CMatrix& a) : lu_(a.rows()) {
    require_square(a, "lu");
    require_finite(a, "lu");
    lu_.compute(a);
    const double amax = a.cwiseAbs().maxCoeff();
    const CMatrix& f = lu_.matrixLU();
    const double umax = f.triangularView<Eigen::Upper>().toDenseMatrix().cwiseAbs().maxCoeff();
    growth_ = amax > 0.0 ? umax / amax : 0.0;
    const double thresh = static_cast<double>(a.rows()) * kEps * std::max(amax, umax);
    for (Eigen::Index k = 0; k < f.rows(); ++k) {
      if (!(std::abs(f(k, k)) > thresh)) {
        singular_pivot_ = static_cast<std::size_t>(k);
        break;
      }
    }
  }

  Eigen::Index dim() const { return lu_.rows(); }
  double growth() const { return growth_; }
  std::optional<std::size_t> singular_pivot() const { return singular_pivot_; }

  // A x = b
  template <class Rhs>
  auto solve(const Rhs& b) const {
    check();
    return lu_.solve(b).eval();
  }

  // A^H x = b, via P A = L U  =>  A^H = U^H L^H P.
  CVector solve_adjoint(const CVector& b) const {
    check();
    const CMatrix& f = lu_.matrixLU();
    CVector y = f.triangularView<Eigen::Upper>().adjoint().solve(b);
    y = f.triangularView<Eigen::UnitLower>().adjoint().solve(y);
    return lu_.permutationP().transpose() * y;
  }

 private:
  void check() const {
    if (singular_pivot_) {
      throw SingularMatrixError(
          "solve: matrix is singular to working precision at pivot " +
              std::to_string(*singular_pivot_),
          *singular_pivot_);
    }
  }

  Eigen::PartialPivLU<CMatrix> lu_;
  double growth_ = 0.0;
  std::optional<std::size_t> singular_pivot_;
};

inline CVector solve(const CMatrix& a, const CVector& b) {
  require_square(a, "solve");
  if (b.size() != a.rows()) {
    throw InputError("solve: rhs length " + std::to_string(b.size()) +
                     " does not match dimension " + std::to_string(a.rows()));
  }
  if (!b.allFinite()) throw InputError("solve: rhs contains NaN or Inf");
  return LuFactorization(a).solve(b);
}

inline CMatrix solve(const CMatrix& a, const CMatrix& b) {
  require_square(a, "solve");
  if (b.rows() != a.rows()) throw InputError("solve: rhs row count mismatch");
  return LuFactorization(a).solve(b);
}

// ---------------------------------------------------------------------------
// Smallest singular value

namespace detail {

// Deterministic unit start vector; identical on every platform and thread.
inline CVector lanczos_start(Eigen::Index n) {
  std::uint64_t s = 0x9E3779B97F4A7C15ull;
  auto next = [&s] {
    s ^= s >> 12;
    s ^= s << 25;
    s ^= s >> 27;
    return static_cast<double>((s * 0x2545F4914F6CDD1Dull) >> 11) * 0x1.0p-53 - 0.5;
  };
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double re = next();
    const double im = next();
    v(i) = Complex(re, im);
  }
  return v / v.norm();
}

}  // namespace detail

struct LanczosResult {
  double theta = 0.0;  // largest eigenvalue of the Hermitian PSD operator
  int steps = 0;
  bool converged = false;
};

// Largest eigenvalue of a Hermitian positive semidefinite operator given only
// its action, by Lanczos with full reorthogonalization. Used on (A^H A)^{-1}.
template <class Apply>
LanczosResult lanczos_largest(Eigen::Index n, Apply&& apply, int max_steps = 120,
                              double rel_tol = 1e-13) {
  LanczosResult res;
  const int m = static_cast<int>(std::min<Eigen::Index>(n, max_steps));
  CMatrix q(n, m + 1);
  std::vector<double> alpha;
  std::vector<double> beta;
  q.col(0) = detail::lanczos_start(n);

  for (int j = 0; j < m; ++j) {
    CVector w = apply(CVector(q.col(j)));
    if (!w.allFinite()) {
      res.theta = std::numeric_limits<double>::infinity();
      res.converged = true;
      return res;
    }
    const double a = q.col(j).dot(w).real();
    alpha.push_back(a);
    // Two passes of classical Gram-Schmidt against every previous vector.
    for (int pass = 0; pass < 2; ++pass) {
      const CVector c = q.leftCols(j + 1).adjoint() * w;
      w -= q.leftCols(j + 1) * c;
    }
    const double b = w.norm();

    const int k = j + 1;
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
      tri(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < k) {
        tri(i, i + 1) = beta[static_cast<std::size_t>(i)];
        tri(i + 1, i) = beta[static_cast<std::size_t>(i)];
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
    const double theta = es.eigenvalues()(k - 1);
    const double bound = b * std::abs(es.eigenvectors()(k - 1, k - 1));
    res.theta = theta;
    res.steps = k;
    if (bound <= rel_tol * std::abs(theta) || b <= kEps * std::abs(theta)) {
      res.converged = true;
      return res;
    }
    beta.push_back(b);
    q.col(j + 1) = w / b;
  }
  res.converged = (m == n);
  return res;
}

struct SvdOptions {
  Eigen::Index dense_limit = 256;  // full SVD at or below this dimension
  int max_lanczos_steps = 120;
};

inline double smallest_singular_value(const CMatrix& a, const SvdOptions& opt = {}) {
  require_finite(a, "smallest_singular_value");
  if (a.size() == 0) throw InputError("smallest_singular_value: empty matrix");
  const Eigen::Index n = std::min(a.rows(), a.cols());
  auto full = [&] {
    Eigen::BDCSVD<CMatrix> svd(a);
    return svd.singularValues()(n - 1);
  };
  if (a.rows() != a.cols() || a.rows() <= opt.dense_limit) return full();

  const LuFactorization lu(a);
  if (lu.singular_pivot()) return full();
  auto apply = [&](const CVector& v) -> CVector { return lu.solve(lu.solve_adjoint(v)); };
  const LanczosResult r = lanczos_largest(a.rows(), apply, opt.max_lanczos_steps);
  if (!r.converged) return full();
  if (!std::isfinite(r.theta)) return 0.0;
  return 1.0 / std::sqrt(r.theta);
}

}  // namespace nonherm
