#pragma once

// Biorthogonal eigensystems, eigenvalue condition numbers, and the Riesz-basis
// diagnostics built on them (frame bounds, completeness rank, dissipativity).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "nonherm/discretize.hpp"
#include "nonherm/error.hpp"
#include "nonherm/lacore.hpp"

namespace nonherm {

struct BiorthogonalSystem {
  std::vector<Complex> eigenvalues;
  CMatrix right;  // unit-norm psi_n as columns
  CMatrix left;   // unit-norm phi_n as columns, H^dagger phi_n = conj(lambda_n) phi_n
  std::vector<Complex> overlaps;          // <phi_n, psi_n>
  std::vector<double> condition_numbers;  // 1 / |<phi_n, psi_n>|
  std::vector<bool> converged;            // all true unless a gate was applied
  double max_cross_overlap = 0.0;         // max_{m != n} |<phi_m, psi_n>|
  double pairing_tol = 0.0;

  std::size_t size() const { return eigenvalues.size(); }
  std::size_t converged_count() const {
    std::size_t c = 0;
    while (c < converged.size() && converged[c]) ++c;
    return c;
  }
};

namespace detail {

// Rotate so the largest-magnitude entry is positive real.
inline void fix_phase(Eigen::Ref<CVector> v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  const Complex p = v(imax);
  if (std::abs(p) > 0.0) v *= std::conj(p) / std::abs(p);
}

// Indices of the k smallest-modulus eigenvalues, returned in the
// decomposition's (real part, imaginary part) order.
inline std::vector<std::size_t> lowest_by_modulus(const std::vector<Complex>& ev, std::size_t k) {
  std::vector<std::size_t> idx(ev.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(ev[a]) < std::abs(ev[b]); });
  idx.resize(std::min(k, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

// Pairs k eigenvectors of h with eigenvectors of h_adjoint by matching lambda
// against conj(mu) within pair_rel_tol * ||h||.
inline BiorthogonalSystem biorthogonal_system(const CMatrix& h, const CMatrix& h_adjoint,
                                              std::size_t k, double pair_rel_tol = 1e-8) {
  require_square(h, "biorthogonal_system");
  if (h_adjoint.rows() != h.rows() || h_adjoint.cols() != h.cols()) {
    throw InputError("biorthogonal_system: adjoint has wrong shape");
  }
  if (k < 1 || k > static_cast<std::size_t>(h.rows())) {
    throw InputError("biorthogonal_system: k out of range");
  }
  const auto right = eig_dense(h);
  const auto left = eig_dense(h_adjoint);

  BiorthogonalSystem sys;
  sys.pairing_tol = pair_rel_tol * right.norm;
  const auto sel = detail::lowest_by_modulus(right.eigenvalues, k);
  const auto n = h.rows();
  sys.right.resize(n, static_cast<Eigen::Index>(k));
  sys.left.resize(n, static_cast<Eigen::Index>(k));
  std::vector<bool> used(left.eigenvalues.size(), false);

  for (std::size_t c = 0; c < sel.size(); ++c) {
    const Complex lambda = right.eigenvalues[sel[c]];
    std::size_t best = left.eigenvalues.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < left.eigenvalues.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(std::conj(left.eigenvalues[j]) - lambda);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (best == left.eigenvalues.size() || best_d > sys.pairing_tol) {
      throw PairingError("biorthogonal_system: no adjoint eigenvalue within tolerance of eigenvalue " +
                             std::to_string(c),
                         c);
    }
    used[best] = true;
    const auto ci = static_cast<Eigen::Index>(c);
    sys.right.col(ci) = right.right_vectors.col(static_cast<Eigen::Index>(sel[c]));
    sys.left.col(ci) = left.right_vectors.col(static_cast<Eigen::Index>(best));
    detail::fix_phase(sys.right.col(ci));
    detail::fix_phase(sys.left.col(ci));
    const Complex ov = sys.left.col(ci).dot(sys.right.col(ci));
    if (std::abs(ov) < 1e-14) {
      throw NearDefectError("biorthogonal_system: overlap of pair " + std::to_string(c) +
                                " vanishes (Jordan-like degeneracy)",
                            c);
    }
    sys.eigenvalues.push_back(lambda);
    sys.overlaps.push_back(ov);
    sys.condition_numbers.push_back(1.0 / std::abs(ov));
  }
  sys.converged.assign(sys.size(), true);

  const CMatrix cross = sys.left.adjoint() * sys.right;
  for (Eigen::Index i = 0; i < cross.rows(); ++i) {
    for (Eigen::Index j = 0; j < cross.cols(); ++j) {
      if (i != j) sys.max_cross_overlap = std::max(sys.max_cross_overlap, std::abs(cross(i, j)));
    }
  }
  return sys;
}

inline BiorthogonalSystem biorthogonal_system(const CMatrix& h, std::size_t k,
                                              double pair_rel_tol = 1e-8) {
  return biorthogonal_system(h, CMatrix(h.adjoint()), k, pair_rel_tol);
}

// Only the lower quarter of a finite section is treated as meaningful.
inline BiorthogonalSystem biorthogonal_system(const OperatorMatrix& m, std::size_t k) {
  if (k < 1 || k > static_cast<std::size_t>(m.dim()) / 4) {
    throw InputError("biorthogonal_system: k = " + std::to_string(k) + " exceeds N/4 = " +
                     std::to_string(m.dim() / 4));
  }
  return biorthogonal_system(m.matrix, adjoint_matrix(m).matrix, k);
}

// kappa_n = 1 / |psi^T psi| for complex-symmetric matrices, where conj(psi)
// is the left eigenvector.
inline double complex_symmetric_condition(const CVector& psi) {
  return psi.squaredNorm() / std::abs(psi.cwiseProduct(psi).sum());
}

// Marks pairs whose eigenvalue moves by less than rel_tol (relative) when the
// section is refined; `refined` is typically the same operator at 2N.
inline void apply_convergence_gate(BiorthogonalSystem& sys, const CMatrix& refined,
                                   double rel_tol = 1e-7) {
  EigOptions o;
  o.vectors = false;
  const auto ed = eig_dense(refined, o);
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const Complex lam = sys.eigenvalues[i];
    double best = std::numeric_limits<double>::infinity();
    for (const auto& mu : ed.eigenvalues) best = std::min(best, std::abs(mu - lam));
    sys.converged[i] = best < rel_tol * std::max(std::abs(lam), 1e-300);
  }
}

// Biorthogonal system at d.n, gated against the same operator at 2N.
inline BiorthogonalSystem gated_biorthogonal_system(const PolynomialPotential& p,
                                                    const Discretization& d, std::size_t k,
                                                    double rel_tol = 1e-7) {
  auto sys = biorthogonal_system(build_matrix(p, d), k);
  apply_convergence_gate(sys, build_matrix(p, d.with_n(2 * d.n)).matrix, rel_tol);
  return sys;
}

struct CompletenessRank {
  std::size_t rank = 0;
  double min_singular_value = 0.0;  // of the unit-column eigenvector matrix
};

// Discrete surrogate for completeness: rank of the matrix of all right eigenvectors.
inline CompletenessRank completeness_rank(const CMatrix& h) {
  const auto ed = eig_dense(h);
  Eigen::JacobiSVD<CMatrix> svd(ed.right_vectors);
  const auto& s = svd.singularValues();
  CompletenessRank r;
  r.min_singular_value = s(s.size() - 1);
  const double thresh = static_cast<double>(h.rows()) * kEps * s(0);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > thresh) ++r.rank;
  }
  return r;
}

inline CompletenessRank completeness_rank(const OperatorMatrix& m) {
  return completeness_rank(m.matrix);
}

struct FrameBounds {
  double lower = 0.0;  // lambda_min of the frame operator on the span
  double upper = 0.0;  // lambda_max
  double sampled_min = 0.0;
  double sampled_max = 0.0;
  double ratio() const { return upper / lower; }
};

namespace detail {

// Portable standard normal from a 64-bit engine (std::normal_distribution is
// implementation-defined).
inline double normal_sample(std::mt19937_64& rng) {
  const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace detail

// Extremal constants of sum_n |<psi_n, psi>|^2 / ||psi||^2 over the span of the
// columns, from the singular values of the column matrix, cross-checked
// against `samples` random directions.
inline FrameBounds frame_bounds(const CMatrix& vectors, int samples, std::uint64_t seed) {
  if (vectors.cols() < 2) throw InputError("frame_bounds: need at least 2 vectors");
  if (samples < 100) throw InputError("frame_bounds: need at least 100 samples");
  require_finite(vectors, "frame_bounds");
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    if (vectors.col(j).norm() == 0.0) {
      throw InputError("frame_bounds: vector " + std::to_string(j) + " is zero");
    }
  }
  Eigen::JacobiSVD<CMatrix> svd(vectors);
  const auto& s = svd.singularValues();
  FrameBounds fb;
  fb.upper = s(0) * s(0);
  fb.lower = s(s.size() - 1) * s(s.size() - 1);

  std::mt19937_64 rng(seed);
  fb.sampled_min = std::numeric_limits<double>::infinity();
  fb.sampled_max = 0.0;
  const auto k = vectors.cols();
  for (int t = 0; t < samples; ++t) {
    CVector c(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      const double re = detail::normal_sample(rng);
      const double im = detail::normal_sample(rng);
      c(j) = Complex(re, im);
    }
    const CVector psi = vectors * c;
    const double val = (vectors.adjoint() * psi).squaredNorm() / psi.squaredNorm();
    fb.sampled_min = std::min(fb.sampled_min, val);
    fb.sampled_max = std::max(fb.sampled_max, val);
  }
  const double slack = 1e-8 * fb.upper;
  if (fb.sampled_min < fb.lower - slack || fb.sampled_max > fb.upper + slack) {
    throw Error("frame_bounds: sampled frame sums fall outside the exact bounds");
  }
  return fb;
}

// Smallest eigenvalue of (1/2i)[(-iH - xi)^{-1} - (iH^dagger - xi)^{-1}]. The
// second resolvent is the adjoint of the first, so the form is the imaginary
// part of R = (-iH - xi)^{-1}.
inline double dissipativity_form_check(const CMatrix& h, double xi) {
  require_square(h, "dissipativity_form_check");
  if (!(xi < 0.0)) throw InputError("dissipativity_form_check: xi must be negative");
  const auto n = h.rows();
  const CMatrix shifted = Complex(0.0, -1.0) * h - xi * CMatrix::Identity(n, n);
  const LuFactorization lu(shifted);
  if (lu.singular_pivot()) {
    throw ResolventError("dissipativity_form_check: xi = " + std::to_string(xi) +
                         " is an eigenvalue of -iH");
  }
  const CMatrix r = lu.solve(CMatrix::Identity(n, n));
  const CMatrix form = (r - r.adjoint()) / Complex(0.0, 2.0);
  return hermitian_eigenvalues(form)(0);
}

inline double dissipativity_form_check(const OperatorMatrix& m, double xi) {
  return dissipativity_form_check(m.matrix, xi);
}

// One row per eigenpair: n, Re lambda, Im lambda, kappa_n, converged.
inline void write_eigenpairs_csv(std::ostream& os, const BiorthogonalSystem& sys) {
  os << "n,re_lambda,im_lambda,kappa,converged\n";
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < sys.size(); ++i) {
    os << i << ',' << sys.eigenvalues[i].real() << ',' << sys.eigenvalues[i].imag() << ','
       << sys.condition_numbers[i] << ',' << (sys.converged[i] ? 1 : 0) << '\n';
  }
  os.precision(old);
}

}  // namespace nonherm
