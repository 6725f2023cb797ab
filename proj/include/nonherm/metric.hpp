#pragma once

// Truncated metric operators Theta_K = sum_{n<K} c_n phi_n phi_n^dagger built
// from left eigenvectors, quasi-Hermiticity residuals, conditioning sweeps,
// the induced similarity transform, and the 2x2 Jordan-block counterexample.

#include <cmath>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "nonherm/discretize.hpp"
#include "nonherm/error.hpp"
#include "nonherm/lacore.hpp"
#include "nonherm/spectra.hpp"

namespace nonherm {

enum class WeightRule { geometric, kappa_scaled };

inline std::string to_string(WeightRule r) {
  return r == WeightRule::geometric ? "geometric" : "kappa";
}

inline WeightRule parse_weight_rule(const std::string& s) {
  if (s == "geometric") return WeightRule::geometric;
  if (s == "kappa" || s == "kappa_scaled") return WeightRule::kappa_scaled;
  throw InputError("unknown weight rule '" + s + "' (expected geometric or kappa)");
}

struct TruncatedMetric {
  std::size_t rank = 0;
  std::vector<double> weights;  // c_n
  CMatrix theta;                // Hermitian PSD, N x N
  CMatrix factor;               // Phi C^{1/2}, so theta = factor factor^dagger
  CMatrix subspace_projector;   // orthogonal projector onto span{psi_0..psi_{K-1}}
  WeightRule rule = WeightRule::kappa_scaled;
};

inline std::vector<double> metric_weights(const BiorthogonalSystem& sys, std::size_t k, WeightRule rule) {
  std::vector<double> c(k);
  for (std::size_t n = 0; n < k; ++n) {
    c[n] = std::ldexp(1.0, -static_cast<int>(n));
    if (rule == WeightRule::kappa_scaled) c[n] /= sys.condition_numbers[n];
  }
  return c;
}

inline CMatrix orthogonal_projector(const CMatrix& columns) {
  Eigen::HouseholderQR<CMatrix> qr(columns);
  const CMatrix q = qr.householderQ() * CMatrix::Identity(columns.rows(), columns.cols());
  return q * q.adjoint();
}

inline TruncatedMetric build_metric(const BiorthogonalSystem& sys, std::size_t k, const std::vector<double>& c) {
  if (k < 1 || k > sys.converged_count()) {
    throw InputError("build_metric: K = " + std::to_string(k) + " exceeds the " +
                     std::to_string(sys.converged_count()) + " converged pairs");
  }
  if (c.size() != k) throw InputError("build_metric: weight count must equal K");
  TruncatedMetric t;
  t.rank = k;
  t.weights = c;
  const auto kk = static_cast<Eigen::Index>(k);
  t.factor = sys.left.leftCols(kk);
  for (Eigen::Index n = 0; n < kk; ++n) {
    const double cn = c[static_cast<std::size_t>(n)];
    if (!(cn > 0.0)) throw InputError("build_metric: weights must be positive");
    t.factor.col(n) *= std::sqrt(cn);
  }
  t.theta = t.factor * t.factor.adjoint();
  t.theta = 0.5 * (t.theta + t.theta.adjoint()).eval();
  t.subspace_projector = orthogonal_projector(sys.right.leftCols(kk));
  return t;
}

inline TruncatedMetric build_metric(const BiorthogonalSystem& sys, std::size_t k,
                                    WeightRule rule = WeightRule::kappa_scaled) {
  if (k > sys.size()) throw InputError("build_metric: K exceeds the number of pairs");
  auto t = build_metric(sys, k, metric_weights(sys, k, rule));
  t.rule = rule;
  return t;
}

struct QuasiHermiticityResidual {
  double raw = 0.0;                  // ||Theta H - H^dagger Theta|| / (||Theta|| ||H||)
  double subspace = 0.0;             // same, with the projector applied on both sides
  double resolvent_subspace = 0.0;   // Theta (H - z0)^{-1} - (H^dagger - z0)^{-1} Theta, projected
  double z0 = -1.0;
};

inline QuasiHermiticityResidual quasi_hermiticity_residual(const TruncatedMetric& t, const CMatrix& h,
                                                           double z0 = -1.0) {
  if (t.theta.rows() != h.rows()) throw InputError("quasi_hermiticity_residual: dimension mismatch");
  const double nt = spectral_norm(t.theta);
  const double nh = spectral_norm(h);
  const CMatrix& p = t.subspace_projector;
  const CMatrix comm = t.theta * h - h.adjoint() * t.theta;
  QuasiHermiticityResidual r;
  r.z0 = z0;
  r.raw = spectral_norm(comm) / (nt * nh);
  r.subspace = spectral_norm(p * comm * p) / (nt * nh);

  const auto n = h.rows();
  CMatrix hs = h;
  hs.diagonal().array() -= z0;
  const LuFactorization lu(hs);
  if (lu.singular_pivot()) {
    throw ResolventError("quasi_hermiticity_residual: z0 is an eigenvalue of H");
  }
  const CMatrix res = lu.solve(CMatrix::Identity(n, n));
  const CMatrix res_adj = res.adjoint();  // (H^dagger - z0)^{-1} for real z0
  const CMatrix rcomm = t.theta * res - res_adj * t.theta;
  r.resolvent_subspace = spectral_norm(p * rcomm * p) / (nt * spectral_norm(res));
  return r;
}

inline QuasiHermiticityResidual quasi_hermiticity_residual(const TruncatedMetric& t, const OperatorMatrix& m,
                                                           double z0 = -1.0) {
  return quasi_hermiticity_residual(t, m.matrix, z0);
}

struct MetricSpectrum {
  double lambda_min = 0.0;  // on the range of Theta
  double lambda_max = 0.0;
  double ratio() const { return lambda_min / lambda_max; }
};

// Nonzero eigenvalues of Theta are the squared singular values of its N x K
// factor; Jacobi SVD keeps the small ones relatively accurate.
inline MetricSpectrum metric_spectrum(const TruncatedMetric& t) {
  Eigen::JacobiSVD<CMatrix> svd(t.factor);
  const auto& s = svd.singularValues();
  return {s(s.size() - 1) * s(s.size() - 1), s(0) * s(0)};
}

struct ConditioningRecord {
  std::size_t k = 0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double ratio = 0.0;
};

inline std::vector<ConditioningRecord> conditioning_sweep(const BiorthogonalSystem& sys,
                                                          const std::vector<std::size_t>& ks,
                                                          WeightRule rule) {
  std::vector<ConditioningRecord> out;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (i > 0 && !(ks[i] > ks[i - 1])) throw InputError("conditioning_sweep: ranks must increase");
    const auto t = build_metric(sys, ks[i], rule);
    const auto s = metric_spectrum(t);
    out.push_back({ks[i], s.lambda_min, s.lambda_max, s.ratio()});
  }
  return out;
}

// Control system: orthonormal basis vectors with the same weights. Only the
// weight decay shows up in its conditioning.
inline BiorthogonalSystem orthonormal_control_system(std::size_t n, std::size_t k) {
  BiorthogonalSystem sys;
  sys.right = CMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  sys.left = sys.right;
  for (std::size_t i = 0; i < k; ++i) {
    sys.eigenvalues.emplace_back(static_cast<double>(i), 0.0);
    sys.overlaps.emplace_back(1.0, 0.0);
    sys.condition_numbers.push_back(1.0);
  }
  sys.converged.assign(k, true);
  return sys;
}

struct SimilarityTransform {
  CMatrix h_matrix;  // K x K, Omega H Omega^{-1} in range coordinates
  CMatrix omega;     // K x N, Lambda^{1/2} U^dagger
  double hermiticity_residual = 0.0;
  double conditioning = 0.0;  // lambda_min / lambda_max of Theta on its range
};

// h = Theta^{1/2} H Theta^{-1/2} on the range of Theta. Eigenvalues of Theta
// below 1e-14 lambda_max are clipped; a range ratio below min_ratio is an error.
inline SimilarityTransform similarity_transform(const TruncatedMetric& t, const CMatrix& h,
                                                double min_ratio = 1e-12) {
  if (t.theta.rows() != h.rows()) throw InputError("similarity_transform: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(t.theta);
  const auto& lam = es.eigenvalues();
  const auto n = lam.size();
  const auto k = static_cast<Eigen::Index>(t.rank);
  const double lmax = lam(n - 1);
  // Range eigenvalues from the factor are more accurate than the tail of lam.
  const MetricSpectrum ms = metric_spectrum(t);
  SimilarityTransform out;
  out.conditioning = ms.ratio();
  if (!(ms.ratio() >= min_ratio)) {
    std::ostringstream os;
    os << "similarity_transform: metric is singular on its range (lambda_min/lambda_max = "
       << ms.ratio() << ")";
    throw SingularMetricError(os.str(), ms.ratio());
  }
  const CMatrix u = es.eigenvectors().rightCols(k);
  RVector d = lam.tail(k);
  for (Eigen::Index i = 0; i < k; ++i) d(i) = std::max(d(i), 1e-14 * lmax);
  const RVector sq = d.cwiseSqrt();
  out.omega = sq.asDiagonal() * u.adjoint();
  out.h_matrix = out.omega * h * u * sq.cwiseInverse().asDiagonal();
  out.hermiticity_residual =
      (out.h_matrix - out.h_matrix.adjoint()).norm() / std::max(out.h_matrix.norm(), 1e-300);
  return out;
}

inline SimilarityTransform similarity_transform(const TruncatedMetric& t, const OperatorMatrix& m,
                                                double min_ratio = 1e-12) {
  return similarity_transform(t, m.matrix, min_ratio);
}

// 2x2 Jordan block H = [[1,1],[0,1]] against h = diag(1,1).
struct JordanReport {
  CMatrix h_jordan;
  CMatrix h_diag;
  CVector eigenvector;       // the single right eigenvector (1,0)
  CVector left_eigenvector;  // phi = (0,1)
  CMatrix theta;             // phi phi^dagger
  CMatrix omega;             // Theta^{1/2} = Theta (projector)
  double theta_residual = 0.0;        // ||Theta H - H^dagger Theta||
  double theta_determinant = 0.0;
  double intertwining_residual = 0.0;  // ||Omega H - h Omega||
  std::size_t eigenvector_rank = 0;
  double resolvent_jordan = 0.0;  // ||(H - z)^{-1}|| at z
  double resolvent_diag = 0.0;    // ||(h - z)^{-1}|| at z
  Complex z{1.1, 0.0};

  std::string to_text() const {
    std::ostringstream os;
    os.precision(12);
    os << "Jordan block H = [[1,1],[0,1]], diagonal h = [[1,0],[0,1]]\n"
       << "spectra: sigma(H) = sigma(h) = {1, 1}\n"
       << "eigenvector rank of H: " << eigenvector_rank << " (single eigenvector (1,0))\n"
       << "metric Theta = phi phi^dagger with phi = (0,1): [[0,0],[0,1]]\n"
       << "||Theta H - H^dagger Theta|| = " << theta_residual << '\n'
       << "det Theta = " << theta_determinant << " (not invertible)\n"
       << "Omega = Theta^{1/2}; ||Omega H - h Omega|| = " << intertwining_residual << '\n'
       << "resolvent norms at z = " << z.real() << ": ||(H-z)^{-1}|| = " << resolvent_jordan
       << ", ||(h-z)^{-1}|| = " << resolvent_diag << ", ratio = " << resolvent_jordan / resolvent_diag
       << '\n';
    return os.str();
  }
};

inline JordanReport jordan_demo(Complex z = {1.1, 0.0}) {
  JordanReport r;
  r.z = z;
  r.h_jordan = CMatrix(2, 2);
  r.h_jordan << 1.0, 1.0, 0.0, 1.0;
  r.h_diag = CMatrix::Identity(2, 2);
  r.eigenvector = CVector(2);
  r.eigenvector << 1.0, 0.0;
  r.left_eigenvector = CVector(2);
  r.left_eigenvector << 0.0, 1.0;
  r.theta = r.left_eigenvector * r.left_eigenvector.adjoint();
  r.omega = r.theta;
  r.theta_residual = (r.theta * r.h_jordan - r.h_jordan.adjoint() * r.theta).norm();
  r.theta_determinant = std::abs(r.theta.determinant());
  r.intertwining_residual = (r.omega * r.h_jordan - r.h_diag * r.omega).norm();
  r.eigenvector_rank = completeness_rank(r.h_jordan).rank;
  r.resolvent_jordan = 1.0 / smallest_singular_value(r.h_jordan - z * CMatrix::Identity(2, 2));
  r.resolvent_diag = 1.0 / smallest_singular_value(r.h_diag - z * CMatrix::Identity(2, 2));
  return r;
}

// CSV: K, lambda_min, lambda_max, ratio, subspace_residual, weight_rule.
struct MetricRow {
  ConditioningRecord cond;
  double subspace_residual = 0.0;
  WeightRule rule = WeightRule::kappa_scaled;
};

inline void write_metric_csv(std::ostream& os, const std::vector<MetricRow>& rows) {
  const auto old = os.precision(17);
  os << "K,lambda_min,lambda_max,ratio,subspace_residual,weight_rule\n";
  for (const auto& r : rows) {
    os << r.cond.k << ',' << r.cond.lambda_min << ',' << r.cond.lambda_max << ',' << r.cond.ratio
       << ',' << r.subspace_residual << ',' << to_string(r.rule) << '\n';
  }
  os.precision(old);
}

}  // namespace nonherm
