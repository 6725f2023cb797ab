#pragma once

// Finite sections of H_h = -h^2 d^2/dx^2 + V(x) on a grid symmetric about 0.
//
// Two schemes:
//   finite_difference    second-order central stencil, Dirichlet at +-L.
//   hermite_collocation  Gauss-Hermite discrete variable representation: the
//                        exact kinetic matrix on the span of the first N scaled
//                        Hermite functions, rotated to the quadrature nodes,
//                        with V sampled on the nodes.
// Both produce a real symmetric kinetic part plus a diagonal potential, so the
// matrix is complex symmetric and its adjoint is the conjugate potential.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nonherm/error.hpp"
#include "nonherm/lacore.hpp"
#include "nonherm/potential.hpp"

namespace nonherm {

enum class Scheme { finite_difference, hermite_collocation };

inline std::string to_string(Scheme s) {
  return s == Scheme::finite_difference ? "fd" : "hermite";
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "fd" || s == "finite_difference") return Scheme::finite_difference;
  if (s == "hermite" || s == "hermite_collocation") return Scheme::hermite_collocation;
  throw InputError("unknown scheme '" + s + "' (expected fd or hermite)");
}

struct Discretization {
  Scheme scheme = Scheme::hermite_collocation;
  int n = 200;
  double half_width = 10.0;    // finite_difference only
  double hermite_scale = 1.0;  // hermite_collocation only
  double h = 1.0;              // semiclassical parameter

  static Discretization finite_difference(int n, double half_width, double h = 1.0) {
    return {Scheme::finite_difference, n, half_width, 1.0, h};
  }
  static Discretization hermite(int n, double scale = 1.0, double h = 1.0) {
    return {Scheme::hermite_collocation, n, 10.0, scale, h};
  }

  Discretization with_h(double hh) const {
    Discretization d = *this;
    d.h = hh;
    return d;
  }
  Discretization with_n(int nn) const {
    Discretization d = *this;
    d.n = nn;
    return d;
  }

  void validate() const {
    if (n < 8) throw InputError("discretization: N must be >= 8, got " + std::to_string(n));
    if (!(h > 0.0) || !std::isfinite(h)) throw InputError("discretization: h must be positive");
    if (scheme == Scheme::finite_difference && !(half_width > 0.0 && std::isfinite(half_width))) {
      throw InputError("discretization: half-width L must be positive");
    }
    if (scheme == Scheme::hermite_collocation &&
        !(hermite_scale > 0.0 && std::isfinite(hermite_scale))) {
      throw InputError("discretization: hermite scale must be positive");
    }
  }
};

struct OperatorMatrix {
  CMatrix matrix;
  std::vector<double> grid;     // strictly increasing, grid[i] == -grid[N-1-i]
  std::vector<double> weights;  // quadrature weights; coefficient = sample * sqrt(weight)
  PolynomialPotential potential;
  Discretization disc;
  std::vector<std::string> warnings;

  Eigen::Index dim() const { return matrix.rows(); }
  // Outermost abscissa represented by the section.
  double box_edge() const {
    return disc.scheme == Scheme::finite_difference ? disc.half_width : grid.back();
  }
};

struct BuildOptions {
  // Largest |lambda| the caller intends to resolve; 0 disables the check.
  double spectral_window = 0.0;
};

namespace detail {

// Mirror the lower half so that x[i] == -x[N-1-i] holds bit for bit.
inline void symmetrize_grid(std::vector<double>& x) {
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n / 2; ++i) {
    const double v = 0.5 * (x[i] - x[n - 1 - i]);
    x[i] = v;
    x[n - 1 - i] = -v;
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
}

struct HermiteDvr {
  std::vector<double> nodes;    // unscaled Gauss-Hermite nodes
  std::vector<double> lambdas;  // 1/sqrt(sum_n phi_n(xi)^2)
  Eigen::MatrixXd kinetic;      // -d^2/dxi^2 in the DVR, unscaled
};

inline HermiteDvr hermite_dvr(int n) {
  // Golub-Welsch: nodes are eigenvalues of the position matrix in the
  // Hermite-function basis.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (int k = 0; k + 1 < n; ++k) sub(k) = std::sqrt(0.5 * (k + 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);

  HermiteDvr out;
  out.nodes.assign(es.eigenvalues().data(), es.eigenvalues().data() + n);
  symmetrize_grid(out.nodes);

  // Hermite functions at the nodes by the stable three-term recurrence. The
  // rotation U(k, i) = phi_k(xi_i) * lambda_i is orthogonal; computing it from
  // eigenvectors instead loses all relative accuracy at the outer nodes.
  // The Gaussian factor is carried as a log scale so that outer nodes of
  // large bases neither underflow at k = 0 nor overflow along the recurrence.
  Eigen::MatrixXd phi(n, n);
  std::vector<double> log_scale(static_cast<std::size_t>(n));
  const double c0 = std::pow(M_PI, -0.25);
  for (int i = 0; i < n; ++i) {
    const double xi = out.nodes[static_cast<std::size_t>(i)];
    double ls = -0.5 * xi * xi;
    phi(0, i) = c0;
    if (n > 1) phi(1, i) = std::sqrt(2.0) * xi * phi(0, i);
    for (int k = 2; k < n; ++k) {
      phi(k, i) = std::sqrt(2.0 / k) * xi * phi(k - 1, i) -
                  std::sqrt(static_cast<double>(k - 1) / k) * phi(k - 2, i);
      if (std::abs(phi(k, i)) > 1e150) {
        phi.col(i).head(k + 1) *= 1e-150;
        ls += 150.0 * std::log(10.0);
      }
    }
    log_scale[static_cast<std::size_t>(i)] = ls;
  }
  out.lambdas.resize(static_cast<std::size_t>(n));
  Eigen::MatrixXd u(n, n);
  for (int i = 0; i < n; ++i) {
    const double nrm = phi.col(i).norm();
    out.lambdas[static_cast<std::size_t>(i)] =
        std::exp(-(std::log(nrm) + log_scale[static_cast<std::size_t>(i)]));
    u.col(i) = phi.col(i) / nrm;
  }

  // -d^2/dxi^2 on span{phi_0..phi_{N-1}}: (k+1/2) on the diagonal,
  // -sqrt((k+1)(k+2))/2 two off the diagonal.
  Eigen::MatrixXd tu(n, n);
  for (int k = 0; k < n; ++k) {
    tu.row(k) = (k + 0.5) * u.row(k);
    if (k >= 2) tu.row(k) -= 0.5 * std::sqrt(static_cast<double>((k - 1) * k)) * u.row(k - 2);
    if (k + 2 < n) tu.row(k) -= 0.5 * std::sqrt(static_cast<double>((k + 1) * (k + 2))) * u.row(k + 2);
  }
  Eigen::MatrixXd kin = u.transpose() * tu;
  // Exact parity and transpose symmetry.
  Eigen::MatrixXd sym = kin;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      // Pairwise sums keep the result bitwise symmetric under both maps.
      const double direct = kin(i, j) + kin(j, i);
      const double mirror = kin(n - 1 - i, n - 1 - j) + kin(n - 1 - j, n - 1 - i);
      sym(i, j) = 0.25 * (direct + mirror);
    }
  }
  out.kinetic = std::move(sym);
  return out;
}

}  // namespace detail

inline OperatorMatrix build_matrix(const PolynomialPotential& p, const Discretization& d,
                                   const BuildOptions& opt = {}) {
  d.validate();
  const int n = d.n;
  const auto nu = static_cast<std::size_t>(n);
  OperatorMatrix m;
  m.potential = p;
  m.disc = d;
  m.grid.resize(nu);
  m.weights.resize(nu);
  m.matrix = CMatrix::Zero(n, n);
  const double h2 = d.h * d.h;

  if (d.scheme == Scheme::finite_difference) {
    const double dx = 2.0 * d.half_width / (n + 1);
    for (std::size_t i = 0; i < nu; ++i) m.grid[i] = -d.half_width + static_cast<double>(i + 1) * dx;
    detail::symmetrize_grid(m.grid);
    std::fill(m.weights.begin(), m.weights.end(), dx);
    const double c = h2 / (dx * dx);
    for (int i = 0; i < n; ++i) {
      m.matrix(i, i) = 2.0 * c;
      if (i > 0) m.matrix(i, i - 1) = -c;
      if (i + 1 < n) m.matrix(i, i + 1) = -c;
    }
  } else {
    const auto dvr = detail::hermite_dvr(n);
    const double a = d.hermite_scale;
    for (std::size_t i = 0; i < nu; ++i) {
      m.grid[i] = dvr.nodes[i] / a;
      m.weights[i] = dvr.lambdas[i] * dvr.lambdas[i] / a;
    }
    m.matrix = (h2 * a * a) * dvr.kinetic.cast<Complex>();
  }
  for (std::size_t i = 0; i < nu; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    m.matrix(ii, ii) += p(m.grid[i]);
  }

  if (opt.spectral_window > 0.0) {
    const double edge = m.box_edge();
    const double reach = std::min(std::abs(p(edge)), std::abs(p(-edge)));
    if (reach < opt.spectral_window) {
      m.warnings.push_back("box edge " + std::to_string(edge) + " has |V| = " + std::to_string(reach) +
                           " < spectral window " + std::to_string(opt.spectral_window) +
                           "; turning points lie outside the section");
    }
  }
  return m;
}

// Finite section of H^dagger: same grid, conjugated potential.
inline OperatorMatrix adjoint_matrix(const OperatorMatrix& m) {
  OperatorMatrix out = build_matrix(m.potential.conjugate(), m.disc);
  out.warnings = m.warnings;
  return out;
}

struct SymmetryResiduals {
  double pt_commutator = 0.0;  // ||J H J - conj(H)|| / ||H||
  double p_selfadjoint = 0.0;  // ||H^dagger - J H J|| / ||H||
  double t_selfadjoint = 0.0;  // ||H^dagger - conj(H)|| / ||H||, i.e. ||H^T - H|| / ||H||
  double numerical_range_real_min = 0.0;  // min eig of (H + H^dagger)/2
};

inline void require_symmetric_grid(const OperatorMatrix& m) {
  const std::size_t n = m.grid.size();
  if (n != static_cast<std::size_t>(m.dim())) throw InputError("operator: grid size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (m.grid[i] != -m.grid[n - 1 - i]) {
      throw InputError("operator: grid is not symmetric about 0 at index " + std::to_string(i));
    }
    if (i > 0 && !(m.grid[i] > m.grid[i - 1])) {
      throw InputError("operator: grid is not strictly increasing at index " + std::to_string(i));
    }
  }
}

// Parity acts as index reversal, time reversal as entrywise conjugation.
inline SymmetryResiduals symmetry_residuals(const OperatorMatrix& m) {
  require_symmetric_grid(m);
  const CMatrix& h = m.matrix;
  const CMatrix php = h.colwise().reverse().rowwise().reverse();
  const CMatrix hadj = h.adjoint();
  const double norm = std::max(h.norm(), std::numeric_limits<double>::min());
  SymmetryResiduals r;
  r.pt_commutator = (php - h.conjugate()).norm() / norm;
  r.p_selfadjoint = (hadj - php).norm() / norm;
  r.t_selfadjoint = (hadj - h.conjugate()).norm() / norm;
  r.numerical_range_real_min = hermitian_eigenvalues(0.5 * (h + hadj))(0);
  return r;
}

// Grid samples psi(x_i) -> coefficient vector whose Euclidean norm is the
// quadrature L^2 norm.
inline CVector samples_to_coefficients(const OperatorMatrix& m, const CVector& samples) {
  if (samples.size() != m.dim()) throw InputError("samples: length does not match grid");
  CVector c(samples.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    c(i) = samples(i) * std::sqrt(m.weights[static_cast<std::size_t>(i)]);
  }
  return c;
}

inline CVector coefficients_to_samples(const OperatorMatrix& m, const CVector& coeffs) {
  if (coeffs.size() != m.dim()) throw InputError("coefficients: length does not match grid");
  CVector s(coeffs.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    s(i) = coeffs(i) / std::sqrt(m.weights[static_cast<std::size_t>(i)]);
  }
  return s;
}

// Smallest L with min(|V(L)|, |V(-L)|) >= 10 * window.
inline double default_half_width(const PolynomialPotential& p, double window) {
  if (!(window > 0.0)) throw InputError("default_half_width: window must be positive");
  const double target = 10.0 * window;
  auto reach = [&](double x) { return std::min(std::abs(p(x)), std::abs(p(-x))); };
  double hi = 1.0;
  for (int it = 0; reach(hi) < target; ++it) {
    if (it > 60) throw InputError("default_half_width: potential does not grow");
    hi *= 2.0;
  }
  double lo = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (reach(mid) >= target ? hi : lo) = mid;
  }
  return hi;
}

// Lowest-modulus eigenvalue of a finite section; the reference for scale selection.
inline Complex lowest_eigenvalue(const OperatorMatrix& m) {
  EigOptions o;
  o.vectors = false;
  const auto ed = eig_dense(m.matrix, o);
  return *std::min_element(ed.eigenvalues.begin(), ed.eigenvalues.end(),
                           [](Complex a, Complex b) { return std::abs(a) < std::abs(b); });
}

// Hermite scale minimizing the drift of the lowest eigenvalue between N and
// N/2 over a fixed candidate ladder; ties go to the candidate nearest 1.
inline double auto_hermite_scale(const PolynomialPotential& p, int n, double h = 1.0) {
  static constexpr double kLadder[] = {0.25, 0.35, 0.5, 0.7, 1.0, 1.4, 2.0, 2.8, 4.0, 5.6, 8.0};
  double best = 1.0;
  double best_drift = std::numeric_limits<double>::infinity();
  for (double a : kLadder) {
    const Complex fine = lowest_eigenvalue(build_matrix(p, Discretization::hermite(n, a, h)));
    const Complex coarse =
        lowest_eigenvalue(build_matrix(p, Discretization::hermite(std::max(8, n / 2), a, h)));
    // Drifts below 1e-12 are rounding noise and count as ties.
    const double drift =
        std::max(std::abs(fine - coarse) / std::max(std::abs(fine), 1e-300), 1e-12);
    const bool tie = drift == best_drift;
    if (drift < best_drift) {
      best = a;
      best_drift = drift;
    } else if (tie && std::abs(std::log(a)) < std::abs(std::log(best))) {
      best = a;
    }
  }
  return best;
}

}  // namespace nonherm
