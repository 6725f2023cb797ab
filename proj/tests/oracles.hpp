#pragma once

// Reference computations used only by the tests. None of them call into the
// library, so agreement with it is an independent check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

// Characteristic polynomial det(zI - A) by Faddeev-LeVerrier. Coefficients
// are returned highest degree first, leading coefficient 1.
inline std::vector<Complex> characteristic_polynomial(const CMatrix& a) {
  const auto n = a.rows();
  std::vector<Complex> c(static_cast<std::size_t>(n) + 1);
  c[0] = 1.0;
  CMatrix m = CMatrix::Zero(n, n);
  const CMatrix id = CMatrix::Identity(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    m = a * m + c[static_cast<std::size_t>(k) - 1] * id;
    c[static_cast<std::size_t>(k)] = -(a * m).trace() / static_cast<double>(k);
  }
  return c;
}

inline Complex horner(const std::vector<Complex>& c, Complex z) {
  Complex v = 0.0;
  for (const auto& ci : c) v = v * z + ci;
  return v;
}

// Durand-Kerner simultaneous iteration, then a few Newton polishing steps.
inline std::vector<Complex> polynomial_roots(const std::vector<Complex>& c) {
  const std::size_t n = c.size() - 1;
  double radius = 0.0;
  for (std::size_t i = 1; i < c.size(); ++i) radius = std::max(radius, std::abs(c[i]));
  radius = 1.0 + radius;
  std::vector<Complex> z(n);
  for (std::size_t k = 0; k < n; ++k) {
    z[k] = std::polar(radius, 2.0 * M_PI * (k + 0.25) / static_cast<double>(n));
  }
  for (int it = 0; it < 5000; ++it) {
    double move = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      Complex den = 1.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != k) den *= z[k] - z[j];
      }
      const Complex dz = horner(c, z[k]) / den;
      z[k] -= dz;
      move = std::max(move, std::abs(dz));
    }
    if (move < 1e-15 * radius) break;
  }
  std::vector<Complex> dc(n);
  for (std::size_t i = 0; i < n; ++i) dc[i] = c[i] * static_cast<double>(n - i);
  for (auto& r : z) {
    for (int it = 0; it < 3; ++it) {
      const Complex d = horner(dc, r);
      if (std::abs(d) > 0.0) r -= horner(c, r) / d;
    }
  }
  return z;
}

// Largest distance from an element of `a` to its greedily matched partner in
// `b`; both multisets must have the same size.
inline double multiset_distance(std::vector<Complex> a, std::vector<Complex> b) {
  double worst = 0.0;
  for (const auto& x : a) {
    auto best = b.begin();
    for (auto it = b.begin(); it != b.end(); ++it) {
      if (std::abs(*it - x) < std::abs(*best - x)) best = it;
    }
    worst = std::max(worst, std::abs(*best - x));
    b.erase(best);
  }
  return worst;
}

// Singular values of a 2x2 matrix from the invariants ||M||_F and |det M|.
inline std::pair<double, double> svd_2x2(Complex a, Complex b, Complex c, Complex d) {
  const double f = std::norm(a) + std::norm(b) + std::norm(c) + std::norm(d);
  const double det = std::abs(a * d - b * c);
  const double smax = std::sqrt(0.5 * (f + std::sqrt(std::max(0.0, f * f - 4.0 * det * det))));
  const double smin = smax > 0.0 ? det / smax : 0.0;
  return {smin, smax};
}

// Eigenvalue of -psi'' + i x^3 psi = lambda psi by shooting on the real line.
// Decaying solutions are integrated inward from +-x_max with RK4 and their
// logarithmic derivatives matched at 0; lambda is refined by the secant method.
class CubicShooting {
 public:
  explicit CubicShooting(double x_max = 8.0, double step = 5e-4) : x_max_(x_max), step_(step) {}

  Complex mismatch(Complex lambda) const {
    return log_derivative(lambda, +1.0) - log_derivative(lambda, -1.0);
  }

  Complex solve(Complex guess) const {
    Complex x0 = guess;
    Complex x1 = guess * 1.01;
    Complex f0 = mismatch(x0);
    Complex f1 = mismatch(x1);
    for (int it = 0; it < 60; ++it) {
      if (f1 == f0) break;
      const Complex x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
      x0 = x1;
      f0 = f1;
      x1 = x2;
      f1 = mismatch(x1);
      if (std::abs(x1 - x0) < 1e-13 * std::abs(x1)) break;
    }
    return x1;
  }

  // Leading-order WKB quantization for ix^3, used as a starting guess.
  static double wkb_guess(int n) {
    const double big_n = 3.0;
    const double num = std::tgamma(1.5 + 1.0 / big_n) * std::sqrt(M_PI) * (n + 0.5);
    const double den = std::sin(M_PI / big_n) * std::tgamma(1.0 + 1.0 / big_n);
    return std::pow(num / den, 2.0 * big_n / (big_n + 2.0));
  }

 private:
  // psi'/psi at 0 of the solution decaying towards side * infinity.
  Complex log_derivative(Complex lambda, double side) const {
    auto f = [&](double x, Complex y0, Complex y1, Complex& d0, Complex& d1) {
      d0 = y1;
      d1 = (Complex(0.0, x * x * x) - lambda) * y0;
    };
    const double x_start = side * x_max_;
    Complex y0 = 1.0;
    Complex y1 = -side * std::sqrt(Complex(0.0, x_start * x_start * x_start) - lambda);
    const int steps = static_cast<int>(std::ceil(x_max_ / step_));
    const double dx = -side * x_max_ / steps;
    double x = x_start;
    for (int s = 0; s < steps; ++s) {
      Complex k10, k11, k20, k21, k30, k31, k40, k41;
      f(x, y0, y1, k10, k11);
      f(x + 0.5 * dx, y0 + 0.5 * dx * k10, y1 + 0.5 * dx * k11, k20, k21);
      f(x + 0.5 * dx, y0 + 0.5 * dx * k20, y1 + 0.5 * dx * k21, k30, k31);
      f(x + dx, y0 + dx * k30, y1 + dx * k31, k40, k41);
      y0 += dx / 6.0 * (k10 + 2.0 * k20 + 2.0 * k30 + k40);
      y1 += dx / 6.0 * (k11 + 2.0 * k21 + 2.0 * k31 + k41);
      x += dx;
      const double m = std::max(std::abs(y0), std::abs(y1));
      if (m > 1e100) {
        y0 /= m;
        y1 /= m;
      }
    }
    return y1 / y0;
  }

  double x_max_;
  double step_;
};

inline CMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                             double scale = 1.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CMatrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = scale * Complex(u(rng), u(rng));
  }
  return m;
}

// Entries uniform in the closed unit disc.
inline CMatrix random_unit_disc_matrix(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CMatrix m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = std::polar(std::sqrt(u(rng)), 2.0 * M_PI * u(rng));
  }
  return m;
}

// A = S diag(d) S^{-1} with well-conditioned random S and real simple d.
struct PlantedMatrix {
  CMatrix a;
  CMatrix s;
  CMatrix s_inv;
  std::vector<double> spectrum;
};

inline PlantedMatrix planted_real_spectrum(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  PlantedMatrix p;
  p.s = CMatrix::Identity(n, n) + random_matrix(n, n, rng, 0.3);
  p.s_inv = p.s.inverse();
  Eigen::VectorXcd d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    p.spectrum.push_back(static_cast<double>(i + 1) + jitter(rng));
    d(i) = p.spectrum.back();
  }
  p.a = p.s * d.asDiagonal() * p.s_inv;
  return p;
}

// Householder reflector I - 2 v v^dagger for a random unit v.
inline CMatrix random_householder(Eigen::Index n, std::mt19937_64& rng) {
  Eigen::VectorXcd v = random_matrix(n, 1, rng);
  v.normalize();
  return CMatrix::Identity(n, n) - 2.0 * v * v.adjoint();
}

}  // namespace oracle
