#pragma once

// Resolvent norms ||(H - z)^{-1}|| = 1 / s_min(H - z), pseudospectrum grids,
// epsilon-neighbourhood inclusion checks, the C/|Im z| bound scan, and the
// semiclassical rescaling identity for monomial potentials.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "nonherm/discretize.hpp"
#include "nonherm/error.hpp"
#include "nonherm/lacore.hpp"
#include "nonherm/parallel.hpp"

namespace nonherm {

inline constexpr double kInfinityMarker = std::numeric_limits<double>::infinity();
inline constexpr double kSingularThreshold = 1e-14;  // relative to ||H||

inline bool is_infinity_marker(double v) { return std::isinf(v); }

inline double resolvent_norm(const CMatrix& h, Complex z, double norm_h) {
  require_square(h, "resolvent_norm");
  CMatrix shifted = h;
  shifted.diagonal().array() -= z;
  const double s = smallest_singular_value(shifted);
  if (s < kSingularThreshold * norm_h) return kInfinityMarker;
  return 1.0 / s;
}

inline double resolvent_norm(const CMatrix& h, Complex z) {
  return resolvent_norm(h, z, spectral_norm(h));
}

inline double resolvent_norm(const OperatorMatrix& m, Complex z) {
  return resolvent_norm(m.matrix, z);
}

// Resolvent norms at many shifts from one Schur factorization H = Q T Q^H:
// ||(H - z)^{-1}|| = ||(T - z)^{-1}||, and the largest singular value of the
// triangular inverse comes from Lanczos on (T - z)^{-1} (T - z)^{-H}.
class SchurResolvent {
 public:
  explicit SchurResolvent(const CMatrix& h) : norm_(spectral_norm(h)) {
    require_square(h, "SchurResolvent");
    require_finite(h, "SchurResolvent");
    Eigen::ComplexSchur<CMatrix> schur(h, false);
    if (schur.info() != Eigen::Success) {
      throw ConvergenceError("SchurResolvent: Schur factorization did not converge", 0);
    }
    t_ = schur.matrixT();
  }

  double norm() const { return norm_; }
  Eigen::Index dim() const { return t_.rows(); }

  double operator()(Complex z) const {
    CMatrix tz = t_;
    tz.diagonal().array() -= z;
    const double floor = kSingularThreshold * norm_;
    if (tz.diagonal().cwiseAbs().minCoeff() == 0.0) return kInfinityMarker;
    const auto upper = tz.triangularView<Eigen::Upper>();
    auto apply = [&](const CVector& v) -> CVector {
      CVector y = upper.adjoint().solve(v);
      return upper.solve(y);
    };
    const LanczosResult r = lanczos_largest(t_.rows(), apply);
    double s;
    if (!r.converged) {
      Eigen::BDCSVD<CMatrix> svd(tz.triangularView<Eigen::Upper>().toDenseMatrix());
      s = svd.singularValues()(svd.singularValues().size() - 1);
    } else if (!std::isfinite(r.theta) || r.theta <= 0.0) {
      return kInfinityMarker;
    } else {
      s = 1.0 / std::sqrt(r.theta);
    }
    return s < floor ? kInfinityMarker : 1.0 / s;
  }

 private:
  CMatrix t_;
  double norm_;
};

struct GridSpec {
  double re_min = 0.0, re_max = 1.0, im_min = 0.0, im_max = 1.0;
  int nx = 2, ny = 2;

  static constexpr long long kDefaultCap = 1000000;

  void validate(long long cap = kDefaultCap) const {
    if (!(re_min < re_max) || !(im_min < im_max)) {
      throw InputError("grid: require re_min < re_max and im_min < im_max");
    }
    if (nx < 1 || ny < 1) throw InputError("grid: nx and ny must be positive");
    if (static_cast<long long>(nx) * ny > cap) {
      throw InputError("grid: " + std::to_string(static_cast<long long>(nx) * ny) +
                       " points exceed the cap of " + std::to_string(cap));
    }
  }
  double dx() const { return nx > 1 ? (re_max - re_min) / (nx - 1) : re_max - re_min; }
  double dy() const { return ny > 1 ? (im_max - im_min) / (ny - 1) : im_max - im_min; }
  double re(int ix) const { return nx > 1 ? re_min + ix * dx() : re_min; }
  double im(int iy) const { return ny > 1 ? im_min + iy * dy() : im_min; }
  Complex point(int ix, int iy) const { return {re(ix), im(iy)}; }
  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
};

// Row-major over imaginary rows: values[iy * nx + ix].
struct PseudospectrumField {
  GridSpec grid;
  std::vector<double> values;

  double at(int ix, int iy) const {
    return values[static_cast<std::size_t>(iy) * static_cast<std::size_t>(grid.nx) +
                  static_cast<std::size_t>(ix)];
  }
};

inline PseudospectrumField pseudospectrum_grid(const CMatrix& h, const GridSpec& g, int workers = 1,
                                               long long cap = GridSpec::kDefaultCap) {
  g.validate(cap);
  const SchurResolvent res(h);
  PseudospectrumField f;
  f.grid = g;
  f.values.assign(g.size(), 0.0);
  parallel_for_static(g.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const int ix = static_cast<int>(k % static_cast<std::size_t>(g.nx));
      const int iy = static_cast<int>(k / static_cast<std::size_t>(g.nx));
      f.values[k] = res(g.point(ix, iy));
    }
  });
  return f;
}

inline PseudospectrumField pseudospectrum_grid(const OperatorMatrix& m, const GridSpec& g,
                                               int workers = 1,
                                               long long cap = GridSpec::kDefaultCap) {
  return pseudospectrum_grid(m.matrix, g, workers, cap);
}

struct FieldComparison {
  double max_deviation = 0.0;  // max |a - b| / a over cells
  std::vector<bool> flagged;   // cells deviating more than the tolerance
  std::size_t flagged_count = 0;
};

// Two-resolution cross-validation of the same grid.
inline FieldComparison cross_validate(const PseudospectrumField& a, const PseudospectrumField& b,
                                      double tol = 0.05) {
  if (a.values.size() != b.values.size() || a.grid.nx != b.grid.nx || a.grid.ny != b.grid.ny) {
    throw InputError("cross_validate: grids differ");
  }
  FieldComparison c;
  c.flagged.assign(a.values.size(), false);
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    const double va = a.values[k];
    const double vb = b.values[k];
    double dev = 0.0;
    if (std::isinf(va) || std::isinf(vb)) {
      dev = std::isinf(va) && std::isinf(vb) ? 0.0 : kInfinityMarker;
    } else {
      dev = std::abs(va - vb) / va;
    }
    c.max_deviation = std::max(c.max_deviation, dev);
    if (dev > tol) {
      c.flagged[k] = true;
      ++c.flagged_count;
    }
  }
  return c;
}

inline double distance_to_set(Complex z, const std::vector<Complex>& pts) {
  double d = kInfinityMarker;
  for (const auto& p : pts) d = std::min(d, std::abs(z - p));
  return d;
}

struct InclusionCheck {
  std::size_t checked = 0;
  std::size_t violations = 0;
};

// Every grid point with dist(z, eigenvalues) < eps - slack must have resolvent
// norm > 1/eps. Against the section's own spectrum this holds exactly, so the
// default slack is a 1e-8 relative margin; `slack_cells` adds grid-cell
// diagonals for comparisons against a reference spectrum.
inline InclusionCheck epsilon_inclusion_check(const PseudospectrumField& f,
                                              const std::vector<Complex>& eigenvalues, double eps,
                                              double slack_cells = 0.0) {
  if (!(eps > 0.0)) throw InputError("epsilon_inclusion_check: eps must be positive");
  const double slack = slack_cells * std::hypot(f.grid.dx(), f.grid.dy()) + 1e-8 * eps;
  InclusionCheck r;
  for (int iy = 0; iy < f.grid.ny; ++iy) {
    for (int ix = 0; ix < f.grid.nx; ++ix) {
      const double d = distance_to_set(f.grid.point(ix, iy), eigenvalues);
      if (d >= eps - slack) continue;
      ++r.checked;
      if (!(f.at(ix, iy) > 1.0 / eps)) ++r.violations;
    }
  }
  return r;
}

// max |norm - 1/dist| * dist over the grid; zero for normal matrices.
inline double normal_equality_deviation(const PseudospectrumField& f,
                                        const std::vector<Complex>& eigenvalues) {
  double worst = 0.0;
  for (int iy = 0; iy < f.grid.ny; ++iy) {
    for (int ix = 0; ix < f.grid.nx; ++ix) {
      const double d = distance_to_set(f.grid.point(ix, iy), eigenvalues);
      const double v = f.at(ix, iy);
      if (std::isinf(v) || d == 0.0) continue;
      worst = std::max(worst, std::abs(v * d - 1.0));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Level-set polylines of log10 ||(H - z)^{-1}|| = log10(1/eps), by marching
// squares. Infinity markers count as above every level.

using Polyline = std::vector<std::pair<double, double>>;

inline std::vector<Polyline> level_set_polylines(const PseudospectrumField& f, double eps) {
  const GridSpec& g = f.grid;
  if (g.nx < 2 || g.ny < 2) return {};
  const double level = std::log10(1.0 / eps);
  auto val = [&](int ix, int iy) {
    const double v = f.at(ix, iy);
    return std::isinf(v) ? 400.0 : std::log10(v);
  };
  // Edge ids: horizontal (ix,iy)-(ix+1,iy) -> 2*(iy*nx+ix), vertical (ix,iy)-(ix,iy+1) -> +1.
  auto hid = [&](int ix, int iy) { return 2L * (static_cast<long>(iy) * g.nx + ix); };
  auto vid = [&](int ix, int iy) { return 2L * (static_cast<long>(iy) * g.nx + ix) + 1; };
  auto crossing = [&](long id) {
    const int cell = static_cast<int>(id / 2);
    const int ix = cell % g.nx;
    const int iy = cell / g.nx;
    const bool horizontal = id % 2 == 0;
    const int jx = horizontal ? ix + 1 : ix;
    const int jy = horizontal ? iy : iy + 1;
    const double a = val(ix, iy);
    const double b = val(jx, jy);
    const double t = a == b ? 0.5 : std::clamp((level - a) / (b - a), 0.0, 1.0);
    return std::make_pair(g.re(ix) + t * (g.re(jx) - g.re(ix)),
                          g.im(iy) + t * (g.im(jy) - g.im(iy)));
  };

  std::vector<std::pair<long, long>> segments;
  for (int iy = 0; iy + 1 < g.ny; ++iy) {
    for (int ix = 0; ix + 1 < g.nx; ++ix) {
      const bool b0 = val(ix, iy) > level;
      const bool b1 = val(ix + 1, iy) > level;
      const bool b2 = val(ix + 1, iy + 1) > level;
      const bool b3 = val(ix, iy + 1) > level;
      const int code = (b0 ? 1 : 0) | (b1 ? 2 : 0) | (b2 ? 4 : 0) | (b3 ? 8 : 0);
      const long bottom = hid(ix, iy), right = vid(ix + 1, iy), top = hid(ix, iy + 1),
                 left = vid(ix, iy);
      const double centre =
          0.25 * (val(ix, iy) + val(ix + 1, iy) + val(ix + 1, iy + 1) + val(ix, iy + 1));
      switch (code) {
        case 0: case 15: break;
        case 1: case 14: segments.emplace_back(left, bottom); break;
        case 2: case 13: segments.emplace_back(bottom, right); break;
        case 3: case 12: segments.emplace_back(left, right); break;
        case 4: case 11: segments.emplace_back(right, top); break;
        case 6: case 9: segments.emplace_back(bottom, top); break;
        case 7: case 8: segments.emplace_back(left, top); break;
        case 5:
          if (centre > level) {
            segments.emplace_back(left, top);
            segments.emplace_back(bottom, right);
          } else {
            segments.emplace_back(left, bottom);
            segments.emplace_back(right, top);
          }
          break;
        case 10:
          if (centre > level) {
            segments.emplace_back(left, bottom);
            segments.emplace_back(right, top);
          } else {
            segments.emplace_back(left, top);
            segments.emplace_back(bottom, right);
          }
          break;
        default: break;
      }
    }
  }

  // Chain segments through shared edges.
  std::multimap<long, std::size_t> by_edge;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    by_edge.emplace(segments[s].first, s);
    by_edge.emplace(segments[s].second, s);
  }
  std::vector<bool> used(segments.size(), false);
  auto next_segment = [&](long edge) -> std::ptrdiff_t {
    auto [lo, hi] = by_edge.equal_range(edge);
    for (auto it = lo; it != hi; ++it) {
      if (!used[it->second]) return static_cast<std::ptrdiff_t>(it->second);
    }
    return -1;
  };
  std::vector<Polyline> out;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (used[s]) continue;
    used[s] = true;
    std::vector<long> chain{segments[s].first, segments[s].second};
    for (int dir = 0; dir < 2; ++dir) {
      while (true) {
        const long tail = chain.back();
        const auto n = next_segment(tail);
        if (n < 0) break;
        used[static_cast<std::size_t>(n)] = true;
        const auto& seg = segments[static_cast<std::size_t>(n)];
        chain.push_back(seg.first == tail ? seg.second : seg.first);
      }
      std::reverse(chain.begin(), chain.end());
    }
    Polyline pl;
    pl.reserve(chain.size());
    for (long e : chain) pl.push_back(crossing(e));
    out.push_back(std::move(pl));
  }
  return out;
}

// Grid spec as comment lines, then one `re,im,norm` row per point.
inline void write_field_csv(std::ostream& os, const PseudospectrumField& f) {
  const auto old = os.precision(17);
  const GridSpec& g = f.grid;
  os << "# grid re_min=" << g.re_min << " re_max=" << g.re_max << " im_min=" << g.im_min
     << " im_max=" << g.im_max << " nx=" << g.nx << " ny=" << g.ny << '\n';
  os << "re,im,norm\n";
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      os << g.re(ix) << ',' << g.im(iy) << ',';
      const double v = f.at(ix, iy);
      if (std::isinf(v)) {
        os << "inf";
      } else {
        os << v;
      }
      os << '\n';
    }
  }
  os.precision(old);
}

// ---------------------------------------------------------------------------
// Scan of kappa(sigma) = ||(H - sigma z)^{-1}|| |Im(sigma z)|. A bounded metric
// with bounded inverse would keep kappa bounded.

struct RboundRecord {
  double sigma = 0.0;
  double norm = 0.0;
  double kappa = 0.0;
  bool flagged = false;  // sigma z too close to a computed eigenvalue
};

struct RboundOptions {
  double exclusion_radius = 0.5;
  int workers = 1;
};

inline std::vector<RboundRecord> rbound_scan(const CMatrix& h, Complex z,
                                             const std::vector<double>& sigmas,
                                             const RboundOptions& opt = {}) {
  if (!(z.imag() != 0.0)) throw InputError("rbound_scan: Im z must be nonzero");
  const double arg = std::arg(z);
  if (!(arg > 0.0 && arg < M_PI / 2)) {
    throw InputError("rbound_scan: require 0 < arg z < pi/2");
  }
  if (sigmas.empty()) throw InputError("rbound_scan: empty sigma list");
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] > 0.0) || (i > 0 && !(sigmas[i] > sigmas[i - 1]))) {
      throw InputError("rbound_scan: sigmas must be positive and strictly increasing");
    }
  }
  EigOptions eo;
  eo.vectors = false;
  const auto ed = eig_dense(h, eo);
  std::vector<RboundRecord> out(sigmas.size());
  parallel_for_static(sigmas.size(), opt.workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const Complex w = sigmas[i] * z;
      RboundRecord r;
      r.sigma = sigmas[i];
      r.norm = resolvent_norm(h, w, ed.norm);
      r.kappa = r.norm * std::abs(w.imag());
      r.flagged = std::isinf(r.norm) || distance_to_set(w, ed.eigenvalues) < opt.exclusion_radius;
      out[i] = r;
    }
  });
  return out;
}

inline std::vector<RboundRecord> rbound_scan(const OperatorMatrix& m, Complex z,
                                             const std::vector<double>& sigmas,
                                             const RboundOptions& opt = {}) {
  return rbound_scan(m.matrix, z, sigmas, opt);
}

struct RboundVerdict {
  bool strictly_increasing = false;
  double mean_log_slope = 0.0;  // mean of d log kappa / d log sigma between samples
  bool violated = false;        // strictly increasing and mean slope > threshold
};

inline RboundVerdict rbound_violation(const std::vector<RboundRecord>& recs,
                                      double min_slope = 0.3) {
  std::vector<const RboundRecord*> ok;
  for (const auto& r : recs) {
    if (!r.flagged) ok.push_back(&r);
  }
  RboundVerdict v;
  if (ok.size() < 2) return v;
  v.strictly_increasing = true;
  double sum = 0.0;
  for (std::size_t i = 1; i < ok.size(); ++i) {
    if (!(ok[i]->kappa > ok[i - 1]->kappa)) v.strictly_increasing = false;
    sum += std::log(ok[i]->kappa / ok[i - 1]->kappa) / std::log(ok[i]->sigma / ok[i - 1]->sigma);
  }
  v.mean_log_slope = sum / static_cast<double>(ok.size() - 1);
  v.violated = v.strictly_increasing && v.mean_log_slope > min_slope;
  return v;
}

// ---------------------------------------------------------------------------
// Scaling identity ||(H - sigma z)^{-1}|| = sigma^{-1} ||(H_h - z)^{-1}|| for
// V = c x^m, with x = sigma^{1/m} y and h = sigma^{-(m+2)/(2m)} (5/6 for m = 3).

struct RescaleCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double rel_dev = 0.0;
  double h = 0.0;
};

inline double semiclassical_h(int degree, double sigma) {
  return std::pow(sigma, -static_cast<double>(degree + 2) / (2.0 * degree));
}

inline double rescale_relative_deviation(double lhs, double rhs) {
  if (std::isinf(lhs) && std::isinf(rhs)) return 0.0;
  if (std::isinf(lhs) || std::isinf(rhs)) return kInfinityMarker;
  return std::abs(lhs - rhs) / lhs;
}

// h1 is the h = 1 section, hh the semiclassical one on the scaled grid.
inline RescaleCheck semiclassical_rescale_check(const OperatorMatrix& h1, const OperatorMatrix& hh,
                                                Complex z, double sigma) {
  const auto& p = h1.potential;
  if (!p.is_monomial()) throw InputError("rescale: potential must be a monomial c*x^m");
  if (!(hh.potential == p)) throw InputError("rescale: sections use different potentials");
  if (!(z.imag() != 0.0)) throw InputError("rescale: Im z must be nonzero");
  if (!(sigma > 0.0)) throw InputError("rescale: sigma must be positive");
  const int m = p.degree();
  const double hexp = semiclassical_h(m, sigma);
  if (std::abs(h1.disc.h - 1.0) > 1e-14) throw InputError("rescale: first section must have h = 1");
  if (std::abs(hh.disc.h - hexp) > 1e-12 * hexp) {
    throw InputError("rescale: second section has h = " + std::to_string(hh.disc.h) +
                     ", expected sigma^{-(m+2)/(2m)} = " + std::to_string(hexp));
  }
  if (h1.grid.size() != hh.grid.size()) throw InputError("rescale: grid sizes differ");
  const double scale = std::pow(sigma, 1.0 / m);
  for (std::size_t i = 0; i < h1.grid.size(); ++i) {
    const double expect = hh.grid[i] * scale;
    if (std::abs(h1.grid[i] - expect) > 1e-10 * std::max(1.0, std::abs(expect))) {
      throw InputError("rescale: grid of H_h is not the sigma^{1/m}-scaled image of the grid of H"
                       " (index " + std::to_string(i) + ")");
    }
  }
  RescaleCheck r;
  r.h = hexp;
  r.lhs = resolvent_norm(h1, sigma * z);
  r.rhs = resolvent_norm(hh, z) / sigma;
  r.rel_dev = rescale_relative_deviation(r.lhs, r.rhs);
  return r;
}

// Discretization for H_h whose grid is the sigma^{-1/m}-scaled image of d's.
inline Discretization matched_semiclassical_discretization(const Discretization& d, int degree,
                                                           double sigma) {
  Discretization out = d;
  const double scale = std::pow(sigma, 1.0 / degree);
  out.h = semiclassical_h(degree, sigma);
  out.half_width = d.half_width / scale;
  out.hermite_scale = d.hermite_scale * scale;
  return out;
}

inline RescaleCheck semiclassical_rescale_check(const PolynomialPotential& p, Complex z, double sigma,
                                                const Discretization& d) {
  if (!p.is_monomial()) throw InputError("rescale: potential must be a monomial c*x^m");
  const auto h1 = build_matrix(p, d.with_h(1.0));
  const auto hh = build_matrix(p, matched_semiclassical_discretization(d.with_h(1.0), p.degree(), sigma));
  return semiclassical_rescale_check(h1, hh, z, sigma);
}

}  // namespace nonherm
