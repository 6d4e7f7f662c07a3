#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"

namespace hfatom {

namespace detail {

// End corrections for the trapezoid rule (Gregory form), exact for
// polynomials of degree < 8 in the uniform variable.
inline const std::array<double, 8> &gregory_corrections() {
  static const std::array<double, 8> c = [] {
    constexpr int p = 8;
    // Bernoulli numbers B_2..B_8
    const double bern[9] = {1.0, -0.5, 1.0 / 6, 0.0, -1.0 / 30, 0.0, 1.0 / 42, 0.0, -1.0 / 30};
    double a[p][p + 1];
    for (int k = 0; k < p; ++k) {
      for (int j = 0; j < p; ++j) a[k][j] = std::pow(double(j), k);
      a[k][p] = (k % 2 == 1) ? -bern[k + 1] / (k + 1) : 0.0;
    }
    a[0][0] = 1.0; // 0^0
    // Gaussian elimination with partial pivoting
    for (int col = 0; col < p; ++col) {
      int piv = col;
      for (int r = col + 1; r < p; ++r)
        if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
      for (int j = 0; j <= p; ++j) std::swap(a[col][j], a[piv][j]);
      for (int r = 0; r < p; ++r) {
        if (r == col) continue;
        const double f = a[r][col] / a[col][col];
        for (int j = col; j <= p; ++j) a[r][j] -= f * a[col][j];
      }
    }
    std::array<double, 8> out{};
    for (int k = 0; k < p; ++k) out[k] = a[k][p] / a[k][k];
    return out;
  }();
  return c;
}

// Integral of the 4-point interpolant over [x_{i-1}, x_i], unit spacing.
// g(j) returns the sample at offset j relative to the interval end i.
template <class G>
double interval_integral(std::size_t i, std::size_t n, G &&g) {
  if (n < 4) return 0.5 * (g(-1) + g(0));
  const double a = g(-1), b = g(0);
  double v;
  if (i == 1)
    v = (9.0 * a + 19.0 * b - 5.0 * g(1) + g(2)) / 24.0;
  else if (i == n - 1)
    v = (g(-3) - 5.0 * g(-2) + 19.0 * a + 9.0 * b) / 24.0;
  else
    v = (-g(-2) + 13.0 * a + 13.0 * b - g(1)) / 24.0;
  // cubic overshoot next to a jump must not flip the sign of a one-signed interval
  if ((a >= 0 && b >= 0 && v < 0) || (a <= 0 && b <= 0 && v > 0)) v = 0.5 * (a + b);
  return v;
}

// Local power-law exponent p of f ~ r^p from two neighbouring samples.
inline bool local_exponent(double f0, double f1, double h, double &p) {
  if (!(f0 != 0.0 && f1 != 0.0) || (f0 > 0) != (f1 > 0)) return false;
  p = std::log(f1 / f0) / h;
  return std::isfinite(p);
}

} // namespace detail

class RadialGrid;
using GridPtr = std::shared_ptr<const RadialGrid>;

class RadialGrid {
public:
  static GridPtr logarithmic(double r_min, double r_max, std::size_t n) {
    if (!(r_min > 0.0) || !(r_max > r_min) || n < 16)
      throw InvalidInput("logarithmic grid needs 0 < r_min < r_max and n >= 16");
    return GridPtr(new RadialGrid(r_min, r_max, n));
  }
  static GridPtr from_settings(const NumericsSettings &s) {
    return logarithmic(s.r_min, s.r_max, s.n);
  }

  std::size_t size() const { return r_.size(); }
  double r(std::size_t i) const { return r_[i]; }
  const std::vector<double> &points() const { return r_; }
  const std::vector<double> &weights() const { return w_; }
  double h() const { return h_; }
  double r_min() const { return r_.front(); }
  double r_max() const { return r_.back(); }

  // int_{r_min}^{r_max} f(r) dr
  double integrate(const std::vector<double> &f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < r_.size(); ++i) s += w_[i] * f[i];
    return s;
  }

  // Index of the last grid point <= r (clamped to [0, n-2]).
  std::size_t locate(double r) const {
    if (r <= r_.front()) return 0;
    auto it = std::upper_bound(r_.begin(), r_.end(), r);
    std::size_t i = std::size_t(it - r_.begin());
    return std::min(i == 0 ? 0 : i - 1, r_.size() - 2);
  }

  std::string header() const {
    std::ostringstream os;
    os.precision(17);
    os << "grid=log n=" << size() << " r_min=" << r_min() << " r_max=" << r_max();
    return os.str();
  }

  bool same_as(const RadialGrid &o) const {
    return size() == o.size() && r_min() == o.r_min() && r_max() == o.r_max();
  }

private:
  RadialGrid(double r_min, double r_max, std::size_t n) : r_(n), w_(n) {
    h_ = std::log(r_max / r_min) / double(n - 1);
    for (std::size_t i = 0; i < n; ++i) r_[i] = r_min * std::exp(h_ * double(i));
    r_.back() = r_max;
    std::vector<double> wx(n, 1.0);
    wx.front() = wx.back() = 0.5;
    const auto &c = detail::gregory_corrections();
    for (std::size_t j = 0; j < c.size(); ++j) {
      wx[j] -= c[j];
      wx[n - 1 - j] -= c[j];
    }
    for (std::size_t i = 0; i < n; ++i) w_[i] = h_ * wx[i] * r_[i];
  }

  std::vector<double> r_, w_;
  double h_ = 0.0;
};

enum class Meaning { density, potential, orbital, generic };

inline const char *to_string(Meaning m) {
  switch (m) {
  case Meaning::density: return "density";
  case Meaning::potential: return "potential";
  case Meaning::orbital: return "orbital";
  default: return "generic";
  }
}

inline Meaning meaning_from_string(const std::string &s) {
  if (s == "density") return Meaning::density;
  if (s == "potential") return Meaning::potential;
  if (s == "orbital") return Meaning::orbital;
  if (s == "generic") return Meaning::generic;
  throw InvalidInput("unknown meaning tag: " + s);
}

struct RadialFunction {
  GridPtr grid;
  std::vector<double> values;
  Meaning meaning = Meaning::generic;

  RadialFunction() = default;
  RadialFunction(GridPtr g, std::vector<double> v, Meaning m = Meaning::generic,
                 double neg_tol = 1e-12)
      : grid(std::move(g)), values(std::move(v)), meaning(m) {
    if (!grid) throw InvalidInput("radial function without grid");
    if (values.size() != grid->size()) throw InvalidInput("values/grid length mismatch");
    if (meaning == Meaning::density) {
      double big = 0.0;
      for (double x : values) big = std::max(big, std::abs(x));
      for (double &x : values) {
        if (x < -neg_tol * big) throw InvalidInput("negative density sample");
        if (x < 0.0) x = 0.0;
      }
    }
  }

  template <class F>
  static RadialFunction sample(GridPtr g, F &&f, Meaning m = Meaning::generic) {
    std::vector<double> v(g->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(g->r(i));
    return RadialFunction(g, std::move(v), m);
  }

  static RadialFunction zeros(GridPtr g, Meaning m = Meaning::generic) {
    return RadialFunction(g, std::vector<double>(g->size(), 0.0), m);
  }

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double r(std::size_t i) const { return grid->r(i); }
};

inline void require_same_grid(const RadialFunction &a, const RadialFunction &b) {
  if (a.grid != b.grid && !a.grid->same_as(*b.grid))
    throw InvalidInput("radial functions live on different grids");
}

namespace detail {

inline void require_finite(const RadialFunction &f, const char *what) {
  if (!all_finite(f.values)) throw InvalidInput(std::string(what) + ": non-finite samples");
}

// int_0^{r_0} f dr assuming f ~ r^p below the grid.
inline double inner_closure(const std::vector<double> &f, const RadialGrid &g) {
  double p;
  if (!local_exponent(f[0], f[1], g.h(), p) || p <= -0.999) return 0.0;
  return f[0] * g.r(0) / (p + 1.0);
}

// int_{r_max}^inf f dr. ln f is fitted as a quadratic in ln r over the last stretch of
// the grid, so a tail whose power law is still steepening (f ~ r^{-4}(1 + c r^{-e})^k)
// is not over-extrapolated; falls back to a pure power law.
inline double outer_closure(const std::vector<double> &f, const RadialGrid &g) {
  const std::size_t n = f.size();
  double p;
  if (!local_exponent(f[n - 2], f[n - 1], g.h(), p) || p >= -1.5) return 0.0;
  const double R = g.r(n - 1);
  const double power_law = -f[n - 1] * R / (p + 1.0);
  const std::size_t m = std::max<std::size_t>(1, std::size_t(0.1 / g.h()));
  if (n < 2 * m + 1) return power_law;
  const double f1 = f[n - 1 - m], f2 = f[n - 1 - 2 * m];
  if (!((f1 > 0) == (f[n - 1] > 0) && (f2 > 0) == (f[n - 1] > 0) && f1 != 0 && f2 != 0))
    return power_law;
  const double d = double(m) * g.h();
  const double l0 = std::log(std::abs(f[n - 1])), l1 = std::log(std::abs(f1)),
               l2 = std::log(std::abs(f2));
  const double b = (3 * l0 - 4 * l1 + l2) / (2 * d); // slope at the end
  const double c = (l0 - 2 * l1 + l2) / (d * d);     // curvature
  if (!(c < 0.0) || !(b + 1.0 < 0.0)) return power_law;
  // int_0^inf exp((b+1) v + c v^2 / 2) dv
  const double s = std::sqrt(-c);
  const double z = -(b + 1.0) / (s * std::sqrt(2.0));
  const double gauss = std::sqrt(pi / 2.0) / s * std::exp(z * z) * std::erfc(z);
  const double val = f[n - 1] * R * (std::isfinite(gauss) ? gauss : -1.0 / (b + 1.0));
  return std::isfinite(val) ? val : power_law;
}

} // namespace detail

// int f(|x|) d^3x = 4 pi int f r^2 dr, with power-law closures below r_min
// and beyond r_max.
inline double integrate3d(const RadialFunction &f) {
  detail::require_finite(f, "integrate3d");
  const RadialGrid &g = *f.grid;
  std::vector<double> a(f.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = 4.0 * pi * g.r(i) * g.r(i) * f[i];
  const double s = g.integrate(a) + detail::inner_closure(a, g) + detail::outer_closure(a, g);
  if (!std::isfinite(s)) throw OverflowError("integrate3d overflow");
  return s;
}

// (int |f|^p d^3x)^(1/p)
inline double lp_norm3d(const RadialFunction &f, double p) {
  std::vector<double> v(f.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::pow(std::abs(f[i]), p);
  return std::pow(integrate3d(RadialFunction(f.grid, std::move(v))), 1.0 / p);
}

// Multipole screening function of a radial source f(r) (sampled per unit r):
//   y_k(r) = r^{-k-1} int_0^r s^k f ds + r^k int_r^inf s^{-k-1} f ds,
// computed as two first-order recurrences (outward and inward sweeps).
struct Screening {
  std::vector<double> inner; // r^{-k-1} int_0^r s^k f
  std::vector<double> outer; // r^k int_r^inf s^{-k-1} f
  std::vector<double> total() const {
    std::vector<double> t(inner.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = inner[i] + outer[i];
    return t;
  }
};

inline Screening screening(const RadialGrid &g, const std::vector<double> &f, int k) {
  const std::size_t n = g.size();
  const double h = g.h();
  Screening s{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  // offsets relative to the interval end: -3..+2 outward, -2..+3 inward
  double up[7], dn[7];
  for (int j = -3; j <= 3; ++j) {
    up[j + 3] = std::exp(double(j) * h * (k + 1));
    dn[j + 3] = std::exp(-double(j) * h * k);
  }
  const double q_up = std::exp(-h * (k + 1));
  const double q_dn = std::exp(-h * k);

  {
    // closure below r_0: f ~ r^p
    double p;
    if (detail::local_exponent(f[0], f[1], h, p) && k + 1 + p > 0.5)
      s.inner[0] = f[0] / (k + 1 + p);
  }
  for (std::size_t i = 1; i < n; ++i) {
    auto gi = [&](int j) { return up[j + 3] * f[std::size_t(std::ptrdiff_t(i) + j)]; };
    s.inner[i] = q_up * s.inner[i - 1] + h * detail::interval_integral(i, n, gi);
  }
  {
    double p;
    if (detail::local_exponent(f[n - 2], f[n - 1], h, p) && p - k < -0.5)
      s.outer[n - 1] = f[n - 1] / (k - p);
  }
  for (std::size_t i = n - 1; i-- > 0;) {
    // interval [x_i, x_{i+1}]; weights relative to r_i, offsets relative to i+1
    auto gi = [&](int j) {
      return dn[j + 1 + 3] * f[std::size_t(std::ptrdiff_t(i + 1) + j)];
    };
    s.outer[i] = q_dn * s.outer[i + 1] + h * detail::interval_integral(i + 1, n, gi);
  }
  return s;
}

inline std::vector<double> screening_function(const RadialGrid &g, const std::vector<double> &f,
                                              int k) {
  return screening(g, f, k).total();
}

namespace detail {
// Potential of a (possibly signed) radial charge distribution.
inline Screening coulomb_parts(const RadialFunction &rho) {
  const RadialGrid &g = *rho.grid;
  std::vector<double> src(rho.size());
  for (std::size_t i = 0; i < src.size(); ++i) src[i] = 4.0 * pi * g.r(i) * g.r(i) * rho[i];
  return screening(g, src, 0);
}
} // namespace detail

inline RadialFunction coulomb_potential(const RadialFunction &rho) {
  detail::require_finite(rho, "coulomb_potential");
  auto parts = detail::coulomb_parts(rho);
  auto v = parts.total();
  if (!all_finite(v)) throw OverflowError("coulomb potential overflow");
  return RadialFunction(rho.grid, std::move(v), Meaning::potential);
}

// rho * |x|^{-1} for a nonnegative radial density (Newton's theorem).
inline RadialFunction newton_potential(const RadialFunction &rho,
                                       double neg_tol = NumericsSettings{}.density_neg_tol) {
  detail::require_finite(rho, "newton_potential");
  double big = 0.0;
  for (double x : rho.values) big = std::max(big, std::abs(x));
  for (double x : rho.values)
    if (x < -neg_tol * big) throw InvalidInput("newton_potential: negative density");
  auto out = coulomb_potential(rho);
#ifdef HFATOM_CHECK_INVARIANTS
  {
    // total charge as seen by the cumulative sweep (equal to integrate3d for smooth rho)
    const double total = out.r(out.size() - 1) * out.values.back();
    double prev = -1.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double rv = out.r(i) * out[i];
      const double slack = 1e-9 * std::max(1.0, std::abs(total));
      if (rv < prev - slack || rv > total + slack)
        throw Error("newton_potential invariant violated: r*V not monotone/bounded");
      prev = std::max(prev, rv);
    }
  }
#endif
  return out;
}

// Charge enclosed within each grid radius.
struct ChargeProfile {
  RadialFunction cumulative;
  double total = 0.0;
};

namespace detail {
inline std::vector<double> enclosed_charge(const RadialFunction &rho) {
  auto parts = coulomb_parts(rho);
  std::vector<double> q(rho.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = parts.inner[i] * rho.r(i);
  return q;
}
} // namespace detail

inline ChargeProfile charge_profile(const RadialFunction &rho) {
  detail::require_finite(rho, "charge_profile");
  auto q = detail::enclosed_charge(rho);
  for (std::size_t i = 1; i < q.size(); ++i) q[i] = std::max(q[i], q[i - 1]);
  return {RadialFunction(rho.grid, std::move(q), Meaning::generic), integrate3d(rho)};
}

namespace detail {

// Cubic Hermite on [x0, x0+h] with slopes limited to keep monotone data monotone.
inline double monotone_hermite(double y0, double y1, double d0, double d1, double h, double t) {
  const double sec = (y1 - y0) / h;
  if (sec == 0.0) {
    d0 = d1 = 0.0;
  } else {
    if (d0 * sec < 0.0) d0 = 0.0;
    if (d1 * sec < 0.0) d1 = 0.0;
    const double a = d0 / sec, b = d1 / sec, s2 = a * a + b * b;
    if (s2 > 9.0) {
      const double tau = 3.0 / std::sqrt(s2);
      d0 = tau * a * sec;
      d1 = tau * b * sec;
    }
  }
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * y1 +
         (t3 - t2) * h * d1;
}

// Enclosed charge at arbitrary radius: monotone cubic in log r using dQ/dlog r = 4 pi r^3 rho.
inline double enclosed_at(const RadialFunction &rho, const std::vector<double> &q, double R) {
  const RadialGrid &g = *rho.grid;
  if (R <= 0.0) return 0.0;
  if (R <= g.r_min()) return q[0] * std::pow(R / g.r_min(), 3.0);
  if (R >= g.r_max()) return q.back();
  const std::size_t i = g.locate(R);
  const double t = std::log(R / g.r(i)) / g.h();
  auto dq = [&](std::size_t j) { return 4.0 * pi * std::pow(g.r(j), 3) * rho[j]; };
  return monotone_hermite(q[i], q[i + 1], dq(i), dq(i + 1), g.h(), t);
}

// int_R^inf 4 pi s rho ds at arbitrary radius.
inline double outer_at(const RadialFunction &rho, const std::vector<double> &b, double R) {
  const RadialGrid &g = *rho.grid;
  if (R <= g.r_min()) return b[0];
  if (R >= g.r_max()) return b.back();
  const std::size_t i = g.locate(R);
  const double t = std::log(R / g.r(i)) / g.h();
  auto db = [&](std::size_t j) { return -4.0 * pi * g.r(j) * g.r(j) * rho[j]; };
  return monotone_hermite(b[i], b[i + 1], db(i), db(i + 1), g.h(), t);
}

} // namespace detail

// Phi_R(r) = Z/r - (chi_{|y|<R} rho) * |x|^{-1}.
struct ScreenedPotential {
  RadialFunction potential;
  double radius = 0.0;  // radius actually used
  bool clamped = false; // requested radius was outside [0, r_max]
};

inline ScreenedPotential screened_potential(const RadialFunction &rho, double Z, double R) {
  detail::require_finite(rho, "screened_potential");
  const RadialGrid &g = *rho.grid;
  ScreenedPotential out;
  out.radius = R;
  if (!(R >= 0.0)) {
    out.radius = 0.0;
    out.clamped = true;
  } else if (R > g.r_max()) {
    out.radius = g.r_max();
    out.clamped = true;
  }
  R = out.radius;
  std::vector<double> v(g.size());
  if (R == 0.0) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = Z / g.r(i);
  } else {
    auto parts = detail::coulomb_parts(rho);
    std::vector<double> q(g.size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = parts.inner[i] * g.r(i);
    // parts.outer already is int_r^inf 4 pi s rho ds (k = 0)
    const double qR = detail::enclosed_at(rho, q, R);
    const double bR = detail::outer_at(rho, parts.outer, R);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double r = g.r(i);
      if (r >= R)
        v[i] = (Z - qR) / r;
      else
        v[i] = Z / r - parts.inner[i] - parts.outer[i] + bR;
    }
  }
  out.potential = RadialFunction(rho.grid, std::move(v), Meaning::potential);
  return out;
}

// Phi_R evaluated at a single radius r >= R (harmonic region): (Z - Q(R))/r.
inline double screened_value_outside(const RadialFunction &rho, double Z, double R, double r) {
  auto q = detail::enclosed_charge(rho);
  return (Z - detail::enclosed_at(rho, q, R)) / r;
}

// D(f,g) = 1/2 int int f(x) g(y) / |x-y|
inline double coulomb_inner(const RadialFunction &f, const RadialFunction &g) {
  require_same_grid(f, g);
  auto vg = coulomb_potential(g);
  std::vector<double> prod(f.size());
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = f[i] * vg[i];
  const double d = 0.5 * integrate3d(RadialFunction(f.grid, std::move(prod)));
  if (!std::isfinite(d)) throw OverflowError("coulomb_inner diverged");
  return d;
}

inline double coulomb_norm(const RadialFunction &f) {
  return std::sqrt(std::max(0.0, coulomb_inner(f, f)));
}

namespace detail {

// Cin(z) = int_0^z (1 - cos t)/t dt for 0 <= z <= 2 pi (alternating series).
inline double cin(double z) {
  const double z2 = z * z;
  double term = z2 / 2.0; // z^2/2!
  double sum = 0.0;
  for (int k = 1; k < 40; ++k) {
    const double add = term / (2.0 * k);
    sum += (k % 2 == 1) ? add : -add;
    if (add < 1e-18 * std::abs(sum)) break;
    term *= z2 / ((2.0 * k + 1) * (2.0 * k + 2));
  }
  return sum;
}

} // namespace detail

// Kernel of the smearing: g(x)^2 with g(x) = (2 pi s)^{-1/2} |x|^{-1} sin(pi |x| / s) on |x| <= s.
inline double smear_kernel(double s, double t) {
  if (t >= s) return 0.0;
  if (t == 0.0) return pi / (2.0 * s * s * s);
  const double v = std::sin(pi * t / s) / t;
  return v * v / (2.0 * pi * s);
}

namespace detail {
// G(u) = int_0^u K(t) t dt, tabulated on [0, s] with cubic Hermite (exact slopes).
class SmearPrimitive {
public:
  explicit SmearPrimitive(double s, std::size_t m = 1024) : s_(s), du_(s / double(m)) {
    val_.resize(m + 1);
    der_.resize(m + 1);
    const double pref = 1.0 / (4.0 * pi * s);
    for (std::size_t i = 0; i <= m; ++i) {
      const double u = du_ * double(i);
      val_[i] = pref * cin(2.0 * pi * u / s);
      der_[i] = u * smear_kernel(s, std::min(u, s * (1 - 1e-15)));
    }
    der_[m] = 0.0;
  }
  double operator()(double u) const {
    if (u >= s_) return val_.back();
    const double x = u / du_;
    const std::size_t i = std::min(std::size_t(x), val_.size() - 2);
    const double t = x - double(i), t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * val_[i] + (t3 - 2 * t2 + t) * du_ * der_[i] +
           (-2 * t3 + 3 * t2) * val_[i + 1] + (t3 - t2) * du_ * der_[i + 1];
  }

private:
  double s_, du_;
  std::vector<double> val_, der_;
};
} // namespace detail

// f * g^2 for radial f, as a double radial integral:
//   (f * g^2)(r) = (2 pi / r) int f(t) t [G(r + t) - G(|r - t|)] dt.
// Each grid interval is integrated by 4-point Gauss-Legendre in log r with cubic
// interpolation of f; the bracket has a kink at t = s - r, where intervals are split.
inline RadialFunction smear_g2(const RadialFunction &f, double s,
                               const NumericsSettings &set = NumericsSettings{}) {
  detail::require_finite(f, "smear_g2");
  if (!(s > 0.0)) throw InvalidInput("smear_g2: width must be positive");
  const RadialGrid &g = *f.grid;
  const std::size_t n = g.size();
  // resolution: spacing <= s / points_per_width wherever f carries weight per log r
  double big = 0.0;
  for (std::size_t i = 0; i < n; ++i) big = std::max(big, std::abs(f[i]) * std::pow(g.r(i), 3));
  const double step = std::exp(g.h()) - 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(f[i]) * std::pow(g.r(i), 3) <= set.smear_relevance * big) continue;
    if (g.r(i) * step > s / set.smear_points_per_width)
      throw ResolutionError("smear_g2: width " + std::to_string(s) +
                            " under-resolved near r = " + std::to_string(g.r(i)));
  }
  const detail::SmearPrimitive G(s);
  static constexpr double gx[4] = {-0.8611363115940526, -0.3399810435848563,
                                   0.3399810435848563, 0.8611363115940526};
  static constexpr double gw[4] = {0.3478548451374538, 0.6521451548625461,
                                   0.6521451548625461, 0.3478548451374538};
  const double h = g.h();
  double tail_power = 0.0;
  if (!detail::local_exponent(f[n - 2], f[n - 1], h, tail_power) || tail_power > 0.0) tail_power = 0.0;
  double head_power = 0.0; // integrable against t^2 only above -3
  if (!detail::local_exponent(f[0], f[1], h, head_power) || head_power <= -2.5) head_power = 0.0;
  // samples past either end follow the same power laws as the off-grid pieces
  auto fat = [&](std::ptrdiff_t j) {
    if (j < 0) return f[0] * std::exp(head_power * h * double(j));
    if (j >= std::ptrdiff_t(n)) return f[n - 1] * std::exp(tail_power * h * double(j - std::ptrdiff_t(n) + 1));
    return f[std::size_t(j)];
  };
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = g.r(i);
    auto bracket = [&](double t) { return G(r + t) - G(std::abs(r - t)); };
    const double a = std::max(r - s, 0.0), b = r + s;
    const double kink = s - r; // G(r + t) saturates beyond it
    double acc = 0.0;
    // off-grid pieces, integrated in t directly with an extrapolated f
    auto piece = [&](double lo, double hi, auto &&fx) {
      auto gauss = [&](double plo, double phi) {
        for (int q = 0; q < 4; ++q) {
          const double t = 0.5 * (plo + phi) + 0.5 * (phi - plo) * gx[q];
          acc += 0.5 * (phi - plo) * gw[q] * fx(t) * t * bracket(t);
        }
      };
      // the bracket oscillates on the scale s: keep sub-pieces below s / 16
      auto split = [&](double plo, double phi) {
        const int m = std::max(1, int(std::ceil(16.0 * (phi - plo) / s)));
        for (int k = 0; k < m; ++k) gauss(plo + (phi - plo) * k / m, plo + (phi - plo) * (k + 1) / m);
      };
      if (hi <= lo) return;
      if (kink > lo && kink < hi) {
        split(lo, kink);
        split(kink, hi);
      } else {
        split(lo, hi);
      }
    };
    // below r_min: continue the local power law of the first samples
    if (a < g.r_min() && f[0] != 0.0)
      piece(a, std::min(g.r_min(), b),
            [&](double t) { return f[0] * std::pow(t / g.r_min(), head_power); });
    // beyond r_max: continue the local power law of the last samples (constant if it grows)
    if (b > g.r_max() && f[n - 1] != 0.0)
      piece(std::max(a, g.r_max()), b,
            [&](double t) { return f[n - 1] * std::pow(t / g.r_max(), tail_power); });
    // grid intervals [x_j, x_j+1] overlapping (a, b)
    std::size_t j0 = 0;
    if (a > g.r_min()) j0 = std::min(g.locate(a), n - 2);
    for (std::size_t j = j0; j + 1 < n && g.r(j) < b; ++j) {
      const double lo = std::max(g.r(j), a), hi = std::min(g.r(j + 1), b);
      if (hi <= lo) continue;
      const double f0 = fat(std::ptrdiff_t(j) - 1), f1 = f[j], f2 = f[j + 1],
                   f3 = fat(std::ptrdiff_t(j) + 2);
      if (f0 == 0.0 && f1 == 0.0 && f2 == 0.0 && f3 == 0.0) continue;
      const double xj = std::log(g.r(j));
      auto sub = [&](double plo, double phi) {
        const double ulo = (std::log(plo) - xj) / h, uhi = (std::log(phi) - xj) / h;
        for (int q = 0; q < 4; ++q) {
          const double u = 0.5 * (ulo + uhi) + 0.5 * (uhi - ulo) * gx[q];
          const double L0 = -u * (u - 1) * (u - 2) / 6.0, L1 = (u + 1) * (u - 1) * (u - 2) / 2.0,
                       L2 = -(u + 1) * u * (u - 2) / 2.0, L3 = (u + 1) * u * (u - 1) / 6.0;
          const double fv = L0 * f0 + L1 * f1 + L2 * f2 + L3 * f3;
          const double t = std::exp(xj + u * h);
          acc += 0.5 * (uhi - ulo) * h * gw[q] * fv * t * t * bracket(t);
        }
      };
      if (kink > lo && kink < hi) {
        sub(lo, kink);
        sub(kink, hi);
      } else {
        sub(lo, hi);
      }
    }
    out[i] = 2.0 * pi / r * acc;
  }
  return RadialFunction(f.grid, std::move(out), f.meaning == Meaning::density ? Meaning::density
                                                                              : Meaning::generic);
}

// d f / d r: centred differences in log r, one-sided at the ends.
inline RadialFunction radial_derivative(const RadialFunction &f) {
  const RadialGrid &g = *f.grid;
  const std::size_t n = g.size();
  const double h = g.h();
  std::vector<double> d(n);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h * g.r(i));
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h * g.r(0));
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h * g.r(n - 1));
  return RadialFunction(f.grid, std::move(d));
}

// Radius R with int_{|x|>=R} rho = nu.
inline double radius_of_charge(const RadialFunction &rho, double nu) {
  detail::require_finite(rho, "radius_of_charge");
  const RadialGrid &g = *rho.grid;
  auto q = detail::enclosed_charge(rho);
  for (std::size_t i = 1; i < q.size(); ++i) q[i] = std::max(q[i], q[i - 1]);
  const double total = integrate3d(rho);
  const double tol = 1e-12 * std::max(1.0, std::abs(total));
  if (nu < -tol || nu > total + tol) throw DomainError("radius_of_charge: nu out of range");
  auto ext = [&](std::size_t i) { return total - q[i]; };
  if (nu >= ext(0)) return g.r_min();
  if (nu <= std::max(ext(g.size() - 1), tol)) return g.r_max();
  // ext decreasing: find i with ext(i) >= nu > ext(i+1)
  std::size_t lo = 0, hi = g.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    (ext(mid) >= nu ? lo : hi) = mid;
  }
  auto dq = [&](std::size_t j) { return 4.0 * pi * std::pow(g.r(j), 3) * rho[j]; };
  double a = 0.0, b = 1.0;
  for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
    const double t = 0.5 * (a + b);
    const double qt = detail::monotone_hermite(q[lo], q[lo + 1], dq(lo), dq(lo + 1), g.h(), t);
    (total - qt >= nu ? a : b) = t;
  }
  return g.r(lo) * std::exp(0.5 * (a + b) * g.h());
}

} // namespace hfatom
