#pragma once

#include "core.hpp"
#include "radial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>

namespace hfatom {

// Constants of atomic Thomas-Fermi theory (hartree atomic units, spin-summed density).
struct TFConstants {
  // Laplacian(phi) = ode_coupling * (phi - mu)_+^{3/2}
  static inline const double ode_coupling = std::pow(2.0, 3.5) / (3.0 * pi);
  // (phi - mu) = kinetic_coeff * rho^{2/3}
  static inline const double kinetic_coeff = 0.5 * std::pow(3.0 * pi * pi, 2.0 / 3.0);
  // rho = density_coeff * (phi - mu)_+^{3/2}
  static inline const double density_coeff = std::pow(2.0, 1.5) / (3.0 * pi * pi);
  // neutral-atom binding energy per Z^{7/3}
  static constexpr double binding_energy = 0.7687;
  // decaying exponent of the correction to the r^{-4} tail; solves e(e+7) = 6
  static inline const double tail_exponent = (-7.0 + std::sqrt(73.0)) / 2.0;
  // inner/outer switch of the lower bound sits at inner_radius_coeff * Z^{-1/3}
  static inline const double inner_radius_coeff = std::pow(9.0 * pi, 2.0 / 3.0) / 44.0;
  // printed value of the lower-bound offset
  static constexpr double lower_offset_printed = 43.7;
  // large-r profile 81 pi^2 / (8 r^4) of the neutral potential
  static inline const double tail_coeff = 81.0 * pi * pi / 8.0;
  // bound on the self-screened potential, 81 pi^2 / (2 r^4)
  static inline const double screened_coeff = 81.0 * pi * pi / 2.0;
  // pointwise density bound 3^5 pi / (8 r^6)
  static inline const double density_tail_coeff = 243.0 * pi / 8.0;
  // inner-region potential deficit 22 (9 pi)^{-2/3} Z^{4/3}
  static inline const double inner_deficit = 22.0 / std::pow(9.0 * pi, 2.0 / 3.0);

  // Offset that makes the two branches of the lower bound meet at
  // r = inner_radius_coeff Z^{-1/3}; the printed 43.7 is this value rounded up.
  static double lower_offset_continuous() {
    const double b = inner_radius_coeff;
    return (std::sqrt(2.0 * tail_coeff / (b * b * b)) - 1.0) * std::pow(b, tail_exponent);
  }
  // Length unit of the universal profile: r = length_scale(Z) * x.
  static double length_scale(double Z) { return std::pow(ode_coupling, -2.0 / 3.0) / std::cbrt(Z); }
};

// Dimensionless screening profile chi(x), phi - mu = Z chi(r/a) / r.
// chi is linear on [0, x_lin] (no charge there), solves chi'' = chi_+^{3/2} / sqrt(x)
// beyond, and either decays like 144/x^3 (neutral) or vanishes at x_edge with
// -x_edge chi'(x_edge) = ionization fraction (then continues linearly, negative).
class ScreeningProfile {
public:
  double value(double x) const { return eval(x).first; }
  double slope(double x) const { return eval(x).second; }
  double linear_end() const { return x_lin_; }
  double initial_slope() const { return s0_; }
  // +inf for the neutral profile
  double edge() const { return x_edge_; }
  double ionization() const { return q_; }

  // Universal neutral atom, computed once.
  static std::shared_ptr<const ScreeningProfile> neutral_atom() {
    static const auto p = std::make_shared<const ScreeningProfile>(neutral(0.0));
    return p;
  }
  static ScreeningProfile neutral(double x_lin, double tol = 1e-12);
  static ScreeningProfile ionic(double x_lin, double q, double tol = 1e-12);

private:
  // samples on a uniform grid in t = sqrt(x): chi and p = dchi/dx
  double t0_ = 0.0, dt_ = 0.0;
  std::vector<double> chi_t_, p_t_;
  // samples on a uniform grid in u = ln x: chi and w = x dchi/dx (neutral tail)
  double u0_ = 0.0, du_ = 0.0;
  std::vector<double> chi_u_, w_u_;
  double tail_amp_ = 0.0; // chi = 144/x^3 (1 + tail_amp (x/X)^{-e}) beyond the u grid

  double x_lin_ = 0.0, s0_ = 0.0;
  double x_edge_ = std::numeric_limits<double>::infinity();
  double q_ = 0.0;

  std::pair<double, double> eval(double x) const;

  friend struct ProfileBuilder;
};

namespace detail {

inline double pow32p(double c) { return c > 0.0 ? c * std::sqrt(c) : 0.0; }

inline double hermite(double y0, double y1, double d0, double d1, double h, double t) {
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * y1 +
         (t3 - t2) * h * d1;
}
inline double hermite_deriv(double y0, double y1, double d0, double d1, double h, double t) {
  const double t2 = t * t;
  return ((6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * h * d0 + (-6 * t2 + 6 * t) * y1 +
          (3 * t2 - 2 * t) * h * d1) /
         h;
}

// One RK4 step of the profile ODE in t = sqrt(x): chi_t = 2 t p, p_t = 2 chi_+^{3/2}.
// The source is switched off for x < x_lin.
inline void rk4_t(double &t, double &c, double &p, double dt, double x_lin) {
  auto f = [&](double tt, double cc, double pp, double &dc, double &dp) {
    dc = 2.0 * tt * pp;
    dp = (tt * tt >= x_lin) ? 2.0 * pow32p(cc) : 0.0;
  };
  double k1c, k1p, k2c, k2p, k3c, k3p, k4c, k4p;
  f(t, c, p, k1c, k1p);
  f(t + 0.5 * dt, c + 0.5 * dt * k1c, p + 0.5 * dt * k1p, k2c, k2p);
  f(t + 0.5 * dt, c + 0.5 * dt * k2c, p + 0.5 * dt * k2p, k3c, k3p);
  f(t + dt, c + dt * k3c, p + dt * k3p, k4c, k4p);
  c += dt / 6.0 * (k1c + 2 * k2c + 2 * k3c + k4c);
  p += dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
  t += dt;
}

// RK4 in u = ln x: chi_u = w, w_u = w + x^{3/2} chi_+^{3/2}.
inline void rk4_u(double &u, double &c, double &w, double du) {
  auto f = [](double uu, double cc, double ww, double &dc, double &dw) {
    dc = ww;
    dw = ww + std::exp(1.5 * uu) * pow32p(cc);
  };
  double k1c, k1w, k2c, k2w, k3c, k3w, k4c, k4w;
  f(u, c, w, k1c, k1w);
  f(u + 0.5 * du, c + 0.5 * du * k1c, w + 0.5 * du * k1w, k2c, k2w);
  f(u + 0.5 * du, c + 0.5 * du * k2c, w + 0.5 * du * k2w, k3c, k3w);
  f(u + du, c + du * k3c, w + du * k3w, k4c, k4w);
  c += du / 6.0 * (k1c + 2 * k2c + 2 * k3c + k4c);
  w += du / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w);
  u += du;
}

enum class ShotOutcome { crossed_zero, turned_up, undecided };

struct Shot {
  ShotOutcome outcome;
  std::vector<double> chi, p; // on t = t0 + k dt
};

// Outward shot from x_lin with chi(x_lin) = 1 + s x_lin, chi' = s.
inline Shot shoot_outward(double x_lin, double s, double dt, double t_max, bool keep) {
  double t = std::sqrt(x_lin), c = 1.0 + s * x_lin, p = s;
  Shot out{ShotOutcome::undecided, {}, {}};
  if (keep) {
    out.chi.push_back(c);
    out.p.push_back(p);
  }
  if (c <= 0.0 && p <= 0.0) {
    out.outcome = ShotOutcome::crossed_zero;
    return out;
  }
  while (t < t_max) {
    rk4_t(t, c, p, dt, x_lin);
    if (keep) {
      out.chi.push_back(c);
      out.p.push_back(p);
    }
    if (c < 0.0) {
      out.outcome = ShotOutcome::crossed_zero;
      return out;
    }
    if (p > 0.0) {
      out.outcome = ShotOutcome::turned_up;
      return out;
    }
  }
  return out;
}

} // namespace detail

struct ProfileBuilder {
  static constexpr double dt = 1e-3;
  static constexpr double du = 1e-3;

  // Neutral: bisection on the slope, then an inward tail from far out where the
  // 144/x^3 asymptotics hold, matched to the outward shot.
  static ScreeningProfile neutral(double x_lin, double tol) {
    const double t_lin = std::sqrt(x_lin);
    const double t_max = t_lin + 400.0;
    double lo = x_lin > 0.0 ? -1.0 / x_lin : -2.0, hi = 0.0;
    std::vector<double> hist;
    auto classify = [&](double s) {
      auto o = detail::shoot_outward(x_lin, s, dt, t_max, false).outcome;
      if (o == detail::ShotOutcome::undecided)
        throw SolverFailure("profile shooting undecided at slope " + std::to_string(s), hist);
      return o;
    };
    if (classify(lo) != detail::ShotOutcome::crossed_zero ||
        classify(hi) != detail::ShotOutcome::turned_up)
      throw SolverFailure("profile shooting: slope bracket [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "] does not straddle the separatrix",
                          {lo, hi});
    while (hi - lo > tol * std::max(1.0, std::abs(lo))) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      hist.push_back(mid);
      (classify(mid) == detail::ShotOutcome::crossed_zero ? lo : hi) = mid;
    }
    auto a = detail::shoot_outward(x_lin, lo, dt, t_max, true);
    auto b = detail::shoot_outward(x_lin, hi, dt, t_max, true);
    // trust the trajectories while the bracketing shots agree closely
    const std::size_t m = std::min(a.chi.size(), b.chi.size());
    std::size_t keep = 0;
    for (std::size_t k = 0; k < m; ++k) {
      const double c = 0.5 * (a.chi[k] + b.chi[k]);
      if (!(c > 0.0) || std::abs(a.chi[k] - b.chi[k]) > 1e-9 * c) break;
      keep = k;
    }
    if (keep < 16) throw SolverFailure("profile shooting: no reliable interior segment", hist);
    // match a bit inside the reliable region
    keep = std::max<std::size_t>(16, keep * 3 / 4);

    ScreeningProfile P;
    P.x_lin_ = x_lin;
    P.s0_ = 0.5 * (lo + hi);
    P.t0_ = t_lin;
    P.dt_ = dt;
    P.chi_t_.resize(keep + 1);
    P.p_t_.resize(keep + 1);
    for (std::size_t k = 0; k <= keep; ++k) {
      P.chi_t_[k] = 0.5 * (a.chi[k] + b.chi[k]);
      P.p_t_[k] = 0.5 * (a.p[k] + b.p[k]);
    }
    const double t_m = t_lin + dt * double(keep);
    const double x_m = t_m * t_m, chi_m = P.chi_t_.back();

    // inward tail
    const double X = std::max(1e6, 1e4 * x_m);
    const double e = TFConstants::tail_exponent;
    const std::size_t nu = std::size_t(std::ceil(std::log(X / x_m) / du));
    const double h = std::log(X / x_m) / double(nu);
    auto inward = [&](double amp, std::vector<double> *cs, std::vector<double> *ws) {
      // chi = 144/x^3 (1 + amp (x/X)^{-e}) and its log-derivative at X
      double u = std::log(X);
      double c = 144.0 / (X * X * X) * (1.0 + amp);
      double w = 144.0 / (X * X * X) * (-3.0 * (1.0 + amp) - e * amp);
      if (cs) {
        cs->assign(nu + 1, 0.0);
        ws->assign(nu + 1, 0.0);
        (*cs)[nu] = c;
        (*ws)[nu] = w;
      }
      for (std::size_t k = nu; k-- > 0;) {
        detail::rk4_u(u, c, w, -h);
        if (cs) {
          (*cs)[k] = c;
          (*ws)[k] = w;
        }
      }
      return c;
    };
    double alo = -0.5, ahi = 0.5;
    for (int it = 0; inward(alo, nullptr, nullptr) > chi_m; ++it) {
      alo = -1.0 + 0.5 * (alo + 1.0);
      if (it > 60) throw SolverFailure("profile tail: amplitude bracket (low) not found", {alo});
    }
    for (int it = 0; inward(ahi, nullptr, nullptr) < chi_m; ++it) {
      ahi *= 2.0;
      if (it > 60) throw SolverFailure("profile tail: amplitude bracket (high) not found", {ahi});
    }
    for (int it = 0; it < 200 && ahi - alo > 1e-15 * std::max(1.0, std::abs(ahi)); ++it) {
      const double mid = 0.5 * (alo + ahi);
      (inward(mid, nullptr, nullptr) < chi_m ? alo : ahi) = mid;
    }
    P.tail_amp_ = 0.5 * (alo + ahi);
    inward(P.tail_amp_, &P.chi_u_, &P.w_u_);
    P.u0_ = std::log(x_m);
    P.du_ = h;
    return P;
  }

  // Ionic: chi vanishes at x_edge with -x_edge chi'(x_edge) = q; x_edge chosen by
  // bisection so that the linear continuation inside x_lin reaches chi(0) = 1.
  static ScreeningProfile ionic(double x_lin, double q, double tol) {
    if (!(q > 0.0) || q > 1.0) throw InvalidInput("ionic profile: ionization fraction outside (0, 1]");
    const double t_lin = std::sqrt(x_lin);
    struct Inward {
      double target;
      std::vector<double> chi, p;
      double dt;
    };
    auto run = [&](double x_edge, bool keep) {
      const double t_edge = std::sqrt(x_edge);
      const std::size_t m = std::max<std::size_t>(8, std::size_t(std::ceil((t_edge - t_lin) / dt)));
      const double step = (t_edge - t_lin) / double(m);
      double t = t_edge, c = 0.0, p = -q / x_edge;
      Inward w{0.0, {}, {}, step};
      if (keep) {
        w.chi.assign(m + 1, 0.0);
        w.p.assign(m + 1, 0.0);
        w.chi[m] = c;
        w.p[m] = p;
      }
      for (std::size_t k = m; k-- > 0;) {
        detail::rk4_t(t, c, p, -step, x_lin);
        if (keep) {
          w.chi[k] = c;
          w.p[k] = p;
        }
        if (!std::isfinite(c) || c > 1e6) {
          w.target = std::numeric_limits<double>::infinity();
          return w;
        }
      }
      w.target = c - x_lin * p;
      return w;
    };
    double lo = x_lin + std::max(1e-6, 1e-6 * x_lin), hi = std::max(1.0, 2.0 * x_lin);
    std::vector<double> hist;
    if (run(lo, false).target >= 1.0)
      throw SolverFailure("ionic profile: edge bracket (low) not found", {lo});
    for (int it = 0; run(hi, false).target < 1.0; ++it) {
      lo = hi;
      hi *= 2.0;
      hist.push_back(hi);
      if (it > 80) throw SolverFailure("ionic profile: edge bracket (high) not found", hist);
    }
    for (int it = 0; it < 200 && hi - lo > tol * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      hist.push_back(mid);
      (run(mid, false).target < 1.0 ? lo : hi) = mid;
    }
    const double x_edge = 0.5 * (lo + hi);
    auto w = run(x_edge, true);
    ScreeningProfile P;
    P.x_lin_ = x_lin;
    P.x_edge_ = x_edge;
    P.q_ = q;
    P.t0_ = t_lin;
    P.dt_ = w.dt;
    P.chi_t_ = std::move(w.chi);
    P.p_t_ = std::move(w.p);
    // linear part through chi(0) = 1 meeting the solved value at x_lin
    P.s0_ = x_lin > 0.0 ? (P.chi_t_.front() - 1.0) / x_lin : P.p_t_.front();
    return P;
  }
};

inline ScreeningProfile ScreeningProfile::neutral(double x_lin, double tol) {
  return ProfileBuilder::neutral(x_lin, tol);
}
inline ScreeningProfile ScreeningProfile::ionic(double x_lin, double q, double tol) {
  return ProfileBuilder::ionic(x_lin, q, tol);
}

inline std::pair<double, double> ScreeningProfile::eval(double x) const {
  if (x <= x_lin_) return {1.0 + s0_ * x, s0_};
  if (x >= x_edge_) return {q_ * (1.0 - x / x_edge_), -q_ / x_edge_};
  const double t = std::sqrt(x);
  const std::size_t nt = chi_t_.size();
  const double t_end = t0_ + dt_ * double(nt - 1);
  if (t <= t_end || chi_u_.empty()) {
    double k = std::floor((t - t0_) / dt_);
    k = std::clamp(k, 0.0, double(nt - 2));
    const std::size_t i = std::size_t(k);
    const double ta = t0_ + dt_ * k, tb = ta + dt_;
    const double s = (t - ta) / dt_;
    const double c = detail::hermite(chi_t_[i], chi_t_[i + 1], 2 * ta * p_t_[i],
                                     2 * tb * p_t_[i + 1], dt_, s);
    const double p = detail::hermite(p_t_[i], p_t_[i + 1], 2 * detail::pow32p(chi_t_[i]),
                                     2 * detail::pow32p(chi_t_[i + 1]), dt_, s);
    return {c, p};
  }
  const double u = std::log(x);
  const std::size_t nu = chi_u_.size();
  const double u_end = u0_ + du_ * double(nu - 1);
  if (u >= u_end) {
    const double X = std::exp(u_end), e = TFConstants::tail_exponent;
    const double corr = tail_amp_ * std::pow(x / X, -e);
    const double c = 144.0 / (x * x * x) * (1.0 + corr);
    return {c, 144.0 / (x * x * x * x) * (-3.0 * (1.0 + corr) - e * corr)};
  }
  double k = std::floor((u - u0_) / du_);
  k = std::clamp(k, 0.0, double(nu - 2));
  const std::size_t i = std::size_t(k);
  const double s = (u - (u0_ + du_ * k)) / du_;
  auto dw = [&](std::size_t j) {
    return w_u_[j] + std::exp(1.5 * (u0_ + du_ * double(j))) * detail::pow32p(chi_u_[j]);
  };
  const double c = detail::hermite(chi_u_[i], chi_u_[i + 1], w_u_[i], w_u_[i + 1], du_, s);
  const double w = detail::hermite(w_u_[i], w_u_[i + 1], dw(i), dw(i + 1), du_, s);
  return {c, w / x};
}

// A solved Thomas-Fermi atom (or exterior problem).
struct TFSolution {
  double Z = 0.0;  // nuclear charge (effective exterior charge for the exterior problem)
  double N = 0.0;  // requested electron number
  double mu = 0.0; // chemical potential
  RadialFunction rho;
  RadialFunction phi;
  double energy = 0.0;
  double residual = 0.0;
  double length_scale = 0.0; // r = length_scale * x
  double r_cut = 0.0;        // > 0 for the exterior problem
  double shift_inside = 0.0; // exterior problem: constant phi on r < r_cut
  std::shared_ptr<const ScreeningProfile> profile;

  // phi at arbitrary radius from the profile (no grid interpolation)
  double phi_at(double r) const {
    if (r < r_cut) return shift_inside;
    return Z * profile->value(r / length_scale) / r + mu;
  }
  // Electrons: grid quadrature over the smooth part of rho plus the exact remainder
  // from the profile beyond it (the r^{-6} tail past r_max, or the (edge - r)^{3/2}
  // free boundary of an ion, where generic closures lose accuracy).
  double electron_count() const {
    const RadialGrid &g = *rho.grid;
    const double edge = length_scale * profile->edge();
    std::size_t k = g.size() - 1, k0 = 0;
    if (edge < g.r_max()) {
      k = g.locate(edge);
      k = k > 3 ? k - 3 : 0;
    }
    if (r_cut > 0.0) {
      while (k0 < g.size() && g.r(k0) < r_cut) ++k0;
      k0 = std::min(k0 + 3, k);
    }
    const auto q = detail::enclosed_charge(rho);
    const double grid_part = r_cut > 0.0 ? q[k] - q[k0] + enclosed_charge(g.r(k0)) : q[k];
    return grid_part + (total_charge() - enclosed_charge(g.r(k)));
  }
  // charge the profile neutralizes: Z, or Z (1 - q) for an ion
  double total_charge() const { return Z * (1.0 - profile->ionization()); }
  // charge inside radius r: Z (1 - chi + x chi')
  double enclosed_charge(double r) const {
    if (r <= r_cut) return 0.0;
    const double x = r / length_scale;
    return Z * (1.0 - profile->value(x) + x * profile->slope(x));
  }
};

// Thomas-Fermi energy functional with nuclear charge Z.
inline double tf_energy(const RadialFunction &rho, double Z) {
  detail::require_finite(rho, "tf_energy");
  const RadialGrid &g = *rho.grid;
  std::vector<double> kin(rho.size()), nuc(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] < 0.0) throw InvalidInput("tf_energy: negative density");
    kin[i] = std::pow(rho[i], 5.0 / 3.0);
    nuc[i] = rho[i] / g.r(i);
  }
  const double ck = 0.3 * std::pow(3.0 * pi * pi, 2.0 / 3.0);
  const double e = ck * integrate3d(RadialFunction(rho.grid, std::move(kin))) -
                   Z * integrate3d(RadialFunction(rho.grid, std::move(nuc))) +
                   coulomb_inner(rho, rho);
  if (!std::isfinite(e)) throw OverflowError("tf_energy overflow");
  return e;
}

namespace detail {

// Newton potential of rho recomputed by grid quadrature on [r_k0, r_max] only. The
// caller supplies the charge below r_k0 (q_below), the potential of the shells outside
// r_max (shell_beyond), and for points below r_k0 the enclosed charge and the potential
// of the shells between them and r_k0 (below(r) -> {charge, shell potential}).
template <class Below>
std::vector<double> partial_newton(const RadialFunction &rho, std::size_t k0, double q_below,
                                   double shell_beyond, Below &&below) {
  const RadialGrid &g = *rho.grid;
  const std::size_t n = g.size();
  const double h = g.h();
  std::vector<double> q(n, q_below), p(n, shell_beyond), v(n);
  std::vector<double> gq(n), gp(n);
  for (std::size_t i = 0; i < n; ++i) {
    gq[i] = 4.0 * pi * std::pow(g.r(i), 3) * rho[i];
    gp[i] = 4.0 * pi * g.r(i) * g.r(i) * rho[i];
  }
  const std::size_t m = n - k0;
  for (std::size_t i = k0 + 1; i < n; ++i) {
    auto gi = [&](int j) { return gq[std::size_t(std::ptrdiff_t(i) + j)]; };
    q[i] = q[i - 1] + h * interval_integral(i - k0, m, gi);
  }
  for (std::size_t i = n - 1; i-- > k0;) {
    auto gi = [&](int j) { return gp[std::size_t(std::ptrdiff_t(i + 1) + j)]; };
    p[i] = p[i + 1] + h * interval_integral(i + 1 - k0, m, gi);
  }
  for (std::size_t i = 0; i < k0; ++i) {
    const auto [qi, gap] = below(g.r(i));
    q[i] = qi;
    p[i] = p[k0] + gap;
  }
  for (std::size_t i = 0; i < n; ++i) v[i] = q[i] / g.r(i) + p[i];
  return v;
}

// max |k rho^{2/3} - (phi - mu)_+| / (1 + |phi|) with phi recomputed from rho.
inline double tf_residual(const RadialFunction &rho, const RadialFunction &external, double mu,
                          const std::vector<double> &v) {
  double worst = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double phi = external[i] - v[i];
    const double d = std::abs(TFConstants::kinetic_coeff * std::cbrt(rho[i] * rho[i]) - pos(phi - mu));
    worst = std::max(worst, d / (1.0 + std::abs(phi)));
  }
  return worst;
}

inline TFSolution tf_from_profile(double Z, double N, double mu, double scale, double r_cut,
                                  double shift_inside,
                                  std::shared_ptr<const ScreeningProfile> profile, GridPtr g,
                                  const RadialFunction &external) {
  const ScreeningProfile &chi = *profile;
  TFSolution s;
  s.Z = Z;
  s.N = N;
  s.mu = mu;
  s.length_scale = scale;
  s.r_cut = r_cut;
  s.shift_inside = shift_inside;
  std::vector<double> rho(g->size(), 0.0), phi(g->size(), 0.0);
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double r = g->r(i);
    if (r < r_cut) {
      phi[i] = shift_inside;
      continue;
    }
    const double c = chi.value(r / scale);
    phi[i] = Z * c / r + mu;
    rho[i] = TFConstants::density_coeff * pow32p(Z * c / r);
  }
  s.rho = RadialFunction(g, std::move(rho), Meaning::density);
  s.phi = RadialFunction(g, std::move(phi), Meaning::potential);
  s.profile = profile;
  // int_r^inf 4 pi s rho ds = -Z chi'(x) / a - mu outside r_cut (zero past an ionic edge)
  auto shell = [&](double r) {
    const double x = r / scale;
    return x >= chi.edge() ? 0.0 : -Z * chi.slope(x) / scale - mu;
  };
  std::size_t k0 = 0;
  double q_below;
  if (r_cut > 0.0) {
    // the first few intervals past the density jump at r_cut are taken from the profile
    while (k0 < g->size() && g->r(k0) < r_cut) ++k0;
    k0 = std::min(k0 + 3, g->size() - 8);
    q_below = s.enclosed_charge(g->r(k0));
  } else {
    std::vector<double> a(g->size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = 4.0 * pi * g->r(i) * g->r(i) * s.rho[i];
    q_below = inner_closure(a, *g);
  }
  const double rk = g->r(k0);
  const auto v = partial_newton(s.rho, k0, q_below, shell(g->r_max()), [&](double r) {
    const double rr = std::max(r, r_cut);
    return std::pair<double, double>{s.enclosed_charge(rr), shell(rr) - shell(rk)};
  });
  s.residual = tf_residual(s.rho, external, mu, v);
  return s;
}

} // namespace detail

inline TFSolution solve_neutral_tf(double Z, const NumericsSettings &set) {
  if (!(Z > 0.0) || !std::isfinite(Z)) throw InvalidInput("solve_neutral_tf: Z must be positive");
  auto g = RadialGrid::from_settings(set);
  auto chi = ScreeningProfile::neutral_atom();
  auto ext = RadialFunction::sample(g, [Z](double r) { return Z / r; }, Meaning::potential);
  auto s = detail::tf_from_profile(Z, Z, 0.0, TFConstants::length_scale(Z), 0.0, 0.0, chi, g, ext);
  s.energy = tf_energy(s.rho, Z);
  return s;
}

inline TFSolution solve_neutral_tf(double Z) {
  return solve_neutral_tf(Z, NumericsSettings::for_atom(Z, Z));
}

inline TFSolution solve_tf(double Z, double N, const NumericsSettings &set) {
  if (!(Z > 0.0) || !std::isfinite(Z)) throw InvalidInput("solve_tf: Z must be positive");
  if (!(N > 0.0) || !std::isfinite(N)) throw InvalidInput("solve_tf: N must be positive");
  if (N >= Z) {
    auto s = solve_neutral_tf(Z, set);
    s.N = N;
    return s;
  }
  auto g = RadialGrid::from_settings(set);
  auto chi = std::make_shared<const ScreeningProfile>(
      ScreeningProfile::ionic(0.0, (Z - N) / Z, set.shoot_tol));
  const double a = TFConstants::length_scale(Z);
  const double mu = (Z - N) / (a * chi->edge());
  auto ext = RadialFunction::sample(g, [Z](double r) { return Z / r; }, Meaning::potential);
  auto s = detail::tf_from_profile(Z, N, mu, a, 0.0, 0.0, chi, g, ext);
  s.energy = tf_energy(s.rho, Z);
  return s;
}

inline TFSolution solve_tf(double Z, double N) {
  return solve_tf(Z, N, NumericsSettings::for_atom(Z, std::min(N, Z)));
}

// Exterior problem: external potential V vanishing inside r_cut and harmonic outside,
// at most `budget` electrons.
struct ExteriorTFProblem {
  double r_cut = 0.0;
  RadialFunction V;
  double budget = 0.0;

  // V * r beyond r_cut; throws if V is not harmonic there.
  double exterior_charge() const {
    const std::size_t i0 = V.grid->locate(r_cut) + (V.r(V.grid->locate(r_cut)) < r_cut ? 1 : 0);
    if (i0 >= V.size()) throw InvalidInput("exterior problem: r_cut beyond the grid");
    const double Zp = V[i0] * V.r(i0);
    for (std::size_t i = 0; i < V.size(); ++i) {
      const double r = V.r(i);
      if (r < r_cut) {
        if (V[i] != 0.0) throw InvalidInput("exterior problem: V must vanish inside r_cut");
      } else if (std::abs(V[i] * r - Zp) > 1e-6 * std::max(std::abs(Zp), 1e-300)) {
        throw InvalidInput("exterior problem: V is not harmonic beyond r_cut");
      }
    }
    return Zp;
  }
};

inline TFSolution solve_exterior_tf(const ExteriorTFProblem &pb, const NumericsSettings &set) {
  if (!(pb.r_cut >= 0.0)) throw InvalidInput("exterior problem: r_cut must be nonnegative");
  if (!(pb.budget >= 0.0)) throw InvalidInput("exterior problem: budget must be nonnegative");
  const double Zp = pb.exterior_charge();
  auto g = pb.V.grid;
  if (Zp <= 0.0 || pb.budget <= 0.0) {
    TFSolution s;
    s.Z = Zp;
    s.N = pb.budget;
    s.r_cut = pb.r_cut;
    s.rho = RadialFunction::zeros(g, Meaning::density);
    s.phi = pb.V;
    s.phi.meaning = Meaning::potential;
    s.length_scale = Zp > 0.0 ? TFConstants::length_scale(Zp) : 1.0;
    s.profile = std::make_shared<const ScreeningProfile>();
    s.energy = 0.0;
    s.residual = 0.0;
    return s;
  }
  const double a = TFConstants::length_scale(Zp);
  const double x_lin = pb.r_cut / a;
  std::shared_ptr<const ScreeningProfile> chi;
  double mu = 0.0;
  if (pb.budget >= Zp) {
    chi = std::make_shared<const ScreeningProfile>(ScreeningProfile::neutral(x_lin, set.shoot_tol));
  } else {
    chi = std::make_shared<const ScreeningProfile>(
        ScreeningProfile::ionic(x_lin, (Zp - pb.budget) / Zp, set.shoot_tol));
    mu = (Zp - pb.budget) / (a * chi->edge());
  }
  const double inside = mu + Zp * chi->initial_slope() / a;
  auto s = detail::tf_from_profile(Zp, pb.budget, mu, a, pb.r_cut, inside, chi, g, pb.V);
  // energy of the exterior functional: kinetic - int V rho + D(rho, rho)
  {
    std::vector<double> kin(g->size()), pot(g->size());
    for (std::size_t i = 0; i < g->size(); ++i) {
      kin[i] = std::pow(s.rho[i], 5.0 / 3.0);
      pot[i] = pb.V[i] * s.rho[i];
    }
    const double ck = 0.3 * std::pow(3.0 * pi * pi, 2.0 / 3.0);
    s.energy = ck * integrate3d(RadialFunction(g, std::move(kin))) -
               integrate3d(RadialFunction(g, std::move(pot))) + coulomb_inner(s.rho, s.rho);
  }
  return s;
}

// Upper bound min{81 pi^2/(8 r^4) + mu, Z/r}.
inline double sommerfeld_upper(double r, double mu, double Z) {
  return std::min(TFConstants::tail_coeff / std::pow(r, 4) + mu, Z / r);
}

// Piecewise lower bound; the outer offset defaults to the value that makes it continuous.
inline double sommerfeld_lower(double r, double Z, double N,
                               double offset = TFConstants::lower_offset_continuous()) {
  const double R = TFConstants::inner_radius_coeff / std::cbrt(Z);
  if (r <= R) return Z / r - TFConstants::inner_deficit * std::pow(Z, 4.0 / 3.0);
  const double e = TFConstants::tail_exponent;
  const double f = 1.0 + offset * std::pow(Z, -e / 3.0) * std::pow(r, -e);
  return std::max(TFConstants::tail_coeff / (f * f * std::pow(r, 4)), pos(Z - N) / r);
}

enum class ComparatorKind { upper, lower };

// 81 pi^2/(8 r^4) (1 + A r^{-e}) (upper) or 81 pi^2/(8 r^4) (1 + a r^{-e})^{-2} (lower).
inline double sommerfeld_comparator(double coeff, double r, ComparatorKind kind) {
  const double c = coeff * std::pow(r, -TFConstants::tail_exponent);
  const double base = TFConstants::tail_coeff / std::pow(r, 4);
  if (kind == ComparatorKind::upper) return base * (1.0 + c);
  if (!(1.0 + c > 0.0)) throw DomainError("lower comparator requires 1 + a r^{-e} > 0");
  return base / ((1.0 + c) * (1.0 + c));
}

} // namespace hfatom

namespace hfatom {

// Offsets of the r^{-4} comparators read off a solved potential.
//   upper: A(r) = [(phi - mu) / (F r^{-4}) - 1] r^e
//   lower: a(r) = [(phi / (F r^{-4}))^{-1/2} - 1] r^e
struct SommerfeldOffsets {
  double radius = 0.0;  // shell where the spot values were read
  double upper_spot = 0.0, lower_spot = 0.0;
  double upper_fit = 0.0, lower_fit = 0.0; // smallest offsets valid on every shell >= radius
};

inline SommerfeldOffsets sommerfeld_offsets(const RadialFunction &phi, double mu, double R) {
  const double F = TFConstants::tail_coeff, e = TFConstants::tail_exponent;
  SommerfeldOffsets o;
  std::size_t i0 = phi.grid->locate(R);
  if (phi.r(i0) <= R && i0 + 1 < phi.size()) ++i0;
  o.radius = phi.r(i0);
  auto up = [&](std::size_t i) {
    const double r = phi.r(i);
    return ((phi[i] - mu) * std::pow(r, 4) / F - 1.0) * std::pow(r, e);
  };
  auto lo = [&](std::size_t i) {
    const double r = phi.r(i);
    if (!(phi[i] > 0.0)) return std::numeric_limits<double>::infinity();
    return (1.0 / std::sqrt(phi[i] * std::pow(r, 4) / F) - 1.0) * std::pow(r, e);
  };
  o.upper_spot = up(i0);
  o.lower_spot = lo(i0);
  o.upper_fit = o.lower_fit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = i0; i < phi.size(); ++i) {
    o.upper_fit = std::max(o.upper_fit, up(i));
    o.lower_fit = std::max(o.lower_fit, lo(i));
  }
  return o;
}

// Right side of the chemical-potential estimate for an ion:
//   2^{3/4} / (3 sqrt(pi)) (1 + |a(R)| R^{-e})^{1/2} (Z - N),  R = inner_radius_coeff Z^{-1/3},
// returned together with mu^{3/4}.
struct ChemicalPotentialCheck {
  double lhs = 0.0, rhs = 0.0, offset = 0.0, radius = 0.0;
  bool holds() const { return lhs <= rhs; }
};

inline ChemicalPotentialCheck chemical_potential_check(const TFSolution &s) {
  const double R = TFConstants::inner_radius_coeff / std::cbrt(s.Z);
  const auto o = sommerfeld_offsets(s.phi, s.mu, R);
  ChemicalPotentialCheck c;
  c.radius = o.radius;
  c.offset = o.lower_spot;
  c.lhs = std::pow(s.mu, 0.75);
  c.rhs = std::pow(2.0, 0.75) / (3.0 * std::sqrt(pi)) *
          std::sqrt(1.0 + std::abs(o.lower_spot) * std::pow(o.radius, -TFConstants::tail_exponent)) *
          pos(s.Z - std::min(s.N, s.Z));
  return c;
}

} // namespace hfatom
