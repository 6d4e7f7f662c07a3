#pragma once

#include "core.hpp"
#include "radial.hpp"
#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace hfatom {

// Bound states of -u''/2 + [l(l+1)/(2r^2) - V] u = eps u in one angular channel.
struct ChannelSpectrum {
  int l = 0;
  std::vector<double> eigenvalues;
  std::vector<RadialFunction> orbitals; // u(r), int u^2 dr = 1
  std::vector<bool> box_sensitive;
  bool truncated = false; // fewer bound states than requested
};

namespace detail {

// Numerov in x = ln r for w = u / sqrt(r):  w'' = [(l+1/2)^2 - 2 r^2 (V + eps)] w.
class NumerovChannel {
public:
  NumerovChannel(const RadialFunction &V, int l) : V_(V), l_(l) {
    const RadialGrid &g = *V.grid;
    n_ = g.size();
    h2_ = g.h() * g.h();
    r2_.resize(n_);
    base_.resize(n_);
    const double lh = l + 0.5;
    for (std::size_t i = 0; i < n_; ++i) {
      r2_[i] = g.r(i) * g.r(i);
      base_[i] = lh * lh - 2.0 * r2_[i] * V[i];
    }
    // charge seen at the origin, for the regular start w ~ r^{l+1/2}(1 - Z r/(l+1))
    z0_ = V[0] * g.r(0);
  }

  std::size_t size() const { return n_; }
  double coeff(std::size_t i, double eps) const { return base_[i] - 2.0 * r2_[i] * eps; }

  // Lowest possible eigenvalue: min of the effective potential.
  double floor() const {
    double m = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      m = std::min(m, (l_ * (l_ + 1.0)) / (2.0 * r2_[i]) - V_[i]);
    return m;
  }

  // Number of eigenvalues below eps (sign changes of the regular solution on (r_min, r_max]).
  int count_below(double eps) const {
    double wa, wb;
    start(eps, wa, wb);
    int nodes = 0;
    double wprev = wb;
    for (std::size_t i = 1; i + 1 < n_; ++i) {
      const double w = step(i, +1, eps, wa, wb);
      wa = wb;
      wb = w;
      if ((w < 0.0) != (wprev < 0.0) && w != 0.0) ++nodes;
      if (w != 0.0) wprev = w;
      if (std::abs(wb) > 1e200) {
        wa *= 1e-200;
        wb *= 1e-200;
        wprev *= 1e-200;
      }
    }
    return nodes;
  }

  // Eigenfunction at eps by outward/inward matching at the outer turning point;
  // returns w on the grid and the Cooley correction to eps.
  std::vector<double> matched(double eps, double &correction) const {
    std::size_t m = 1;
    for (std::size_t i = n_ - 2; i > 1; --i)
      if (coeff(i, eps) < 0.0) {
        m = i;
        break;
      }
    m = std::clamp<std::size_t>(m, 4, n_ - 5);
    std::vector<double> w(n_, 0.0), out(m + 2, 0.0), in(n_, 0.0);
    start(eps, out[0], out[1]);
    for (std::size_t i = 1; i <= m; ++i) {
      out[i + 1] = step(i, +1, eps, out[i - 1], out[i]);
      if (std::abs(out[i + 1]) > 1e200)
        for (std::size_t j = 0; j <= i + 1; ++j) out[j] *= 1e-200;
    }
    in[n_ - 1] = 0.0;
    in[n_ - 2] = 1e-200;
    for (std::size_t i = n_ - 2; i >= m; --i) {
      in[i - 1] = step(i, -1, eps, in[i + 1], in[i]);
      if (std::abs(in[i - 1]) > 1e200)
        for (std::size_t j = i - 1; j < n_; ++j) in[j] *= 1e-200;
      if (i == m) break;
    }
    // both pieces are scaled to 1 at the matching point; their ratio could overflow
    for (std::size_t i = 0; i <= m; ++i) w[i] = out[i] / out[m];
    for (std::size_t i = m + 1; i < n_; ++i) w[i] = in[i] / in[m];
    double big = 0.0;
    for (double x : w) big = std::max(big, std::abs(x));
    for (double &x : w) x /= big;
    const double h = std::sqrt(h2_);
    double norm = 0.0;
    for (std::size_t i = 0; i < n_; ++i) norm += r2_[i] * w[i] * w[i];
    norm *= h;
    const double d_out = (out[m + 1] - out[m - 1]) / (2.0 * h * out[m] * big);
    const double d_in = (in[m + 1] - in[m - 1]) / (2.0 * h * in[m] * big);
    correction = w[m] * (d_out - d_in) / (2.0 * norm);
    return w;
  }

private:
  // One step from (w[i - dir], w[i]) to w[i + dir]. Where h^2 g is large Numerov's
  // weights change sign and it invents nodes; there the locally exact exponential
  // step is used instead (such regions carry negligible amplitude).
  double step(std::size_t i, int dir, double eps, double w_back, double w_here) const {
    const std::size_t ib = dir > 0 ? i - 1 : i + 1, inx = dir > 0 ? i + 1 : i - 1;
    const double gb = coeff(ib, eps), gi = coeff(i, eps), gn = coeff(inx, eps);
    constexpr double stiff = 6.0; // h^2 g above which Numerov is abandoned
    if (h2_ * std::max({gb, gi, gn}) > stiff) {
      const double k = std::sqrt(h2_ * std::max(gi, 0.0));
      return 2.0 * std::cosh(k) * w_here - w_back;
    }
    const double fb = 1.0 - h2_ * gb / 12.0, fn = 1.0 - h2_ * gn / 12.0;
    return ((2.0 + 10.0 * h2_ * gi / 12.0) * w_here - fb * w_back) / fn;
  }

  void start(double eps, double &w0, double &w1) const {
    (void)eps;
    const RadialGrid &g = *V_.grid;
    auto reg = [&](double r) {
      return std::pow(r / g.r(0), l_ + 0.5) * (1.0 - z0_ * r / (l_ + 1.0));
    };
    w0 = reg(g.r(0));
    w1 = reg(g.r(1));
  }

  const RadialFunction &V_;
  int l_;
  std::size_t n_ = 0;
  double h2_ = 0.0, z0_ = 0.0;
  std::vector<double> r2_, base_;
};

} // namespace detail

// The `count` lowest bound states (eps < 0) of channel l on the grid of V with
// Dirichlet walls. Fewer states than requested sets `truncated`.
inline ChannelSpectrum solve_channel(const RadialFunction &V, int l, int count,
                                     const NumericsSettings &set = NumericsSettings{}) {
  if (l < 0) throw InvalidInput("solve_channel: l must be nonnegative");
  if (count < 1) throw InvalidInput("solve_channel: count must be >= 1");
  detail::require_finite(V, "solve_channel");
  detail::NumerovChannel ch(V, l);
  ChannelSpectrum out;
  out.l = l;
  const double top = 0.0;
  const int available = ch.count_below(top);
  const int want = std::min(count, available);
  out.truncated = want < count;
  const double bottom = ch.floor() - 1.0;
  const RadialGrid &g = *V.grid;
  const double box = set.box_sensitivity / (g.r_max() * g.r_max());
  double prev = bottom;
  for (int k = 0; k < want; ++k) {
    double lo = prev, hi = top;
    // count_below(lo) <= k < count_below(hi)
    while (hi - lo > set.eigen_tol * std::max(1.0, std::min(std::abs(lo), std::abs(hi)))) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (ch.count_below(mid) > k ? hi : lo) = mid;
    }
    double eps = 0.5 * (lo + hi);
    double corr = 0.0;
    auto w = ch.matched(eps, corr);
    eps = std::clamp(eps + corr, lo, hi);
    std::vector<double> u(g.size());
    double norm = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::sqrt(g.r(i)) * w[i];
    {
      std::vector<double> u2(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) u2[i] = u[i] * u[i];
      norm = std::sqrt(g.integrate(u2));
    }
    // sign convention: positive near the origin
    std::size_t first = 1;
    while (first + 1 < u.size() && u[first] == 0.0) ++first; // high l underflows near r_min
    const double sgn = u[first] < 0.0 ? -1.0 : 1.0;
    for (double &x : u) x *= sgn / norm;
    out.eigenvalues.push_back(eps);
    out.orbitals.emplace_back(V.grid, std::move(u), Meaning::orbital);
    out.box_sensitive.push_back(std::abs(eps) < box);
    prev = hi;
  }
  return out;
}

// Number of sign changes of a radial orbital, ignoring the negligible tail.
inline int count_nodes(const RadialFunction &u) {
  double big = 0.0;
  for (double x : u.values) big = std::max(big, std::abs(x));
  int nodes = 0;
  double last = 0.0;
  for (double x : u.values) {
    if (std::abs(x) < 1e-8 * big) continue;
    if (last != 0.0 && (x < 0.0) != (last < 0.0)) ++nodes;
    last = x;
  }
  return nodes;
}

struct Level {
  int l = 0;
  int k = 0; // radial index within the channel
  double eps = 0.0;
  int degeneracy = 1; // 2l + 1
  bool box_sensitive = false;
};

struct Spectrum3D {
  std::vector<Level> levels; // sorted by energy
  int l_max = 0;
  long count() const {
    long c = 0;
    for (const auto &L : levels) c += L.degeneracy;
    return c;
  }
  double sum() const {
    double s = 0.0;
    for (const auto &L : levels) s += L.degeneracy * L.eps;
    return s;
  }
};

// All negative eigenvalues of -Laplacian/2 - V (no spin) for channels 0..l_max.
// Throws if channel l_max still binds.
inline Spectrum3D negative_spectrum_3d(const RadialFunction &V, int l_max,
                                       const NumericsSettings &set = NumericsSettings{}) {
  if (l_max < 0) throw InvalidInput("negative_spectrum_3d: l_max must be nonnegative");
  Spectrum3D s;
  s.l_max = l_max;
  for (int l = 0; l <= l_max; ++l) {
    detail::NumerovChannel ch(V, l);
    const int n = ch.count_below(0.0);
    if (n == 0) continue;
    if (l == l_max)
      throw DomainError("negative_spectrum_3d: channel l_max = " + std::to_string(l_max) +
                        " still has bound states; raise l_max");
    auto c = solve_channel(V, l, n, set);
    for (std::size_t k = 0; k < c.eigenvalues.size(); ++k)
      s.levels.push_back({l, int(k), c.eigenvalues[k], 2 * l + 1, c.box_sensitive[k]});
  }
  std::sort(s.levels.begin(), s.levels.end(),
            [](const Level &a, const Level &b) { return a.eps < b.eps; });
  return s;
}

// Channels are added until two consecutive ones are empty.
inline Spectrum3D negative_spectrum_3d(const RadialFunction &V,
                                       const NumericsSettings &set = NumericsSettings{}) {
  int empty = 0, l = 0;
  for (; empty < 2; ++l) {
    detail::NumerovChannel ch(V, l);
    empty = ch.count_below(0.0) == 0 ? empty + 1 : 0;
    if (l > 500) throw SolverFailure("negative_spectrum_3d: no empty channels up to l = 500");
  }
  return negative_spectrum_3d(V, l - 1, set);
}

// Constants of the counting and eigenvalue-sum inequalities for -Laplacian/2 - V.
inline constexpr double clr_constant = 0.3270;         // 2^{3/2} * 0.1156
inline constexpr double lieb_thirring_sum_constant = 0.038;

// number of eigenvalues <= 0  <=  clr_constant * int V_+^{3/2}
inline BoundReport check_clr(const RadialFunction &V, const NumericsSettings &set = NumericsSettings{}) {
  BoundReport rep;
  rep.claim_id = "thm2.6";
  std::vector<double> v(V.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::pow(pos(V[i]), 1.5);
  const double rhs = clr_constant * integrate3d(RadialFunction(V.grid, std::move(v)));
  const auto s = negative_spectrum_3d(V, set);
  rep.add_le(double(s.count()), rhs);
  return rep.finalize(0.0);
}

// sum of negative eigenvalues  >=  -lieb_thirring_sum_constant * int V_+^{5/2}
inline BoundReport check_lieb_thirring_sum(const RadialFunction &V,
                                           const NumericsSettings &set = NumericsSettings{}) {
  BoundReport rep;
  rep.claim_id = "thm2.5-sum";
  std::vector<double> v(V.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::pow(pos(V[i]), 2.5);
  const double bound = lieb_thirring_sum_constant * integrate3d(RadialFunction(V.grid, std::move(v)));
  const auto s = negative_spectrum_3d(V, set);
  // as lhs <= rhs:  -sum <= bound
  rep.add_le(-s.sum(), bound);
  return rep.finalize(0.0);
}

} // namespace hfatom
