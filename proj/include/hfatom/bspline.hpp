#pragma once

#include "core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace hfatom {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double> &x, std::vector<double> &w) {
  x.assign(std::size_t(n), 0.0);
  w.assign(std::size_t(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5)), dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[std::size_t(i)] = -z;
    x[std::size_t(n - 1 - i)] = z;
    w[std::size_t(i)] = w[std::size_t(n - 1 - i)] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

// B-splines of a given order (degree order-1) on [0, R] with full multiplicity at both
// ends. Precomputes values and first derivatives at Gauss points of every interval.
class BSplineBasis {
public:
  struct QuadPoint {
    double r, w;
    int first;                  // index of the first nonzero spline
    std::vector<double> b, db;  // order values
  };

  BSplineBasis(int order, std::vector<double> breakpoints, int quad_per_interval)
      : k_(order), bp_(std::move(breakpoints)) {
    if (k_ < 2) throw InvalidInput("spline order must be >= 2");
    if (bp_.size() < 2) throw InvalidInput("need at least two breakpoints");
    for (std::size_t i = 1; i < bp_.size(); ++i)
      if (!(bp_[i] > bp_[i - 1])) throw InvalidInput("breakpoints must increase");
    t_.assign(std::size_t(k_ - 1), bp_.front());
    t_.insert(t_.end(), bp_.begin(), bp_.end());
    t_.insert(t_.end(), std::size_t(k_ - 1), bp_.back());
    n_ = int(t_.size()) - k_;
    std::vector<double> gx, gw;
    gauss_legendre(quad_per_interval, gx, gw);
    for (std::size_t j = 0; j + 1 < bp_.size(); ++j) {
      const double a = bp_[j], b = bp_[j + 1], half = 0.5 * (b - a);
      for (std::size_t q = 0; q < gx.size(); ++q) {
        QuadPoint p;
        p.r = a + half * (1.0 + gx[q]);
        p.w = half * gw[q];
        evaluate(p.r, p.first, p.b, p.db);
        quad_.push_back(std::move(p));
      }
    }
  }

  int order() const { return k_; }
  int size() const { return n_; }
  double r_max() const { return bp_.back(); }
  const std::vector<double> &breakpoints() const { return bp_; }
  const std::vector<QuadPoint> &quadrature() const { return quad_; }

  // Values and derivatives of the `order` splines that can be nonzero at r.
  void evaluate(double r, int &first, std::vector<double> &b, std::vector<double> &db) const {
    const int k = k_;
    // interval t_[mu] <= r < t_[mu+1], with r = R assigned to the last interval
    int mu = int(std::upper_bound(t_.begin(), t_.end(), r) - t_.begin()) - 1;
    mu = std::clamp(mu, k - 1, n_ - 1);
    first = mu - k + 1;
    // de Boor-Cox; the order k-1 values are kept for the derivative
    std::vector<double> N(std::size_t(k), 0.0), prev;
    N[std::size_t(k - 1)] = 1.0;
    for (int d = 1; d < k; ++d) {
      if (d == k - 1) prev = N;
      for (int j = k - 1 - d; j < k; ++j) {
        const int i = first + j; // spline index; order d+1 spline on t_[i..i+d+1]
        double v = 0.0;
        const double den1 = t_[std::size_t(i + d)] - t_[std::size_t(i)];
        const double den2 = t_[std::size_t(i + d + 1)] - t_[std::size_t(i + 1)];
        if (den1 > 0.0) v += (r - t_[std::size_t(i)]) / den1 * N[std::size_t(j)];
        if (den2 > 0.0 && j + 1 < k) v += (t_[std::size_t(i + d + 1)] - r) / den2 * N[std::size_t(j + 1)];
        N[std::size_t(j)] = v;
      }
    }
    if (k == 1) prev = N;
    b = N;
    db.assign(std::size_t(k), 0.0);
    for (int j = 0; j < k; ++j) {
      const int i = first + j;
      double v = 0.0;
      const double den1 = t_[std::size_t(i + k - 1)] - t_[std::size_t(i)];
      const double den2 = t_[std::size_t(i + k)] - t_[std::size_t(i + 1)];
      if (den1 > 0.0) v += prev[std::size_t(j)] / den1;
      if (den2 > 0.0 && j + 1 < k) v -= prev[std::size_t(j + 1)] / den2;
      db[std::size_t(j)] = (k - 1) * v;
    }
  }

  double value(const Eigen::VectorXd &c, double r, double *deriv = nullptr) const {
    int first;
    std::vector<double> b, db;
    evaluate(r, first, b, db);
    double v = 0.0, d = 0.0;
    for (int j = 0; j < k_; ++j) {
      v += c[first + j] * b[std::size_t(j)];
      d += c[first + j] * db[std::size_t(j)];
    }
    if (deriv) *deriv = d;
    return v;
  }

  // sum_q w f_q B_i B_j over quadrature points (full index space)
  Eigen::MatrixXd weighted_overlap(const std::vector<double> &fq) const {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n_, n_);
    for (std::size_t q = 0; q < quad_.size(); ++q) {
      const auto &p = quad_[q];
      const double fw = p.w * fq[q];
      for (int a = 0; a < k_; ++a)
        for (int b = 0; b < k_; ++b) M(p.first + a, p.first + b) += fw * p.b[std::size_t(a)] * p.b[std::size_t(b)];
    }
    return M;
  }

  template <class F> std::vector<double> at_quadrature(F &&f) const {
    std::vector<double> v(quad_.size());
    for (std::size_t q = 0; q < quad_.size(); ++q) v[q] = f(quad_[q].r);
    return v;
  }

  // sum_j c_j B_j at every quadrature point
  std::vector<double> expand(const Eigen::VectorXd &c) const {
    std::vector<double> v(quad_.size(), 0.0);
    for (std::size_t q = 0; q < quad_.size(); ++q) {
      const auto &p = quad_[q];
      double s = 0.0;
      for (int a = 0; a < k_; ++a) s += c[p.first + a] * p.b[std::size_t(a)];
      v[q] = s;
    }
    return v;
  }

  // sum_q w f_q B_i
  Eigen::VectorXd project(const std::vector<double> &fq) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n_);
    for (std::size_t q = 0; q < quad_.size(); ++q) {
      const auto &p = quad_[q];
      for (int a = 0; a < k_; ++a) v[p.first + a] += p.w * fq[q] * p.b[std::size_t(a)];
    }
    return v;
  }

  Eigen::MatrixXd derivative_overlap() const {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n_, n_);
    for (const auto &p : quad_)
      for (int a = 0; a < k_; ++a)
        for (int b = 0; b < k_; ++b) M(p.first + a, p.first + b) += p.w * p.db[std::size_t(a)] * p.db[std::size_t(b)];
    return M;
  }

  // Breakpoints for atoms: 0, then uniform in xi = ln(r) + r / beta from r1 to R.
  static std::vector<double> atomic_breakpoints(double r1, double R, double beta, int intervals) {
    if (!(r1 > 0.0 && R > r1 && beta > 0.0 && intervals >= 2))
      throw InvalidInput("atomic_breakpoints: bad parameters");
    auto xi = [&](double r) { return std::log(r) + r / beta; };
    const double a = xi(r1), b = xi(R);
    std::vector<double> out{0.0, r1};
    for (int j = 1; j < intervals - 1; ++j) {
      const double target = a + (b - a) * j / (intervals - 1);
      double lo = r1, hi = R;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (lo + hi);
        (xi(m) < target ? lo : hi) = m;
      }
      out.push_back(0.5 * (lo + hi));
    }
    out.push_back(R);
    return out;
  }

private:
  int k_;
  int n_ = 0;
  std::vector<double> bp_, t_;
  std::vector<QuadPoint> quad_;
};

} // namespace hfatom
