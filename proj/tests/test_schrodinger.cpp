#include "catch_amalgamated.hpp"

#include <hfatom/schrodinger.hpp>

#include <random>

using namespace hfatom;
using Catch::Approx;

namespace {

RadialFunction coulomb(GridPtr g, double Z) {
  return RadialFunction::sample(g, [=](double r) { return Z / r; }, Meaning::potential);
}

RadialFunction cut_coulomb(GridPtr g) {
  return RadialFunction::sample(g, [](double r) { return pos(1.0 / r - 0.5); },
                                Meaning::potential);
}

double integral_pos_power(const RadialFunction &V, double p) {
  // independent of integrate3d: plain composite Simpson in x = ln r
  const auto &g = *V.grid;
  const std::size_t n = g.size() - ((g.size() - 1) % 2 == 0 ? 0 : 1);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double r = g.r(i);
    s += w * 4 * pi * r * r * r * std::pow(pos(V[i]), p);
  }
  return s * g.h() / 3.0;
}

} // namespace

TEST_CASE("hydrogen-like levels", "[schrodinger]") {
  SECTION("examples") {
    auto g = RadialGrid::logarithmic(1e-6, 60.0, 4000);
    auto s = solve_channel(coulomb(g, 1.0), 0, 3);
    REQUIRE(s.eigenvalues.size() == 3);
    CHECK(s.eigenvalues[0] == Approx(-0.5).margin(1e-8));
    CHECK(s.eigenvalues[1] == Approx(-0.125).margin(1e-8));
    CHECK(s.eigenvalues[2] == Approx(-1.0 / 18).margin(1e-8));
    CHECK_FALSE(s.truncated);

    auto p = solve_channel(coulomb(g, 2.0), 1, 1);
    REQUIRE(p.eigenvalues.size() == 1);
    CHECK(p.eigenvalues[0] == Approx(-0.5).margin(1e-8));

    auto none = solve_channel(RadialFunction::zeros(g, Meaning::potential), 0, 2);
    CHECK(none.eigenvalues.empty());
    CHECK(none.truncated);
  }

  SECTION("all n <= 4 for Z in {1, 2, 10}") {
    for (double Z : {1.0, 2.0, 10.0}) {
      // the n = 4 tail needs a box of a few hundred bohr / Z
      auto g = RadialGrid::logarithmic(1e-6 / Z, 200.0 / Z, 6000);
      auto V = coulomb(g, Z);
      for (int l = 0; l <= 3; ++l) {
        auto s = solve_channel(V, l, 4 - l);
        REQUIRE(s.eigenvalues.size() == std::size_t(4 - l));
        for (int k = 0; k < 4 - l; ++k) {
          const int n = l + k + 1;
          INFO("Z = " << Z << " n = " << n << " l = " << l);
          CHECK(s.eigenvalues[k] == Approx(-Z * Z / (2.0 * n * n)).margin(1e-6));
        }
      }
    }
  }
}

TEST_CASE("channel spectrum invariants", "[schrodinger]") {
  auto g = RadialGrid::logarithmic(1e-6, 80.0, 4000);
  auto V = RadialFunction::sample(
      g, [](double r) { return 3.0 / r * std::exp(-r / 4) + 0.5 / (1 + r); }, Meaning::potential);
  for (int l : {0, 1, 2}) {
    auto s = solve_channel(V, l, 6);
    REQUIRE(!s.eigenvalues.empty());
    for (std::size_t k = 0; k < s.eigenvalues.size(); ++k) {
      if (k > 0) CHECK(s.eigenvalues[k] > s.eigenvalues[k - 1]);
      const auto &u = s.orbitals[k];
      std::vector<double> u2(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) u2[i] = u[i] * u[i];
      CHECK(g->integrate(u2) == Approx(1.0).epsilon(1e-10));
      CHECK(count_nodes(u) == int(k));
      CHECK(u.values.back() == 0.0);
      CHECK(std::abs(u.values.front()) < 1e-2);
    }
  }
}

TEST_CASE("3-D negative spectrum", "[schrodinger]") {
  auto g = RadialGrid::logarithmic(1e-6, 60.0, 4000);

  SECTION("hydrogen shells") {
    auto V = coulomb(g, 1.0);
    auto s = negative_spectrum_3d(V, 12);
    // every state with n <= 3 is present with its degeneracy
    long shells = 0;
    for (const auto &L : s.levels)
      if (L.eps < -1.0 / 18 + 1e-6) shells += L.degeneracy;
    CHECK(shells == 1 + 4 + 9);
    CHECK(s.count() >= 14);
    CHECK_THROWS_AS(negative_spectrum_3d(V, 1), DomainError);
  }

  SECTION("cut Coulomb agrees with a 4x grid") {
    auto s = negative_spectrum_3d(cut_coulomb(g));
    auto fine = RadialGrid::logarithmic(1e-6, 60.0, 16000);
    auto sf = negative_spectrum_3d(cut_coulomb(fine));
    CHECK(s.count() == sf.count());
    CHECK(s.count() > 0);
    REQUIRE(s.levels.size() == sf.levels.size());
    for (std::size_t i = 0; i < s.levels.size(); ++i)
      CHECK(s.levels[i].eps == Approx(sf.levels[i].eps).margin(1e-7));
  }

  SECTION("non-positive potentials bind nothing") {
    auto V = RadialFunction::sample(g, [](double r) { return -1.0 / (1 + r); }, Meaning::potential);
    CHECK(negative_spectrum_3d(V).levels.empty());
    CHECK(negative_spectrum_3d(RadialFunction::zeros(g)).count() == 0);
  }
}

TEST_CASE("CLR bound", "[schrodinger]") {
  auto g = RadialGrid::logarithmic(1e-6, 60.0, 4000);
  auto rep = check_clr(cut_coulomb(g));
  REQUIRE(rep.samples.size() == 1);
  CHECK(rep.verdict == Verdict::pass);
  CHECK(rep.samples[0].rhs == Approx(clr_constant * integral_pos_power(cut_coulomb(g), 1.5)).epsilon(1e-6));

  auto zero = check_clr(RadialFunction::zeros(g));
  CHECK(zero.samples[0].lhs == 0.0);
  CHECK(zero.samples[0].rhs == 0.0);
  CHECK(zero.verdict == Verdict::pass);

  // c [1 - r]_+ at the coupling where the first s-state appears
  auto well = [&](double c) {
    return RadialFunction::sample(g, [=](double r) { return c * pos(1 - r); }, Meaning::potential);
  };
  double lo = 1.0, hi = 20.0;
  REQUIRE(solve_channel(well(lo), 0, 1).eigenvalues.empty());
  REQUIRE(!solve_channel(well(hi), 0, 1).eigenvalues.empty());
  for (int i = 0; i < 60; ++i) {
    const double m = 0.5 * (lo + hi);
    (solve_channel(well(m), 0, 1).eigenvalues.empty() ? lo : hi) = m;
  }
  auto crit = check_clr(well(hi));
  CHECK(crit.samples[0].lhs == 1.0);
  CHECK(crit.samples[0].margin > 0.0);
  INFO("critical coupling " << hi << " margin " << crit.samples[0].margin);
  CHECK(crit.verdict == Verdict::pass);
}

TEST_CASE("Lieb-Thirring eigenvalue sum", "[schrodinger]") {
  auto g = RadialGrid::logarithmic(1e-6, 60.0, 4000);
  auto rep = check_lieb_thirring_sum(cut_coulomb(g));
  CHECK(rep.verdict == Verdict::pass);
  CHECK(rep.samples[0].margin > 0.0);
  auto s = negative_spectrum_3d(cut_coulomb(g));
  CHECK(rep.samples[0].lhs == Approx(-s.sum()).epsilon(1e-12));

  auto zero = check_lieb_thirring_sum(RadialFunction::zeros(g));
  CHECK(zero.samples[0].lhs == 0.0);
  CHECK(zero.samples[0].rhs == 0.0);

  // V_lambda(r) = lambda^2 V_1(lambda r): both sides scale as lambda^2
  std::vector<double> ratios;
  for (double lam : {1.0, 2.0, 4.0}) {
    auto V = RadialFunction::sample(
        g, [=](double r) { return lam * lam * 4.0 * pos(1.0 / (lam * r) - 0.5); },
        Meaning::potential);
    auto r = check_lieb_thirring_sum(V);
    CHECK(r.verdict == Verdict::pass);
    CHECK(r.samples[0].lhs / (lam * lam) == Approx(-negative_spectrum_3d(V).sum() / (lam * lam)));
    ratios.push_back(r.samples[0].lhs / r.samples[0].rhs);
  }
  CHECK(ratios[1] == Approx(ratios[0]).epsilon(1e-3));
  CHECK(ratios[2] == Approx(ratios[0]).epsilon(1e-3));
}

TEST_CASE("Dirichlet ball ground state", "[schrodinger]") {
  // V = 0 in a ball of radius s, lifted by a constant well so the state binds
  for (double s : {0.5, 1.0, 3.0}) {
    auto g = RadialGrid::logarithmic(1e-6 * s, s, 4000);
    const double depth = 50.0 / (s * s);
    auto V = RadialFunction::sample(g, [=](double) { return depth; }, Meaning::potential);
    auto c = solve_channel(V, 0, 1);
    REQUIRE(c.eigenvalues.size() == 1);
    const double grad2 = 2.0 * (c.eigenvalues[0] + depth); // int |grad g|^2
    INFO("s = " << s);
    CHECK(grad2 == Approx(pi * pi / (s * s)).epsilon(1e-8));
  }
}

TEST_CASE("enlarging the box never raises an eigenvalue", "[schrodinger]") {
  std::vector<std::function<double(double)>> pots = {
      [](double r) { return 1.0 / r; },
      [](double r) { return pos(1.0 / r - 0.5); },
      [](double r) { return 2.0 * std::exp(-r * r / 4); },
      [](double r) { return 5.0 / r * std::exp(-r); },
  };
  for (std::size_t p = 0; p < pots.size(); ++p) {
    double prev_r = 0.0;
    std::vector<double> prev;
    for (double rmax : {15.0, 30.0, 60.0}) {
      // the same step h for all boxes so only the wall moves
      const double h = std::log(60.0 / 1e-6) / 3999;
      const std::size_t n = std::size_t(std::llround(std::log(rmax / 1e-6) / h)) + 1;
      auto g = RadialGrid::logarithmic(1e-6, 1e-6 * std::exp(h * double(n - 1)), n);
      auto V = RadialFunction::sample(g, pots[p], Meaning::potential);
      auto s = solve_channel(V, 0, 3);
      for (std::size_t k = 0; k < std::min(prev.size(), s.eigenvalues.size()); ++k) {
        INFO("potential " << p << " box " << prev_r << " -> " << rmax << " k = " << k);
        CHECK(s.eigenvalues[k] <= prev[k] + 1e-12);
      }
      CHECK(s.eigenvalues.size() >= prev.size());
      prev = s.eigenvalues;
      prev_r = rmax;
    }
  }
}

TEST_CASE("CLR and Lieb-Thirring on random compact potentials", "[schrodinger]") {
  auto g = RadialGrid::logarithmic(1e-6, 40.0, 3000);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int clr_bad = 0, lt_bad = 0, bound = 0;
  for (int k = 0; k < 50; ++k) {
    const double c = 0.5 + 20 * U(rng), R = 0.5 + 6 * U(rng), b = U(rng);
    auto V = RadialFunction::sample(
        g,
        [=](double r) {
          const double t = r / R;
          return t < 1 ? c * (1 - t * t) * (1 - t * t) * (1 + b * std::cos(5 * t)) : 0.0;
        },
        Meaning::potential);
    auto a = check_clr(V);
    auto l = check_lieb_thirring_sum(V);
    if (a.verdict != Verdict::pass) ++clr_bad;
    if (l.verdict != Verdict::pass) ++lt_bad;
    if (a.samples[0].lhs > 0) ++bound;
  }
  CHECK(clr_bad == 0);
  CHECK(lt_bad == 0);
  CHECK(bound > 25);
}

TEST_CASE("high angular momentum in a wide deep well", "[schrodinger]") {
  // the outward solution grows by ~1e190 before the turning point; normalisation must not overflow
  auto well = [](GridPtr g) {
    return RadialFunction::sample(g, [](double r) { return 49.0 * std::exp(-std::pow(r / 4.76, 2)); });
  };
  auto g = RadialGrid::logarithmic(1e-6, 60.0, 4000);
  auto fine = RadialGrid::logarithmic(1e-6, 60.0, 16000);
  for (int l : {25, 27}) {
    INFO("l = " << l);
    auto a = solve_channel(well(g), l, 1);
    auto b = solve_channel(well(fine), l, 1);
    REQUIRE(a.eigenvalues.size() == 1);
    CHECK(std::isfinite(a.eigenvalues[0]));
    CHECK(a.eigenvalues[0] == Approx(b.eigenvalues[0]).epsilon(1e-6));
    for (double x : a.orbitals[0].values) REQUIRE(std::isfinite(x));
    CHECK(count_nodes(a.orbitals[0]) == 0);
  }
}

TEST_CASE("invalid channel requests", "[schrodinger]") {
  auto g = RadialGrid::logarithmic(1e-6, 20.0, 500);
  auto V = coulomb(g, 1.0);
  CHECK_THROWS_AS(solve_channel(V, -1, 1), InvalidInput);
  CHECK_THROWS_AS(solve_channel(V, 0, 0), InvalidInput);
  std::vector<double> bad(g->size(), 1.0);
  bad[3] = std::nan("");
  CHECK_THROWS_AS(solve_channel(RadialFunction(g, bad), 0, 1), InvalidInput);
}
