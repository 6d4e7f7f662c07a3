#include "catch_amalgamated.hpp"

#include <hfatom/hartree_fock.hpp>

using namespace hfatom;
using Catch::Approx;

namespace {

// Converged states are reused across test cases; each solve takes a second or two.
const HFState &neutral(int Z) {
  static std::map<int, HFState> cache;
  auto it = cache.find(Z);
  if (it == cache.end()) it = cache.emplace(Z, scf_solve(Z, Z)).first;
  return it->second;
}

double grid_norm(const RadialFunction &u) {
  std::vector<double> u2(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) u2[i] = u[i] * u[i];
  return u.grid->integrate(u2);
}

} // namespace

TEST_CASE("aufbau configuration", "[hf]") {
  auto one = aufbau_configuration(1);
  REQUIRE(one.size() == 1);
  CHECK((one[0].n == 1 && one[0].l == 0 && one[0].occ == 1.0));

  auto ne = aufbau_configuration(10);
  REQUIRE(ne.size() == 3);
  CHECK((ne[0].n == 1 && ne[0].l == 0 && ne[0].occ == 2.0));
  CHECK((ne[1].n == 2 && ne[1].l == 0 && ne[1].occ == 2.0));
  CHECK((ne[2].n == 2 && ne[2].l == 1 && ne[2].occ == 6.0));

  auto n7 = aufbau_configuration(7);
  REQUIRE(n7.size() == 3);
  CHECK((n7[2].n == 2 && n7[2].l == 1 && n7[2].occ == 3.0));

  // 4s before 3d, 5s before 4d, 6s before 4f
  auto fe = aufbau_configuration(26);
  CHECK((fe.back().n == 3 && fe.back().l == 2 && fe.back().occ == 6.0));
  CHECK((fe[fe.size() - 2].n == 4 && fe[fe.size() - 2].l == 0));
  auto rn = aufbau_configuration(86);
  double total = 0.0;
  for (const auto &s : rn) total += s.occ;
  CHECK(total == 86.0);
  CHECK((rn.back().n == 6 && rn.back().l == 1));

  CHECK(aufbau_configuration(0).empty());
  CHECK_THROWS_AS(aufbau_configuration(-1), InvalidInput);
}

TEST_CASE("hydrogen", "[hf]") {
  const auto &h = neutral(1);
  CHECK(h.energy_total == Approx(-0.5).margin(1e-6));
  CHECK(h.energy_kinetic == Approx(0.5).margin(1e-6));
  CHECK(h.energy_nuclear == Approx(-1.0).margin(1e-6));
  CHECK(h.energy_direct == Approx(5.0 / 16).margin(1e-6));
  CHECK(h.energy_exchange == Approx(5.0 / 16).margin(1e-6));
  // one orbital: exchange removes the self-interaction exactly
  CHECK(std::abs(h.energy_direct - h.energy_exchange) < 1e-12);
  REQUIRE(h.shells.size() == 1);
  CHECK(h.shells[0].epsilon == Approx(-0.5).margin(1e-6));

  auto e = hf_energy_breakdown(h);
  CHECK(e.kinetic == Approx(0.5).margin(1e-6));
  CHECK(e.direct == Approx(e.exchange).epsilon(1e-12));

  // the orbital is 2 r e^{-r}
  const auto &u = h.shells[0].u;
  for (double r : {0.1, 1.0, 3.0, 8.0}) {
    const std::size_t i = u.grid->locate(r);
    const double ri = u.grid->r(i);
    CHECK(u[i] == Approx(2 * ri * std::exp(-ri)).epsilon(1e-6));
  }

  // mean field is the closed form e^{-2r}(1 + 1/r)
  auto phi = hf_mean_field(h);
  for (std::size_t i = 0; i < phi.size(); i += 53) {
    const double r = phi.r(i);
    if (r > 20.0) break;
    const double exact = std::exp(-2 * r) * (1 + 1 / r);
    CHECK(phi[i] == Approx(exact).epsilon(1e-6).margin(1e-12));
  }
  CHECK(phi[0] * phi.r(0) == Approx(1.0).epsilon(1e-6));
}

TEST_CASE("helium against a grid Hartree oracle", "[hf]") {
  // Closed-shell two-electron HF reduces to one orbital in its own Hartree field:
  // E = 2<h> + F0 with F0 = int rho1 (rho1 * 1/|x|). Solved by Numerov on a grid four
  // times finer than the default, independently of the spline code.
  auto g = RadialGrid::logarithmic(1e-6 / 2, 60.0, 16000);
  auto V = RadialFunction::sample(g, [](double r) { return 2.0 / r; }, Meaning::potential);
  double eps = 0.0, F0 = 0.0, prev = 1.0;
  auto Vscf = V;
  for (int it = 0; it < 200 && std::abs(eps - prev) > 1e-12; ++it) {
    prev = eps;
    auto c = solve_channel(Vscf, 0, 1);
    eps = c.eigenvalues[0];
    const auto &u = c.orbitals[0];
    std::vector<double> rho(g->size());
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = u[i] * u[i] / (4 * pi * g->r(i) * g->r(i));
    RadialFunction rho1(g, rho, Meaning::density);
    auto J = newton_potential(rho1);
    F0 = 2.0 * coulomb_inner(rho1, rho1);
    for (std::size_t i = 0; i < rho.size(); ++i)
      Vscf.values[i] = 0.5 * Vscf.values[i] + 0.5 * (V[i] - J[i]);
  }
  const double oracle = 2.0 * eps - F0;
  INFO("oracle " << oracle);
  const auto &he = neutral(2);
  CHECK(he.energy_total == Approx(oracle).margin(1e-5));
  CHECK(he.shells[0].epsilon == Approx(eps).margin(1e-5));

  // monotone in N; one electron is hydrogen-like with -Z^2/2
  const auto he1 = scf_solve(2, 1);
  CHECK(he1.energy_total == Approx(-2.0).margin(1e-8));
  CHECK(he1.energy_total >= he.energy_total);
  CHECK(ionization_energy(2) == Approx(-2.0 - he.energy_total).margin(1e-8));
  CHECK(ionization_energy(2) > 0.0);
}

TEST_CASE("state invariants", "[hf]") {
  for (int Z : {3, 6, 10}) {
    INFO("Z = " << Z);
    const auto &s = neutral(Z);
    CHECK(s.energy_total ==
          Approx(s.energy_kinetic + s.energy_nuclear + s.energy_direct - s.energy_exchange)
              .epsilon(1e-9));
    CHECK(s.energy_direct >= s.energy_exchange);
    CHECK(s.energy_exchange >= 0.0);
    CHECK(s.scf_residual <= 1e-8);
    CHECK_FALSE(s.unbound);
    CHECK(hf_equation_residual(s) < 1e-6);
    double count = 0.0;
    for (const auto &sh : s.shells) {
      CHECK(sh.epsilon <= 0.0);
      CHECK(sh.occ > 0.0);
      CHECK(sh.occ <= 2 * sh.l + 1);
      CHECK(count_nodes(sh.u) == sh.n - sh.l - 1);
      CHECK(grid_norm(sh.u) == Approx(1.0).epsilon(1e-8));
      count += sh.occ;
    }
    CHECK(count == double(Z));
    CHECK(integrate3d(s.rho) == Approx(double(Z)).epsilon(1e-7));

    // recomputed from the orbitals
    const auto e = hf_energy_breakdown(s);
    CHECK(e.kinetic == Approx(s.energy_kinetic).epsilon(1e-9));
    CHECK(e.nuclear == Approx(s.energy_nuclear).epsilon(1e-9));
    CHECK(e.direct == Approx(s.energy_direct).epsilon(1e-9));
    CHECK(e.exchange == Approx(s.energy_exchange).epsilon(1e-9));

    CHECK(virial_ratio(s) < 1e-3);

    // energy never rises after the first five sweeps
    for (std::size_t k = 6; k < s.energy_history.size(); ++k)
      CHECK(s.energy_history[k] <= s.energy_history[k - 1] + 1e-12 * std::abs(s.energy_total));
  }
}

TEST_CASE("direct and exchange energies on the radial grid", "[hf]") {
  // Independent of the spline Poisson solves: Newton potential and y_k sweeps on the
  // logarithmic grid, with hand-entered angular factors (l k l'; 0 0 0)^2.
  const auto &ne = neutral(10);
  const auto &g = *ne.rho.grid;
  CHECK(coulomb_inner(ne.rho, ne.rho) == Approx(ne.energy_direct).epsilon(1e-6));

  auto angular = [](int la, int k, int lb) {
    if (la == 0 && lb == 0) return k == 0 ? 1.0 : 0.0;
    if (la + lb == 1) return k == 1 ? 1.0 / 3.0 : 0.0;
    if (k == 0) return 1.0 / 3.0;
    return k == 2 ? 2.0 / 15.0 : 0.0;
  };
  double X = 0.0;
  for (const auto &a : ne.shells)
    for (const auto &b : ne.shells) {
      if (a.spin != b.spin) continue;
      std::vector<double> f(g.size());
      for (std::size_t i = 0; i < f.size(); ++i) f[i] = a.u[i] * b.u[i];
      for (int k = 0; k <= 2; ++k) {
        const double c = angular(a.l, k, b.l);
        if (c == 0.0) continue;
        auto y = screening_function(g, f, k); // int f(s) r_<^k / r_>^{k+1} ds
        std::vector<double> w(f.size());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = f[i] * y[i];
        X += 0.5 * a.occ * b.occ * c * g.integrate(w);
      }
    }
  CHECK(X == Approx(ne.energy_exchange).epsilon(1e-6));
}

TEST_CASE("mean field of neutral atoms", "[hf]") {
  const auto &ne = neutral(10);
  auto phi = hf_mean_field(ne);
  CHECK(phi[0] * phi.r(0) == Approx(10.0).epsilon(1e-5));
  CHECK(std::abs(phi.values.back() * phi.r(phi.size() - 1)) < 1e-3);
}

TEST_CASE("ionization and binding", "[hf]") {
  const double ip = ionization_energy(10);
  CHECK(ip > 0.0);
  // Koopmans direction: the neutral HOMO is -ip in sign and order of magnitude
  const double homo = neutral(10).homo;
  CHECK(homo < 0.0);
  CHECK(-homo / ip > 0.5);
  CHECK(-homo / ip < 2.0);
  CHECK_THROWS_AS(ionization_energy(1), InvalidInput);

  std::vector<BindingAttempt> log;
  const int nmax = max_bound_electrons(1, SCFSettings{}, &log);
  CHECK(nmax >= 1);
  CHECK(nmax <= 3);
  CHECK(!log.empty());
  CHECK(log.front().N == 1);
}

TEST_CASE("far beyond the binding limit", "[hf]") {
  // ten electrons on Z = 2: either the SCF fails or the top orbital is unbound
  bool failed_or_unbound = false;
  try {
    failed_or_unbound = scf_solve(2, 10).unbound;
  } catch (const SolverFailure &e) {
    failed_or_unbound = true;
    CHECK(!e.history.empty());
  }
  CHECK(failed_or_unbound);
}

TEST_CASE("empty and invalid inputs", "[hf]") {
  auto empty = scf_solve(1, 0);
  CHECK(empty.energy_total == 0.0);
  const auto e = hf_energy_breakdown(empty);
  CHECK((e.kinetic == 0.0 && e.nuclear == 0.0 && e.direct == 0.0 && e.exchange == 0.0));
  CHECK_THROWS_AS(scf_solve(-1, 1), InvalidInput);
  SCFSettings bad;
  bad.mixing = 0.0;
  CHECK_THROWS_AS(scf_solve(1, 1, bad), InvalidInput);
  bad = SCFSettings{};
  bad.tol = 0.0;
  CHECK_THROWS_AS(scf_solve(1, 1, bad), InvalidInput);
}

TEST_CASE("inequalities on converged states", "[hf]") {
  for (int Z : {1, 2, 10}) {
    INFO("Z = " << Z);
    const auto &s = neutral(Z);
    CHECK(check_exchange_inequality(s).verdict == Verdict::pass);
    CHECK(check_hf_energy_lower_bound(s).verdict == Verdict::pass);
    CHECK(check_kinetic_lieb_thirring(s, consistent_kinetic_constant(2)).verdict == Verdict::pass);
  }
  // hydrogen exactly: T = 1/2 and int rho^{5/3} = 4 pi^{-2/3} * 2 (3/10)^3, so no constant
  // above T / int rho^{5/3} ~ 4.96 can hold; the printed 20.49 is violated
  const auto rep = check_kinetic_lieb_thirring(neutral(1));
  const double I = 4.0 * std::pow(pi, -2.0 / 3.0) * 2.0 * std::pow(0.3, 3);
  CHECK(rep.samples[0].rhs == Approx(0.5).margin(1e-6));
  CHECK(rep.samples[0].lhs == Approx(kinetic_lieb_thirring_constant * I).epsilon(1e-6));
  CHECK(rep.verdict == Verdict::fail);

  // constants
  CHECK(hf_energy_lower_bound(1, 1) == Approx(-3 * std::pow(4 * pi * 0.038, 2.0 / 3.0)));
  CHECK(consistent_kinetic_constant() == Approx(0.6 * std::pow(2.5 * 0.038, -2.0 / 3.0)));
}
