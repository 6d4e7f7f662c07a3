// hfatom: solve TF / HF atoms, run the bound-verification suites, emit plot-ready tables.
// Machine output is one JSON line on stdout; progress and diagnostics go to stderr.
// Exit codes: 0 ok, 1 solver failure or failed check, 2 usage error.

#include <hfatom/io.hpp>
#include <hfatom/verification.hpp>

#include <CLI11.hpp>

#include <iostream>

using namespace hfatom;
namespace fs = std::filesystem;

namespace {

struct UsageError : Error {
  using Error::Error;
};

void log_line(const std::string &s) { std::cerr << "hfatom: " << s << std::endl; }

void emit(const json &j) { std::cout << j.dump() << std::endl; }

RunConfig load_config(const std::string &path) {
  if (path.empty()) return RunConfig{};
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error &e) {
    throw InvalidInput("config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

SweepPlan load_plan(const std::string &path, const RunConfig &cfg) {
  if (path.empty()) return cfg.plan;
  if (!fs::exists(path)) throw InvalidInput("plan file not found: " + path);
  return parse_plan(read_file(path));
}

fs::path out_dir(const std::string &flag, const RunConfig &cfg) { return flag.empty() ? cfg.output_dir : flag; }

json energies_json(const HFState &st) {
  return {{"total", number_json(st.energy_total)},   {"kinetic", number_json(st.energy_kinetic)},
          {"nuclear", number_json(st.energy_nuclear)}, {"direct", number_json(st.energy_direct)},
          {"exchange", number_json(st.energy_exchange)}};
}

std::string history_csv(const std::vector<double> &h) {
  std::string s = "sweep,residual\n";
  for (std::size_t i = 0; i < h.size(); ++i) s += std::to_string(i + 1) + "," + format_number(h[i]) + "\n";
  return s;
}

// ---------------------------------------------------------------- commands

struct TFArgs {
  double Z = 0.0;
  std::optional<double> N;
  std::string out;
  std::optional<std::size_t> grid_n;
};

int run_tf(const TFArgs &a, const RunConfig &cfg) {
  if (!(a.Z > 0.0) || !std::isfinite(a.Z)) throw InvalidInput("--Z must be a positive number");
  const double N = a.N.value_or(a.Z);
  if (!(N >= 0.0) || !std::isfinite(N)) throw InvalidInput("--N must be nonnegative");
  auto set = cfg.numerics.value_or(NumericsSettings::for_atom(a.Z, std::max(N, 1.0)));
  if (a.grid_n) set.n = *a.grid_n;
  const auto s = solve_tf(a.Z, N, set);
  const auto dir = out_dir(a.out, cfg);
  write_atomic(dir / "tf_solution.json", to_json(s).dump() + "\n");
  write_atomic(dir / "tf_profile.csv", radial_table_csv({"rho", "phi"}, {&s.rho, &s.phi}));
  emit({{"command", "tf"},
        {"Z", a.Z},
        {"N", N},
        {"energy", number_json(s.energy)},
        {"mu", number_json(s.mu)},
        {"residual", number_json(s.residual)},
        {"files", {(dir / "tf_solution.json").string(), (dir / "tf_profile.csv").string()}}});
  return 0;
}

struct HFArgs {
  int Z = 0, N = -1;
  std::optional<double> mixing, tol;
  std::optional<int> max_sweeps;
  std::string out;
};

int run_hf(const HFArgs &a, const RunConfig &cfg) {
  if (a.Z < 1) throw InvalidInput("--Z must be a positive integer");
  if (a.N < 0) throw InvalidInput("--N must be a nonnegative integer");
  auto scf = cfg.scf;
  if (a.mixing) scf.mixing = *a.mixing;
  if (a.tol) scf.tol = *a.tol;
  if (a.max_sweeps) scf.max_sweeps = *a.max_sweeps;
  const auto num = cfg.numerics.value_or(NumericsSettings::for_atom(a.Z, std::max(a.N, 1)));
  const auto dir = out_dir(a.out, cfg);
  const auto hist_path = dir / "hf_residual_history.csv";

  HFState st;
  try {
    st = scf_solve(a.Z, a.N, scf, num);
  } catch (const SolverFailure &e) {
    write_atomic(hist_path, history_csv(e.history));
    emit({{"command", "hf"}, {"Z", a.Z}, {"N", a.N}, {"status", "no convergence"}, {"error", e.what()},
          {"residual_history", hist_path.string()}});
    log_line(e.what());
    return 1;
  }
  write_atomic(dir / "hf_state.json", to_json(st).dump() + "\n");
  write_atomic(hist_path, history_csv(st.residual_history));
  json line = {{"command", "hf"},
               {"Z", a.Z},
               {"N", a.N},
               {"status", st.unbound ? "unbound electron" : "converged"},
               {"unbound", st.unbound},
               {"energy", number_json(st.energy_total)},
               {"energies", energies_json(st)},
               {"homo", number_json(st.homo)},
               {"sweeps", st.sweeps},
               {"scf_residual", number_json(st.scf_residual)},
               {"files", {(dir / "hf_state.json").string(), hist_path.string()}}};
  emit(line);
  if (st.unbound) {
    log_line("unbound electron: highest occupied level " + format_number(st.homo) + " > 0");
    return 1;
  }
  return 0;
}

struct OTFArgs {
  std::string state;
  std::optional<double> r_cut;
  std::string out;
};

int run_otf(const OTFArgs &a, const RunConfig &cfg) {
  json j;
  try {
    j = json::parse(read_file(a.state));
  } catch (const json::parse_error &e) {
    throw InvalidInput("state " + a.state + ": " + e.what());
  } catch (const json::exception &e) {
    throw InvalidInput("state " + a.state + ": " + e.what());
  }
  StoredDensity d;
  try {
    d = density_from_json(j);
  } catch (const json::exception &e) {
    throw InvalidInput("state " + a.state + ": " + e.what());
  }
  const double r_cut = a.r_cut.value_or(default_outer_cut(d.Z));
  const auto res = solve_outer_tf_from_density(d.Z, d.rho, r_cut, cfg.numerics);
  const auto &s = res.solution;
  const auto dir = out_dir(a.out, cfg);
  write_atomic(dir / "otf_solution.json", to_json(s).dump() + "\n");
  write_atomic(dir / "otf_profile.csv", radial_table_csv({"rho", "phi"}, {&s.rho, &s.phi}));
  emit({{"command", "otf"},
        {"Z", d.Z},
        {"r_cut", r_cut},
        {"budget", number_json(res.problem.budget)},
        {"screened_charge", number_json(res.screened_charge)},
        {"electron_count", number_json(s.electron_count())},
        {"mu", number_json(s.mu)},
        {"residual", number_json(s.residual)},
        {"files", {(dir / "otf_solution.json").string(), (dir / "otf_profile.csv").string()}}});
  return 0;
}

struct VerifyArgs {
  std::string suite = "all", plan, out;
  bool strict = false;
};

int run_verify(const VerifyArgs &a, const RunConfig &cfg) {
  const auto which = suite_from_string(a.suite);
  const auto plan = load_plan(a.plan, cfg);
  const auto dir = out_dir(a.out, cfg);
  const auto out = run_suite(which, plan, log_line);

  json verdicts = json::object();
  for (const auto &r : out.reports) {
    write_atomic(dir / "reports" / (r.claim_id + ".json"), to_json(r).dump(2) + "\n");
    verdicts[r.claim_id] = to_string(r.verdict);
  }
  write_atomic(dir / "ledger.csv", ledger_csv(out.reports));
  if (!out.semiclassics.empty()) write_atomic(dir / "semiclassics.csv", semiclassical_csv(out.semiclassics));
  if (!out.ionization.empty()) write_atomic(dir / "ionization.csv", ionization_csv(out.ionization));

  const bool failed = out.any_fail() || (a.strict && out.any_inconclusive());
  emit({{"command", "verify"},
        {"suite", a.suite},
        {"status", failed ? "fail" : "pass"},
        {"verdicts", verdicts},
        {"ledger", (dir / "ledger.csv").string()}});
  return failed ? 1 : 0;
}

struct SweepArgs {
  std::string kind = "tf", plan, out;
};

int run_sweep(const SweepArgs &a, const RunConfig &cfg) {
  const auto plan = load_plan(a.plan, cfg);
  plan.validate();
  const auto dir = out_dir(a.out, cfg);
  std::vector<std::string> files;
  if (a.kind == "tf") {
    std::string t = "Z,energy,energy_over_Z_7_3,residual\n";
    std::string rad = "Z,nu,R,R_nu_third,R_nu_third_over_limit\n";
    for (int Z : plan.Z_list) {
      const auto s = solve_neutral_tf(Z);
      t += std::to_string(Z) + "," + format_number(s.energy) + "," + format_number(s.energy / std::pow(Z, 7.0 / 3.0)) +
           "," + format_number(s.residual) + "\n";
      for (double nu : plan.nu_list) {
        if (nu >= Z) continue;
        const double R = tf_outer_charge_radius(Z, nu);
        rad += std::to_string(Z) + "," + format_number(nu) + "," + format_number(R) + "," +
               format_number(R * std::cbrt(nu)) + "," + format_number(R * std::cbrt(nu) / radius_asymptote_constant()) +
               "\n";
      }
    }
    write_atomic(dir / "sweep_tf.csv", t);
    write_atomic(dir / "radius_tf.csv", rad);
    files = {(dir / "sweep_tf.csv").string(), (dir / "radius_tf.csv").string()};
  } else if (a.kind == "hf") {
    log_line("solving " + std::to_string(plan.Z_list.size()) + " neutral atoms");
    const auto sweep = solve_neutral_sweep(plan.Z_list);
    std::string t = "Z,energy,kinetic,nuclear,direct,exchange,homo,sweeps,scf_residual,failure\n";
    std::string gap = "Z,r,d,D\n";
    std::string rad = "Z,nu,R,R_nu_third,R_nu_third_over_limit\n";
    for (std::size_t k = 0; k < sweep.Z.size(); ++k) {
      const auto Zs = std::to_string(sweep.Z[k]);
      if (!sweep.states[k]) {
        t += Zs + ",nan,nan,nan,nan,nan,nan,0,nan," + csv_field(sweep.failures[k]) + "\n";
        continue;
      }
      const auto &st = *sweep.states[k];
      t += Zs + "," + format_number(st.energy_total) + "," + format_number(st.energy_kinetic) + "," +
           format_number(st.energy_nuclear) + "," + format_number(st.energy_direct) + "," +
           format_number(st.energy_exchange) + "," + format_number(st.homo) + "," + std::to_string(st.sweeps) + "," +
           format_number(st.scf_residual) + ",\n";
      for (const auto &g : potential_gaps(st, plan.r_probes))
        gap += Zs + "," + format_number(g.r) + "," + format_number(g.d) + "," + format_number(g.D) + "\n";
      for (double nu : plan.nu_list) {
        if (nu >= st.N) continue;
        const double R = radius_of_charge(st.rho, nu);
        rad += Zs + "," + format_number(nu) + "," + format_number(R) + "," + format_number(R * std::cbrt(nu)) + "," +
               format_number(R * std::cbrt(nu) / radius_asymptote_constant()) + "\n";
      }
    }
    write_atomic(dir / "sweep_hf.csv", t);
    write_atomic(dir / "potential_gap.csv", gap);
    write_atomic(dir / "radius_hf.csv", rad);
    files = {(dir / "sweep_hf.csv").string(), (dir / "potential_gap.csv").string(), (dir / "radius_hf.csv").string()};
  } else {
    throw InvalidInput("--kind must be tf or hf");
  }
  emit({{"command", "sweep"}, {"kind", a.kind}, {"files", files}});
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Thomas-Fermi and Hartree-Fock atoms with numerical checks of their bounds"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON run configuration (version 1)");

  TFArgs tf;
  auto *tf_cmd = app.add_subcommand("tf", "Thomas-Fermi atom or ion");
  tf_cmd->add_option("--Z", tf.Z, "nuclear charge")->required();
  tf_cmd->add_option("--N", tf.N, "electron count (default Z)");
  tf_cmd->add_option("--out", tf.out, "output directory");
  tf_cmd->add_option("--grid-n", tf.grid_n, "radial grid points");

  HFArgs hf;
  auto *hf_cmd = app.add_subcommand("hf", "restricted Hartree-Fock atom or ion");
  hf_cmd->add_option("--Z", hf.Z, "nuclear charge")->required();
  hf_cmd->add_option("--N", hf.N, "electron count")->required();
  hf_cmd->add_option("--mixing", hf.mixing, "potential mixing fraction");
  hf_cmd->add_option("--tol", hf.tol, "orbital residual tolerance");
  hf_cmd->add_option("--max-sweeps", hf.max_sweeps, "SCF sweep limit");
  hf_cmd->add_option("--out", hf.out, "output directory");

  OTFArgs otf;
  auto *otf_cmd = app.add_subcommand("otf", "exterior Thomas-Fermi problem seeded by a stored HF state");
  otf_cmd->add_option("--state", otf.state, "hf_state.json written by the hf command")->required();
  otf_cmd->add_option("--r-cut", otf.r_cut, "cut radius (default 2 beta_0 Z^{-1/3})");
  otf_cmd->add_option("--out", otf.out, "output directory");

  VerifyArgs ver;
  auto *ver_cmd = app.add_subcommand("verify", "run bound-verification suites");
  ver_cmd->add_option("--suite", ver.suite, "all, tf, hf, semiclassics or bounds")
      ->check(CLI::IsMember({"all", "tf", "hf", "semiclassics", "bounds"}));
  ver_cmd->add_option("--plan", ver.plan, "sweep plan JSON");
  ver_cmd->add_option("--out", ver.out, "output directory");
  ver_cmd->add_flag("--strict", ver.strict, "treat inconclusive reports as failures");

  SweepArgs sw;
  auto *sw_cmd = app.add_subcommand("sweep", "plot-ready tables over a Z sweep");
  sw_cmd->add_option("--kind", sw.kind, "tf or hf")->check(CLI::IsMember({"tf", "hf"}));
  sw_cmd->add_option("--plan", sw.plan, "sweep plan JSON");
  sw_cmd->add_option("--out", sw.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }

  try {
    const auto cfg = load_config(config_path);
    if (tf_cmd->parsed()) return run_tf(tf, cfg);
    if (hf_cmd->parsed()) return run_hf(hf, cfg);
    if (otf_cmd->parsed()) return run_otf(otf, cfg);
    if (ver_cmd->parsed()) return run_verify(ver, cfg);
    if (sw_cmd->parsed()) return run_sweep(sw, cfg);
  } catch (const InvalidInput &e) {
    log_line(std::string("usage: ") + e.what());
    return 2;
  } catch (const Error &e) {
    log_line(std::string("failed: ") + e.what());
    return 1;
  } catch (const std::exception &e) {
    log_line(std::string("error: ") + e.what());
    return 1;
  }
  return 2;
}
