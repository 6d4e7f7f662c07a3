#pragma once

// Serialization: JSON documents (nlohmann/json), CSV tables with shortest round-trip
// floats, and atomic file writes.

#include "hartree_fock.hpp"
#include "radial.hpp"
#include "report.hpp"
#include "schrodinger.hpp"
#include "semiclassics.hpp"
#include "thomas_fermi.hpp"
#include "verification.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <unistd.h>

namespace hfatom {

using json = nlohmann::json;

inline constexpr int config_version = 1;

// Shortest text that parses back to the same double; nan / inf / -inf otherwise.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline double parse_number(const std::string &s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw InvalidInput("not a number: '" + s + "'");
  return v;
}

// JSON has no non-finite numbers; they travel as the strings of format_number.
inline json number_json(double x) { return std::isfinite(x) ? json(x) : json(format_number(x)); }

inline double number_from_json(const json &j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_number(j.get<std::string>());
  throw InvalidInput("expected a number");
}

inline json numbers_json(const std::vector<double> &v) {
  json a = json::array();
  for (double x : v) a.push_back(number_json(x));
  return a;
}

// Quotes a CSV field when it contains a separator, quote or newline.
inline std::string csv_field(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Writes to a temporary file next to `path` and renames it into place.
inline void write_atomic(const std::filesystem::path &path, const std::string &content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + tmp.string() + " for writing");
    os << content;
    os.flush();
    if (!os) throw Error("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename " + tmp.string() + ": " + ec.message());
  }
}

inline std::string read_file(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- radial functions

inline std::string grid_header(const RadialGrid &g, const std::string &meaning) {
  return "# grid=log n=" + std::to_string(g.size()) + " r_min=" + format_number(g.r_min()) +
         " r_max=" + format_number(g.r_max()) + " meaning=" + meaning;
}

inline json grid_json(const RadialGrid &g) {
  return {{"kind", "log"}, {"n", g.size()}, {"r_min", g.r_min()}, {"r_max", g.r_max()}};
}

inline GridPtr grid_from_json(const json &j) {
  if (!j.is_object() || j.value("kind", "") != "log") throw InvalidInput("grid: expected a log grid header");
  return RadialGrid::logarithmic(j.at("r_min").get<double>(), j.at("r_max").get<double>(),
                                 j.at("n").get<std::size_t>());
}

// Two columns (r, value) under the grid header.
inline std::string radial_function_csv(const RadialFunction &f) {
  std::string out = grid_header(*f.grid, to_string(f.meaning)) + "\n";
  for (std::size_t i = 0; i < f.size(); ++i) out += format_number(f.r(i)) + "," + format_number(f[i]) + "\n";
  return out;
}

inline RadialFunction parse_radial_function_csv(const std::string &text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line.rfind("# grid=log ", 0) != 0) throw InvalidInput("radial CSV: missing grid header");
  std::size_t n = 0;
  double r_min = 0, r_max = 0;
  std::string meaning;
  std::istringstream hs(line.substr(2));
  for (std::string kv; hs >> kv;) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidInput("radial CSV: bad header field '" + kv + "'");
    const auto k = kv.substr(0, eq), v = kv.substr(eq + 1);
    if (k == "n") n = std::stoul(v);
    else if (k == "r_min") r_min = parse_number(v);
    else if (k == "r_max") r_max = parse_number(v);
    else if (k == "meaning") meaning = v;
    else if (k != "grid") throw InvalidInput("radial CSV: unknown header field '" + k + "'");
  }
  auto g = RadialGrid::logarithmic(r_min, r_max, n);
  std::vector<double> v;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = line.find(',');
    if (c == std::string::npos) throw InvalidInput("radial CSV: expected two columns");
    v.push_back(parse_number(line.substr(c + 1)));
  }
  if (v.size() != n) throw InvalidInput("radial CSV: row count does not match the header");
  return RadialFunction(g, std::move(v), meaning_from_string(meaning));
}

// Several functions on one grid: r then one column per function.
inline std::string radial_table_csv(const std::vector<std::string> &names, const std::vector<const RadialFunction *> &fs) {
  if (fs.empty() || names.size() != fs.size()) throw InvalidInput("radial_table_csv: names and columns differ");
  std::string meanings;
  for (const auto *f : fs) {
    require_same_grid(*fs[0], *f);
    meanings += (meanings.empty() ? "" : ",") + std::string(to_string(f->meaning));
  }
  std::string out = grid_header(*fs[0]->grid, meanings) + "\nr";
  for (const auto &n : names) out += "," + n;
  out += "\n";
  for (std::size_t i = 0; i < fs[0]->size(); ++i) {
    out += format_number(fs[0]->r(i));
    for (const auto *f : fs) out += "," + format_number((*f)[i]);
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------- solutions

inline json to_json(const TFSolution &s) {
  return {{"Z", s.Z},
          {"N", s.N},
          {"mu", number_json(s.mu)},
          {"energy", number_json(s.energy)},
          {"residual", number_json(s.residual)},
          {"r_cut", s.r_cut},
          {"grid", grid_json(*s.rho.grid)},
          {"rho", numbers_json(s.rho.values)},
          {"phi", numbers_json(s.phi.values)}};
}

inline json to_json(const HFState &s) {
  json shells = json::array();
  for (const auto &sh : s.shells)
    shells.push_back({{"n", sh.n}, {"l", sh.l}, {"spin", sh.spin}, {"occ", sh.occ}, {"epsilon", number_json(sh.epsilon)}});
  return {{"Z", s.Z},
          {"N", s.N},
          {"model", s.model},
          {"shells", shells},
          {"energies",
           {{"total", number_json(s.energy_total)},
            {"kinetic", number_json(s.energy_kinetic)},
            {"nuclear", number_json(s.energy_nuclear)},
            {"direct", number_json(s.energy_direct)},
            {"exchange", number_json(s.energy_exchange)}}},
          {"homo", number_json(s.homo)},
          {"unbound", s.unbound},
          {"scf_residual", number_json(s.scf_residual)},
          {"sweeps", s.sweeps},
          {"grid", grid_json(*s.rho.grid)},
          {"rho", numbers_json(s.rho.values)}};
}

// What the exterior TF command needs from a stored HF state.
struct StoredDensity {
  double Z = 0.0;
  int N = 0;
  RadialFunction rho;
};

inline StoredDensity density_from_json(const json &j) {
  StoredDensity d;
  d.Z = j.at("Z").get<double>();
  d.N = j.at("N").get<int>();
  auto g = grid_from_json(j.at("grid"));
  std::vector<double> v;
  for (const auto &x : j.at("rho")) v.push_back(number_from_json(x));
  if (v.size() != g->size()) throw InvalidInput("state file: rho length does not match the grid");
  d.rho = RadialFunction(g, std::move(v), Meaning::density);
  return d;
}

inline std::string spectrum_csv(const Spectrum3D &s) {
  std::string out = "l,k,epsilon,degeneracy,box_sensitive\n";
  for (const auto &L : s.levels)
    out += std::to_string(L.l) + "," + std::to_string(L.k) + "," + format_number(L.eps) + "," +
           std::to_string(L.degeneracy) + "," + (L.box_sensitive ? "true" : "false") + "\n";
  return out;
}

// ---------------------------------------------------------------- reports

inline std::string sample_verdict(const BoundSample &s, double tol) {
  if (s.excluded) return "excluded";
  return s.margin >= -tol ? "pass" : "fail";
}

inline json to_json(const BoundReport &r) {
  json samples = json::array();
  for (const auto &s : r.samples)
    samples.push_back({{"Z", number_json(s.Z)},
                       {"r", number_json(s.r)},
                       {"tag", s.tag},
                       {"lhs", number_json(s.lhs)},
                       {"rhs", number_json(s.rhs)},
                       {"margin", number_json(s.margin)},
                       {"verdict", sample_verdict(s, r.tolerance)}});
  return {{"claim_id", r.claim_id},
          {"verdict", to_string(r.verdict)},
          {"worst_margin", number_json(r.worst_margin)},
          {"tolerance", number_json(r.tolerance)},
          {"settings_hash", r.settings_hash},
          {"notes", r.notes},
          {"samples", samples}};
}

inline const char *ledger_header = "claim_id,Z,r,lhs,rhs,margin,verdict,tag\n";

inline std::string ledger_rows(const BoundReport &r) {
  std::string out;
  for (const auto &s : r.samples)
    out += csv_field(r.claim_id) + "," + format_number(s.Z) + "," + format_number(s.r) + "," + format_number(s.lhs) +
           "," + format_number(s.rhs) + "," + format_number(s.margin) + "," + sample_verdict(s, r.tolerance) + "," +
           csv_field(s.tag) + "\n";
  return out;
}

inline std::string ledger_csv(const std::vector<BoundReport> &reports) {
  std::string out = ledger_header;
  for (const auto &r : reports) out += ledger_rows(r);
  return out;
}

inline std::string semiclassical_csv(const std::vector<SemiclassicalReport> &rows) {
  std::string out = "potential_id,e_semi,e_exact,lower_bound,upper_bound,lower_margin,upper_margin,s_used,"
                    "delta_used,bound_states,box_sensitive,gradient_finite\n";
  for (const auto &r : rows)
    out += csv_field(r.potential_id) + "," + format_number(r.e_semi) + "," + format_number(r.e_exact) + "," +
           format_number(r.lower) + "," + format_number(r.upper) + "," + format_number(r.lower_margin()) + "," +
           format_number(r.upper_margin()) + "," + format_number(r.s_used) + "," + format_number(r.delta_used) + "," +
           std::to_string(r.bound_states) + "," + (r.box_sensitive ? "true" : "false") + "," +
           (r.gradient_finite ? "true" : "false") + "\n";
  return out;
}

inline std::string ionization_csv(const std::vector<IonizationRow> &rows) {
  std::string out = "Z,energy_neutral,energy_cation,ionization_energy,N_max,N_max_minus_Z,failure\n";
  for (const auto &r : rows)
    out += std::to_string(r.Z) + "," + format_number(r.energy_neutral) + "," + format_number(r.energy_cation) + "," +
           format_number(r.ionization) + "," + std::to_string(r.max_bound) + "," +
           (r.max_bound >= 0 ? std::to_string(r.max_bound - r.Z) : std::string("nan")) + "," + csv_field(r.failure) +
           "\n";
  return out;
}

// ---------------------------------------------------------------- configuration

namespace detail {
inline void reject_unknown(const json &j, std::initializer_list<const char *> known, const std::string &where) {
  if (!j.is_object()) throw InvalidInput(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char *k : known) ok = ok || it.key() == k;
    if (!ok) throw InvalidInput(where + ": unknown key '" + it.key() + "'");
  }
}

inline void check_version(const json &j, const std::string &where) {
  if (!j.contains("version")) throw InvalidInput(where + ": missing \"version\"");
  if (!j.at("version").is_number_integer() || j.at("version").get<int>() != config_version)
    throw InvalidInput(where + ": unsupported version");
}

template <class T> T typed(const json &j, const char *key, const std::string &where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception &) {
    throw InvalidInput(where + ": bad value for '" + key + "'");
  }
}
} // namespace detail

// Plan documents: {"version": 1, "Z_list": [...], "r_probes": [...], "nu_list": [...],
// "lambda": x, "uniformity_abs_tol": x}. Z_list is required; the rest default.
inline SweepPlan plan_from_json(const json &j) {
  const std::string where = "plan";
  detail::reject_unknown(j, {"version", "Z_list", "r_probes", "nu_list", "lambda", "uniformity_abs_tol"}, where);
  detail::check_version(j, where);
  if (!j.contains("Z_list")) throw InvalidInput("plan: missing Z_list");
  SweepPlan p = SweepPlan::defaults();
  p.Z_list = detail::typed<std::vector<int>>(j, "Z_list", where);
  if (j.contains("r_probes")) p.r_probes = detail::typed<std::vector<double>>(j, "r_probes", where);
  if (j.contains("nu_list")) p.nu_list = detail::typed<std::vector<double>>(j, "nu_list", where);
  if (j.contains("lambda")) p.lambda = detail::typed<double>(j, "lambda", where);
  if (j.contains("uniformity_abs_tol")) p.uniformity_abs_tol = detail::typed<double>(j, "uniformity_abs_tol", where);
  p.validate();
  return p;
}

inline json to_json(const SweepPlan &p) {
  return {{"version", config_version}, {"Z_list", p.Z_list},   {"r_probes", p.r_probes},
          {"nu_list", p.nu_list},      {"lambda", p.lambda}, {"uniformity_abs_tol", p.uniformity_abs_tol}};
}

inline SweepPlan parse_plan(const std::string &text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error &e) {
    throw InvalidInput(std::string("plan: ") + e.what());
  }
  return plan_from_json(j);
}

// Run configuration: solver knobs shared by the commands.
struct RunConfig {
  SCFSettings scf;
  std::optional<NumericsSettings> numerics; // unset: per-atom defaults
  SweepPlan plan = SweepPlan::defaults();
  std::string output_dir = ".";
  std::string format = "json"; // json or csv for tabular output
};

inline RunConfig config_from_json(const json &j) {
  const std::string where = "config";
  detail::reject_unknown(j, {"version", "scf", "numerics", "plan", "output_dir", "format"}, where);
  detail::check_version(j, where);
  RunConfig c;
  if (j.contains("scf")) {
    const auto &s = j.at("scf");
    detail::reject_unknown(s, {"mixing", "tol", "max_sweeps", "k_max", "level_shift", "rises_before_shift"}, "config.scf");
    if (s.contains("mixing")) c.scf.mixing = detail::typed<double>(s, "mixing", "config.scf");
    if (s.contains("tol")) c.scf.tol = detail::typed<double>(s, "tol", "config.scf");
    if (s.contains("max_sweeps")) c.scf.max_sweeps = detail::typed<int>(s, "max_sweeps", "config.scf");
    if (s.contains("k_max")) c.scf.k_max = detail::typed<int>(s, "k_max", "config.scf");
    if (s.contains("level_shift")) c.scf.level_shift = detail::typed<double>(s, "level_shift", "config.scf");
    if (s.contains("rises_before_shift"))
      c.scf.rises_before_shift = detail::typed<int>(s, "rises_before_shift", "config.scf");
  }
  if (j.contains("numerics")) {
    const auto &s = j.at("numerics");
    detail::reject_unknown(s, {"r_min", "r_max", "n"}, "config.numerics");
    NumericsSettings n;
    if (s.contains("r_min")) n.r_min = detail::typed<double>(s, "r_min", "config.numerics");
    if (s.contains("r_max")) n.r_max = detail::typed<double>(s, "r_max", "config.numerics");
    if (s.contains("n")) n.n = detail::typed<std::size_t>(s, "n", "config.numerics");
    c.numerics = n;
  }
  if (j.contains("plan")) {
    json p = j.at("plan");
    if (p.is_object() && !p.contains("version")) p["version"] = config_version;
    c.plan = plan_from_json(p);
  }
  if (j.contains("output_dir")) c.output_dir = detail::typed<std::string>(j, "output_dir", where);
  if (j.contains("format")) {
    c.format = detail::typed<std::string>(j, "format", where);
    if (c.format != "json" && c.format != "csv") throw InvalidInput("config: format must be json or csv");
  }
  return c;
}

inline json to_json(const RunConfig &c) {
  json j = {{"version", config_version},
            {"scf",
             {{"mixing", c.scf.mixing},
              {"tol", c.scf.tol},
              {"max_sweeps", c.scf.max_sweeps},
              {"k_max", c.scf.k_max},
              {"level_shift", c.scf.level_shift},
              {"rises_before_shift", c.scf.rises_before_shift}}},
            {"plan", to_json(c.plan)},
            {"output_dir", c.output_dir},
            {"format", c.format}};
  if (c.numerics) j["numerics"] = {{"r_min", c.numerics->r_min}, {"r_max", c.numerics->r_max}, {"n", c.numerics->n}};
  return j;
}

} // namespace hfatom
