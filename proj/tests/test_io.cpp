#include "catch_amalgamated.hpp"

#include <hfatom/io.hpp>

#include <cstdlib>

using namespace hfatom;

namespace {

std::filesystem::path scratch_dir() {
  auto d = std::filesystem::temp_directory_path() / ("hfatom_io_" + std::to_string(::getpid()));
  std::filesystem::create_directories(d);
  return d;
}

} // namespace

TEST_CASE("numbers round-trip through text", "[io]") {
  for (double x : {0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 6.02214076e23, 5e-324, -1.7976931348623157e308, 20.49})
    CHECK(parse_number(format_number(x)) == x);
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(std::isnan(parse_number("nan")));
  CHECK_THROWS_AS(parse_number("1.0x"), InvalidInput);
  CHECK(number_json(std::nan("")) == "nan");
  CHECK(std::isinf(number_from_json(json("-inf"))));
}

TEST_CASE("CSV fields are quoted only when needed", "[io]") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("radial function CSV round-trip", "[io]") {
  auto g = RadialGrid::logarithmic(1e-5, 40.0, 301);
  auto f = RadialFunction::sample(g, [](double r) { return std::exp(-r) / (1.0 + r * r); }, Meaning::density);
  const auto text = radial_function_csv(f);
  CHECK(text.rfind("# grid=log n=301 r_min=1e-05 r_max=40 meaning=density\n", 0) == 0);
  const auto back = parse_radial_function_csv(text);
  REQUIRE(back.size() == f.size());
  CHECK(back.meaning == Meaning::density);
  for (std::size_t i = 0; i < f.size(); ++i) {
    CHECK(back[i] == f[i]);
    CHECK(back.r(i) == f.r(i));
  }
  CHECK_THROWS_AS(parse_radial_function_csv("1,2\n"), InvalidInput);
  CHECK_THROWS_AS(parse_radial_function_csv("# grid=log n=3 r_min=1e-3 r_max=1 meaning=density\n1,2\n"),
                  InvalidInput);
}

TEST_CASE("multi-column radial table", "[io]") {
  auto g = RadialGrid::logarithmic(1e-3, 10.0, 21);
  auto a = RadialFunction::sample(g, [](double r) { return r; }, Meaning::density);
  auto b = RadialFunction::sample(g, [](double r) { return 2 * r; }, Meaning::potential);
  const auto t = radial_table_csv({"rho", "phi"}, {&a, &b});
  CHECK(t.find("meaning=density,potential\nr,rho,phi\n") != std::string::npos);
  auto other = RadialFunction::zeros(RadialGrid::logarithmic(1e-3, 10.0, 22));
  CHECK_THROWS(radial_table_csv({"rho", "x"}, {&a, &other}));
}

TEST_CASE("atomic writes replace the file whole", "[io]") {
  const auto d = scratch_dir();
  const auto p = d / "sub" / "out.txt";
  write_atomic(p, "first");
  write_atomic(p, "second");
  CHECK(read_file(p) == "second");
  for (const auto &e : std::filesystem::directory_iterator(p.parent_path()))
    CHECK(e.path().filename() == "out.txt");
  std::filesystem::remove_all(d);
}

TEST_CASE("reports serialize to JSON and ledger rows", "[io]") {
  BoundReport r;
  r.claim_id = "thm6.4";
  r.add_le(1.0, 2.0, 10, 0.5, "a,b");
  r.add_le(3.0, 2.0, 10, 1.0, "over");
  r.add_le(5.0, 1.0, 10, 2.0, "skipped", true);
  r.finalize(1e-9);
  const auto j = to_json(r);
  CHECK(j["claim_id"] == "thm6.4");
  CHECK(j["verdict"] == "fail");
  REQUIRE(j["samples"].size() == 3);
  CHECK(j["samples"][0]["verdict"] == "pass");
  CHECK(j["samples"][1]["verdict"] == "fail");
  CHECK(j["samples"][2]["verdict"] == "excluded");
  CHECK(json::parse(j.dump()) == j);

  const auto csv = ledger_csv({r});
  CHECK(csv.rfind("claim_id,Z,r,lhs,rhs,margin,verdict,tag\n", 0) == 0);
  CHECK(csv.find("thm6.4,10,0.5,1,2,1,pass,\"a,b\"\n") != std::string::npos);
  CHECK(csv.find("thm6.4,10,1,3,2,-1,fail,over\n") != std::string::npos);
}

TEST_CASE("TF solution JSON carries the profile", "[io]") {
  const auto s = solve_neutral_tf(10.0);
  const auto j = to_json(s);
  CHECK(j["Z"] == 10.0);
  CHECK(j["rho"].size() == s.rho.size());
  CHECK(j["phi"].size() == s.phi.size());
  CHECK(j["grid"]["n"] == s.rho.size());
  CHECK(json::parse(j.dump())["mu"] == j["mu"]);
}

TEST_CASE("HF state JSON feeds back a density", "[io]") {
  const auto st = scf_solve(2.0, 2);
  const auto j = json::parse(to_json(st).dump());
  CHECK(j["shells"].size() == st.shells.size());
  CHECK(j["energies"]["total"].get<double>() == st.energy_total);
  const auto d = density_from_json(j);
  CHECK(d.Z == 2.0);
  CHECK(d.N == 2);
  REQUIRE(d.rho.size() == st.rho.size());
  for (std::size_t i = 0; i < d.rho.size(); i += 97) CHECK(d.rho[i] == st.rho[i]);
  CHECK(integrate3d(d.rho) == Catch::Approx(2.0).epsilon(1e-6));

  auto bad = j;
  bad["rho"].erase(0);
  CHECK_THROWS_AS(density_from_json(bad), InvalidInput);
}

TEST_CASE("plan documents", "[io][config]") {
  const auto p = parse_plan(R"({"version": 1, "Z_list": [2, 10], "lambda": 0.25})");
  CHECK(p.Z_list == std::vector<int>{2, 10});
  CHECK(p.lambda == 0.25);
  CHECK(p.r_probes == SweepPlan::defaults().r_probes);

  const auto again = plan_from_json(to_json(p));
  CHECK(again.describe() == p.describe());

  CHECK_THROWS_AS(parse_plan(R"({"version": 1, "Z_list": []})"), InvalidInput);
  CHECK_THROWS_AS(parse_plan(R"({"version": 1})"), InvalidInput);
  CHECK_THROWS_AS(parse_plan(R"({"Z_list": [2]})"), InvalidInput);
  CHECK_THROWS_AS(parse_plan(R"({"version": 2, "Z_list": [2]})"), InvalidInput);
  CHECK_THROWS_AS(parse_plan(R"({"version": 1, "Z_list": [2], "zlist": [3]})"), InvalidInput);
  CHECK_THROWS_AS(parse_plan(R"({"version": 1, "Z_list": "two"})"), InvalidInput);
  CHECK_THROWS_AS(parse_plan("{not json"), InvalidInput);
}

TEST_CASE("run configuration round-trip", "[io][config]") {
  RunConfig c;
  c.scf.mixing = 0.3;
  c.scf.k_max = 2;
  c.numerics = NumericsSettings{};
  c.numerics->n = 1234;
  c.plan.Z_list = {6};
  c.format = "csv";
  const auto back = config_from_json(json::parse(to_json(c).dump()));
  CHECK(back.scf.mixing == 0.3);
  CHECK(back.scf.k_max == 2);
  REQUIRE(back.numerics);
  CHECK(back.numerics->n == 1234);
  CHECK(back.plan.Z_list == std::vector<int>{6});
  CHECK(back.format == "csv");

  CHECK_THROWS_AS(config_from_json(json{{"version", 1}, {"scf", {{"mix", 0.3}}}}), InvalidInput);
  CHECK_THROWS_AS(config_from_json(json{{"version", 1}, {"format", "xml"}}), InvalidInput);
  CHECK(config_from_json(json{{"version", 1}}).plan.Z_list == SweepPlan::defaults().Z_list);
}

TEST_CASE("tabular outputs have stable headers", "[io]") {
  Spectrum3D s;
  s.levels.push_back({1, 0, -0.125, 3, false});
  CHECK(spectrum_csv(s) == "l,k,epsilon,degeneracy,box_sensitive\n1,0,-0.125,3,false\n");

  IonizationRow row;
  row.Z = 6;
  row.energy_neutral = -37.6;
  row.energy_cation = -37.2;
  row.ionization = 0.4;
  row.max_bound = 7;
  CHECK(ionization_csv({row}).find("\n6,-37.6,-37.2,0.4,7,1,\n") != std::string::npos);

  SemiclassicalReport rep;
  rep.potential_id = "gauss-1";
  CHECK(semiclassical_csv({rep}).rfind("potential_id,e_semi,e_exact,lower_bound,upper_bound,", 0) == 0);
}
