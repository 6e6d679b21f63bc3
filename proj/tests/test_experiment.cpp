#include "invlab/experiment.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace invlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string error_of(const json& c) {
  try {
    validate_config(c);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

json heat_config() {
  return {{"problem", "heat_bench"}, {"seed", 0},        {"output_dir", "heat"},
          {"scheme", "crank_nicolson"}, {"n", 20}, {"tau", 1e-3}, {"t_end", 0.01}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct OutputRoot {
  fs::path dir;
  OutputRoot() : dir(fs::temp_directory_path() / "invlab_experiment_test") {
    fs::remove_all(dir);
    setenv(kOutputRootEnv, dir.c_str(), 1);
  }
  ~OutputRoot() {
    unsetenv(kOutputRootEnv);
    fs::remove_all(dir);
  }
};

}  // namespace

TEST_CASE("every committed config validates") {
  int n = 0;
  for (const auto& e : fs::recursive_directory_iterator(INVLAB_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    CAPTURE(e.path().string());
    CHECK_NOTHROW(validate_config(load_config(e.path().string())));
    ++n;
  }
  CHECK(n > 20);
}

TEST_CASE("schema errors name the offending field") {
  json c = heat_config();
  c["bogus"] = 1;
  CHECK(error_of(c) == "bogus: unknown key");

  c = heat_config();
  c.erase("tau");
  CHECK(error_of(c) == "tau: missing required field");

  c = heat_config();
  c["scheme"] = "leapfrog";
  CHECK(error_of(c).rfind("scheme: 'leapfrog' is not one of", 0) == 0);

  json p = {{"problem", "pme_inverse"}, {"solver", "ftcs"}, {"beta0", 1.5},
            {"reference", {{"x_grid", {{"n", "fifty"}}}}}};
  CHECK(error_of(p) == "reference.x_grid.n: expected an integer");

  p = {{"problem", "pme_direct"}, {"beta", -1}};
  CHECK(error_of(p) == "beta: must be > 0");

  CHECK(error_of({{"problem", "nope"}}).rfind("problem:", 0) == 0);
}

TEST_CASE("axis parsing and key paths") {
  const auto [name, values] = parse_axis("options.lb=0.5,1,bfgs");
  CHECK(name == "options.lb");
  REQUIRE(values.size() == 3);
  CHECK(values[0] == 0.5);
  CHECK(values[1] == 1);
  CHECK(values[2] == "bfgs");
  CHECK_THROWS_AS(parse_axis("noequals"), ConfigError);

  json c = json::object();
  set_path(c, "a.b.c", 3);
  CHECK(c["a"]["b"]["c"] == 3);
}

TEST_CASE("table number format") {
  CHECK(format_sci(0.0001234567) == "1.23457e-04");
  CHECK(format_sci(-2.0) == "-2.00000e+00");
  CHECK(format_sci(std::nan("")).empty());
}

TEST_CASE("run writes artifacts under the output root") {
  OutputRoot root;
  const auto out = run_experiment(heat_config());
  CHECK(out.converged);
  CHECK(fs::path(out.output_dir) == root.dir / "heat");
  for (const char* f : {"report.json", "table.csv", "field.csv", "field.json"}) {
    CHECK(fs::exists(root.dir / "heat" / f));
  }
  const json rep = json::parse(slurp(root.dir / "heat" / "report.json"));
  CHECK(rep["problem"] == "heat_bench");
  CHECK(rep.contains("wall_time_s"));
  CHECK(slurp(root.dir / "heat" / "table.csv").find("wall") == std::string::npos);
}

TEST_CASE("sweep rows are sorted by axis value and a single value equals run") {
  OutputRoot root;
  json base = heat_config();
  base["output_dir"] = "sweep";
  const auto s = run_sweep(base, "tau", {json(2e-3), json(1e-3)});
  REQUIRE(s.rows.size() == 2);
  const std::string table = slurp(root.dir / "sweep" / "table.csv");
  CHECK(table.find("0.001,") < table.find("0.002,"));

  const auto one = run_sweep(base, "tau", {json(1e-3)});
  json direct = heat_config();
  direct["output_dir"] = "sweep/tau=0.001";
  const auto r = run_experiment(direct);
  CHECK(one.rows[0].report["results"].dump() == r.report["results"].dump());
}

TEST_CASE("divergence is recorded, not thrown") {
  OutputRoot root;
  json c = heat_config();
  c["scheme"] = "forward_euler";
  c["tau"] = 0.6 / 400.0;
  c["t_end"] = 0.6;
  c["allow_unstable"] = true;
  const auto out = run_experiment(c);
  CHECK_FALSE(out.converged);
  CHECK(out.report["results"]["runs"][0]["diverged"] == true);
  CHECK(fs::exists(root.dir / "heat" / "report.json"));
}
