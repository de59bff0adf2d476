#include "kmm/cli.hpp"
#include "kmm/io.hpp"
#include "kmm/spectra.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace kmm;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kmm-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

json error_of(const json& cfg, int expect_code) {
  std::ostringstream out, err;
  CHECK(run(cfg, out, err) == expect_code);
  return json::parse(err.str());
}

} // namespace

TEST_CASE("config validation reports field paths") {
  CHECK(error_of({{"command", "nope"}}, kExitUsage)["field"] == "/command");
  CHECK(error_of({{"command", "gap"}}, kExitUsage)["field"] == "/model");
  CHECK(error_of({{"command", "gap"}, {"model", {{"M", 1}, {"B", 0.5}}}}, kExitUsage)["field"] == "/model/M");
  CHECK(error_of({{"command", "gap"}, {"model", {{"M", 10}, {"b", 0.2}}}}, kExitUsage)["field"] == "/model/b");
  CHECK(error_of({{"command", "gap"}, {"model", {{"M", 10}, {"B", 0.5}, {"x", 1}}}}, kExitUsage)["field"] ==
        "/model/x");
  const json d = error_of({{"command", "density"}, {"model", {{"M", 10}, {"B", 0.5}}},
                           {"options", {{"manifold", 1}, {"grid", {{"n_k", 0}}}}}},
                          kExitUsage);
  CHECK(d["field"] == "/options/grid/n_k");
  CHECK(d["error"] == "invalid_config");
  CHECK(error_of({{"command", "verify"}, {"options", {{"M_values", {4, 13}}}}}, kExitUsage)["field"] ==
        "/options/M_values/1");
  CHECK(error_of({{"command", "gap"}, {"model", {{"M", 10}, {"B", 0.5}}}, {"output", {{"format", "xml"}}}},
                 kExitUsage)["field"] == "/output/format");
}

TEST_CASE("B overrides b at unit epsilon") {
  const auto cfg = parse_config({{"command", "gap"}, {"model", {{"M", 10}, {"b", -0.1}, {"epsilon", 3}, {"B", 0.8}}}});
  REQUIRE(cfg.model);
  CHECK(cfg.model->epsilon() == 1.0);
  CHECK(cfg.model->b() == doctest::Approx(-0.4));
}

TEST_CASE("budget refusal exit code") {
  const json e = error_of({{"command", "manifolds"}, {"model", {{"M", 200}, {"B", 0.5}}},
                           {"options", {{"max_manifold", 5}}}, {"cache", false}},
                          kExitBudgetRefused);
  CHECK(e["error"] == "budget_exceeded");
  CHECK(e["state_count"].get<double>() > 2e9);
}

TEST_CASE("outputs are deterministic and carry provenance") {
  const fs::path dir = scratch("det");
  const json cfg = {{"command", "manifolds"}, {"model", {{"M", 30}, {"B", 1.3}}}, {"options", {{"max_manifold", 4}}},
                    {"cache_dir", dir.string()}, {"threads", 3}};
  std::ostringstream a, b, err;
  CHECK(run(cfg, a, err) == 0);
  json cfg1 = cfg;
  cfg1["threads"] = 1;
  CHECK(run(cfg1, b, err) == 0);
  // threads appears nowhere in the output, so the two must match exactly.
  CHECK(a.str() == b.str());
  CHECK(a.str().find("# model.M=30") != std::string::npos);
  CHECK(a.str().find("# model.b=-0.65") != std::string::npos);
}

TEST_CASE("density output matches the manifold contribution") {
  json cfg = {{"command", "density"},
              {"model", {{"M", 24}, {"B", 0.6}}},
              {"options", {{"manifold", 3}, {"grid", {{"n_k", 63}, {"n_E", 48}}}}},
              {"output", {{"format", "json"}}}};
  std::ostringstream out, err;
  REQUIRE(run(cfg, out, err) == 0);
  const json j = json::parse(out.str());
  const auto contrib = manifold_contributions(ModelParams::from_coupling(0.6, 24), 3, 1);
  CHECK(j["summary"]["strength_total"].get<double>() == doctest::Approx(contrib[3].resolved_per_molecule).epsilon(1e-12));
  CHECK(j["summary"]["integrated_density"].get<double>() ==
        doctest::Approx(j["summary"]["strength_in_window"].get<double>()).epsilon(1e-12));
  CHECK(j["data"]["density"].size() == 63);
  CHECK(j["provenance"]["options"]["grid"]["n_E"] == 48);
}

TEST_CASE("verify command") {
  json cfg = {{"command", "verify"}, {"options", {{"M_values", {6}}, {"B_values", {0.3, 0.8, 1.2, 2.0}}}}};
  std::ostringstream out, err;
  CHECK(run(cfg, out, err) == kExitSuccess);
  const json j = json::parse(out.str());
  CHECK(j["summary"]["all_pass"] == true);
  CHECK(j["rows"].size() == j["summary"]["checks"].get<std::size_t>());
}

TEST_CASE("kernel cache round trip and corruption") {
  const fs::path dir = scratch("cache");
  std::vector<std::string> warnings;
  const KernelCache cache(dir, [&](const std::string& w) { warnings.push_back(w); });
  const auto p = ModelParams::from_coupling(1.25, 16);
  CHECK_FALSE(cache.load(p));
  const auto solved = cache.get_or_solve(p);
  REQUIRE(fs::exists(cache.path_for(p)));
  const auto loaded = cache.load(p);
  REQUIRE(loaded);
  CHECK(loaded->sigma_norm == solved.sigma_norm);
  CHECK(loaded->K2 == solved.K2);
  CHECK(warnings.empty());

  std::ofstream(cache.path_for(p)) << "{ not json";
  CHECK_FALSE(cache.load(p));
  CHECK(warnings.size() == 1);
  const auto rebuilt = cache.get_or_solve(p);
  CHECK(rebuilt.sigma_norm == solved.sigma_norm);
  CHECK(cache.load(p));

  // Same physics through the command, served from the cache.
  json cfg = {{"command", "oscillator"}, {"model", {{"M", 16}, {"B", 1.25}}}, {"cache_dir", dir.string()}};
  std::ostringstream out, err;
  REQUIRE(run(cfg, out, err) == 0);
  const json j = json::parse(out.str());
  CHECK(j["rows"][0][2].get<double>() == doctest::Approx(256 * solved.sigma_norm).epsilon(1e-14));
}

TEST_CASE("report writers") {
  Report r;
  r.provenance = {{"tool", "kmm"}};
  r.columns = {"a", "b"};
  r.rows.push_back({0.1, "x,y"});
  std::ostringstream csv;
  write_csv(csv, r);
  CHECK(csv.str() == "# schema_version=1\n# tool=kmm\na,b\n0.1,\"x,y\"\n");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e-300) == "1e-300");
}
