// kmm: command-line front end. Every subcommand builds a RunConfig JSON
// document and hands it to kmm::run, so flags and --config files share one
// validation path.

#include "kmm/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>

namespace {

struct ModelFlags {
  std::optional<double> epsilon, b, B;
  std::optional<int> M;
};

void add_model_flags(CLI::App* sub, ModelFlags& f) {
  sub->add_option("--epsilon", f.epsilon, "site excitation energy");
  sub->add_option("--b", f.b, "nearest-neighbour coupling (b <= 0)");
  sub->add_option("--M", f.M, "chain length");
  sub->add_option("--B", f.B, "coupling 2|b|/epsilon; sets epsilon = 1 and overrides --b");
}

nlohmann::json model_json(const ModelFlags& f) {
  nlohmann::json m = nlohmann::json::object();
  if (f.M) m["M"] = *f.M;
  if (f.epsilon) m["epsilon"] = *f.epsilon;
  if (f.b) m["b"] = *f.b;
  if (f.B) m["B"] = *f.B;
  return m;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dipole-coupled two-level chain: spectra, oscillator strengths and oracle checks"};
  app.require_subcommand(1);
  app.fallthrough();

  int threads = 0;
  std::string out_path, format, cache_dir;
  bool no_cache = false;
  app.add_option("--threads", threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", out_path, "output file (default stdout)");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--cache-dir", cache_dir, "contraction kernel cache directory (default $KMM_CACHE_DIR)");
  app.add_flag("--no-cache", no_cache, "do not read or write the kernel cache");

  ModelFlags mf;
  nlohmann::json options = nlohmann::json::object();

  auto* dispersion = app.add_subcommand("dispersion", "grid wavenumbers, energies and Bogoliubov angles");
  add_model_flags(dispersion, mf);
  std::optional<int> points;
  dispersion->add_option("--points", points, "extra continuum samples");

  auto* gap = app.add_subcommand("gap", "vacuum energy splitting from the mode sum and the integral");
  add_model_flags(gap, mf);
  std::vector<int> gap_Ms;
  gap->add_option("--M-values", gap_Ms, "chain lengths to tabulate")->delimiter(',');

  auto* osc = app.add_subcommand("oscillator", "chi_1 (B < 1) or chi_0 (B > 1) and closed forms");
  add_model_flags(osc, mf);
  std::vector<double> osc_Bs;
  osc->add_option("--B-values", osc_Bs, "couplings to tabulate (epsilon fixed)")->delimiter(',');

  auto* man = app.add_subcommand("manifolds", "per-manifold oscillator strength sums");
  add_model_flags(man, mf);
  std::optional<int> max_manifold;
  man->add_option("--max-manifold", max_manifold, "highest excitation count");

  auto* dens = app.add_subcommand("density", "absorption density on a (k, E) grid");
  add_model_flags(dens, mf);
  std::optional<int> manifold;
  std::optional<double> k_min, k_max, E_min, E_max;
  std::optional<int> n_k, n_E;
  dens->add_option("--manifold", manifold, "excitation count 1..4");
  dens->add_option("--k-min", k_min);
  dens->add_option("--k-max", k_max);
  dens->add_option("--n-k", n_k);
  dens->add_option("--E-min", E_min);
  dens->add_option("--E-max", E_max);
  dens->add_option("--n-E", n_E);

  auto* corr = app.add_subcommand("correlations", "transition dipole pair correlations C(m)");
  add_model_flags(corr, mf);
  std::optional<int> m_max;
  bool hl = false;
  corr->add_option("--m-max", m_max);
  corr->add_flag("--hl", hl, "hopping-only reference");

  auto* emu = app.add_subcommand("emulator", "molecule parameters to chain parameters and decay rates");
  std::optional<int> emu_M;
  std::vector<int> emu_Ms;
  std::string molecule_file;
  bool finite = false;
  emu->add_option("--M", emu_M, "chain length");
  emu->add_option("--M-values", emu_Ms, "chain lengths")->delimiter(',');
  emu->add_option("--molecule", molecule_file, "JSON molecule record (default: CaF-like preset)");
  emu->add_flag("--finite-size", finite, "also report the finite-chain rate");

  auto* ver = app.add_subcommand("verify", "compare the analytic path with brute-force diagonalization");
  std::vector<int> ver_Ms;
  std::vector<double> ver_Bs;
  std::optional<double> ver_eps;
  ver->add_option("--M-values", ver_Ms, "chain lengths (<= 12)")->delimiter(',');
  ver->add_option("--B-values", ver_Bs, "couplings")->delimiter(',');
  ver->add_option("--epsilon", ver_eps);

  auto* runc = app.add_subcommand("run", "execute a JSON RunConfig");
  std::string config_file;
  runc->add_option("--config", config_file, "RunConfig JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kmm::kExitSuccess : kmm::kExitUsage;
  }

  nlohmann::json cfg;
  try {
    if (runc->parsed()) {
      std::ifstream in(config_file);
      if (!in) {
        std::cerr << kmm::error_record("io_error", "", "cannot open " + config_file).dump() << "\n";
        return kmm::kExitUsage;
      }
      cfg = nlohmann::json::parse(in);
    } else {
      CLI::App* sub = app.get_subcommands().front();
      cfg["command"] = sub->get_name();
      if (sub == emu) {
        if (emu_M) cfg["model"] = {{"M", *emu_M}};
        if (!emu_Ms.empty()) options["M_values"] = emu_Ms;
        if (!molecule_file.empty()) {
          std::ifstream in(molecule_file);
          if (!in) {
            std::cerr << kmm::error_record("io_error", "", "cannot open " + molecule_file).dump() << "\n";
            return kmm::kExitUsage;
          }
          options["molecule"] = nlohmann::json::parse(in);
          options["preset"] = "";
        }
        if (finite) options["finite_size"] = true;
      } else if (sub == ver) {
        if (!ver_Ms.empty()) options["M_values"] = ver_Ms;
        if (!ver_Bs.empty()) options["B_values"] = ver_Bs;
        if (ver_eps) options["epsilon"] = *ver_eps;
      } else {
        cfg["model"] = model_json(mf);
      }
      if (points) options["points"] = *points;
      if (!gap_Ms.empty()) options["M_values"] = gap_Ms;
      if (!osc_Bs.empty()) options["B_values"] = osc_Bs;
      if (max_manifold) options["max_manifold"] = *max_manifold;
      if (manifold) options["manifold"] = *manifold;
      nlohmann::json grid = nlohmann::json::object();
      if (k_min) grid["k_min"] = *k_min;
      if (k_max) grid["k_max"] = *k_max;
      if (n_k) grid["n_k"] = *n_k;
      if (E_min) grid["E_min"] = *E_min;
      if (E_max) grid["E_max"] = *E_max;
      if (n_E) grid["n_E"] = *n_E;
      if (!grid.empty()) options["grid"] = grid;
      if (m_max) options["m_max"] = *m_max;
      if (hl) options["reference"] = "hl";
      cfg["options"] = options;
    }
  } catch (const nlohmann::json::exception& e) {
    std::cerr << kmm::error_record("invalid_json", "", e.what()).dump() << "\n";
    return kmm::kExitUsage;
  }

  if (!runc->parsed() || !cfg.contains("threads")) {
    if (threads) cfg["threads"] = threads;
  }
  if (!out_path.empty() || !format.empty()) {
    nlohmann::json o = cfg.value("output", nlohmann::json::object());
    if (!out_path.empty()) o["path"] = out_path;
    if (!format.empty()) o["format"] = format;
    cfg["output"] = o;
  }
  if (no_cache) cfg["cache"] = false;
  if (!cache_dir.empty()) cfg["cache_dir"] = cache_dir;

  return kmm::run(cfg, std::cout, std::cerr);
}
