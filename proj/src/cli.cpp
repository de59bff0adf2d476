#include "kmm/cli.hpp"

#include "kmm/emulator.hpp"
#include "kmm/oracle.hpp"
#include "kmm/spectra.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <thread>

namespace kmm {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string child(const std::string& path, const std::string& key) { return path + "/" + key; }
std::string child(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

void check_object(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError(child(path, k), "unknown field '" + k + "'");
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "expected a finite number");
  return x;
}

int as_int(const json& v, const std::string& path) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 1e9) return static_cast<int>(x);
  }
  throw ConfigError(path, "expected an integer");
}

using Check = std::function<bool(double)>;

double number(const json& obj, const std::string& path, const char* key, std::optional<double> def,
              const Check& ok = {}, const char* requirement = "") {
  const json* v = find(obj, key);
  if (!v) {
    if (def) return *def;
    throw ConfigError(child(path, key), "required field missing");
  }
  const double x = as_number(*v, child(path, key));
  if (ok && !ok(x)) throw ConfigError(child(path, key), requirement);
  return x;
}

int integer(const json& obj, const std::string& path, const char* key, std::optional<int> def,
            const Check& ok = {}, const char* requirement = "") {
  const json* v = find(obj, key);
  if (!v) {
    if (def) return *def;
    throw ConfigError(child(path, key), "required field missing");
  }
  const int x = as_int(*v, child(path, key));
  if (ok && !ok(x)) throw ConfigError(child(path, key), requirement);
  return x;
}

bool boolean(const json& obj, const std::string& path, const char* key, bool def) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_boolean()) throw ConfigError(child(path, key), "expected true or false");
  return v->get<bool>();
}

std::string string(const json& obj, const std::string& path, const char* key, std::optional<std::string> def,
                   std::initializer_list<const char*> choices = {}) {
  const json* v = find(obj, key);
  if (!v) {
    if (def) return *def;
    throw ConfigError(child(path, key), "required field missing");
  }
  if (!v->is_string()) throw ConfigError(child(path, key), "expected a string");
  const auto s = v->get<std::string>();
  if (choices.size()) {
    bool found = false;
    std::string list;
    for (const char* c : choices) {
      found = found || s == c;
      list += (list.empty() ? "" : ", ") + std::string(c);
    }
    if (!found) throw ConfigError(child(path, key), "expected one of: " + list);
  }
  return s;
}

template <class T, class Conv>
std::vector<T> list(const json& obj, const std::string& path, const char* key, std::vector<T> def,
                    Conv conv, const Check& ok, const char* requirement) {
  const json* v = find(obj, key);
  if (!v) return def;
  const std::string p = child(path, key);
  if (!v->is_array() || v->empty()) throw ConfigError(p, "expected a non-empty array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v->size(); ++i) {
    const T x = conv((*v)[i], child(p, i));
    if (ok && !ok(x)) throw ConfigError(child(p, i), requirement);
    out.push_back(x);
  }
  return out;
}

const Check positive = [](double x) { return x > 0; };
const Check non_negative = [](double x) { return x >= 0; };

struct ModelFields {
  std::optional<ModelParams> params;
  int M = 0;
  double epsilon = 1.0;
};

ModelFields parse_model(const json& j, bool full_required) {
  const std::string path = "/model";
  const json* m = find(j, "model");
  if (!m) {
    if (full_required) throw ConfigError(path, "required field missing");
    return {};
  }
  check_object(*m, path, {"M", "epsilon", "b", "B"});
  ModelFields f;
  f.M = integer(*m, path, "M", std::nullopt, [](double x) { return x >= 2; }, "M must be at least 2");
  f.epsilon = number(*m, path, "epsilon", 1.0, positive, "epsilon must be positive");
  const bool has_B = find(*m, "B") != nullptr;
  const bool has_b = find(*m, "b") != nullptr;
  if (!has_B && !has_b) {
    if (full_required) throw ConfigError(child(path, "b"), "one of b or B is required");
    return f;
  }
  try {
    if (has_B) {
      const double B = number(*m, path, "B", std::nullopt, non_negative, "B must be non-negative");
      f.epsilon = 1.0;
      f.params = ModelParams::from_coupling(B, f.M, 1.0);
    } else {
      const double b = number(*m, path, "b", std::nullopt, [](double x) { return x <= 0; },
                              "only b <= 0 is supported");
      f.params = ModelParams::make(f.epsilon, b, f.M);
    }
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
  return f;
}

ordered_json parse_grid(const json& opts, const std::string& path) {
  GridSpec g;
  const json* gj = find(opts, "grid");
  if (gj) {
    const std::string p = child(path, "grid");
    check_object(*gj, p, {"k_min", "k_max", "n_k", "E_min", "E_max", "n_E"});
    g.k_min = number(*gj, p, "k_min", g.k_min);
    g.k_max = number(*gj, p, "k_max", g.k_max);
    g.n_k = integer(*gj, p, "n_k", g.n_k, [](double x) { return x >= 1; }, "n_k must be at least 1");
    g.E_min = number(*gj, p, "E_min", g.E_min);
    g.E_max = number(*gj, p, "E_max", g.E_max);
    g.n_E = integer(*gj, p, "n_E", g.n_E, [](double x) { return x >= 1; }, "n_E must be at least 1");
    if (!(g.k_max > g.k_min)) throw ConfigError(child(p, "k_max"), "k_max must exceed k_min");
    if (!(g.E_max > g.E_min)) throw ConfigError(child(p, "E_max"), "E_max must exceed E_min");
    if (static_cast<double>(g.n_k) * g.n_E > 1e8) throw ConfigError(p, "grid has too many bins");
  }
  return {{"k_min", g.k_min}, {"k_max", g.k_max}, {"n_k", g.n_k},
          {"E_min", g.E_min}, {"E_max", g.E_max}, {"n_E", g.n_E}};
}

ordered_json parse_molecule(const json& opts, const std::string& path) {
  const json* mj = find(opts, "molecule");
  const std::string preset = string(opts, path, "preset", std::string(mj ? "" : "caf_like"), {"", "caf_like"});
  MoleculeParams m = caf_like_preset();
  if (mj) {
    const std::string p = child(path, "molecule");
    check_object(*mj, p, {"units", "d", "r", "Theta", "eta", "delta", "epsilon_e", "gamma_f", "x"});
    try {
      m.units = unit_system_from_string(string(*mj, p, "units", std::string("debye_nm_khz"), {"si", "debye_nm_khz"}));
    } catch (const DomainError& e) {
      throw ConfigError(child(p, "units"), e.what());
    }
    const bool base = preset == "caf_like";
    auto field = [&](const char* key, double cur, const Check& ok, const char* req) {
      return number(*mj, p, key, base ? std::optional<double>(cur) : std::nullopt, ok, req);
    };
    m.d = field("d", m.d, positive, "d must be positive");
    m.r = field("r", m.r, positive, "r must be positive");
    m.Theta = field("Theta", m.Theta, {}, "");
    m.eta = field("eta", m.eta, [](double x) { return x >= 0 && x < 0.3; }, "eta must lie in [0, 0.3)");
    m.delta = field("delta", m.delta, [](double x) { return x >= 0 && x < 0.3; }, "delta must lie in [0, 0.3)");
    m.epsilon_e = field("epsilon_e", m.epsilon_e, positive, "epsilon_e must be positive");
    m.gamma_f = field("gamma_f", m.gamma_f, non_negative, "gamma_f must be non-negative");
    m.x = field("x", m.x, [](double x) { return x > 0 && x < 1; }, "x must lie in (0, 1)");
  }
  return {{"units", to_string(m.units)}, {"d", m.d}, {"r", m.r}, {"Theta", m.Theta},
          {"eta", m.eta}, {"delta", m.delta}, {"epsilon_e", m.epsilon_e},
          {"gamma_f", m.gamma_f}, {"x", m.x}};
}

MoleculeParams molecule_from(const ordered_json& j) {
  MoleculeParams m;
  m.units = unit_system_from_string(j.at("units").get<std::string>());
  m.d = j.at("d");
  m.r = j.at("r");
  m.Theta = j.at("Theta");
  m.eta = j.at("eta");
  m.delta = j.at("delta");
  m.epsilon_e = j.at("epsilon_e");
  m.gamma_f = j.at("gamma_f");
  m.x = j.at("x");
  return m;
}

GridSpec grid_from(const ordered_json& j) {
  GridSpec g;
  g.k_min = j.at("k_min");
  g.k_max = j.at("k_max");
  g.n_k = j.at("n_k");
  g.E_min = j.at("E_min");
  g.E_max = j.at("E_max");
  g.n_E = j.at("n_E");
  return g;
}

auto as_int_conv = [](const json& v, const std::string& p) { return as_int(v, p); };
auto as_num_conv = [](const json& v, const std::string& p) { return as_number(v, p); };

ordered_json parse_options(const std::string& command, const json& j, const ModelFields& model) {
  static const json empty = json::object();
  const json* oj = find(j, "options");
  const json& o = oj ? *oj : empty;
  const std::string path = "/options";
  ordered_json out = ordered_json::object();
  if (command == "dispersion") {
    check_object(o, path, {"points"});
    out["points"] = integer(o, path, "points", 0, non_negative, "points must be non-negative");
  } else if (command == "gap") {
    check_object(o, path, {"M_values"});
    out["M_values"] = list<int>(o, path, "M_values", {model.M}, as_int_conv,
                                [](double x) { return x >= 2; }, "M must be at least 2");
  } else if (command == "oscillator") {
    check_object(o, path, {"B_values"});
    out["B_values"] = list<double>(o, path, "B_values", {model.params->B()}, as_num_conv,
                                   [](double x) { return x >= 0 && x != 1.0; },
                                   "B must be non-negative and different from 1");
  } else if (command == "manifolds") {
    check_object(o, path, {"max_manifold"});
    out["max_manifold"] = integer(o, path, "max_manifold", 4, non_negative, "max_manifold must be non-negative");
  } else if (command == "density") {
    check_object(o, path, {"manifold", "grid"});
    out["manifold"] = integer(o, path, "manifold", std::nullopt,
                              [](double x) { return x >= 1 && x <= 4; }, "manifold must be 1, 2, 3 or 4");
    out["grid"] = parse_grid(o, path);
  } else if (command == "correlations") {
    check_object(o, path, {"m_max", "reference"});
    out["m_max"] = integer(o, path, "m_max", 50, non_negative, "m_max must be non-negative");
    out["reference"] = string(o, path, "reference", std::string("kmm"), {"kmm", "hl"});
  } else if (command == "emulator") {
    check_object(o, path, {"molecule", "preset", "M_values", "finite_size"});
    std::vector<int> def;
    if (model.M) def.push_back(model.M);
    out["M_values"] = list<int>(o, path, "M_values", def, as_int_conv,
                                [](double x) { return x >= 2; }, "M must be at least 2");
    if (out["M_values"].empty()) throw ConfigError(child(path, "M_values"), "give model.M or M_values");
    out["finite_size"] = boolean(o, path, "finite_size", false);
    out["preset"] = string(o, path, "preset", std::string(find(o, "molecule") ? "" : "caf_like"),
                           {"", "caf_like"});
    out["molecule"] = parse_molecule(o, path);
  } else if (command == "verify") {
    check_object(o, path, {"M_values", "B_values", "epsilon", "max_sites"});
    const int cap = integer(o, path, "max_sites", kOracleMaxSites,
                            [](double x) { return x >= 2 && x <= kOracleMaxSites; },
                            "max_sites must lie in [2, 12]");
    std::vector<int> def_M{model.M ? model.M : 8};
    const auto Ms = list<int>(o, path, "M_values", def_M, as_int_conv,
                              [cap](double x) { return x >= 2 && x <= cap; }, "M must lie in [2, max_sites]");
    if (!find(o, "M_values") && (def_M[0] < 2 || def_M[0] > cap))
      throw ConfigError("/model/M", "verify needs M <= max_sites");
    out["M_values"] = Ms;
    std::vector<double> def_B{0.3, 0.8, 1.2, 2.0};
    if (model.params && !find(o, "B_values")) def_B = {model.params->B()};
    out["B_values"] = list<double>(o, path, "B_values", def_B, as_num_conv,
                                   [](double x) { return x >= 0 && x != 1.0; },
                                   "B must be non-negative and different from 1");
    out["epsilon"] = number(o, path, "epsilon", model.params ? model.params->epsilon() : 1.0, positive,
                            "epsilon must be positive");
    out["max_sites"] = cap;
  }
  return out;
}

TransitionEngine make_engine(const RunConfig& cfg, const ModelParams& p, const WarningSink& warn) {
  if (p.regime() == Regime::strong && cfg.use_cache) {
    const KernelCache cache(cfg.cache_dir.empty() ? KernelCache::default_directory() : std::filesystem::path(cfg.cache_dir), warn);
    return TransitionEngine(p, cache.get_or_solve(p));
  }
  return TransitionEngine(p);
}

double strong_sigma_norm(const RunConfig& cfg, const ModelParams& p, const WarningSink& warn) {
  if (cfg.use_cache) {
    const KernelCache cache(cfg.cache_dir.empty() ? KernelCache::default_directory() : std::filesystem::path(cfg.cache_dir), warn);
    return cache.get_or_solve(p).sigma_norm;
  }
  return solve_k2(p).sigma_norm;
}

Report dispersion(const RunConfig& cfg) {
  const ModelParams& p = *cfg.model;
  Report r;
  r.columns = {"sector", "index", "k", "k_centered", "E0", "E", "theta"};
  for (Sector s : {Sector::periodic, Sector::antiperiodic}) {
    const ModeSet modes(p, s);
    for (const Mode& m : modes)
      r.rows.push_back({to_string(s), m.index, m.k, centered_wavenumber(m.k), m.e0, m.e, m.theta});
  }
  const int points = cfg.options["points"];
  for (int i = 0; i < points; ++i) {
    const double k = -std::numbers::pi + 2.0 * std::numbers::pi * (i + 1) / points;
    r.rows.push_back({"continuum", i, k, centered_wavenumber(k), hl_dispersion(p, k),
                      excitation_energy(p, k), bogoliubov_angle(p, k)});
  }
  const GroundStateEnergies g = ground_energies(p);
  r.summary["E_plus"] = g.E_plus;
  r.summary["E_minus"] = g.E_minus;
  r.summary["evenness_residual"] = g.evenness_residual;
  return r;
}

Report gap(const RunConfig& cfg) {
  const ModelParams& base = *cfg.model;
  Report r;
  r.columns = {"M", "E_plus", "E_minus", "gap_double", "gap_mode_sum", "gap_integral", "relative_difference"};
  for (int M : cfg.options["M_values"].get<std::vector<int>>()) {
    const ModelParams p = base.with_size(M);
    const GroundStateEnergies g = ground_energies(p);
    const double ext = gap_mode_sum_extended(p);
    const double integral = p.regime() == Regime::strong ? gap_integral(p) : NAN;
    const double rel = std::isfinite(integral) ? std::abs(ext - integral) / std::abs(integral) : NAN;
    r.rows.push_back({M, g.E_plus, g.E_minus, g.gap, ext, integral, rel});
  }
  return r;
}

Report oscillator(const RunConfig& cfg, const WarningSink& warn) {
  const ModelParams& base = *cfg.model;
  const int M = base.M();
  Report r;
  r.columns = {"B", "regime", "chi", "chi_scaled", "infinite_size", "ratio", "chi_hl", "enhancement_vs_hl"};
  for (double B : cfg.options["B_values"].get<std::vector<double>>()) {
    const ModelParams p = cfg.options["B_values"].size() == 1 && B == base.B()
                              ? base
                              : ModelParams::from_coupling(B, M, base.epsilon());
    const double hl = hl_reference(p).chi1;
    if (p.regime() == Regime::weak) {
      const double c = chi1(p);
      const double a = infinite_A(p.B());
      r.rows.push_back({p.B(), "weak", c, c / M, a, c / M / a, hl, c / hl});
    } else {
      const double c = static_cast<double>(M) * M * strong_sigma_norm(cfg, p, warn);
      const double a = infinite_Atilde(p.B());
      r.rows.push_back({p.B(), "strong", c, c / (static_cast<double>(M) * M), a,
                        c / (static_cast<double>(M) * M) / a, hl, c / hl});
    }
  }
  r.summary["chi_scaled_definition"] = "chi/M (weak), chi/M^2 (strong)";
  return r;
}

Report manifolds(const RunConfig& cfg, const WarningSink& warn) {
  const ModelParams& p = *cfg.model;
  const int max_n = std::min(cfg.options["max_manifold"].get<int>(), p.M());
  for (int n = 0; n <= max_n; ++n) check_enumeration_budget(p.M(), n);
  const TransitionEngine engine = make_engine(cfg, p, warn);
  const auto contributions = manifold_contributions(engine, max_n, cfg.threads);
  Report r;
  r.columns = {"excitations", "state_count", "allowed", "sigma1_weight", "chi_per_molecule",
               "resolved_per_molecule"};
  double total = 0.0, chi = 0.0;
  for (const auto& c : contributions) {
    r.rows.push_back({c.excitations, c.state_count, engine.allowed(c.excitations), c.sigma1_weight,
                      c.chi_per_molecule, c.resolved_per_molecule});
    total += c.sigma1_weight;
    chi += c.chi_per_molecule;
  }
  r.summary["sigma1_weight_total"] = total;
  r.summary["chi_per_molecule_total"] = chi;
  r.summary["gap"] = engine.gap();
  return r;
}

Report density(const RunConfig& cfg, const WarningSink& warn) {
  const ModelParams& p = *cfg.model;
  const int n = cfg.options["manifold"];
  const GridSpec spec = grid_from(cfg.options["grid"]);
  check_enumeration_budget(p.M(), n);
  const TransitionEngine engine = make_engine(cfg, p, warn);
  const DensityGrid g = absorption_density(engine, n, spec, cfg.threads);

  Report r;
  r.columns = {"k_center", "E_center", "density"};
  double best = -1.0;
  int bk = 0, be = 0;
  ordered_json rows = ordered_json::array();
  for (int ik = 0; ik < spec.n_k; ++ik) {
    ordered_json col = ordered_json::array();
    for (int ie = 0; ie < spec.n_E; ++ie) {
      const double v = g.at(ik, ie);
      if (v > best) {
        best = v;
        bk = ik;
        be = ie;
      }
      if (cfg.format == "csv") r.rows.push_back({g.k_center(ik), g.E_center(ie), v});
      else col.push_back(v);
    }
    if (cfg.format != "csv") rows.push_back(std::move(col));
  }
  if (cfg.format != "csv") {
    ordered_json body;
    body["layout"] = "density[ik][iE]";
    body["density"] = std::move(rows);
    r.json_body = std::move(body);
  }
  r.summary["manifold"] = n;
  r.summary["state_count"] = g.state_count;
  r.summary["strength_definition"] = "M |<n|sigma_1^x|Phi+>|^2 per state (momentum resolved, per molecule)";
  r.summary["strength_in_window"] = g.strength_in_window;
  r.summary["strength_total"] = g.strength_total;
  r.summary["integrated_density"] = g.integrated();
  r.summary["max_density"] = best;
  r.summary["max_k"] = g.k_center(bk);
  r.summary["max_E"] = g.E_center(be);
  r.summary["gap"] = engine.gap();
  return r;
}

Report correlation(const RunConfig& cfg) {
  const int m_max = cfg.options["m_max"];
  const bool hl = cfg.options["reference"] == "hl";
  CorrelationFunction c;
  if (hl) {
    c = hl_correlations(m_max);
  } else {
    c = correlations(*cfg.model, m_max);
  }
  Report r;
  r.columns = {"m", "C"};
  for (int m = 0; m <= m_max; ++m) r.rows.push_back({m, c.values[static_cast<std::size_t>(m)]});
  r.summary["reference"] = hl ? "hl" : "kmm";
  r.summary["correlation_length"] = c.correlation_length;
  r.summary["fit_first"] = c.fit_first;
  r.summary["fit_last"] = c.fit_last;
  r.summary["fluctuation_sum"] = c.fluctuation_sum;
  if (!hl) {
    r.summary["inverse_distance_to_critical"] = 1.0 / (1.0 - cfg.model->B());
    r.summary["infinite_A"] = infinite_A(cfg.model->B());
  }
  return r;
}

Report emulator(const RunConfig& cfg) {
  const MoleculeParams mol = molecule_from(cfg.options["molecule"]);
  Report r;
  for (const auto& w : validate(mol)) r.summary["warnings"].push_back(w);
  if (cfg.options.value("preset", std::string()) == "caf_like")
    r.summary["preset_note"] = "caf_like values are illustrative, not measured molecular constants";
  r.summary["dipole_energy"] = dipole_energy(mol);
  r.summary["b"] = coupling(mol);
  r.columns = {"M", "epsilon", "b", "B", "regime", "gamma_M", "enhancement", "lifetime", "gamma_M_finite_size"};
  for (int M : cfg.options["M_values"].get<std::vector<int>>()) {
    const ModelParams p = model_from_molecule(mol, M);
    const DecayPrediction d = decay_rate(p, mol, cfg.options["finite_size"].get<bool>());
    r.rows.push_back({M, p.epsilon(), p.b(), p.B(), to_string(p.regime()), d.rate, d.enhancement,
                      d.lifetime, d.finite_size_rate ? ordered_json(*d.finite_size_rate) : ordered_json()});
  }
  return r;
}

Report verify(const RunConfig& cfg, bool& all_pass) {
  const auto Ms = cfg.options["M_values"].get<std::vector<int>>();
  const auto Bs = cfg.options["B_values"].get<std::vector<double>>();
  const double eps = cfg.options["epsilon"];
  std::vector<ModelParams> points;
  for (int M : Ms)
    for (double B : Bs) points.push_back(ModelParams::from_coupling(B, M, eps));

  std::vector<std::vector<ValidationCheck>> results(points.size());
  std::vector<std::string> errors(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < points.size();) {
      try {
        results[i] = verify_against_oracle(points[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::max(1, std::min<int>(threads, static_cast<int>(points.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  Report r;
  r.columns = {"check", "epsilon", "b", "M", "B", "max_deviation", "tolerance", "pass"};
  all_pass = true;
  int passed = 0, total = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!errors[i].empty()) {
      r.rows.push_back({"error: " + errors[i], points[i].epsilon(), points[i].b(), points[i].M(),
                        points[i].B(), ordered_json(), ordered_json(), false});
      all_pass = false;
      ++total;
      continue;
    }
    for (const auto& c : results[i]) {
      r.rows.push_back({c.name, c.epsilon, c.b, c.M, points[i].B(), c.max_deviation, c.tolerance, c.pass});
      all_pass = all_pass && c.pass;
      passed += c.pass;
      ++total;
    }
  }
  r.summary["checks"] = total;
  r.summary["passed"] = passed;
  r.summary["all_pass"] = all_pass;
  return r;
}

} // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"dispersion", "gap",          "oscillator", "manifolds",
                                              "density",    "correlations", "emulator",   "verify"};
  return names;
}

RunConfig parse_config(const json& j) {
  check_object(j, "", {"command", "model", "options", "output", "threads", "cache", "cache_dir"});
  RunConfig cfg;
  cfg.command = string(j, "", "command", std::nullopt);
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), cfg.command) == names.end())
    throw ConfigError("/command", "unknown command '" + cfg.command + "'");

  const bool needs_model = cfg.command != "emulator" && cfg.command != "verify";
  ModelFields model = parse_model(j, needs_model);
  if (cfg.command == "correlations" && model.params && model.params->regime() != Regime::weak) {
    const json* o = find(j, "options");
    const json* ref = o && o->is_object() ? find(*o, "reference") : nullptr;
    if (!(ref && *ref == "hl")) throw ConfigError("/model", "correlations need B < 1");
  }
  if (cfg.command == "oscillator" || cfg.command == "manifolds" || cfg.command == "density") {
    if (model.params->regime() == Regime::critical && cfg.command != "oscillator")
      throw ConfigError("/model", "transition weights are undefined at B = 1");
  }
  cfg.model = model.params;
  cfg.model_M = model.M;
  cfg.options = parse_options(cfg.command, j, model);
  cfg.threads = integer(j, "", "threads", 0, non_negative, "threads must be non-negative");
  cfg.use_cache = boolean(j, "", "cache", true);
  cfg.cache_dir = string(j, "", "cache_dir", std::string());

  std::string def_format = (cfg.command == "oscillator" || cfg.command == "emulator" || cfg.command == "verify")
                               ? "json" : "csv";
  if (const json* o = find(j, "output")) {
    check_object(*o, "/output", {"path", "format"});
    cfg.output_path = string(*o, "/output", "path", std::string());
    cfg.format = string(*o, "/output", "format", def_format, {"csv", "json"});
  } else {
    cfg.format = def_format;
  }
  return cfg;
}

ordered_json error_record(const std::string& kind, const std::string& field, const std::string& message) {
  ordered_json e;
  e["error"] = kind;
  e["field"] = field;
  e["message"] = message;
  return e;
}

Report execute(const RunConfig& cfg, const WarningSink& warn) {
  bool ok = true;
  Report r;
  if (cfg.command == "dispersion") r = dispersion(cfg);
  else if (cfg.command == "gap") r = gap(cfg);
  else if (cfg.command == "oscillator") r = oscillator(cfg, warn);
  else if (cfg.command == "manifolds") r = manifolds(cfg, warn);
  else if (cfg.command == "density") r = density(cfg, warn);
  else if (cfg.command == "correlations") r = correlation(cfg);
  else if (cfg.command == "emulator") r = emulator(cfg);
  else if (cfg.command == "verify") r = verify(cfg, ok);
  else throw DomainError("unknown command " + cfg.command);

  ordered_json prov;
  prov["tool"] = "kmm";
  prov["command"] = cfg.command;
  if (cfg.model) prov["model"] = model_provenance(*cfg.model);
  prov["options"] = cfg.options;
  r.provenance = std::move(prov);
  return r;
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const WarningSink warn = [&err](const std::string& w) { err << "warning: " << w << "\n"; };
  Report r;
  try {
    r = execute(cfg, warn);
  } catch (const BudgetExceeded& e) {
    auto rec = error_record("budget_exceeded", "/options", e.what());
    rec["state_count"] = e.count();
    err << rec.dump() << "\n";
    return kExitBudgetRefused;
  } catch (const ConfigError& e) {
    err << error_record("invalid_config", e.field(), e.what()).dump() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << error_record("domain_error", "/model", e.what()).dump() << "\n";
    return kExitUsage;
  }

  auto emit = [&](std::ostream& os) {
    if (cfg.format == "json") write_json(os, r);
    else write_csv(os, r);
  };
  if (cfg.output_path.empty()) {
    emit(out);
  } else {
    std::ofstream f(cfg.output_path, std::ios::binary);
    if (!f) {
      err << error_record("io_error", "/output/path", "cannot open " + cfg.output_path).dump() << "\n";
      return kExitUsage;
    }
    emit(f);
  }
  if (cfg.command == "verify" && !r.summary.value("all_pass", false)) return kExitValidationFailure;
  return kExitSuccess;
}

int run(const json& config, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = parse_config(config);
  } catch (const ConfigError& e) {
    err << error_record("invalid_config", e.field(), e.what()).dump() << "\n";
    return kExitUsage;
  }
  return run(cfg, out, err);
}

} // namespace kmm
