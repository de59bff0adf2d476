#include "kmm/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace kmm {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ordered_json model_provenance(const ModelParams& p) {
  ordered_json j;
  j["epsilon"] = p.epsilon();
  j["b"] = p.b();
  j["M"] = p.M();
  j["B"] = p.B();
  j["regime"] = to_string(p.regime());
  return j;
}

namespace {

std::string csv_cell(const ordered_json& v) {
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  }
  return v.dump();
}

void flatten(std::ostream& os, const std::string& prefix, const ordered_json& j) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(os, prefix.empty() ? k : prefix + "." + k, v);
    return;
  }
  os << "# " << prefix << "=" << (j.is_number_float() ? format_double(j.get<double>()) : j.is_string() ? j.get<std::string>() : j.dump()) << "\n";
}

} // namespace

void write_csv(std::ostream& os, const Report& r) {
  os << "# schema_version=" << kReportSchemaVersion << "\n";
  flatten(os, "", r.provenance);
  flatten(os, "summary", r.summary);
  for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << r.columns[i];
  os << "\n";
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
    os << "\n";
  }
}

void write_json(std::ostream& os, const Report& r) {
  ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["provenance"] = r.provenance;
  j["summary"] = r.summary;
  if (r.json_body) {
    j["data"] = *r.json_body;
  } else {
    j["columns"] = r.columns;
    ordered_json rows = ordered_json::array();
    for (const auto& row : r.rows) rows.push_back(ordered_json(row));
    j["rows"] = std::move(rows);
  }
  os << j.dump(1) << "\n";
}

KernelCache::KernelCache(fs::path dir, WarningSink warn) : dir_(std::move(dir)), warn_(std::move(warn)) {}

fs::path KernelCache::default_directory() {
  if (const char* d = std::getenv("KMM_CACHE_DIR"); d && *d) return d;
  if (const char* x = std::getenv("XDG_CACHE_HOME"); x && *x) return fs::path(x) / "kmm";
  if (const char* h = std::getenv("HOME"); h && *h) return fs::path(h) / ".cache" / "kmm";
  return fs::temp_directory_path() / "kmm-cache";
}

fs::path KernelCache::path_for(const ModelParams& p) const {
  std::ostringstream os;
  os << "k2-" << std::hex << std::setfill('0') << std::setw(16) << std::bit_cast<std::uint64_t>(p.epsilon())
     << "-" << std::setw(16) << std::bit_cast<std::uint64_t>(p.b()) << std::dec << "-M" << p.M() << ".json";
  return dir_ / os.str();
}

std::optional<ContractionTable> KernelCache::load(const ModelParams& p) const {
  const fs::path path = path_for(p);
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::nullopt;
  try {
    std::ifstream in(path);
    const auto j = nlohmann::json::parse(in);
    if (j.at("format_version").get<int>() != kCacheFormatVersion)
      throw std::runtime_error("format version mismatch");
    if (j.at("epsilon").get<double>() != p.epsilon() || j.at("b").get<double>() != p.b() ||
        j.at("M").get<int>() != p.M())
      throw std::runtime_error("parameters do not match the key");
    const auto& k = j.at("K2");
    const int M = p.M();
    if (!k.is_array() || k.size() != static_cast<std::size_t>(M) * M)
      throw std::runtime_error("kernel has the wrong size");
    Eigen::MatrixXcd K2(M, M);
    for (int r = 0; r < M; ++r)
      for (int c = 0; c < M; ++c) {
        const auto& e = k[static_cast<std::size_t>(r) * M + c];
        K2(r, c) = {e.at(0).get<double>(), e.at(1).get<double>()};
      }
    ContractionTable t = reduce_kernel(p, KernelKind::dipole, std::move(K2), j.at("condition_number").get<double>());
    const double stored = j.at("sigma_norm").get<double>();
    if (std::abs(stored - t.sigma_norm) > 1e-12 * std::max(1.0, stored))
      throw std::runtime_error("stored normalization disagrees with the kernel");
    return t;
  } catch (const std::exception& e) {
    if (warn_) warn_("ignoring corrupt kernel cache entry " + path.string() + ": " + e.what());
    return std::nullopt;
  }
}

void KernelCache::store(const ModelParams& p, const ContractionTable& t) const {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  nlohmann::json j;
  j["format_version"] = kCacheFormatVersion;
  j["epsilon"] = p.epsilon();
  j["b"] = p.b();
  j["M"] = p.M();
  j["condition_number"] = t.condition_number;
  j["sigma_norm"] = t.sigma_norm;
  j["lambda"] = t.lambda;
  nlohmann::json k = nlohmann::json::array();
  for (int r = 0; r < t.M; ++r)
    for (int c = 0; c < t.M; ++c) k.push_back({t.K2(r, c).real(), t.K2(r, c).imag()});
  j["K2"] = std::move(k);

  const fs::path path = path_for(p);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << j.dump();
    if (!out) {
      if (warn_) warn_("could not write kernel cache entry " + path.string());
      return;
    }
  }
  fs::rename(tmp, path, ec);
  if (ec && warn_) warn_("could not write kernel cache entry " + path.string() + ": " + ec.message());
}

ContractionTable KernelCache::get_or_solve(const ModelParams& p) const {
  if (auto t = load(p)) return std::move(*t);
  ContractionTable t = solve_k2(p);
  store(p, t);
  return t;
}

} // namespace kmm
