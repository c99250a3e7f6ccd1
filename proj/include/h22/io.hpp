#pragma once

#include "h22/cascade.hpp"
#include "h22/stats.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace h22 {

constexpr int kRealizationFormatVersion = 1;

/// Run configuration: flat key=value file, overridable from the command line.
struct RunConfig {
  double wbar = 1.0;
  double rho = 2.0;
  int level = 6;
  long replicates = 10000;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: use hardware default
  double s_exponent = 0.3;
  double floor_value = 1e-3;
  double dead_band = 0.02;
  std::string out_dir = "out";
  std::string suite = "all";

  void validate() const {
    if (!(wbar > 0.0)) throw std::invalid_argument("wbar must be positive");
    if (!(rho > 1.0)) throw std::invalid_argument("rho must exceed 1");
    if (level < 0 || level > 24) throw std::invalid_argument("level out of range [0,24]");
    if (replicates < 1) throw std::invalid_argument("replicates must be positive");
    if (!(s_exponent > 0.0 && s_exponent < 0.5)) throw std::invalid_argument("s in (0,1/2)");
  }
};

inline std::string default_out_dir() {
  if (const char* env = std::getenv("H22_OUT_DIR")) return env;
  return "out";
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  RunConfig c;
  c.out_dir = default_out_dir();
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    if (key == "wbar") c.wbar = std::stod(val);
    else if (key == "rho") c.rho = std::stod(val);
    else if (key == "level") c.level = std::stoi(val);
    else if (key == "replicates") c.replicates = std::stol(val);
    else if (key == "seed") c.seed = std::stoull(val);
    else if (key == "threads") c.threads = std::stoi(val);
    else if (key == "s") c.s_exponent = std::stod(val);
    else if (key == "floor") c.floor_value = std::stod(val);
    else if (key == "dead_band") c.dead_band = std::stod(val);
    else if (key == "out") c.out_dir = val;
    else if (key == "suite") c.suite = val;
    else throw std::runtime_error("unknown config key: " + key);
  }
  return c;
}

inline void save_config(const RunConfig& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  out << "wbar = " << nlohmann::json(c.wbar).dump() << "\n"
      << "rho = " << nlohmann::json(c.rho).dump() << "\n"
      << "level = " << c.level << "\n"
      << "replicates = " << c.replicates << "\n"
      << "seed = " << c.seed << "\n"
      << "threads = " << c.threads << "\n"
      << "s = " << nlohmann::json(c.s_exponent).dump() << "\n"
      << "floor = " << nlohmann::json(c.floor_value).dump() << "\n"
      << "dead_band = " << nlohmann::json(c.dead_band).dump() << "\n"
      << "out = " << c.out_dir << "\n"
      << "suite = " << c.suite << "\n";
}

// JSON numbers round-trip exactly through nlohmann (strtod in, shortest
// representation out), so save -> load -> save is byte-identical.
inline nlohmann::ordered_json realization_to_json(const CascadeRealization& r) {
  nlohmann::ordered_json j;
  j["format_version"] = kRealizationFormatVersion;
  j["wbar0"] = r.base.wbar;
  j["rho"] = r.base.rho;
  j["seed"] = r.seed;
  j["stream"] = r.stream;
  j["max_level"] = r.max_level;
  j["gamma"] = r.gamma;
  nlohmann::ordered_json levels = nlohmann::ordered_json::array();
  for (const auto& l : r.levels) {
    nlohmann::ordered_json jl;
    jl["level"] = l.level;
    jl["wbar"] = l.wbar;
    jl["beta"] = std::vector<double>(l.beta.data(), l.beta.data() + l.beta.size());
    jl["u"] = std::vector<double>(l.u.data(), l.u.data() + l.u.size());
    jl["diag_g"] = std::vector<double>(l.diag_g.data(), l.diag_g.data() + l.diag_g.size());
    levels.push_back(std::move(jl));
  }
  j["levels"] = std::move(levels);
  return j;
}

inline CascadeRealization realization_from_json(const nlohmann::ordered_json& j) {
  if (j.at("format_version").get<int>() != kRealizationFormatVersion)
    throw std::runtime_error("unsupported realization format version");
  CascadeRealization r;
  r.base.wbar = j.at("wbar0").get<double>();
  r.base.rho = j.at("rho").get<double>();
  r.base.level = 0;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.stream = j.at("stream").get<std::uint64_t>();
  r.max_level = j.at("max_level").get<int>();
  r.gamma = j.at("gamma").get<double>();
  for (const auto& jl : j.at("levels")) {
    CascadeLevel l;
    l.level = jl.at("level").get<int>();
    l.wbar = jl.at("wbar").get<double>();
    const auto beta = jl.at("beta").get<std::vector<double>>();
    const auto u = jl.at("u").get<std::vector<double>>();
    const auto diag = jl.at("diag_g").get<std::vector<double>>();
    l.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), Eigen::Index(beta.size()));
    l.u = Eigen::Map<const Eigen::VectorXd>(u.data(), Eigen::Index(u.size()));
    l.diag_g = Eigen::Map<const Eigen::VectorXd>(diag.data(), Eigen::Index(diag.size()));
    r.levels.push_back(std::move(l));
  }
  validate(r);  // loading re-verifies every invariant
  return r;
}

inline void save_realization(const CascadeRealization& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write realization file: " + path);
  out << realization_to_json(r).dump(1, '\t') << "\n";
}

inline CascadeRealization load_realization(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open realization file: " + path);
  nlohmann::ordered_json j;
  in >> j;
  return realization_from_json(j);
}

/// CSV table of a measure: cell index, left endpoint, density, cell mass.
inline void write_measure_csv(const EmpiricalMeasure& m, std::ostream& out) {
  out << "cell,left,density,mass\n";
  const double width = std::pow(2.0, -m.depth);
  for (Eigen::Index i = 0; i < m.density.size(); ++i) {
    out << (i + 1) << "," << nlohmann::json(i * width).dump() << ","
        << nlohmann::json(m.density(i)).dump() << ","
        << nlohmann::json(m.cell_mass(i)).dump() << "\n";
  }
}

/// Log-density bar plot of a measure as a standalone SVG.
inline void write_measure_svg(const EmpiricalMeasure& m, std::ostream& out) {
  const int width = 960, height = 360, margin = 40;
  double lo = 0.0, hi = 0.0;
  for (Eigen::Index i = 0; i < m.density.size(); ++i) {
    const double v = std::log(m.density(i));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) hi = lo + 1.0;
  const double plot_w = width - 2 * margin, plot_h = height - 2 * margin;
  auto ypix = [&](double v) { return margin + (hi - v) / (hi - lo) * plot_h; };
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  out << "<line x1='" << margin << "' y1='" << ypix(0.0) << "' x2='" << width - margin << "' y2='"
      << ypix(0.0) << "' stroke='#999' stroke-dasharray='4 3'/>\n";
  const Eigen::Index n = m.density.size();
  const double bar = plot_w / double(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = std::log(m.density(i));
    const double y0 = ypix(std::max(v, 0.0)), y1 = ypix(std::min(v, 0.0));
    out << "<rect x='" << margin + i * bar << "' y='" << y0 << "' width='" << std::max(bar, 0.3)
        << "' height='" << std::max(y1 - y0, 0.5) << "' fill='#49698a'/>\n";
  }
  out << "<text x='" << margin << "' y='" << height - 8 << "' font-size='12'>log density at depth "
      << m.depth << ", " << n << " cells</text>\n</svg>\n";
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory: " + dir);
}

}  // namespace h22
