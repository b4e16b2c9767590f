#include "selforg/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace selforg::io {

namespace {

using nlohmann::json;

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  return out;
}

double parse_number(const std::string& s, const fs::path& path) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(s, &pos);
    if (pos == s.size()) return x;
  } catch (const std::exception&) {
  }
  // nan/inf spelled by printf are accepted by stod; anything else is not.
  throw std::runtime_error(path.string() + ": bad number '" + s + "'");
}

json number(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

double from_json(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

void write_trajectory_csv(const fs::path& path, const std::vector<double>& time, const TrajectorySeries& s) {
  auto out = open_out(path);
  out << "t,theta,bunching,re_a,im_a,n_phot\n";
  for (std::size_t i = 0; i < time.size(); ++i) {
    const auto a = s.field[i];
    out << fmt(time[i]) << ',' << fmt(s.theta[i]) << ',' << fmt(s.bunching[i]) << ',' << fmt(a.real()) << ','
        << fmt(a.imag()) << ',' << fmt(std::norm(a)) << '\n';
  }
}

void write_atoms_csv(const fs::path& path, const std::vector<double>& time, const TrajectorySeries& s,
                     int n_atoms) {
  auto out = open_out(path);
  out << "t,atom,pos,mom\n";
  for (std::size_t i = 0; i < time.size(); ++i)
    for (int j = 0; j < n_atoms; ++j) {
      const std::size_t k = i * n_atoms + j;
      out << fmt(time[i]) << ',' << j << ',' << fmt(s.atom_theta[k]) << ',' << fmt(s.atom_mom[k]) << '\n';
    }
}

void write_spectrum_csv(const fs::path& path, const SpectrumEstimate& s) {
  auto out = open_out(path);
  out << "omega_over_kappa,power\n";
  for (std::size_t i = 0; i < s.omega.size(); ++i) out << fmt(s.omega[i]) << ',' << fmt(s.power[i]) << '\n';
}

void write_correlation_csv(const fs::path& path, const std::vector<double>& corr, double dtau) {
  auto out = open_out(path);
  out << "tau_kappa,C\n";
  for (std::size_t k = 0; k < corr.size(); ++k) out << fmt(k * dtau) << ',' << fmt(corr[k]) << '\n';
}

void write_phase_csv(const fs::path& path, const std::vector<PhaseRow>& rows) {
  auto out = open_out(path);
  out << "detuning_over_kappa,nbar,theta_star,kBT_over_hbar_kappa\n";
  for (const auto& r : rows)
    out << fmt(r.detuning_over_kappa) << ',' << fmt(r.nbar) << ',' << fmt(r.theta_star) << ',' << fmt(r.kbt)
        << '\n';
}

void write_free_energy_csv(const fs::path& path, double nbar_ratio, int points) {
  if (points < 2) throw std::invalid_argument("free-energy grid needs at least 2 points");
  auto out = open_out(path);
  out << "theta,betaF_full,betaF_landau\n";
  // Open interval (-1, 1): the full free energy diverges at |Theta| = 1.
  for (int i = 0; i < points; ++i) {
    const double t = -1.0 + 2.0 * (i + 0.5) / points;
    out << fmt(t) << ',' << fmt(free_energy(t, nbar_ratio)) << ',' << fmt(landau_free_energy(t, nbar_ratio))
        << '\n';
  }
}

void write_intervals_csv(const fs::path& path, const std::vector<Interval>& intervals) {
  auto out = open_out(path);
  out << "kind,start_kappa_t,length_kappa_t,sign\n";
  for (const auto& iv : intervals)
    out << to_string(iv.kind) << ',' << fmt(iv.start) << ',' << fmt(iv.length) << ',' << (iv.sign > 0 ? "+" : "-")
        << '\n';
}

void write_survival_csv(const fs::path& path, const std::vector<std::pair<double, double>>& curve) {
  auto out = open_out(path);
  out << "tau_kappa,F\n";
  for (const auto& [tau, f] : curve) out << fmt(tau) << ',' << fmt(f) << '\n';
}

void write_histogram_csv(const fs::path& path, const Histogram& h) {
  auto out = open_out(path);
  out << "theta_low,theta_high,density\n";
  for (std::size_t b = 0; b < h.bins(); ++b)
    out << fmt(h.edges[b]) << ',' << fmt(h.edges[b + 1]) << ',' << fmt(h.density[b]) << '\n';
}

void write_summary_json(const fs::path& path, const Summary& s) {
  json j;
  j["n_cav"] = number(s.n_cav);
  j["n_cav_adiabatic"] = number(s.n_cav_adiabatic);
  j["g2_zero"] = number(s.g2_zero);
  j["g2_zero_adiabatic"] = number(s.g2_zero_adiabatic);
  j["theta_sq_mean"] = number(s.theta_sq_mean);
  j["mom_sq_mean"] = number(s.mom_sq_mean);
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

Summary read_summary_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const json j = json::parse(in);
  Summary s;
  s.n_cav = from_json(j.at("n_cav"));
  s.n_cav_adiabatic = from_json(j.at("n_cav_adiabatic"));
  s.g2_zero = from_json(j.at("g2_zero"));
  s.g2_zero_adiabatic = from_json(j.at("g2_zero_adiabatic"));
  s.theta_sq_mean = from_json(j.at("theta_sq_mean"));
  s.mom_sq_mean = j.contains("mom_sq_mean") ? from_json(j["mom_sq_mean"]) : std::nan("");
  return s;
}

std::pair<std::vector<double>, TrajectorySeries> read_trajectory_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "t,theta,bunching,re_a,im_a,n_phot")
    throw std::runtime_error(path.string() + ": not a trajectory CSV");
  std::vector<double> time;
  TrajectorySeries s;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 6) throw std::runtime_error(path.string() + ": expected 6 columns");
    time.push_back(parse_number(cells[0], path));
    s.theta.push_back(parse_number(cells[1], path));
    s.bunching.push_back(parse_number(cells[2], path));
    s.field.emplace_back(parse_number(cells[3], path), parse_number(cells[4], path));
  }
  return {std::move(time), std::move(s)};
}

void write_manifest(const fs::path& path, const Manifest& m) {
  json j;
  j["code_version"] = code_version();
  j["command"] = m.command;
  j["argv"] = m.argv;
  j["seed"] = m.seed;
  j["params"] = json::object();
  for (const auto& [k, v] : m.params) j["params"][k] = v;
  j["settings"] = json::object();
  for (const auto& [k, v] : m.settings) j["settings"][k] = v;
  j["files"] = m.files;
  j["kernel"] = m.kernel;
  j["warnings"] = m.warnings;
  j["wall_clock"] = {{"started_utc", m.started_utc}, {"elapsed_seconds", m.wall_seconds}};
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  const json j = json::parse(in);
  Manifest m;
  m.command = j.at("command").get<std::string>();
  m.argv = j.value("argv", std::vector<std::string>{});
  m.seed = j.value("seed", std::uint64_t{0});
  for (const auto& [k, v] : j.at("params").items()) m.params[k] = v.get<std::string>();
  if (j.contains("settings"))
    for (const auto& [k, v] : j["settings"].items()) m.settings.emplace_back(k, v.get<std::string>());
  m.files = j.value("files", std::vector<std::string>{});
  m.kernel = j.value("kernel", std::string{});
  m.warnings = j.value("warnings", std::vector<std::string>{});
  return m;
}

ConfigMap resolved_config(const ConfigMap& given) {
  ConfigMap out = default_config();
  for (const auto& [k, v] : given) {
    if (!out.contains(k)) throw ConfigError("unknown configuration key '" + k + "'");
    out[k] = v;
  }
  return out;
}

const char* code_version() { return SELFORG_VERSION; }

}  // namespace selforg::io
