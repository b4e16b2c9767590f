#include "selforg/params.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace selforg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMaxNuOverKappa = 0.2;

const char* const kConfigKeys[] = {"kappa_hz",         "detuning_over_kappa", "omega_r_hz",
                                   "n_atoms",          "nbar_over_nbar_c",    "nu_over_kappa",
                                   "include_eta_noise"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
  }
  if (pos != v.size() || !std::isfinite(x))
    throw ConfigError("config key '" + key + "': not a finite number: '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

}  // namespace

double PhysicalParams::nbar_c() const {
  return (kappa * kappa + delta_c * delta_c) / (4.0 * delta_c * delta_c);
}

PhysicalParams rb85_reference(int n_atoms, double nbar_ratio) {
  return make_params(-1.0, 3.86e3 / 1.5e6, n_atoms, nbar_ratio, -0.05, true);
}

PhysicalParams make_params(double detuning_over_kappa, double recoil_over_kappa, int n_atoms,
                           double nbar_ratio, double nu_over_kappa, bool include_eta_noise) {
  if (detuning_over_kappa == 0.0)
    throw ConfigError("detuning_over_kappa must be nonzero (threshold diverges)");
  PhysicalParams p;
  p.kappa = kTwoPi * 1.5e6;
  p.delta_c = detuning_over_kappa * p.kappa;
  p.omega_r = recoil_over_kappa * p.kappa;
  p.n_atoms = n_atoms;
  p.nu_over_kappa = nu_over_kappa;
  p.include_eta_noise = include_eta_noise;
  p.nbar = nbar_ratio * p.nbar_c();
  return p;
}

ValidationReport validate(const PhysicalParams& p) {
  if (!(p.kappa > 0.0)) throw ConfigError("kappa must be positive");
  if (!(p.omega_r > 0.0)) throw ConfigError("omega_r must be positive");
  if (p.n_atoms < 1) throw ConfigError("n_atoms must be >= 1");
  if (!(p.nbar >= 0.0) || !std::isfinite(p.nbar)) throw ConfigError("nbar must be finite and >= 0");
  if (!std::isfinite(p.delta_c)) throw ConfigError("detuning must be finite");
  if (!(std::abs(p.nu_over_kappa) <= kMaxNuOverKappa))
    throw ConfigError("|NU/kappa| must not exceed 0.2 (bistable regime not modelled)");

  ValidationReport r;
  const double d = p.detuning_over_kappa();
  const double w = p.recoil_over_kappa();
  const double mod2 = d * d + 1.0;
  // sqrt(omega_r N) |S| with N S^2 = nbar (Delta_c^2 + kappa^2)
  r.timescale_lhs = std::sqrt(w * p.nbar * mod2);
  r.timescale_rhs = std::pow(mod2, 0.75);
  if (r.timescale_lhs > 0.1 * r.timescale_rhs) {
    std::ostringstream os;
    os << "time-scale separation marginal: sqrt(omega_r N)|S| = " << r.timescale_lhs
       << " kappa vs |Delta_c + i kappa|^(3/2) = " << r.timescale_rhs << " kappa";
    r.warnings.push_back(os.str());
  }
  if (w > 0.1) r.warnings.push_back("omega_r/kappa > 0.1: semiclassical treatment questionable");
  if (p.delta_c >= 0.0)
    r.warnings.push_back("detuning >= 0: no thermal steady state, equilibrium quantities undefined");
  return r;
}

DerivedCoefficients derive_coefficients(const PhysicalParams& p) {
  validate(p);
  const double k = p.kappa;
  const double d = p.delta_c;
  const double mod2 = d * d + k * k;

  DerivedCoefficients c;
  c.gamma_fric = 8.0 * p.omega_r * k * d / mod2;
  c.beta_hbar = -4.0 * d / mod2;
  c.eta_bar = (k * k - d * d) / (k * mod2);
  c.nbar_c = p.nbar_c();
  c.sigma_N = 1.0 / std::sqrt(2.0 * p.n_atoms);
  c.thermal = d < 0.0;
  if (c.thermal) {
    c.kB_T_over_hbar_kappa = 1.0 / (c.beta_hbar * k);
    c.tau_c_free = std::sqrt(c.beta_hbar / p.omega_r) * k;
  } else {
    c.kB_T_over_hbar_kappa = std::numeric_limits<double>::quiet_NaN();
    c.tau_c_free = std::numeric_limits<double>::quiet_NaN();
  }
  return c;
}

double steady_temperature(const PhysicalParams& p) {
  if (!(p.delta_c < 0.0))
    throw ConfigError("steady temperature requires red detuning (delta_c < 0)");
  const double d = p.detuning_over_kappa();
  return (d * d + 1.0) / (-4.0 * d);
}

double thermal_momentum_variance(const PhysicalParams& p) {
  return steady_temperature(p) / (2.0 * p.recoil_over_kappa());
}

ConfigMap parse_config(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool known = false;
    for (const char* k : kConfigKeys) known = known || key == k;
    if (!known) throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (value.empty()) throw ConfigError("config key '" + key + "' has no value");
    if (out.count(key)) throw ConfigError("config key '" + key + "' given twice");
    out[key] = value;
  }
  return out;
}

ConfigMap read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ConfigMap default_config() {
  return {{"kappa_hz", "1.5e6"},        {"detuning_over_kappa", "-1"}, {"omega_r_hz", "3.86e3"},
          {"n_atoms", "20"},            {"nbar_over_nbar_c", "0.01"},  {"nu_over_kappa", "-0.05"},
          {"include_eta_noise", "true"}};
}

PhysicalParams params_from_config(const ConfigMap& cfg) {
  double kappa_hz = 1.5e6;
  double omega_r_hz = 3.86e3;
  double det = -1.0;
  int n = 20;
  double ratio = 0.01;
  double nu = -0.05;
  bool eta = true;
  for (const auto& [key, v] : cfg) {
    if (key == "kappa_hz") kappa_hz = to_double(key, v);
    else if (key == "omega_r_hz") omega_r_hz = to_double(key, v);
    else if (key == "detuning_over_kappa") det = to_double(key, v);
    else if (key == "nbar_over_nbar_c") ratio = to_double(key, v);
    else if (key == "nu_over_kappa") nu = to_double(key, v);
    else if (key == "include_eta_noise") eta = to_bool(key, v);
    else if (key == "n_atoms") {
      const double x = to_double(key, v);
      if (x != std::floor(x) || x < 1 || x > 1e7) throw ConfigError("n_atoms must be a positive integer");
      n = static_cast<int>(x);
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  if (!(kappa_hz > 0.0)) throw ConfigError("kappa_hz must be positive");
  if (det == 0.0) throw ConfigError("detuning_over_kappa must be nonzero");
  if (!(ratio >= 0.0)) throw ConfigError("nbar_over_nbar_c must be >= 0");

  PhysicalParams p;
  p.kappa = kTwoPi * kappa_hz;
  p.delta_c = det * p.kappa;
  p.omega_r = kTwoPi * omega_r_hz;
  p.n_atoms = n;
  p.nu_over_kappa = nu;
  p.include_eta_noise = eta;
  p.nbar = ratio * p.nbar_c();
  validate(p);
  return p;
}

}  // namespace selforg
