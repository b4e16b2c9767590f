#pragma once

// Physical parameters of N laser-driven atoms coupled to one standing-wave
// cavity mode, and the coefficients derived from them.
//
// Internal unit system (used everywhere outside this header):
//   time      in 1/kappa
//   position  as the phase theta = k x (unwrapped)
//   momentum  in units of hbar k
//   energy    in units of hbar kappa
// With these, the free-flight velocity is dtheta/dt = 2 (omega_r/kappa) p.

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace selforg {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PhysicalParams {
  double kappa = 0.0;        // cavity linewidth [rad/s]
  double delta_c = 0.0;      // laser-cavity detuning [rad/s]
  double omega_r = 0.0;      // recoil frequency [rad/s]
  int n_atoms = 1;
  double nbar = 0.0;         // dimensionless pump strength
  double nu_over_kappa = 0.0;
  bool include_eta_noise = true;

  double detuning_over_kappa() const { return delta_c / kappa; }
  double recoil_over_kappa() const { return omega_r / kappa; }
  double nbar_c() const;
  double nbar_ratio() const { return nbar / nbar_c(); }
};

// 85Rb on the D2 line in a kappa = 2pi x 1.5 MHz resonator, Delta_c = -kappa,
// N|U|/kappa = 0.05 with U < 0.
PhysicalParams rb85_reference(int n_atoms = 20, double nbar_ratio = 0.01);

// Same physics, with the pump given relative to threshold and frequencies in
// units of kappa. Throws ConfigError for detuning == 0.
PhysicalParams make_params(double detuning_over_kappa, double recoil_over_kappa, int n_atoms,
                           double nbar_ratio, double nu_over_kappa, bool include_eta_noise = true);

struct DerivedCoefficients {
  double gamma_fric = 0.0;             // Gamma [rad/s], negative means damping
  double beta_hbar = 0.0;              // hbar * beta [s]
  double eta_bar = 0.0;                // [s]
  double nbar_c = 0.0;
  double kB_T_over_hbar_kappa = 0.0;   // NaN when !thermal
  double sigma_N = 0.0;
  double tau_c_free = 0.0;             // [1/kappa], NaN when !thermal
  // False for delta_c >= 0: the steady state is not a positive-temperature
  // Gibbs state and the equilibrium quantities are undefined.
  bool thermal = true;
};

struct ValidationReport {
  std::vector<std::string> warnings;
  // Left and right side of the time-scale separation condition, in kappa units.
  double timescale_lhs = 0.0;
  double timescale_rhs = 0.0;
};

// Throws ConfigError on invariant violations (kappa, omega_r <= 0, N < 1,
// nbar < 0, |NU/kappa| > 0.2). Soft violations land in the warnings.
ValidationReport validate(const PhysicalParams& p);

DerivedCoefficients derive_coefficients(const PhysicalParams& p);

// k_B T / (hbar kappa) = (Delta_c^2 + kappa^2) / (-4 Delta_c kappa).
// Throws ConfigError for delta_c >= 0.
double steady_temperature(const PhysicalParams& p);

// Thermal momentum variance <p^2> in (hbar k)^2: k_B T / (2 hbar omega_r).
double thermal_momentum_variance(const PhysicalParams& p);

// Plain-text "key = value" configuration. Keys (case-sensitive): kappa_hz,
// detuning_over_kappa, omega_r_hz, n_atoms, nbar_over_nbar_c, nu_over_kappa,
// include_eta_noise. '#' starts a comment. Unknown keys are errors.
using ConfigMap = std::map<std::string, std::string>;
ConfigMap read_config_file(const std::filesystem::path& path);
ConfigMap parse_config(const std::string& text);
// Missing keys fall back to rb85_reference().
PhysicalParams params_from_config(const ConfigMap& cfg);
// Every key with its default value; params_from_config(default_config())
// equals params_from_config({}).
ConfigMap default_config();

}  // namespace selforg
