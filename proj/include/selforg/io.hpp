#pragma once

// Plain-text outputs: CSV with a header row and 15 significant digits, JSON
// for summaries and run manifests.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "selforg/dynamics.hpp"
#include "selforg/equilibrium.hpp"
#include "selforg/observables.hpp"
#include "selforg/params.hpp"
#include "selforg/stats.hpp"

namespace selforg::io {

namespace fs = std::filesystem;

// "%.15g"
std::string fmt(double x);

// t,theta,bunching,re_a,im_a,n_phot
void write_trajectory_csv(const fs::path& path, const std::vector<double>& time, const TrajectorySeries& s);
// t,atom,pos,mom
void write_atoms_csv(const fs::path& path, const std::vector<double>& time, const TrajectorySeries& s,
                     int n_atoms);
// omega_over_kappa,power
void write_spectrum_csv(const fs::path& path, const SpectrumEstimate& s);
// tau_kappa,C
void write_correlation_csv(const fs::path& path, const std::vector<double>& corr, double dtau);
// detuning_over_kappa,nbar,theta_star,kBT_over_hbar_kappa
struct PhaseRow {
  double detuning_over_kappa, nbar, theta_star, kbt;
};
void write_phase_csv(const fs::path& path, const std::vector<PhaseRow>& rows);
// theta,betaF_full,betaF_landau
void write_free_energy_csv(const fs::path& path, double nbar_ratio, int points);
// kind,start_kappa_t,length_kappa_t,sign
void write_intervals_csv(const fs::path& path, const std::vector<Interval>& intervals);
// tau_kappa,F
void write_survival_csv(const fs::path& path, const std::vector<std::pair<double, double>>& curve);
// theta_low,theta_high,density
void write_histogram_csv(const fs::path& path, const Histogram& h);

struct Summary {
  double n_cav = 0.0;
  double n_cav_adiabatic = 0.0;
  double g2_zero = 0.0;
  double g2_zero_adiabatic = 0.0;
  double theta_sq_mean = 0.0;
  double mom_sq_mean = 0.0;  // NaN when unavailable
};
void write_summary_json(const fs::path& path, const Summary& s);
Summary read_summary_json(const fs::path& path);

// Fields are read back; theta_dot and mom_sq are not stored in the CSV and
// come back empty.
std::pair<std::vector<double>, TrajectorySeries> read_trajectory_csv(const fs::path& path);

struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  std::uint64_t seed = 0;
  ConfigMap params;                // fully resolved physical configuration
  std::vector<std::pair<std::string, std::string>> settings;  // integrator / grid flags
  std::vector<std::string> files;  // relative to the manifest directory
  std::string kernel;
  std::vector<std::string> warnings;
  double wall_seconds = 0.0;
  std::string started_utc;
};
void write_manifest(const fs::path& path, const Manifest& m);
Manifest read_manifest(const fs::path& path);

// Every physical key, with the values that produced p.
ConfigMap resolved_config(const ConfigMap& given);

const char* code_version();

}  // namespace selforg::io
