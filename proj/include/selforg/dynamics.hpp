#pragma once

// Stochastic integration of the N-atom equations of motion.
//
// Per atom (kappa units, w = omega_r/kappa, delta = Delta_c/kappa):
//   dtheta_j = 2 w p_j dt                          + sin_j b sqrt(dt) W
//   dp_j     = sin_j (f0 + f1 cos_j) dt            + sin_j sqrt(2 nbar dt / N) W
// with f0, f1 functions of Theta, B and (1/N) sum sin_i p_i only. The noise
// matrix is rank one, so one standard normal W per trajectory and step drives
// all atoms. b is nonzero only with include_eta_noise and delta != -1.

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "selforg/kernels.hpp"
#include "selforg/params.hpp"

namespace selforg {

class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(int trajectory, std::int64_t step, int atom, const std::string& what);
  int trajectory;
  std::int64_t step;
  int atom;
};

enum class InitialCondition { UniformThermal, StationaryResample, Explicit };
InitialCondition parse_initial_condition(const std::string& s);
const char* to_string(InitialCondition c);

struct IntegratorConfig {
  double dt = 0.01;
  double t_burn_in = -1.0;  // < 0: default_burn_in()
  double t_total = 1000.0;
  int record_stride = 10;
  InitialCondition initial_condition = InitialCondition::UniformThermal;
  // Explicit initial state: size N (shared by all trajectories) or M*N.
  std::vector<double> initial_theta;
  std::vector<double> initial_mom;
  bool record_atoms = false;
  kernels::KernelChoice kernel = kernels::KernelChoice::Auto;
  unsigned threads = 0;  // 0: hardware concurrency; never affects results
};

// Throws ConfigError on dt <= 0, stride < 1 or inconsistent times.
void validate(const IntegratorConfig& cfg);

// 10 |Gamma nbar / kappa|^-1 capped at t_total/2.
double default_burn_in(const PhysicalParams& p, double t_total);

struct EnsembleState {
  int n_trajectories = 0;
  int n_atoms = 0;
  std::vector<double> theta;  // [m * N + j], unwrapped
  std::vector<double> mom;    // [m * N + j], units of hbar k
  double time = 0.0;
  std::uint64_t seed = 0;

  double* theta_of(int m) { return theta.data() + static_cast<std::size_t>(m) * n_atoms; }
  double* mom_of(int m) { return mom.data() + static_cast<std::size_t>(m) * n_atoms; }
  const double* theta_of(int m) const { return theta.data() + static_cast<std::size_t>(m) * n_atoms; }
  const double* mom_of(int m) const { return mom.data() + static_cast<std::size_t>(m) * n_atoms; }
};

struct TrajectorySeries {
  std::vector<double> theta;
  std::vector<double> bunching;
  std::vector<double> theta_dot;  // d Theta / d(kappa t)
  std::vector<double> mom_sq;     // (1/N) sum p_j^2
  std::vector<std::complex<double>> field;
  // Present only with record_atoms: [record * N + j].
  std::vector<double> atom_theta;
  std::vector<double> atom_mom;
};

// Records on a uniform grid shared by all trajectories.
struct ObservableSeries {
  std::vector<double> time;
  std::vector<TrajectorySeries> trajectories;
  int n_atoms = 0;
  double dt_record() const { return time.size() > 1 ? time[1] - time[0] : 0.0; }
};

// Drift of one configuration of n atoms, written to dtheta/dmom.
void drift(const PhysicalParams& p, const double* theta, const double* mom, int n, double* dtheta,
           double* dmom);

// Per-unit-W noise amplitudes of one step: dtheta_j = sin_j theta_amp W,
// dp_j = sin_j mom_amp W.
struct NoiseAmplitudes {
  double theta_amp = 0.0;
  double mom_amp = 0.0;
};
NoiseAmplitudes noise_amplitudes(const PhysicalParams& p, double dt);

// One draw of the noise increments for a frozen configuration.
void noise_increments(const PhysicalParams& p, const double* theta, int n, double dt,
                      std::mt19937_64& rng, double* dtheta, double* dmom);

// Heun integrator for a single trajectory. Owns its scratch buffers and
// caches the collective sums of the current state between steps.
class TrajectoryStepper {
 public:
  TrajectoryStepper(const PhysicalParams& p, double dt, const kernels::KernelTable& k);

  // Takes ownership of the state vectors (length N).
  void reset(std::vector<double> theta, std::vector<double> mom);
  // One step with the shared standard normal w (w = 0: deterministic Heun).
  void step(double w);

  const std::vector<double>& theta() const { return theta_; }
  const std::vector<double>& mom() const { return mom_; }
  const kernels::Moments& moments() const { return m0_; }

  // Index of the first non-finite atom of the current state, or -1.
  int first_non_finite() const;

 private:
  void coefficients(const kernels::Moments& m, kernels::StepCoeffs& k) const;

  const kernels::KernelTable& kern_;
  int n_;
  double dt_;
  double velocity_;
  double force_theta_;  // 2 delta nbar
  double force_bunch_;  // NU/Delta_c * (delta^2-1)/(delta^2+1)
  double force_nu_;     // 2 nbar NU/kappa
  double friction_;     // Gamma/kappa nbar
  NoiseAmplitudes noise_;
  std::vector<double> theta_, mom_;
  std::vector<double> sin0_, cos0_, sin1_, cos1_, theta_pred_, mom_pred_, force0_;
  kernels::Moments m0_;
};

// Integrates M independent trajectories. Trajectory m uses the stream
// seed_seq{seed lo, seed hi, m}; results do not depend on the thread count.
// Throws NumericalAbort on non-finite state.
struct EnsembleResult {
  ObservableSeries series;
  EnsembleState final_state;
  std::string kernel_name;
  double t_burn_in = 0.0;
};
EnsembleResult run_ensemble(const PhysicalParams& p, const IntegratorConfig& cfg, int n_trajectories,
                            std::uint64_t seed);

std::mt19937_64 trajectory_rng(std::uint64_t seed, int trajectory);

}  // namespace selforg
