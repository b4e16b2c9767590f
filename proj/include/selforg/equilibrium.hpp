#pragma once

// Steady-state thermodynamics of the self-organizing gas.
//
// The steady state is a Gibbs state whose only pump dependence is through
// r = nbar / nbar_c (because -beta hbar Delta_c nbar = r). Every function
// here is expressed in r; the Boltzmann weight of a configuration is
// exp(r N Theta^2).

#include <cstdint>
#include <random>
#include <vector>

#include "selforg/params.hpp"

namespace selforg {

// q(y) = I1(y)/I0(y). Odd, strictly increasing, range (-1, 1), no overflow.
double bessel_ratio(double y);
// log I0(y), finite for every finite y.
double log_bessel_i0(double y);
// Root of q(gamma) = theta, |q(result) - theta| <= 1e-12. Throws
// std::domain_error for |theta| >= 1.
double inverse_bessel_ratio(double theta);

// Largest nonnegative solution of Theta = q(2 r Theta); 0 for r <= 1.
double fixed_point(double nbar_ratio);

// beta (F - F0) per particle, F0 dropped. Throws std::domain_error for
// |theta| >= 1.
double free_energy(double theta, double nbar_ratio);
double landau_free_energy(double theta, double nbar_ratio);

// log of the steepest-descent density of Theta for N uniform positions
// (normalized as a probability density over Theta).
double log_density_of_states(double theta, int n_atoms);

struct Histogram {
  std::vector<double> edges;    // size bins+1
  std::vector<double> density;  // sum density * width == 1
  std::vector<std::uint64_t> counts;

  double width() const { return edges[1] - edges[0]; }
  std::size_t bins() const { return density.size(); }
};

// Uniform bins on [lo, hi]; values outside are dropped from counts but still
// counted in the normalization total.
Histogram make_histogram(const std::vector<double>& values, int bins, double lo = -1.0,
                         double hi = 1.0);

struct MetropolisConfig {
  int n_atoms = 20;
  double nbar_ratio = 0.0;
  std::int64_t samples = 100000;
  std::int64_t burn_in_sweeps = 2000;
  double proposal_width = 1.0;  // initial width; adapted toward 40% acceptance during burn-in
  int bins = 200;
  std::uint64_t seed = 1;
};

struct MetropolisResult {
  std::vector<double> samples;  // one Theta per sweep of N single-atom updates
  Histogram histogram;
  double acceptance = 0.0;      // post-burn-in acceptance ratio
  double proposal_width = 0.0;  // width after adaptation
};

// Samples P_N(Theta_0) proportional to exp(r N Theta^2) over uniformly
// distributed positions. Throws std::invalid_argument for samples <= 0.
MetropolisResult metropolis_p_theta(const MetropolisConfig& cfg);

// One equilibrated configuration of N positions, for stationary initial
// conditions. Uses the same chain as metropolis_p_theta.
std::vector<double> sample_stationary_positions(int n_atoms, double nbar_ratio,
                                                std::mt19937_64& rng,
                                                std::int64_t sweeps = 2000);

struct BelowThresholdEstimates {
  double theta_sq = 0.0;    // 1/(2N)
  double theta_4 = 0.0;     // 3(N-1)/(8N^3)
  double n_cav = 0.0;       // nbar/2
  double g2_zero = 0.0;     // 3 - 3/(2N)
  double tau_c_free = 0.0;  // [1/kappa]

  // sigma_N^2 exp(-(tau/tau_c)^2)
  double correlation(double tau) const;
};

BelowThresholdEstimates below_threshold_estimates(const PhysicalParams& p);

}  // namespace selforg
