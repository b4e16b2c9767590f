#include "selforg/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace selforg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kTargetAcceptance = 0.4;

// Single-atom Metropolis chain on exp(r N Theta^2) with an incrementally
// maintained sum of cosines.
class ThetaChain {
 public:
  ThetaChain(int n, double r, double width, std::mt19937_64& rng)
      : n_(n), coupling_(r / n), width_(width), rng_(rng), pos_(n) {
    std::uniform_real_distribution<double> uni(0.0, kTwoPi);
    for (double& x : pos_) x = uni(rng_);
    resum();
  }

  // N single-atom updates; returns the number accepted.
  int sweep() {
    std::uniform_int_distribution<int> pick(0, n_ - 1);
    std::uniform_real_distribution<double> step(-0.5, 0.5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int accepted = 0;
    for (int k = 0; k < n_; ++k) {
      const int j = pick(rng_);
      double trial = pos_[j] + width_ * step(rng_);
      trial -= kTwoPi * std::floor(trial / kTwoPi);
      const double new_sum = sum_cos_ + std::cos(trial) - std::cos(pos_[j]);
      // r N Theta^2 = (r/N) (sum cos)^2
      const double dlog = coupling_ * (new_sum * new_sum - sum_cos_ * sum_cos_);
      if (dlog >= 0.0 || unit(rng_) < std::exp(dlog)) {
        pos_[j] = trial;
        sum_cos_ = new_sum;
        ++accepted;
      }
    }
    resum();
    return accepted;
  }

  void adapt(double acceptance) {
    width_ *= std::exp(acceptance - kTargetAcceptance);
    width_ = std::clamp(width_, 0.01, kTwoPi);
  }

  double theta() const { return sum_cos_ / n_; }
  double width() const { return width_; }
  const std::vector<double>& positions() const { return pos_; }

 private:
  void resum() {
    sum_cos_ = 0.0;
    for (double x : pos_) sum_cos_ += std::cos(x);
  }

  int n_;
  double coupling_;
  double width_;
  std::mt19937_64& rng_;
  std::vector<double> pos_;
  double sum_cos_ = 0.0;
};

void burn_in(ThetaChain& chain, std::int64_t sweeps, int n) {
  for (std::int64_t s = 0; s < sweeps; ++s) {
    const int acc = chain.sweep();
    chain.adapt(static_cast<double>(acc) / n);
  }
}

}  // namespace

double fixed_point(double r) {
  if (!(r > 1.0)) return 0.0;
  const auto g = [r](double t) { return bessel_ratio(2.0 * r * t) - t; };
  double lo = std::min(0.5 * std::sqrt(2.0 * (r - 1.0)), 0.5);
  while (g(lo) <= 0.0 && lo > 1e-300) lo *= 0.5;
  double hi = 1.0 - 1e-9;
  if (g(hi) >= 0.0) return hi;

  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double gt = g(t);
    if (gt == 0.0) return t;
    if (gt > 0.0) lo = t;
    else hi = t;
    const double y = 2.0 * r * t;
    const double q = bessel_ratio(y);
    const double dg = 2.0 * r * (1.0 - q / y - q * q) - 1.0;
    double next = t - gt / dg;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) < 1e-16) return next;
    t = next;
  }
  return t;
}

double free_energy(double theta, double r) {
  const double gamma = inverse_bessel_ratio(theta);
  return -r * theta * theta + gamma * theta - log_bessel_i0(gamma);
}

double landau_free_energy(double theta, double r) {
  const double t2 = theta * theta;
  return (1.0 - r) * t2 + 0.25 * t2 * t2;
}

double log_density_of_states(double theta, int n_atoms) {
  if (n_atoms < 1) throw std::invalid_argument("log_density_of_states: N must be >= 1");
  const double gamma = inverse_bessel_ratio(theta);
  // Variance of cos(theta) under the tilted single-atom weight exp(gamma cos).
  double var;
  if (gamma == 0.0) {
    var = 0.5;
  } else {
    const double q = bessel_ratio(gamma);
    var = 1.0 - q / gamma - theta * theta;
  }
  const double n = n_atoms;
  return 0.5 * std::log(n / kTwoPi) - 0.5 * std::log(std::abs(var)) +
         n * (log_bessel_i0(gamma) - gamma * theta);
}

Histogram make_histogram(const std::vector<double>& values, int bins, double lo, double hi) {
  if (bins < 1 || !(hi > lo)) throw std::invalid_argument("make_histogram: bad binning");
  Histogram h;
  h.edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) h.edges[b] = lo + (hi - lo) * b / bins;
  h.counts.assign(bins, 0);
  h.density.assign(bins, 0.0);
  for (double v : values) {
    if (!(v >= lo && v <= hi)) continue;
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    h.counts[std::min(b, bins - 1)]++;
  }
  if (!values.empty()) {
    const double w = (hi - lo) / bins;
    for (int b = 0; b < bins; ++b)
      h.density[b] = static_cast<double>(h.counts[b]) / (values.size() * w);
  }
  return h;
}

MetropolisResult metropolis_p_theta(const MetropolisConfig& cfg) {
  if (cfg.samples <= 0) throw std::invalid_argument("metropolis_p_theta: samples must be positive");
  if (cfg.n_atoms < 1) throw std::invalid_argument("metropolis_p_theta: N must be >= 1");
  std::mt19937_64 rng(cfg.seed);
  ThetaChain chain(cfg.n_atoms, cfg.nbar_ratio, cfg.proposal_width, rng);
  burn_in(chain, cfg.burn_in_sweeps, cfg.n_atoms);

  MetropolisResult out;
  out.samples.reserve(cfg.samples);
  std::int64_t accepted = 0;
  for (std::int64_t s = 0; s < cfg.samples; ++s) {
    accepted += chain.sweep();
    out.samples.push_back(chain.theta());
  }
  out.acceptance = static_cast<double>(accepted) / (static_cast<double>(cfg.samples) * cfg.n_atoms);
  out.proposal_width = chain.width();
  out.histogram = make_histogram(out.samples, cfg.bins);
  return out;
}

std::vector<double> sample_stationary_positions(int n_atoms, double r, std::mt19937_64& rng,
                                                std::int64_t sweeps) {
  ThetaChain chain(n_atoms, r, 1.0, rng);
  burn_in(chain, sweeps, n_atoms);
  return chain.positions();
}

double BelowThresholdEstimates::correlation(double tau) const {
  const double x = tau / tau_c_free;
  return theta_sq * std::exp(-x * x);
}

BelowThresholdEstimates below_threshold_estimates(const PhysicalParams& p) {
  const double n = p.n_atoms;
  BelowThresholdEstimates e;
  e.theta_sq = 1.0 / (2.0 * n);
  e.theta_4 = 3.0 * (n - 1.0) / (8.0 * n * n * n);
  e.n_cav = 0.5 * p.nbar;
  e.g2_zero = 3.0 - 3.0 / (2.0 * n);
  e.tau_c_free = derive_coefficients(p).tau_c_free;
  return e;
}

}  // namespace selforg
