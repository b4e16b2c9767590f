#include "selforg/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "selforg/equilibrium.hpp"
#include "selforg/observables.hpp"

namespace selforg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string abort_message(int traj, std::int64_t step, int atom, const std::string& what) {
  return "numerical abort in trajectory " + std::to_string(traj) + " at step " +
         std::to_string(step) + ", atom " + std::to_string(atom) + ": " + what;
}

}  // namespace

NumericalAbort::NumericalAbort(int traj, std::int64_t st, int at, const std::string& what)
    : std::runtime_error(abort_message(traj, st, at, what)), trajectory(traj), step(st), atom(at) {}

InitialCondition parse_initial_condition(const std::string& s) {
  if (s == "thermal" || s == "uniform_thermal") return InitialCondition::UniformThermal;
  if (s == "stationary" || s == "stationary_resample") return InitialCondition::StationaryResample;
  if (s == "explicit") return InitialCondition::Explicit;
  throw ConfigError("unknown initial condition '" + s + "' (thermal|stationary|explicit)");
}

const char* to_string(InitialCondition c) {
  switch (c) {
    case InitialCondition::UniformThermal: return "uniform_thermal";
    case InitialCondition::StationaryResample: return "stationary_resample";
    case InitialCondition::Explicit: return "explicit";
  }
  return "?";
}

void validate(const IntegratorConfig& cfg) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("dt must be positive");
  if (cfg.record_stride < 1) throw ConfigError("record_stride must be >= 1");
  if (!(cfg.t_total >= 0.0) || !std::isfinite(cfg.t_total)) throw ConfigError("t_total must be >= 0");
  if (cfg.t_burn_in > cfg.t_total) throw ConfigError("t_burn_in must not exceed t_total");
}

double default_burn_in(const PhysicalParams& p, double t_total) {
  const double d = p.detuning_over_kappa();
  const double rate = std::abs(8.0 * p.recoil_over_kappa() * d / (d * d + 1.0) * p.nbar);
  const double cap = 0.5 * t_total;
  if (!(rate > 0.0)) return cap;
  return std::min(10.0 / rate, cap);
}

void drift(const PhysicalParams& p, const double* theta, const double* mom, int n, double* dtheta,
           double* dmom) {
  const double d = p.detuning_over_kappa();
  const double w = p.recoil_over_kappa();
  const double mod2 = d * d + 1.0;
  double sc = 0.0, sc2 = 0.0, ssp = 0.0;
  for (int j = 0; j < n; ++j) {
    const double c = std::cos(theta[j]);
    sc += c;
    sc2 += c * c;
    ssp += std::sin(theta[j]) * mom[j];
  }
  const double big_theta = sc / n;
  const double bunch = sc2 / n;
  const double mean_sin_mom = ssp / n;
  const double gamma_over_kappa = 8.0 * w * d / mod2;
  for (int j = 0; j < n; ++j) {
    const double s = std::sin(theta[j]);
    const double c = std::cos(theta[j]);
    const double delta_u =
        1.0 + (p.nu_over_kappa / d) * ((d * d - 1.0) / mod2 * bunch + big_theta * c);
    dtheta[j] = 2.0 * w * mom[j];
    dmom[j] = 2.0 * d * p.nbar * big_theta * s * delta_u + gamma_over_kappa * p.nbar * s * mean_sin_mom;
  }
}

NoiseAmplitudes noise_amplitudes(const PhysicalParams& p, double dt) {
  NoiseAmplitudes a;
  const double n = p.n_atoms;
  const double diff = 2.0 * p.nbar / n;  // <dp_i dp_j> = diff sin_i sin_j dt
  a.mom_amp = std::sqrt(diff * dt);
  const double d = p.detuning_over_kappa();
  if (p.include_eta_noise && d != -1.0 && diff > 0.0) {
    // <dtheta_i dp_j> = cross sin_i sin_j dt; minimal completion puts
    // dtheta on the same normal as dp.
    const double cross = 2.0 * p.recoil_over_kappa() * (p.nbar / n) * (1.0 - d * d) / (d * d + 1.0);
    a.theta_amp = cross / std::sqrt(diff) * std::sqrt(dt);
  }
  return a;
}

void noise_increments(const PhysicalParams& p, const double* theta, int n, double dt,
                      std::mt19937_64& rng, double* dtheta, double* dmom) {
  const NoiseAmplitudes a = noise_amplitudes(p, dt);
  std::normal_distribution<double> normal;
  const double w = normal(rng);
  for (int j = 0; j < n; ++j) {
    const double s = std::sin(theta[j]);
    dtheta[j] = s * a.theta_amp * w;
    dmom[j] = s * a.mom_amp * w;
  }
}

TrajectoryStepper::TrajectoryStepper(const PhysicalParams& p, double dt, const kernels::KernelTable& k)
    : kern_(k), n_(p.n_atoms), dt_(dt) {
  const double d = p.detuning_over_kappa();
  const double w = p.recoil_over_kappa();
  const double mod2 = d * d + 1.0;
  velocity_ = 2.0 * w;
  force_theta_ = 2.0 * d * p.nbar;
  force_bunch_ = (p.nu_over_kappa / d) * (d * d - 1.0) / mod2;
  force_nu_ = 2.0 * p.nbar * p.nu_over_kappa;
  friction_ = 8.0 * w * d / mod2 * p.nbar;
  noise_ = noise_amplitudes(p, dt);
  for (auto* v : {&theta_, &mom_, &sin0_, &cos0_, &sin1_, &cos1_, &theta_pred_, &mom_pred_, &force0_})
    v->assign(n_, 0.0);
}

void TrajectoryStepper::reset(std::vector<double> theta, std::vector<double> mom) {
  if (static_cast<int>(theta.size()) != n_ || static_cast<int>(mom.size()) != n_)
    throw std::invalid_argument("TrajectoryStepper::reset: state size does not match N");
  theta_ = std::move(theta);
  mom_ = std::move(mom);
  m0_ = kern_.moments(theta_.data(), mom_.data(), sin0_.data(), cos0_.data(), n_);
}

void TrajectoryStepper::coefficients(const kernels::Moments& m, kernels::StepCoeffs& k) const {
  const double big_theta = m.sum_cos / n_;
  const double bunch = m.sum_cos2 / n_;
  k.force0 = force_theta_ * big_theta * (1.0 + force_bunch_ * bunch) + friction_ * m.sum_sin_mom / n_;
  k.force1 = force_nu_ * big_theta * big_theta;
}

void TrajectoryStepper::step(double w) {
  kernels::StepCoeffs k;
  k.velocity = velocity_;
  k.dt = dt_;
  k.noise_theta = noise_.theta_amp * w;
  k.noise_mom = noise_.mom_amp * w;

  coefficients(m0_, k);
  kern_.predict(theta_.data(), mom_.data(), sin0_.data(), cos0_.data(), n_, k, theta_pred_.data(),
                mom_pred_.data(), force0_.data());
  const kernels::Moments m1 =
      kern_.moments(theta_pred_.data(), mom_pred_.data(), sin1_.data(), cos1_.data(), n_);
  coefficients(m1, k);
  kern_.correct(theta_.data(), mom_.data(), sin0_.data(), force0_.data(), mom_pred_.data(),
                sin1_.data(), cos1_.data(), n_, k, theta_.data(), mom_.data());
  m0_ = kern_.moments(theta_.data(), mom_.data(), sin0_.data(), cos0_.data(), n_);
}

int TrajectoryStepper::first_non_finite() const {
  if (std::isfinite(m0_.sum_cos) && std::isfinite(m0_.sum_mom2)) return -1;
  for (int j = 0; j < n_; ++j)
    if (!std::isfinite(theta_[j]) || !std::isfinite(mom_[j])) return j;
  return 0;
}

std::mt19937_64 trajectory_rng(std::uint64_t seed, int trajectory) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trajectory)};
  return std::mt19937_64(seq);
}

namespace {

struct TrajectoryJob {
  const PhysicalParams& p;
  const IntegratorConfig& cfg;
  const kernels::KernelTable& kern;
  std::uint64_t seed;
  std::int64_t burn_steps;
  std::int64_t total_steps;
  std::size_t n_records;
};

void initial_state(const TrajectoryJob& job, int m, std::mt19937_64& rng, std::vector<double>& theta,
                   std::vector<double>& mom) {
  const int n = job.p.n_atoms;
  theta.assign(n, 0.0);
  mom.assign(n, 0.0);
  const auto& cfg = job.cfg;
  if (cfg.initial_condition == InitialCondition::Explicit) {
    const std::size_t off = cfg.initial_theta.size() == static_cast<std::size_t>(n) ? 0 : std::size_t(m) * n;
    std::copy_n(cfg.initial_theta.begin() + off, n, theta.begin());
    const std::size_t offp = cfg.initial_mom.size() == static_cast<std::size_t>(n) ? 0 : std::size_t(m) * n;
    std::copy_n(cfg.initial_mom.begin() + offp, n, mom.begin());
    return;
  }
  if (cfg.initial_condition == InitialCondition::StationaryResample) {
    theta = sample_stationary_positions(n, job.p.nbar_ratio(), rng);
  } else {
    std::uniform_real_distribution<double> uni(0.0, kTwoPi);
    for (double& x : theta) x = uni(rng);
  }
  std::normal_distribution<double> normal(0.0, std::sqrt(thermal_momentum_variance(job.p)));
  for (double& x : mom) x = normal(rng);
}

void record(const PhysicalParams& p, const TrajectoryStepper& st, bool atoms, TrajectorySeries& out) {
  const kernels::Moments& m = st.moments();
  const double n = p.n_atoms;
  const double big_theta = m.sum_cos / n;
  const double bunch = m.sum_cos2 / n;
  const double theta_dot = -2.0 * p.recoil_over_kappa() * m.sum_sin_mom / n;
  out.theta.push_back(big_theta);
  out.bunching.push_back(bunch);
  out.theta_dot.push_back(theta_dot);
  out.mom_sq.push_back(m.sum_mom2 / n);
  out.field.push_back(cavity_field(p, big_theta, bunch, theta_dot, true));
  if (atoms) {
    out.atom_theta.insert(out.atom_theta.end(), st.theta().begin(), st.theta().end());
    out.atom_mom.insert(out.atom_mom.end(), st.mom().begin(), st.mom().end());
  }
}

void run_trajectory(const TrajectoryJob& job, int m, TrajectorySeries& series, double* theta_out,
                    double* mom_out) {
  std::mt19937_64 rng = trajectory_rng(job.seed, m);
  std::vector<double> theta, mom;
  initial_state(job, m, rng, theta, mom);

  TrajectoryStepper st(job.p, job.cfg.dt, job.kern);
  st.reset(std::move(theta), std::move(mom));
  if (int j = st.first_non_finite(); j >= 0) throw NumericalAbort(m, 0, j, "non-finite initial state");

  for (auto* v : {&series.theta, &series.bunching, &series.theta_dot, &series.mom_sq})
    v->reserve(job.n_records);
  series.field.reserve(job.n_records);

  std::normal_distribution<double> normal;
  const std::int64_t stride = job.cfg.record_stride;
  for (std::int64_t s = 0;; ++s) {
    if (s >= job.burn_steps && (s - job.burn_steps) % stride == 0)
      record(job.p, st, job.cfg.record_atoms, series);
    if (s == job.total_steps) break;
    st.step(normal(rng));
    if (int j = st.first_non_finite(); j >= 0)
      throw NumericalAbort(m, s + 1, j, "non-finite position or momentum");
  }
  std::copy(st.theta().begin(), st.theta().end(), theta_out);
  std::copy(st.mom().begin(), st.mom().end(), mom_out);
}

}  // namespace

EnsembleResult run_ensemble(const PhysicalParams& p, const IntegratorConfig& cfg, int n_trajectories,
                            std::uint64_t seed) {
  validate(p);
  validate(cfg);
  if (n_trajectories < 1) throw ConfigError("trajectory count must be >= 1");
  const int n = p.n_atoms;
  if (cfg.initial_condition == InitialCondition::Explicit) {
    const auto ok = [&](std::size_t sz) {
      return sz == static_cast<std::size_t>(n) || sz == static_cast<std::size_t>(n) * n_trajectories;
    };
    if (!ok(cfg.initial_theta.size()) || !ok(cfg.initial_mom.size()))
      throw ConfigError("explicit initial state must have N or M*N entries");
  } else if (!(p.delta_c < 0.0)) {
    throw ConfigError("thermal initial conditions require red detuning (delta_c < 0)");
  }

  const kernels::KernelTable& kern = kernels::select_kernels(cfg.kernel);
  EnsembleResult res;
  res.kernel_name = kern.name;
  res.t_burn_in = cfg.t_burn_in < 0.0 ? default_burn_in(p, cfg.t_total) : cfg.t_burn_in;

  const std::int64_t total_steps = std::llround(cfg.t_total / cfg.dt);
  const std::int64_t burn_steps = std::min<std::int64_t>(total_steps, std::llround(res.t_burn_in / cfg.dt));
  const std::size_t n_records = static_cast<std::size_t>((total_steps - burn_steps) / cfg.record_stride + 1);
  TrajectoryJob job{p, cfg, kern, seed, burn_steps, total_steps, n_records};

  res.series.n_atoms = n;
  res.series.time.resize(n_records);
  for (std::size_t r = 0; r < n_records; ++r)
    res.series.time[r] = static_cast<double>(burn_steps + static_cast<std::int64_t>(r) * cfg.record_stride) * cfg.dt;
  res.series.trajectories.resize(n_trajectories);

  EnsembleState& fs = res.final_state;
  fs.n_trajectories = n_trajectories;
  fs.n_atoms = n;
  fs.theta.assign(static_cast<std::size_t>(n) * n_trajectories, 0.0);
  fs.mom.assign(fs.theta.size(), 0.0);
  fs.time = static_cast<double>(total_steps) * cfg.dt;
  fs.seed = seed;

  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n_trajectories));

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const auto worker = [&]() {
    for (;;) {
      const int m = next.fetch_add(1);
      if (m >= n_trajectories || failed.load()) return;
      try {
        run_trajectory(job, m, res.series.trajectories[m], fs.theta_of(m), fs.mom_of(m));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed = true;
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return res;
}

}  // namespace selforg
