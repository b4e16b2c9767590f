// Command-line front end: simulate, phase-diagram, equilibrium, analyze,
// spectrum, and rerun (replay a manifest).
//
// Exit codes: 0 success, 1 other failure, 2 configuration error, 3 numerical
// abort.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "selforg/dynamics.hpp"
#include "selforg/equilibrium.hpp"
#include "selforg/io.hpp"
#include "selforg/observables.hpp"
#include "selforg/params.hpp"
#include "selforg/stats.hpp"

namespace fs = std::filesystem;
using namespace selforg;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::string out = ".";
  unsigned threads = 0;
  std::string kernel = "auto";
};

// Physical overrides; flags win over the config file.
struct Physics {
  ConfigMap overrides;
  std::optional<double> recoil_over_kappa;
  std::optional<double> nbar_absolute;
};

struct IntegratorFlags {
  int trajectories = 10;
  double tmax = 1000.0;
  double dt = 0.01;
  double burn_in = -1.0;
  int record_stride = 10;
  std::string init = "thermal";
  std::string init_state;
};

struct PeakOpts {
  bool hann = false;
  int smooth_half = 2;           // central width, in bins
  double sideband_width = 0.01;  // smoothing window for sidebands [kappa]
};

// Set by `rerun`: the manifest's resolved configuration replaces the config file.
std::optional<ConfigMap> g_base_config;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string num(double x) { return io::fmt(x); }

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "key = value configuration file");
  app->add_option("--seed", c.seed, "base seed (U64)");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--threads", c.threads, "worker threads (0: all cores); never changes results");
  app->add_option("--kernel", c.kernel, "auto | scalar | avx2")->check(CLI::IsMember({"auto", "scalar", "avx2"}));
}

void add_physics(CLI::App* app, Physics& ph) {
  auto key = [&](const char* flag, const char* k, const char* help) {
    app->add_option_function<std::string>(flag, [&ph, k](const std::string& v) { ph.overrides[k] = v; }, help);
  };
  key("--nbar-ratio", "nbar_over_nbar_c", "pump strength nbar / nbar_c");
  key("--atoms", "n_atoms", "atom number N");
  key("--kappa-hz", "kappa_hz", "cavity linewidth kappa [rad/s]");
  key("--omega-r-hz", "omega_r_hz", "recoil frequency [rad/s]");
  key("--detuning", "detuning_over_kappa", "Delta_c / kappa");
  key("--nu-over-kappa", "nu_over_kappa", "N U / kappa");
  app->add_option_function<double>(
      "--recoil-over-kappa", [&ph](double v) { ph.recoil_over_kappa = v; }, "omega_r / kappa");
  app->add_option_function<double>(
      "--nbar", [&ph](double v) { ph.nbar_absolute = v; }, "absolute pump strength nbar");
  app->add_flag_function(
      "--no-eta-noise", [&ph](std::int64_t) { ph.overrides["include_eta_noise"] = "false"; },
      "drop the position noise channel");
}

void add_integrator(CLI::App* app, IntegratorFlags& f) {
  app->add_option("--trajectories", f.trajectories, "ensemble size M");
  app->add_option("--tmax", f.tmax, "total time [1/kappa]");
  app->add_option("--dt", f.dt, "time step [1/kappa]");
  app->add_option("--burn-in", f.burn_in, "discarded initial time [1/kappa]; default 10/|Gamma nbar|");
  app->add_option("--record-stride", f.record_stride, "steps between records");
  app->add_option("--init", f.init, "thermal | stationary | explicit")
      ->check(CLI::IsMember({"thermal", "stationary", "explicit"}));
  app->add_option("--init-state", f.init_state, "CSV pos,mom with N or M*N rows (for --init explicit)");
}

ConfigMap resolve_config(const Common& c, const Physics& ph) {
  ConfigMap given = g_base_config ? *g_base_config : ConfigMap{};
  if (!c.config.empty()) {
    if (!fs::exists(c.config)) throw ConfigError("config file not found: " + c.config);
    for (const auto& [k, v] : read_config_file(c.config)) given[k] = v;
  }
  for (const auto& [k, v] : ph.overrides) given[k] = v;
  ConfigMap cfg = io::resolved_config(given);
  if (ph.recoil_over_kappa) cfg["omega_r_hz"] = num(*ph.recoil_over_kappa * std::stod(cfg.at("kappa_hz")));
  if (ph.nbar_absolute) {
    // nbar_c depends only on the detuning
    const auto p = params_from_config(cfg);
    cfg["nbar_over_nbar_c"] = num(*ph.nbar_absolute / p.nbar_c());
  }
  return cfg;
}

PhysicalParams checked_params(const ConfigMap& cfg, std::vector<std::string>& warnings) {
  const auto p = params_from_config(cfg);
  for (auto& w : validate(p).warnings) warnings.push_back(std::move(w));
  return p;
}

IntegratorConfig integrator_config(const IntegratorFlags& f, const Common& c, int n_atoms) {
  IntegratorConfig cfg;
  cfg.dt = f.dt;
  cfg.t_total = f.tmax;
  cfg.t_burn_in = f.burn_in;
  cfg.record_stride = f.record_stride;
  cfg.initial_condition = parse_initial_condition(f.init);
  cfg.kernel = kernels::parse_kernel_choice(c.kernel);
  cfg.threads = c.threads;
  if (cfg.initial_condition == InitialCondition::Explicit) {
    if (f.init_state.empty()) throw ConfigError("--init explicit needs --init-state");
    std::ifstream in(f.init_state);
    if (!in) throw ConfigError("cannot read " + f.init_state);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw ConfigError(f.init_state + ": expected pos,mom");
      cfg.initial_theta.push_back(std::stod(line.substr(0, comma)));
      cfg.initial_mom.push_back(std::stod(line.substr(comma + 1)));
    }
    if (cfg.initial_theta.empty() || cfg.initial_theta.size() % n_atoms != 0)
      throw ConfigError(f.init_state + ": row count must be N or M*N");
  }
  validate(cfg);
  return cfg;
}

std::vector<std::pair<std::string, std::string>> integrator_settings(const IntegratorFlags& f,
                                                                     const IntegratorConfig& cfg,
                                                                     double burn_in) {
  return {{"trajectories", std::to_string(f.trajectories)},
          {"dt", num(cfg.dt)},
          {"t_total", num(cfg.t_total)},
          {"t_burn_in", num(burn_in)},
          {"record_stride", std::to_string(cfg.record_stride)},
          {"initial_condition", to_string(cfg.initial_condition)},
          {"init_state", f.init_state}};
}

struct Run {
  io::Manifest m;
  fs::path dir;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  Run(const std::string& command, const std::vector<std::string>& argv, const Common& c) : dir(c.out) {
    m.command = command;
    m.argv = argv;
    m.seed = c.seed;
    m.started_utc = utc_now();
    fs::create_directories(dir);
  }
  void file(const std::string& name) { m.files.push_back(name); }
  void finish() {
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& w : m.warnings) std::cerr << "warning: " << w << '\n';
    io::write_manifest(dir / "manifest.json", m);
  }
};

std::string indexed(const char* stem, int i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04d.csv", stem, i);
  return buf;
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  Common c;
  Physics ph;
  IntegratorFlags f;
  bool atoms_dump = false;
  int bins = 200;
};

void cmd_simulate(const SimulateOpts& o, const std::vector<std::string>& argv) {
  Run run("simulate", argv, o.c);
  run.m.params = resolve_config(o.c, o.ph);
  const auto p = checked_params(run.m.params, run.m.warnings);
  auto cfg = integrator_config(o.f, o.c, p.n_atoms);
  cfg.record_atoms = o.atoms_dump;
  if (o.f.trajectories < 1) throw ConfigError("--trajectories must be >= 1");

  const auto res = run_ensemble(p, cfg, o.f.trajectories, o.c.seed);
  run.m.kernel = res.kernel_name;
  run.m.settings = integrator_settings(o.f, cfg, res.t_burn_in);
  run.m.settings.emplace_back("atoms_dump", o.atoms_dump ? "true" : "false");
  run.m.settings.emplace_back("bins", std::to_string(o.bins));

  const auto& s = res.series;
  std::vector<double> all_theta;
  for (int m = 0; m < o.f.trajectories; ++m) {
    const auto& tr = s.trajectories[m];
    io::write_trajectory_csv(run.dir / indexed("trajectory", m), s.time, tr);
    run.file(indexed("trajectory", m));
    if (o.atoms_dump) {
      io::write_atoms_csv(run.dir / indexed("atoms", m), s.time, tr, p.n_atoms);
      run.file(indexed("atoms", m));
    }
    all_theta.insert(all_theta.end(), tr.theta.begin(), tr.theta.end());
  }
  io::write_histogram_csv(run.dir / "theta_histogram.csv", make_histogram(all_theta, o.bins));
  run.file("theta_histogram.csv");

  const auto ph = mean_photon_number(p, s);
  const auto g = g2_zero(s);
  io::write_summary_json(run.dir / "summary.json",
                         {ph.n_cav, ph.n_cav_adiabatic, g.g2, g.g2_adiabatic, mean_theta_sq(s), mean_mom_sq(s)});
  run.file("summary.json");
  run.finish();
}

// ----------------------------------------------------------- phase-diagram

struct PhaseOpts {
  Common c;
  double det_min = -5.0, det_max = -0.1;
  int det_steps = 50;
  double nbar_min = 0.0, nbar_max = 2.0;
  int nbar_steps = 41;
};

std::vector<double> linspace(double lo, double hi, int n, const char* what) {
  if (n < 1) throw ConfigError(std::string(what) + ": steps must be >= 1");
  if (lo > hi) throw ConfigError(std::string(what) + ": min exceeds max");
  if (n == 1) return {lo};
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

void cmd_phase_diagram(const PhaseOpts& o, const std::vector<std::string>& argv) {
  Run run("phase-diagram", argv, o.c);
  const auto dets = linspace(o.det_min, o.det_max, o.det_steps, "detuning grid");
  const auto nbars = linspace(o.nbar_min, o.nbar_max, o.nbar_steps, "nbar grid");
  if (dets.back() >= 0.0) throw ConfigError("detuning grid must be red (< 0): the steady state is thermal only there");
  if (nbars.front() < 0.0) throw ConfigError("nbar grid must be >= 0");
  std::vector<io::PhaseRow> rows;
  for (double d : dets) {
    const auto p = make_params(d, 1e-3, 1, 1.0, 0.0);
    const double t = steady_temperature(p);
    for (double nb : nbars) rows.push_back({d, nb, fixed_point(nb / p.nbar_c()), t});
  }
  io::write_phase_csv(run.dir / "phase_diagram.csv", rows);
  run.file("phase_diagram.csv");
  run.m.settings = {{"detuning_min", num(o.det_min)}, {"detuning_max", num(o.det_max)},
                    {"detuning_steps", std::to_string(o.det_steps)}, {"nbar_min", num(o.nbar_min)},
                    {"nbar_max", num(o.nbar_max)}, {"nbar_steps", std::to_string(o.nbar_steps)}};
  run.finish();
}

// ------------------------------------------------------------- equilibrium

struct EquilibriumOpts {
  Common c;
  Physics ph;
  std::int64_t samples = 100000;
  std::int64_t burn_in_sweeps = 2000;
  int bins = 200;
  int points = 400;
  double max_tau = 100.0;
};

void cmd_equilibrium(const EquilibriumOpts& o, const std::vector<std::string>& argv) {
  Run run("equilibrium", argv, o.c);
  run.m.params = resolve_config(o.c, o.ph);
  const auto p = checked_params(run.m.params, run.m.warnings);
  const double r = p.nbar_ratio();
  if (o.points < 2) throw ConfigError("--points must be >= 2");

  MetropolisConfig mc;
  mc.n_atoms = p.n_atoms;
  mc.nbar_ratio = r;
  mc.samples = o.samples;
  mc.burn_in_sweeps = o.burn_in_sweeps;
  mc.bins = o.bins;
  mc.seed = o.c.seed;
  if (mc.samples < 1) throw ConfigError("--samples must be >= 1");
  const auto res = metropolis_p_theta(mc);
  io::write_histogram_csv(run.dir / "p_theta_histogram.csv", res.histogram);
  run.file("p_theta_histogram.csv");

  // Steepest-descent P_N(Theta) ~ Omega(Theta) exp(r N Theta^2), normalized on the grid.
  {
    std::vector<double> th, logp;
    for (int i = 0; i < o.points; ++i) {
      th.push_back(-1.0 + (i + 0.5) * 2.0 / o.points);
      logp.push_back(log_density_of_states(th.back(), p.n_atoms) + r * p.n_atoms * th.back() * th.back());
    }
    const double mx = *std::max_element(logp.begin(), logp.end());
    double z = 0.0;
    for (double& v : logp) z += std::exp(v - mx) * 2.0 / o.points;
    std::ofstream out(run.dir / "p_theta_theory.csv");
    out << "theta,density\n";
    for (std::size_t i = 0; i < th.size(); ++i) out << num(th[i]) << ',' << num(std::exp(logp[i] - mx) / z) << '\n';
    run.file("p_theta_theory.csv");
  }

  io::write_free_energy_csv(run.dir / "free_energy.csv", r, o.points);
  run.file("free_energy.csv");

  {
    std::ofstream out(run.dir / "bifurcation.csv");
    out << "nbar_over_nbar_c,theta_star\n";
    for (int i = 0; i <= 300; ++i) out << num(i * 0.01) << ',' << num(fixed_point(i * 0.01)) << '\n';
    run.file("bifurcation.csv");
  }

  const auto est = below_threshold_estimates(p);
  {
    std::ofstream out(run.dir / "correlation_free.csv");
    out << "tau_kappa,C\n";
    for (int i = 0; i <= 200; ++i) {
      const double tau = o.max_tau * i / 200;
      out << num(tau) << ',' << num(est.correlation(tau)) << '\n';
    }
    run.file("correlation_free.csv");
  }

  nlohmann::json j;
  j["theta_star"] = fixed_point(r);
  j["nbar_over_nbar_c"] = r;
  j["acceptance"] = res.acceptance;
  j["proposal_width"] = res.proposal_width;
  j["sigma_N"] = derive_coefficients(p).sigma_N;
  j["below_threshold"] = {{"theta_sq", est.theta_sq}, {"theta_4", est.theta_4},
                          {"n_cav", est.n_cav},       {"g2_zero", est.g2_zero},
                          {"tau_c_free", est.tau_c_free}};
  std::ofstream(run.dir / "equilibrium.json") << j.dump(2) << '\n';
  run.file("equilibrium.json");

  run.m.settings = {{"samples", std::to_string(o.samples)}, {"burn_in_sweeps", std::to_string(o.burn_in_sweeps)},
                    {"bins", std::to_string(o.bins)},       {"points", std::to_string(o.points)},
                    {"max_tau", num(o.max_tau)}};
  run.finish();
}

// ----------------------------------------------------------------- analyze

struct AnalyzeOpts {
  Common c;
  std::vector<std::string> inputs;
  double max_tau = -1.0;
  PeakOpts peaks;
};

struct SpectrumFeatures {
  double central_hwhm = 0.0;
  Peak sideband;
};

// Sideband: most prominent hump beyond three central half widths.
SpectrumFeatures spectrum_features(const SpectrumEstimate& s, const PeakOpts& o) {
  SpectrumFeatures f;
  f.central_hwhm = central_hwhm(s, o.smooth_half);
  f.sideband = find_sideband(s, 3.0 * f.central_hwhm, s.omega.back(), o.sideband_width);
  return f;
}

void add_peak_opts(CLI::App* app, PeakOpts& o) {
  app->add_flag("--hann", o.hann, "Hann-window the periodograms");
  app->add_option("--smooth", o.smooth_half, "moving-average half width for the central peak [bins]");
  app->add_option("--sideband-width", o.sideband_width, "smoothing window for sideband detection [kappa]");
}

void write_spectra(Run& run, const PhysicalParams& p, const ObservableSeries& s, const PeakOpts& po,
                   const std::string& suffix, nlohmann::json& j) {
  SpectrumOptions opt;
  opt.hann_window = po.hann;
  for (auto kind : {SpectrumKind::Theta, SpectrumKind::Field}) {
    const auto est = power_spectrum(p, s, kind, opt);
    const std::string name = std::string(kind == SpectrumKind::Theta ? "spectrum_theta" : "spectrum_field") + suffix;
    io::write_spectrum_csv(run.dir / (name + ".csv"), est);
    run.file(name + ".csv");
    const auto f = spectrum_features(est, po);
    j[name] = {{"central_hwhm", f.central_hwhm},
               {"sideband_found", f.sideband.found},
               {"sideband_omega", f.sideband.found ? nlohmann::json(f.sideband.omega) : nlohmann::json()},
               {"sideband_prominence", f.sideband.prominence}};
  }
}

void cmd_analyze(const AnalyzeOpts& o, const std::vector<std::string>& argv) {
  if (o.inputs.empty()) throw ConfigError("analyze needs at least one --in directory");
  Run run("analyze", argv, o.c);
  ObservableSeries s;
  std::optional<ConfigMap> params;
  for (const auto& dir : o.inputs) {
    const auto man = io::read_manifest(fs::path(dir) / "manifest.json");
    if (man.command != "simulate") throw ConfigError(dir + ": not a simulate run");
    if (params && *params != man.params) throw ConfigError(dir + ": physical parameters differ from " + o.inputs[0]);
    params = man.params;
    for (const auto& f : man.files) {
      if (f.rfind("trajectory_", 0) != 0) continue;
      auto [time, tr] = io::read_trajectory_csv(fs::path(dir) / f);
      if (s.time.empty()) {
        s.time = time;
      } else if (time.size() != s.time.size() || std::abs(time[1] - time[0] - s.dt_record()) > 1e-9 * s.dt_record()) {
        throw ConfigError(dir + "/" + f + ": record grid differs from the first input");
      }
      s.trajectories.push_back(std::move(tr));
    }
  }
  if (s.trajectories.empty()) throw ConfigError("no trajectory files in the inputs");
  run.m.params = *params;
  const auto p = checked_params(*params, run.m.warnings);
  s.n_atoms = p.n_atoms;
  const auto th = thresholds_for(p);

  nlohmann::json j;
  const double dtr = s.dt_record();
  const double max_tau = o.max_tau > 0 ? o.max_tau : 5.0 * th.tau_c;
  const auto lag = std::min<std::size_t>(static_cast<std::size_t>(max_tau / dtr), s.time.size() - 1);
  const auto corr = autocorrelation(s, lag);
  io::write_correlation_csv(run.dir / "correlation.csv", corr, dtr);
  run.file("correlation.csv");
  j["tau_c_free"] = th.tau_c;
  try {
    j["tau_c_fit"] = fit_gaussian_width(corr, dtr);
  } catch (const std::exception& e) {
    run.m.warnings.push_back(std::string("correlation fit failed: ") + e.what());
  }

  const auto ph = mean_photon_number(p, s);
  const auto g = g2_zero(s);
  io::write_summary_json(run.dir / "summary.json", {ph.n_cav, ph.n_cav_adiabatic, g.g2, g.g2_adiabatic,
                                                    mean_theta_sq(s), std::numeric_limits<double>::quiet_NaN()});
  run.file("summary.json");

  write_spectra(run, p, s, o.peaks, "", j);

  std::vector<Interval> traps, jumps;
  std::vector<double> cut_traps;
  int censored = 0;
  if (s.time.size() * dtr >= th.min_length_factor * th.tau_c) {
    for (const auto& tr : s.trajectories) {
      auto a = detect_trapping(s.time, tr.theta, th);
      auto b = detect_jumps(s.time, tr.theta, th);
      traps.insert(traps.end(), a.intervals.begin(), a.intervals.end());
      jumps.insert(jumps.end(), b.intervals.begin(), b.intervals.end());
      censored += a.censored + b.censored;
      for (const auto& iv : a.censored_intervals) cut_traps.push_back(iv.length);
      if (&tr == &s.trajectories.front())
        for (auto& w : a.warnings) run.m.warnings.push_back(std::move(w));
    }
  } else {
    run.m.warnings.push_back("series shorter than 10 tau_c: no interval statistics");
  }
  std::vector<Interval> all = traps;
  all.insert(all.end(), jumps.begin(), jumps.end());
  io::write_intervals_csv(run.dir / "intervals.csv", all);
  run.file("intervals.csv");
  const auto tl = lengths_of(traps), jl = lengths_of(jumps);
  io::write_survival_csv(run.dir / "survival_trap.csv", cumulative_distribution(tl));
  io::write_survival_csv(run.dir / "survival_jump.csv", cumulative_distribution(jl));
  run.file("survival_trap.csv");
  run.file("survival_jump.csv");
  auto mean_of = [](const std::vector<double>& v) {
    return v.empty() ? nlohmann::json() : nlohmann::json(running_mean(v).back());
  };
  j["trap_count"] = tl.size();
  j["jump_count"] = jl.size();
  j["censored"] = censored;
  j["trap_mean"] = mean_of(tl);
  j["jump_mean"] = mean_of(jl);
  if (!tl.empty())
    j["trap_quantiles"] = {quantile(tl, 0.25), quantile(tl, 0.5), quantile(tl, 0.75)};
  // Kaplan-Meier quartiles counting boundary traps as lower bounds; null
  // means the quartile lies beyond the longest observed trap.
  j["trap_censored"] = cut_traps.size();
  const auto km = kaplan_meier(tl, cut_traps);
  j["trap_quantiles_km"] = nlohmann::json::array();
  for (double q : {0.25, 0.5, 0.75}) {
    const double x = survival_quantile(km, q);
    j["trap_quantiles_km"].push_back(std::isinf(x) ? nlohmann::json() : nlohmann::json(x));
  }
  if (tl.empty() && jl.empty()) run.m.warnings.push_back("no trapping or jump intervals detected");
  std::ofstream(run.dir / "analysis.json") << j.dump(2) << '\n';
  run.file("analysis.json");

  run.m.settings = {{"inputs", std::to_string(o.inputs.size())}, {"max_tau", num(max_tau)},
                    {"hann", o.peaks.hann ? "true" : "false"}, {"smooth", std::to_string(o.peaks.smooth_half)},
                    {"sideband_width", num(o.peaks.sideband_width)}};
  for (std::size_t i = 0; i < o.inputs.size(); ++i) run.m.settings.emplace_back("in", o.inputs[i]);
  run.finish();
}

// ---------------------------------------------------------------- spectrum

struct SpectrumOpts {
  Common c;
  Physics ph;
  IntegratorFlags f;
  std::vector<double> ratios;
  PeakOpts peaks;
};

void cmd_spectrum(const SpectrumOpts& o, const std::vector<std::string>& argv) {
  if (o.ratios.empty()) throw ConfigError("spectrum needs at least one --ratios value");
  Run run("spectrum", argv, o.c);
  run.m.params = resolve_config(o.c, o.ph);
  const auto base = checked_params(run.m.params, run.m.warnings);
  auto cfg = integrator_config(o.f, o.c, base.n_atoms);
  if (o.f.trajectories < 1) throw ConfigError("--trajectories must be >= 1");

  nlohmann::json j;
  std::ofstream peaks(run.dir / "spectrum_peaks.csv");
  peaks << "nbar_over_nbar_c,central_hwhm,sideband_omega,harmonic_estimate\n";
  for (std::size_t i = 0; i < o.ratios.size(); ++i) {
    auto pcfg = run.m.params;
    pcfg["nbar_over_nbar_c"] = num(o.ratios[i]);
    const auto p = checked_params(pcfg, run.m.warnings);
    const auto res = run_ensemble(p, cfg, o.f.trajectories, o.c.seed + i);
    run.m.kernel = res.kernel_name;
    nlohmann::json ji;
    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "_%02zu", i);
    write_spectra(run, p, res.series, o.peaks, suffix, ji);
    const auto& ft = ji[std::string("spectrum_theta") + suffix];
    const double harmonic = std::sqrt(2.0 * p.recoil_over_kappa() * o.ratios[i]);
    peaks << num(o.ratios[i]) << ',' << num(ft["central_hwhm"].get<double>()) << ','
          << (ft["sideband_found"].get<bool>() ? num(ft["sideband_omega"].get<double>()) : "nan") << ','
          << num(harmonic) << '\n';
    ji["nbar_over_nbar_c"] = o.ratios[i];
    ji["seed"] = o.c.seed + i;
    j["runs"].push_back(ji);
  }
  run.file("spectrum_peaks.csv");
  std::ofstream(run.dir / "spectrum.json") << j.dump(2) << '\n';
  run.file("spectrum.json");

  run.m.settings = integrator_settings(o.f, cfg, cfg.t_burn_in);
  std::string list;
  for (double r : o.ratios) list += (list.empty() ? "" : " ") + num(r);
  run.m.settings.emplace_back("ratios", list);
  run.m.settings.emplace_back("hann", o.peaks.hann ? "true" : "false");
  run.m.settings.emplace_back("smooth", std::to_string(o.peaks.smooth_half));
  run.m.settings.emplace_back("sideband_width", num(o.peaks.sideband_width));
  run.finish();
}

int dispatch(std::vector<std::string> args);

// ------------------------------------------------------------------- rerun

int cmd_rerun(const std::string& manifest_path, const std::string& out) {
  const auto m = io::read_manifest(manifest_path);
  std::vector<std::string> args;
  bool skip = false;
  // argv[0] is the program name
  for (std::size_t i = 1; i < m.argv.size(); ++i) {
    if (skip) {
      skip = false;
      continue;
    }
    const std::string& a = m.argv[i];
    if (a == "--out" || a == "--config") {
      skip = true;
      continue;
    }
    if (a.rfind("--out=", 0) == 0 || a.rfind("--config=", 0) == 0) continue;
    args.push_back(a);
  }
  args.push_back("--out");
  args.push_back(out);
  if (!m.params.empty()) g_base_config = m.params;
  return dispatch(args);
}

int dispatch(std::vector<std::string> args) {
  CLI::App app{"Self-organization of laser-driven atoms in an optical cavity"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::code_version());

  SimulateOpts sim;
  auto* s = app.add_subcommand("simulate", "integrate an ensemble and write trajectories");
  add_common(s, sim.c);
  add_physics(s, sim.ph);
  add_integrator(s, sim.f);
  s->add_flag("--atoms-dump", sim.atoms_dump, "write per-atom positions and momenta");
  s->add_option("--bins", sim.bins, "order-parameter histogram bins");

  PhaseOpts ph;
  auto* pd = app.add_subcommand("phase-diagram", "fixed point and temperature on a (Delta_c, nbar) grid");
  add_common(pd, ph.c);
  pd->add_option("--detuning-min", ph.det_min, "Delta_c/kappa lower end");
  pd->add_option("--detuning-max", ph.det_max, "Delta_c/kappa upper end");
  pd->add_option("--detuning-steps", ph.det_steps, "grid points in Delta_c");
  pd->add_option("--nbar-min", ph.nbar_min, "absolute nbar lower end");
  pd->add_option("--nbar-max", ph.nbar_max, "absolute nbar upper end");
  pd->add_option("--nbar-steps", ph.nbar_steps, "grid points in nbar");

  EquilibriumOpts eq;
  auto* e = app.add_subcommand("equilibrium", "analytic equilibrium curves and Metropolis P_N(Theta)");
  add_common(e, eq.c);
  add_physics(e, eq.ph);
  e->add_option("--samples", eq.samples, "Metropolis samples (one per sweep)");
  e->add_option("--burn-in-sweeps", eq.burn_in_sweeps, "discarded Metropolis sweeps");
  e->add_option("--bins", eq.bins, "P_N(Theta) histogram bins");
  e->add_option("--points", eq.points, "free-energy and density grid points");
  e->add_option("--max-tau", eq.max_tau, "range of the free-gas correlation curve [1/kappa]");

  AnalyzeOpts an;
  auto* a = app.add_subcommand("analyze", "correlations, spectra, g2 and interval statistics of simulate output");
  add_common(a, an.c);
  a->add_option("--in", an.inputs, "simulate output directory (repeatable)")->required();
  a->add_option("--max-tau", an.max_tau, "largest correlation lag [1/kappa]; default 5 tau_c");
  add_peak_opts(a, an.peaks);

  SpectrumOpts sp;
  sp.f.init = "stationary";
  auto* sc = app.add_subcommand("spectrum", "spectra and peak positions over a list of pump strengths");
  add_common(sc, sp.c);
  add_physics(sc, sp.ph);
  add_integrator(sc, sp.f);
  sc->add_option("--ratios", sp.ratios, "nbar/nbar_c values")->required()->delimiter(',');
  add_peak_opts(sc, sp.peaks);

  std::string manifest, rerun_out;
  auto* rr = app.add_subcommand("rerun", "regenerate the outputs of a manifest");
  rr->add_option("manifest", manifest, "manifest.json of an earlier run")->required();
  rr->add_option("--out", rerun_out, "output directory")->required();

  std::vector<std::string> argv_record{"selforg"};
  argv_record.insert(argv_record.end(), args.begin(), args.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  if (*s) cmd_simulate(sim, argv_record);
  if (*pd) cmd_phase_diagram(ph, argv_record);
  if (*e) cmd_equilibrium(eq, argv_record);
  if (*a) cmd_analyze(an, argv_record);
  if (*sc) cmd_spectrum(sp, argv_record);
  if (*rr) return cmd_rerun(manifest, rerun_out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
