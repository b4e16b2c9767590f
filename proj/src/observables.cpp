#include "selforg/observables.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace selforg {

namespace {

using cd = std::complex<double>;

void require_uniform(const std::vector<double>& t) {
  if (t.size() < 2) return;
  const double dt = t[1] - t[0];
  if (!(dt > 0.0)) throw std::invalid_argument("time grid must be strictly increasing");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (std::abs((t[i] - t[i - 1]) - dt) > 1e-9 * std::max(1.0, std::abs(t[i])))
      throw std::invalid_argument("time grid is not uniform");
}

class FftwPlan {
 public:
  explicit FftwPlan(int n) : n_(n) {
    in_ = fftw_alloc_complex(n);
    out_ = fftw_alloc_complex(n);
    // FFTW_BACKWARD: sum_n x_n exp(+2 pi i k n / L)
    plan_ = fftw_plan_dft_1d(n, in_, out_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftwPlan() {
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;

  cd* in() { return reinterpret_cast<cd*>(in_); }
  const cd* out() const { return reinterpret_cast<const cd*>(out_); }
  void execute() { fftw_execute(plan_); }

 private:
  int n_;
  fftw_complex* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

}  // namespace

double order_parameter(const double* theta, int n) {
  double s = 0.0;
  for (int j = 0; j < n; ++j) s += std::cos(theta[j]);
  return s / n;
}

double bunching(const double* theta, int n) {
  double s = 0.0;
  for (int j = 0; j < n; ++j) {
    const double c = std::cos(theta[j]);
    s += c * c;
  }
  return s / n;
}

double order_parameter_rate(const PhysicalParams& p, const double* theta, const double* mom, int n) {
  double s = 0.0;
  for (int j = 0; j < n; ++j) s += std::sin(theta[j]) * mom[j];
  return -2.0 * p.recoil_over_kappa() * s / n;
}

std::complex<double> cavity_field(const PhysicalParams& p, double theta, double bunch, double theta_dot,
                                  bool include_retardation) {
  const double d = p.detuning_over_kappa();
  const double ns = std::sqrt(p.n_atoms * p.nbar * (d * d + 1.0));  // N S / kappa, S > 0
  const cd denom(d, 1.0);
  cd a = ns * theta / denom * (1.0 + p.nu_over_kappa * bunch / denom);
  if (include_retardation) {
    const cd r(-1.0, d);  // i delta - 1
    a += cd(0.0, 1.0) * ns * theta_dot / (r * r);
  }
  return a;
}

std::complex<double> cavity_field(const PhysicalParams& p, const double* theta, const double* mom, int n,
                                  bool include_retardation) {
  return cavity_field(p, order_parameter(theta, n), bunching(theta, n),
                      order_parameter_rate(p, theta, mom, n), include_retardation);
}

std::vector<std::complex<double>> rebuild_field(const PhysicalParams& p, const TrajectorySeries& s,
                                                bool include_retardation) {
  std::vector<cd> out(s.theta.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = cavity_field(p, s.theta[i], s.bunching[i], s.theta_dot[i], include_retardation);
  return out;
}

PhotonNumber mean_photon_number(const PhysicalParams& p, const ObservableSeries& s) {
  double sum_i = 0.0, sum_t2 = 0.0;
  std::size_t count = 0;
  for (const auto& tr : s.trajectories) {
    for (std::size_t i = 0; i < tr.field.size(); ++i) {
      sum_i += std::norm(tr.field[i]);
      sum_t2 += tr.theta[i] * tr.theta[i];
    }
    count += tr.field.size();
  }
  if (count == 0) throw std::invalid_argument("mean_photon_number: empty series");
  PhotonNumber out;
  out.n_cav = sum_i / count;
  out.n_cav_adiabatic = p.n_atoms * p.nbar * sum_t2 / count;
  return out;
}

double mean_theta_sq(const ObservableSeries& s) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& tr : s.trajectories) {
    for (double x : tr.theta) sum += x * x;
    count += tr.theta.size();
  }
  if (count == 0) throw std::invalid_argument("mean_theta_sq: empty series");
  return sum / count;
}

double mean_mom_sq(const ObservableSeries& s) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& tr : s.trajectories) {
    for (double x : tr.mom_sq) sum += x;
    count += tr.mom_sq.size();
  }
  if (count == 0) throw std::invalid_argument("mean_mom_sq: empty series");
  return sum / count;
}

G2 g2_zero(const ObservableSeries& s) {
  double i1 = 0.0, i2 = 0.0, t2 = 0.0, t4 = 0.0;
  std::size_t count = 0;
  for (const auto& tr : s.trajectories) {
    for (std::size_t i = 0; i < tr.field.size(); ++i) {
      const double in = std::norm(tr.field[i]);
      const double x2 = tr.theta[i] * tr.theta[i];
      i1 += in;
      i2 += in * in;
      t2 += x2;
      t4 += x2 * x2;
    }
    count += tr.field.size();
  }
  if (count == 0 || !(i1 > 0.0) || !(t2 > 0.0)) throw std::invalid_argument("g2_zero: zero mean intensity");
  G2 out;
  out.g2 = (i2 / count) / ((i1 / count) * (i1 / count));
  out.g2_adiabatic = (t4 / count) / ((t2 / count) * (t2 / count));
  return out;
}

double g2_lag(const std::vector<double>& intensity, std::size_t lag) {
  if (lag >= intensity.size()) throw std::invalid_argument("g2_lag: lag exceeds series length");
  double mean = 0.0;
  for (double x : intensity) mean += x;
  mean /= intensity.size();
  if (!(mean > 0.0)) throw std::invalid_argument("g2_lag: zero mean intensity");
  double c = 0.0;
  const std::size_t m = intensity.size() - lag;
  for (std::size_t t = 0; t < m; ++t) c += intensity[t] * intensity[t + lag];
  return (c / m) / (mean * mean);
}

std::vector<double> autocorrelation(const std::vector<double>& x, std::size_t max_lag) {
  if (max_lag >= x.size()) throw std::invalid_argument("autocorrelation: max_lag exceeds series length");
  std::vector<double> c(max_lag + 1, 0.0);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double s = 0.0;
    const std::size_t m = x.size() - k;
    for (std::size_t t = 0; t < m; ++t) s += x[t] * x[t + k];
    c[k] = s / m;
  }
  return c;
}

std::vector<double> autocorrelation(const ObservableSeries& s, std::size_t max_lag) {
  if (s.trajectories.empty()) throw std::invalid_argument("autocorrelation: empty series");
  std::vector<double> c(max_lag + 1, 0.0);
  for (const auto& tr : s.trajectories) {
    const auto ct = autocorrelation(tr.theta, max_lag);
    for (std::size_t k = 0; k <= max_lag; ++k) c[k] += ct[k];
  }
  for (double& v : c) v /= s.trajectories.size();
  return c;
}

double fit_gaussian_width(const std::vector<double>& corr, double dtau, double floor) {
  if (corr.empty() || !(corr[0] > 0.0)) throw std::invalid_argument("fit_gaussian_width: C(0) must be positive");
  // log C = log C0 - tau^2 / tau_c^2
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < corr.size() && corr[k] > floor * corr[0]; ++k) {
    const double x = (k * dtau) * (k * dtau);
    const double y = std::log(corr[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 3) throw std::invalid_argument("fit_gaussian_width: too few points above the floor");
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  if (!(slope < 0.0)) throw std::invalid_argument("fit_gaussian_width: correlation does not decay");
  return 1.0 / std::sqrt(-slope);
}

SpectrumEstimate periodogram(const std::vector<std::vector<cd>>& series, double dt, bool hann_window) {
  if (series.empty()) throw std::invalid_argument("periodogram: no series");
  std::size_t len = series.front().size();
  for (const auto& s : series)
    if (s.size() != len) throw std::invalid_argument("periodogram: series lengths differ");
  if (len % 2 == 0) --len;
  if (len < 3) throw std::invalid_argument("periodogram: need at least 3 samples");

  const int L = static_cast<int>(len);
  std::vector<double> window(len, 1.0);
  if (hann_window) {
    double mean_w2 = 0.0;
    for (int n = 0; n < L; ++n) {
      window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / (L - 1));
      mean_w2 += window[n] * window[n];
    }
    mean_w2 /= L;
    for (double& w : window) w /= std::sqrt(mean_w2);
  }

  FftwPlan plan(L);
  std::vector<double> acc(len, 0.0);
  for (const auto& s : series) {
    for (int n = 0; n < L; ++n) plan.in()[n] = s[n] * window[n];
    plan.execute();
    for (int k = 0; k < L; ++k) acc[k] += std::norm(plan.out()[k]);
  }

  SpectrumEstimate out;
  out.hann_window = hann_window;
  out.ensemble_averaged = true;
  out.segment_length = len;
  out.omega.resize(len);
  out.power.resize(len);
  const int half = (L - 1) / 2;
  const double d_omega = 2.0 * std::numbers::pi / (L * dt);
  const double norm = dt / (2.0 * std::numbers::pi * L * series.size());
  for (int i = 0; i < L; ++i) {
    const int k = i - half;
    out.omega[i] = k * d_omega;
    out.power[i] = acc[(k + L) % L] * norm;
  }
  return out;
}

SpectrumEstimate power_spectrum(const PhysicalParams& p, const ObservableSeries& s, SpectrumKind kind,
                                const SpectrumOptions& opt) {
  require_uniform(s.time);
  if (s.time.size() < 3) throw std::invalid_argument("power_spectrum: need at least 3 records");
  std::vector<std::vector<cd>> data;
  data.reserve(s.trajectories.size());
  for (const auto& tr : s.trajectories) {
    if (kind == SpectrumKind::Theta) {
      data.emplace_back(tr.theta.begin(), tr.theta.end());
    } else if (opt.include_retardation && !tr.field.empty()) {
      data.push_back(tr.field);
    } else {
      data.push_back(rebuild_field(p, tr, opt.include_retardation));
    }
  }
  return periodogram(data, s.dt_record(), opt.hann_window);
}

std::vector<double> smooth(const std::vector<double>& y, int half) {
  if (half <= 0) return y;
  const int n = static_cast<int>(y.size());
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half), hi = std::min(n - 1, i + half);
    double s = 0.0;
    for (int k = lo; k <= hi; ++k) s += y[k];
    out[i] = s / (hi - lo + 1);
  }
  return out;
}

Peak find_peak(const SpectrumEstimate& s, double lo, double hi, int smooth_half) {
  const auto y = smooth(s.power, smooth_half);
  Peak best;
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    if (s.omega[i] < lo || s.omega[i] > hi) continue;
    if (y[i] > y[i - 1] && y[i] > y[i + 1] && (!best.found || y[i] > best.power)) {
      best = {s.omega[i], y[i], true};
    }
  }
  return best;
}

Peak find_sideband(const SpectrumEstimate& s, double lo, double hi, double smooth_width, double min_ratio) {
  const double dw = s.d_omega();
  const int half = dw > 0.0 ? static_cast<int>(std::lround(0.5 * smooth_width / dw)) : 0;
  const auto y = smooth(s.power, half);
  std::size_t first = 0, last = 0;
  while (first < y.size() && s.omega[first] < lo) ++first;
  last = first;
  while (last < y.size() && s.omega[last] <= hi) ++last;
  Peak best;
  for (std::size_t i = first + 1; i + 1 < last; ++i) {
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
    // Flanking minima: lowest point before the curve rises above y[i] again.
    double left = y[i], right = y[i];
    for (std::size_t k = i; k-- > first && y[k] <= y[i];) left = std::min(left, y[k]);
    for (std::size_t k = i + 1; k < last && y[k] <= y[i]; ++k) right = std::min(right, y[k]);
    const double base = std::max(left, right);
    if (!(base > 0.0)) continue;
    const double prom = std::log(y[i] / base);
    if (prom > best.prominence) best = {s.omega[i], y[i], prom >= std::log(min_ratio), prom};
  }
  return best;
}

double central_hwhm(const SpectrumEstimate& s, int smooth_half) {
  const auto y = smooth(s.power, smooth_half);
  const std::size_t mid = y.size() / 2;
  const double half = 0.5 * y[mid];
  for (std::size_t i = mid + 1; i < y.size(); ++i) {
    if (y[i] < half) {
      const double f = (y[i - 1] - half) / (y[i - 1] - y[i]);
      return s.omega[i - 1] + f * (s.omega[i] - s.omega[i - 1]);
    }
  }
  return s.omega.back();
}

}  // namespace selforg
