#pragma once

// Collective observables, correlations and spectra of recorded series.
// All times and frequencies are in units of kappa.

#include <complex>
#include <vector>

#include "selforg/dynamics.hpp"
#include "selforg/params.hpp"

namespace selforg {

double order_parameter(const double* theta, int n);
double bunching(const double* theta, int n);
// d Theta/dt = -(1/N) sum sin_j 2 w p_j
double order_parameter_rate(const PhysicalParams& p, const double* theta, const double* mom, int n);

// Intracavity amplitude in sqrt(photons). The retardation term is the part
// proportional to d Theta/dt.
std::complex<double> cavity_field(const PhysicalParams& p, double theta, double bunching,
                                  double theta_dot, bool include_retardation = true);
std::complex<double> cavity_field(const PhysicalParams& p, const double* theta, const double* mom,
                                  int n, bool include_retardation = true);

// Whether a recorded series already includes the retardation term is fixed
// at recording time; this rebuilds the field from Theta, B, dTheta/dt.
std::vector<std::complex<double>> rebuild_field(const PhysicalParams& p, const TrajectorySeries& s,
                                                bool include_retardation);

struct PhotonNumber {
  double n_cav = 0.0;            // <|a|^2>
  double n_cav_adiabatic = 0.0;  // N nbar <Theta^2>
};
// Throws std::invalid_argument on an empty series.
PhotonNumber mean_photon_number(const PhysicalParams& p, const ObservableSeries& s);

double mean_theta_sq(const ObservableSeries& s);
double mean_mom_sq(const ObservableSeries& s);

struct G2 {
  double g2 = 0.0;            // <|a|^4> / <|a|^2>^2
  double g2_adiabatic = 0.0;  // <Theta^4> / <Theta^2>^2
};
// Throws std::invalid_argument if the mean intensity is zero.
G2 g2_zero(const ObservableSeries& s);
// Intensity correlation <I(t) I(t+lag)> / <I>^2 for one intensity series.
double g2_lag(const std::vector<double>& intensity, std::size_t lag);

// C(k dt) = <Theta(t) Theta(t + k dt)> over t and trajectories, k = 0..max_lag.
// Throws std::invalid_argument if max_lag >= record count.
std::vector<double> autocorrelation(const ObservableSeries& s, std::size_t max_lag);
std::vector<double> autocorrelation(const std::vector<double>& x, std::size_t max_lag);

// Width tau_c of a Gaussian C(0) exp(-(tau/tau_c)^2), fitted by linear
// regression of log C against tau^2 over the leading points with
// C > floor * C(0).
double fit_gaussian_width(const std::vector<double>& corr, double dtau, double floor = 0.1);

enum class SpectrumKind { Theta, Field };

struct SpectrumEstimate {
  std::vector<double> omega;  // symmetric about 0, ascending
  std::vector<double> power;  // sum power * d_omega == mean |x|^2 (unwindowed)
  bool ensemble_averaged = true;
  bool hann_window = false;
  std::size_t segment_length = 0;
  double d_omega() const { return omega.size() > 1 ? omega[1] - omega[0] : 0.0; }
};

struct SpectrumOptions {
  bool hann_window = false;
  bool include_retardation = true;  // field spectrum only
};

// Ensemble-averaged periodogram S(w) = dt |sum_n x_n e^{i w t_n}|^2 / (2 pi L).
// An even record count drops the last sample so the grid is symmetric.
// Throws std::invalid_argument on a non-uniform grid or fewer than 3 records.
SpectrumEstimate power_spectrum(const PhysicalParams& p, const ObservableSeries& s, SpectrumKind kind,
                                const SpectrumOptions& opt = {});
SpectrumEstimate periodogram(const std::vector<std::vector<std::complex<double>>>& series, double dt,
                             bool hann_window = false);

// Moving average over 2*half+1 points (shrinking at the edges).
std::vector<double> smooth(const std::vector<double>& y, int half);

struct Peak {
  double omega = 0.0;
  double power = 0.0;
  bool found = false;
  double prominence = 0.0;  // log of height over the higher flanking minimum
};
// Largest strict local maximum with omega in [lo, hi].
Peak find_peak(const SpectrumEstimate& s, double lo, double hi, int smooth_half = 0);
// Most prominent local maximum of the spectrum smoothed over a window of
// width smooth_width (frequency units), with omega in [lo, hi]. Found only
// if its height exceeds the higher of its flanking minima by min_ratio.
Peak find_sideband(const SpectrumEstimate& s, double lo, double hi, double smooth_width,
                   double min_ratio = 1.05);
// Half width at half maximum of the peak at omega = 0 (linear interpolation).
double central_hwhm(const SpectrumEstimate& s, int smooth_half = 0);

}  // namespace selforg
