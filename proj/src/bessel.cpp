#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "selforg/equilibrium.hpp"

namespace selforg {

namespace {

constexpr double kAsymptoticSwitch = 20.0;
constexpr int kAsymptoticTerms = 30;

// Sum_k (-1)^k prod_{j<=k} (mu - (2j-1)^2) / (k! (8y)^k), truncated before
// the terms start growing. I_nu(y) ~ e^y / sqrt(2 pi y) times this.
double asymptotic_series(double nu, double y) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k <= kAsymptoticTerms; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = -term * (mu - odd * odd) / (k * 8.0 * y);
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

// y / (2 + y^2 / (4 + y^2 / (6 + ...))), modified Lentz.
double ratio_continued_fraction(double y) {
  constexpr double tiny = 1e-300;
  const double y2 = y * y;
  double f = 2.0;
  double c = f;
  double d = 0.0;
  for (int k = 2; k < 1000; ++k) {
    const double b = 2.0 * k;
    d = b + y2 * d;
    if (d == 0.0) d = tiny;
    c = b + y2 / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return y / f;
}

}  // namespace

double bessel_ratio(double y) {
  if (y < 0.0) return -bessel_ratio(-y);
  if (y == 0.0) return 0.0;
  if (y <= kAsymptoticSwitch) return ratio_continued_fraction(y);
  return asymptotic_series(1.0, y) / asymptotic_series(0.0, y);
}

double log_bessel_i0(double y) {
  y = std::abs(y);
  if (y <= kAsymptoticSwitch) {
    const double x = 0.25 * y * y;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 200; ++k) {
      term *= x / (static_cast<double>(k) * k);
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return std::log(sum);
  }
  return y - 0.5 * std::log(2.0 * std::numbers::pi * y) + std::log(asymptotic_series(0.0, y));
}

double inverse_bessel_ratio(double theta) {
  if (!(std::abs(theta) < 1.0)) throw std::domain_error("inverse_bessel_ratio: |theta| must be < 1");
  if (theta < 0.0) return -inverse_bessel_ratio(-theta);
  if (theta == 0.0) return 0.0;

  double lo = 0.0;
  double hi = 1.0;
  while (bessel_ratio(hi) < theta) {
    lo = hi;
    hi *= 2.0;
  }
  // Initial guess from the small- and large-argument inverses.
  double y = theta < 0.5 ? 2.0 * theta : 0.5 / (1.0 - theta);
  if (!(y > lo && y < hi)) y = 0.5 * (lo + hi);

  for (int it = 0; it < 200; ++it) {
    const double q = bessel_ratio(y);
    const double g = q - theta;
    if (g == 0.0) return y;
    if (g < 0.0) lo = y;
    else hi = y;
    const double dq = 1.0 - q / y - q * q;
    double next = y - g / dq;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (std::abs(next - y) <= 4.0 * std::numeric_limits<double>::epsilon() * y) return next;
    y = next;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  return y;
}

}  // namespace selforg
