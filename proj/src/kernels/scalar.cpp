#include "selforg/kernels.hpp"

#include <cmath>

namespace selforg::kernels {

namespace {

Moments moments_scalar(const double* theta, const double* mom, double* sin_out, double* cos_out,
                       std::size_t n) {
  Moments m;
  for (std::size_t j = 0; j < n; ++j) {
    const double s = std::sin(theta[j]);
    const double c = std::cos(theta[j]);
    sin_out[j] = s;
    cos_out[j] = c;
    m.sum_cos += c;
    m.sum_cos2 += c * c;
    m.sum_sin_mom += s * mom[j];
    m.sum_mom2 += mom[j] * mom[j];
  }
  return m;
}

void predict_scalar(const double* theta, const double* mom, const double* sin0,
                    const double* cos0, std::size_t n, const StepCoeffs& k, double* theta_pred,
                    double* mom_pred, double* force_out) {
  for (std::size_t j = 0; j < n; ++j) {
    const double f = sin0[j] * (k.force0 + k.force1 * cos0[j]);
    force_out[j] = f;
    theta_pred[j] = theta[j] + k.dt * k.velocity * mom[j] + k.noise_theta * sin0[j];
    mom_pred[j] = mom[j] + k.dt * f + k.noise_mom * sin0[j];
  }
}

void correct_scalar(const double* theta, const double* mom, const double* sin0,
                    const double* force0, const double* mom_pred, const double* sin1,
                    const double* cos1, std::size_t n, const StepCoeffs& k, double* theta_out,
                    double* mom_out) {
  const double half_dt = 0.5 * k.dt;
  for (std::size_t j = 0; j < n; ++j) {
    const double f1 = sin1[j] * (k.force0 + k.force1 * cos1[j]);
    const double th = theta[j] + half_dt * k.velocity * (mom[j] + mom_pred[j]) + k.noise_theta * sin0[j];
    const double p = mom[j] + half_dt * (force0[j] + f1) + k.noise_mom * sin0[j];
    theta_out[j] = th;
    mom_out[j] = p;
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", &moments_scalar, &predict_scalar, &correct_scalar};
  return table;
}

}  // namespace selforg::kernels
