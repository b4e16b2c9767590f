#pragma once

// Per-trajectory inner loops of the Heun integrator.
//
// Every kernel exists as a scalar reference (std::sin/std::cos, sequential
// sums) and, on x86-64, as an AVX2+FMA variant picked at runtime. The two
// agree to rounding; tests/test_kernels.cpp holds the equivalence checks.
//
// Arrays are length-n, non-overlapping unless stated otherwise.

#include <cstddef>
#include <string>
#include <string_view>

namespace selforg::kernels {

struct Moments {
  double sum_cos = 0.0;      // N Theta
  double sum_cos2 = 0.0;     // N B
  double sum_sin_mom = 0.0;  // sum_j sin(theta_j) p_j
  double sum_mom2 = 0.0;     // sum_j p_j^2
};

// Per-stage constants. Momentum drift of atom j is sin_j (force0 + force1 cos_j).
struct StepCoeffs {
  double velocity = 0.0;     // dtheta/dt per unit momentum, 2 omega_r/kappa
  double dt = 0.0;
  double force0 = 0.0;
  double force1 = 0.0;
  double noise_theta = 0.0;  // theta increment per unit sin_j (already times sqrt(dt) W)
  double noise_mom = 0.0;    // momentum increment per unit sin_j
};

// sin/cos of every phase plus the four collective sums.
using MomentsFn = Moments (*)(const double* theta, const double* mom, double* sin_out,
                              double* cos_out, std::size_t n);

// Euler predictor. Writes the predicted state and the momentum drift at the
// start point (needed again by the corrector).
using PredictFn = void (*)(const double* theta, const double* mom, const double* sin0,
                           const double* cos0, std::size_t n, const StepCoeffs& k,
                           double* theta_pred, double* mom_pred, double* force_out);

// Trapezoidal corrector. `k` carries the force coefficients of the predicted
// state; the noise increments reuse sin0 so both stages see the same dW.
// theta_out/mom_out may alias theta/mom.
using CorrectFn = void (*)(const double* theta, const double* mom, const double* sin0,
                           const double* force0, const double* mom_pred, const double* sin1,
                           const double* cos1, std::size_t n, const StepCoeffs& k,
                           double* theta_out, double* mom_out);

struct KernelTable {
  const char* name;
  MomentsFn moments;
  PredictFn predict;
  CorrectFn correct;
};

enum class KernelChoice { Auto, Scalar, Avx2 };

const KernelTable& scalar_kernels();
// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const KernelTable* avx2_kernels();

// Throws std::runtime_error when an explicit choice is unavailable.
const KernelTable& select_kernels(KernelChoice choice = KernelChoice::Auto);

KernelChoice parse_kernel_choice(std::string_view s);

}  // namespace selforg::kernels
