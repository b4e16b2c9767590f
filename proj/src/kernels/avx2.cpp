// AVX2 + FMA variants of the integrator kernels. This translation unit is the
// only one compiled with -mavx2 -mfma; nothing here may run before
// select_kernels() has confirmed CPU support.

#include "selforg/kernels.hpp"

#if defined(SELFORG_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>

namespace selforg::kernels {

namespace {

// pi/2 split for Cody-Waite reduction; the leading part has 24 significant
// bits so n * kPio2Hi is exact for |n| < 2^29.
constexpr double kPio2Hi = 1.57079625129699707031e+00;
constexpr double kPio2Mid = 7.54978941586159635336e-08;
constexpr double kPio2Lo = 5.39030285815811905290e-15;
constexpr double kTwoOverPi = 6.36619772367581382433e-01;
// 1.5 * 2^52: adding it leaves round(n) in the low mantissa bits.
constexpr double kIntMagic = 6755399441055744.0;

// Minimax coefficients on [-pi/4, pi/4] (Cephes sin.c).
constexpr double kSin[6] = {1.58962301576546568060e-10, -2.50507477628578072866e-08,
                            2.75573136213857245213e-06, -1.98412698295895385996e-04,
                            8.33333333332211858878e-03, -1.66666666666666307295e-01};
constexpr double kCos[6] = {-1.13585365213876817300e-11, 2.08757008419747316778e-09,
                            -2.75573141792967388112e-07, 2.48015872888517045348e-05,
                            -1.38888888888730564116e-03, 4.16666666666665929218e-02};

inline void sincos4(__m256d x, __m256d& s_out, __m256d& c_out) {
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kTwoOverPi)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kPio2Hi), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kPio2Mid), r);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kPio2Lo), r);
  const __m256d z = _mm256_mul_pd(r, r);

  __m256d ps = _mm256_set1_pd(kSin[0]);
  __m256d pc = _mm256_set1_pd(kCos[0]);
  for (int i = 1; i < 6; ++i) {
    ps = _mm256_fmadd_pd(ps, z, _mm256_set1_pd(kSin[i]));
    pc = _mm256_fmadd_pd(pc, z, _mm256_set1_pd(kCos[i]));
  }
  const __m256d sin_r = _mm256_fmadd_pd(_mm256_mul_pd(r, z), ps, r);
  const __m256d one_minus = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), z, _mm256_set1_pd(1.0));
  const __m256d cos_r = _mm256_fmadd_pd(_mm256_mul_pd(z, z), pc, one_minus);

  // quadrant = n mod 4 (two's complement low bits survive the magic add)
  const __m256i q = _mm256_castpd_si256(_mm256_add_pd(n, _mm256_set1_pd(kIntMagic)));
  const __m256i one = _mm256_set1_epi64x(1);
  const __m256i two = _mm256_set1_epi64x(2);
  const __m256d swap = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(q, one), one));
  const __m256d sin_sign = _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_and_si256(q, two), 62));
  const __m256d cos_sign = _mm256_castsi256_pd(
      _mm256_slli_epi64(_mm256_and_si256(_mm256_add_epi64(q, one), two), 62));

  s_out = _mm256_xor_pd(_mm256_blendv_pd(sin_r, cos_r, swap), sin_sign);
  c_out = _mm256_xor_pd(_mm256_blendv_pd(cos_r, sin_r, swap), cos_sign);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Lane mask with the first `count` lanes set.
inline __m256i tail_mask(std::size_t count) {
  const __m256i idx = _mm256_set_epi64x(3, 2, 1, 0);
  return _mm256_cmpgt_epi64(_mm256_set1_epi64x(static_cast<long long>(count)), idx);
}

Moments moments_avx2(const double* theta, const double* mom, double* sin_out, double* cos_out,
                     std::size_t n) {
  __m256d acc_c = _mm256_setzero_pd();
  __m256d acc_c2 = _mm256_setzero_pd();
  __m256d acc_sp = _mm256_setzero_pd();
  __m256d acc_p2 = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d th = _mm256_loadu_pd(theta + j);
    const __m256d p = _mm256_loadu_pd(mom + j);
    __m256d s, c;
    sincos4(th, s, c);
    _mm256_storeu_pd(sin_out + j, s);
    _mm256_storeu_pd(cos_out + j, c);
    acc_c = _mm256_add_pd(acc_c, c);
    acc_c2 = _mm256_fmadd_pd(c, c, acc_c2);
    acc_sp = _mm256_fmadd_pd(s, p, acc_sp);
    acc_p2 = _mm256_fmadd_pd(p, p, acc_p2);
  }
  if (j < n) {
    const __m256i m = tail_mask(n - j);
    const __m256d md = _mm256_castsi256_pd(m);
    const __m256d th = _mm256_maskload_pd(theta + j, m);
    const __m256d p = _mm256_maskload_pd(mom + j, m);
    __m256d s, c;
    sincos4(th, s, c);
    _mm256_maskstore_pd(sin_out + j, m, s);
    _mm256_maskstore_pd(cos_out + j, m, c);
    c = _mm256_and_pd(c, md);
    s = _mm256_and_pd(s, md);
    acc_c = _mm256_add_pd(acc_c, c);
    acc_c2 = _mm256_fmadd_pd(c, c, acc_c2);
    acc_sp = _mm256_fmadd_pd(s, p, acc_sp);
    acc_p2 = _mm256_fmadd_pd(p, p, acc_p2);
  }
  return Moments{hsum(acc_c), hsum(acc_c2), hsum(acc_sp), hsum(acc_p2)};
}

void predict_avx2(const double* theta, const double* mom, const double* sin0, const double* cos0,
                  std::size_t n, const StepCoeffs& k, double* theta_pred, double* mom_pred,
                  double* force_out) {
  const __m256d f0 = _mm256_set1_pd(k.force0);
  const __m256d f1 = _mm256_set1_pd(k.force1);
  const __m256d vdt = _mm256_set1_pd(k.dt * k.velocity);
  const __m256d dt = _mm256_set1_pd(k.dt);
  const __m256d nth = _mm256_set1_pd(k.noise_theta);
  const __m256d np = _mm256_set1_pd(k.noise_mom);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d s = _mm256_loadu_pd(sin0 + j);
    const __m256d c = _mm256_loadu_pd(cos0 + j);
    const __m256d p = _mm256_loadu_pd(mom + j);
    const __m256d th = _mm256_loadu_pd(theta + j);
    const __m256d f = _mm256_mul_pd(s, _mm256_fmadd_pd(f1, c, f0));
    _mm256_storeu_pd(force_out + j, f);
    _mm256_storeu_pd(theta_pred + j, _mm256_fmadd_pd(nth, s, _mm256_fmadd_pd(vdt, p, th)));
    _mm256_storeu_pd(mom_pred + j, _mm256_fmadd_pd(np, s, _mm256_fmadd_pd(dt, f, p)));
  }
  for (; j < n; ++j) {
    const double f = sin0[j] * std::fma(k.force1, cos0[j], k.force0);
    force_out[j] = f;
    theta_pred[j] = std::fma(k.noise_theta, sin0[j], std::fma(k.dt * k.velocity, mom[j], theta[j]));
    mom_pred[j] = std::fma(k.noise_mom, sin0[j], std::fma(k.dt, f, mom[j]));
  }
}

void correct_avx2(const double* theta, const double* mom, const double* sin0, const double* force0,
                  const double* mom_pred, const double* sin1, const double* cos1, std::size_t n,
                  const StepCoeffs& k, double* theta_out, double* mom_out) {
  const double half_dt = 0.5 * k.dt;
  const __m256d f0 = _mm256_set1_pd(k.force0);
  const __m256d f1 = _mm256_set1_pd(k.force1);
  const __m256d hvdt = _mm256_set1_pd(half_dt * k.velocity);
  const __m256d hdt = _mm256_set1_pd(half_dt);
  const __m256d nth = _mm256_set1_pd(k.noise_theta);
  const __m256d np = _mm256_set1_pd(k.noise_mom);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d s0 = _mm256_loadu_pd(sin0 + j);
    const __m256d s1 = _mm256_loadu_pd(sin1 + j);
    const __m256d c1 = _mm256_loadu_pd(cos1 + j);
    const __m256d p = _mm256_loadu_pd(mom + j);
    const __m256d pp = _mm256_loadu_pd(mom_pred + j);
    const __m256d th = _mm256_loadu_pd(theta + j);
    const __m256d fa = _mm256_loadu_pd(force0 + j);
    const __m256d fb = _mm256_mul_pd(s1, _mm256_fmadd_pd(f1, c1, f0));
    const __m256d th_new =
        _mm256_fmadd_pd(nth, s0, _mm256_fmadd_pd(hvdt, _mm256_add_pd(p, pp), th));
    const __m256d p_new = _mm256_fmadd_pd(np, s0, _mm256_fmadd_pd(hdt, _mm256_add_pd(fa, fb), p));
    _mm256_storeu_pd(theta_out + j, th_new);
    _mm256_storeu_pd(mom_out + j, p_new);
  }
  for (; j < n; ++j) {
    const double fb = sin1[j] * std::fma(k.force1, cos1[j], k.force0);
    const double th = std::fma(k.noise_theta, sin0[j],
                               std::fma(half_dt * k.velocity, mom[j] + mom_pred[j], theta[j]));
    const double p = std::fma(k.noise_mom, sin0[j], std::fma(half_dt, force0[j] + fb, mom[j]));
    theta_out[j] = th;
    mom_out[j] = p;
  }
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  static const KernelTable table{"avx2", &moments_avx2, &predict_avx2, &correct_avx2};
  return supported ? &table : nullptr;
}

}  // namespace selforg::kernels

#else

namespace selforg::kernels {
const KernelTable* avx2_kernels() { return nullptr; }
}  // namespace selforg::kernels

#endif
