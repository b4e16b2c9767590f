#include <cmath>
#include <random>

#include "doctest.h"
#include "selforg/params.hpp"

using namespace selforg;

namespace {

PhysicalParams at_detuning(double d) { return make_params(d, 3.86e3 / 1.5e6, 20, 0.01, -0.05); }

}  // namespace

TEST_SUITE("params") {
  TEST_CASE("coefficients at delta_c = -kappa") {
    const auto p = at_detuning(-1.0);
    const auto c = derive_coefficients(p);
    CHECK(c.beta_hbar * p.kappa == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(c.kB_T_over_hbar_kappa == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(c.nbar_c == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::abs(c.eta_bar) < 1e-20);
    CHECK(c.gamma_fric == doctest::Approx(-4.0 * p.omega_r).epsilon(1e-14));
    CHECK(c.thermal);
  }

  TEST_CASE("sigma_N and free correlation time") {
    const auto c = derive_coefficients(rb85_reference(20));
    CHECK(c.sigma_N == doctest::Approx(0.158113883).epsilon(1e-9));
    // sqrt(2 kappa / omega_r) in units of 1/kappa
    CHECK(c.tau_c_free == doctest::Approx(std::sqrt(2.0 * 1.5e6 / 3.86e3)).epsilon(1e-12));
    CHECK(c.tau_c_free == doctest::Approx(27.9).epsilon(0.002));
  }

  TEST_CASE("steady temperature") {
    CHECK(steady_temperature(at_detuning(-1.0)) == doctest::Approx(0.5));
    CHECK(steady_temperature(at_detuning(-2.0)) == doctest::Approx(5.0 / 8.0));
    CHECK(steady_temperature(at_detuning(-0.5)) == doctest::Approx(5.0 / 8.0));
    CHECK_THROWS_AS(steady_temperature(at_detuning(0.5)), ConfigError);
  }

  TEST_CASE("thermal momentum variance at the reference point") {
    const auto p = rb85_reference();
    CHECK(thermal_momentum_variance(p) == doctest::Approx(1.5e6 / (4.0 * 3.86e3)).epsilon(1e-12));
    CHECK(thermal_momentum_variance(p) == doctest::Approx(97.2).epsilon(0.001));
  }

  TEST_CASE("threshold decreases toward 1/4") {
    CHECK(at_detuning(-1.0).nbar_c() == doctest::Approx(0.5));
    CHECK(at_detuning(-10.0).nbar_c() == doctest::Approx(101.0 / 400.0));
    double prev = 1e300;
    for (double d = 0.1; d < 50.0; d *= 1.1) {
      const double nc = at_detuning(-d).nbar_c();
      CHECK(nc < prev);
      CHECK(nc > 0.25);
      prev = nc;
    }
  }

  TEST_CASE("temperature minimum at delta_c = -kappa") {
    const double t0 = steady_temperature(at_detuning(-1.0));
    CHECK(steady_temperature(at_detuning(-0.99)) > t0);
    CHECK(steady_temperature(at_detuning(-1.01)) > t0);
  }

  TEST_CASE("derive_coefficients is pure") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> det(-5.0, -0.05), ratio(0.0, 3.0);
    for (int i = 0; i < 100; ++i) {
      const auto p = make_params(det(rng), 1e-3, 1 + i, ratio(rng), 0.01);
      const auto a = derive_coefficients(p);
      const auto b = derive_coefficients(p);
      CHECK(a.gamma_fric == b.gamma_fric);
      CHECK(a.beta_hbar == b.beta_hbar);
      CHECK(a.eta_bar == b.eta_bar);
      CHECK(a.tau_c_free == b.tau_c_free);
    }
  }

  TEST_CASE("blue detuning is flagged, not thermal") {
    const auto p = at_detuning(1.0);
    const auto c = derive_coefficients(p);
    CHECK_FALSE(c.thermal);
    CHECK(std::isnan(c.kB_T_over_hbar_kappa));
    CHECK_FALSE(validate(p).warnings.empty());
  }

  TEST_CASE("regime guard") {
    CHECK_THROWS_AS(validate(make_params(-1.0, 1e-3, 10, 0.5, 0.25)), ConfigError);
    CHECK_NOTHROW(validate(make_params(-1.0, 1e-3, 10, 0.5, -0.2)));
    auto p = rb85_reference();
    p.n_atoms = 0;
    CHECK_THROWS_AS(validate(p), ConfigError);
    p = rb85_reference();
    p.nbar = -1.0;
    CHECK_THROWS_AS(validate(p), ConfigError);
  }

  TEST_CASE("time-scale separation warning") {
    CHECK(validate(rb85_reference(20, 1.4)).warnings.empty());
    // sqrt(w nbar 2) > 0.1 * 2^(3/4) needs w nbar > ~0.014
    const auto hot = make_params(-1.0, 0.05, 20, 1.0, 0.0);
    const auto rep = validate(hot);
    CHECK(rep.timescale_lhs > 0.1 * rep.timescale_rhs);
    CHECK_FALSE(rep.warnings.empty());
  }

  TEST_CASE("config parsing") {
    const auto cfg = parse_config(
        "# comment\n"
        "n_atoms = 50\n"
        "nbar_over_nbar_c = 1.4   # trailing\n"
        "include_eta_noise = false\n");
    const auto p = params_from_config(cfg);
    CHECK(p.n_atoms == 50);
    CHECK(p.nbar_ratio() == doctest::Approx(1.4).epsilon(1e-14));
    CHECK_FALSE(p.include_eta_noise);
    CHECK(p.detuning_over_kappa() == doctest::Approx(-1.0));

    CHECK_THROWS_AS(parse_config("N_atoms = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("n_atoms = 3\nn_atoms = 4\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("n_atoms 3\n"), ConfigError);
    CHECK_THROWS_AS(params_from_config(parse_config("n_atoms = 2.5\n")), ConfigError);
    CHECK_THROWS_AS(params_from_config(parse_config("nu_over_kappa = 0.3\n")), ConfigError);
    CHECK_THROWS_AS(params_from_config(parse_config("kappa_hz = abc\n")), ConfigError);
  }

  TEST_CASE("default config matches the empty config") {
    const auto a = params_from_config({});
    const auto b = params_from_config(default_config());
    CHECK(a.kappa == b.kappa);
    CHECK(a.delta_c == b.delta_c);
    CHECK(a.omega_r == b.omega_r);
    CHECK(a.nbar == b.nbar);
    CHECK(a.n_atoms == b.n_atoms);
    CHECK(a.nu_over_kappa == b.nu_over_kappa);
  }
}
