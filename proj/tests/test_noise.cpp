#include <doctest.h>

#include <cmath>

#include <boost/math/special_functions/bessel.hpp>

#include "cos2phi/constants.hpp"
#include "cos2phi/errors.hpp"
#include "cos2phi/fluxonium.hpp"
#include "cos2phi/noise.hpp"

using namespace cos2phi;

namespace {

CircuitParams device() {
    CircuitParams p;
    p.ec = 0.21;
    p.junctions = {42.49, 53.9, 88.11, 35.73, 35.73};
    return p;
}

double coth(double omega, double t) {
    return 1.0 / std::tanh(Const::hbar * omega / (2.0 * Const::boltzmann_kB * t));
}

}  // namespace

TEST_CASE("quality factors hit their reference values") {
    NoiseConfig cfg;
    CHECK(q_cap(kTwoPi * 6e9, cfg) == doctest::Approx(cfg.q_cap_ref));
    CHECK(q_cap(-kTwoPi * 6e9, cfg) == doctest::Approx(cfg.q_cap_ref));
    CHECK(q_cap(kTwoPi * 0.6e9, cfg) == doctest::Approx(cfg.q_cap_ref * std::pow(10.0, 0.7)));
    CHECK(q_ind(kTwoPi * 0.5e9, cfg) == doctest::Approx(cfg.q_ind_ref));
    for (double f : {0.1e9, 2e9, 8e9}) {
        const double x0 = Const::planck_h * 0.5e9 / (2.0 * Const::boltzmann_kB * cfg.temperature);
        const double x = Const::planck_h * f / (2.0 * Const::boltzmann_kB * cfg.temperature);
        const double want = cfg.q_ind_ref * boost::math::cyl_bessel_k(0, x0) * std::sinh(x0) /
                            (boost::math::cyl_bessel_k(0, x) * std::sinh(x));
        CHECK(q_ind(kTwoPi * f, cfg) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("thermal factor limits") {
    CHECK(thermal_coth(kTwoPi * 20e9, 0.02) == doctest::Approx(1.0));
    const double w = kTwoPi * 1e6;
    CHECK(thermal_coth(w, 0.04) == doctest::Approx(2.0 * Const::boltzmann_kB * 0.04 / (Const::hbar * w)).epsilon(1e-4));
}

TEST_CASE("harmonic oscillator decays at omega coth / (2 Q) through dielectric and inductive loss") {
    // Fluxonium with E_J = 0 is an LC oscillator; only the 0-1 charge and
    // phase elements are non-zero and known in closed form.
    FluxoniumParams p;
    p.ej = 0.0;
    p.el = 0.9;
    p.ec = 1.1;
    NoiseConfig cfg;
    cfg.a_one_over_f = 0.0;
    ResonatorParams res;
    res.g_coupling = 0.0;
    const auto b = fluxonium_t1_budget(p, cfg, res);
    const double omega = kTwoPi * std::sqrt(8.0 * p.el * p.ec) * 1e9;
    const double c = coth(omega, cfg.temperature);
    CHECK(b.f01 == doctest::Approx(std::sqrt(8.0 * p.el * p.ec)).epsilon(1e-9));
    CHECK(b.rate(NoiseChannel::dielectric) == doctest::Approx(omega * c / (2.0 * q_cap(omega, cfg))).epsilon(1e-9));
    CHECK(b.rate(NoiseChannel::inductive) == doctest::Approx(omega * c / (2.0 * q_ind(omega, cfg))).epsilon(1e-9));
    CHECK(b.rate(NoiseChannel::purcell) == 0.0);
    CHECK(b.rate(NoiseChannel::one_over_f_bias) == 0.0);
}

TEST_CASE("flux channels share the matrix element") {
    TransitionCouplings tc;
    tc.freq = 0.4;
    tc.charge = 0.0;
    tc.flux = {3.0, 1.5};
    tc.ec = 0.21;
    NoiseConfig cfg;
    const auto r = channel_rates(tc, cfg);
    const double w = kTwoPi * 0.4e9;
    const double m = cfg.mutual_inductance_bias * Const::flux_quantum_Phi0;
    const double a = cfg.a_one_over_f * Const::flux_quantum_Phi0;
    const double expected_ratio =
        (m * m * w * Const::hbar / cfg.bias_line_impedance * coth(w, cfg.temperature)) / (kTwoPi * a * a / w);
    const double fbl = r[static_cast<int>(NoiseChannel::fbl_ohmic_bias)];
    const double pink = r[static_cast<int>(NoiseChannel::one_over_f_bias)];
    CHECK(fbl / pink == doctest::Approx(expected_ratio).epsilon(1e-12));
    CHECK(r[static_cast<int>(NoiseChannel::one_over_f_ctrl)] == doctest::Approx(pink / 4.0));
    // |<0|dH/dPhi|1>| in GHz/Phi0 -> J/Wb, then |D|^2 S / hbar^2
    const double d = 3.0 * Const::planck_h * 1e9 / Const::flux_quantum_Phi0;
    CHECK(pink == doctest::Approx(d * d * kTwoPi * a * a / w / (Const::hbar * Const::hbar)).epsilon(1e-12));
    CHECK(r[static_cast<int>(NoiseChannel::dielectric)] == 0.0);
}

TEST_CASE("quasiparticle admittance against an independent Bessel evaluation") {
    NoiseConfig cfg;
    const double ej = 50.0 * Const::planck_h * 1e9;
    for (double f : {0.2e9, 0.4e9, 2e9, 8e9}) {
        const double w = kTwoPi * f;
        const double delta = cfg.gap * 1e9 * Const::planck_h;
        const double x = Const::hbar * w / (2.0 * Const::boltzmann_kB * cfg.temperature);
        const double k0 = boost::math::cyl_bessel_k(0, x);
        const double rk = Const::planck_h / (Const::electron_charge_e * Const::electron_charge_e);
        const double ref = cfg.x_qp * std::sqrt(2.0 / kPi) * 8.0 * ej / (rk * delta) *
                           std::pow(2.0 * delta / (Const::hbar * w), 1.5) * std::sqrt(x) * k0 * std::sinh(x);
        CHECK(qp_admittance_re(w, ej, cfg) == doctest::Approx(ref).epsilon(1e-11));
    }
}

TEST_CASE("Purcell rate and far-detuned flag") {
    NoiseConfig cfg;
    ResonatorParams res;
    const auto far = purcell_rate(0.4, 0.05, res, cfg);
    const double kappa = kTwoPi * res.f_res_bare * 1e9 / cfg.loaded_q_resonator;
    const double g01 = res.g_coupling * 0.05;
    CHECK(far.rate == doctest::Approx(kappa * std::pow(g01 / (0.4 - res.f_res_bare), 2)));
    CHECK(far.far_detuned);
    CHECK_FALSE(purcell_rate(res.f_res_bare + 0.01, 1.0, res, cfg).far_detuned);
    CHECK_THROWS_AS(purcell_rate(res.f_res_bare, 1.0, res, cfg), NumericalError);
}

TEST_CASE("budget totals and dominance at the operating point") {
    const auto p = device();
    NoiseConfig cfg;
    ResonatorParams res;
    const auto b = t1_budget(p, make_flux_bias(0.5, 0.378, p.junctions), res, cfg);
    double sum = 0.0;
    for (double r : b.rates) {
        CHECK(r >= 0.0);
        sum += r;
    }
    CHECK(b.total_rate == doctest::Approx(sum));
    CHECK(b.t1 == doctest::Approx(1.0 / sum));
    CHECK(b.total_without(b.dominant()) < b.total_rate);
    CHECK(b.f01 > 0.0);
}

TEST_CASE("effective capacitance override scales the dielectric rate") {
    TransitionCouplings tc;
    tc.freq = 1.0;
    tc.charge = 0.1;
    tc.ec = 0.2;
    NoiseConfig cfg;
    const double base = channel_rates(tc, cfg)[0];
    const double c_default = Const::electron_charge_e * Const::electron_charge_e / (2.0 * 0.2 * Const::planck_h * 1e9);
    cfg.effective_capacitance = 2.0 * c_default;
    CHECK(channel_rates(tc, cfg)[0] == doctest::Approx(base / 2.0));
}

TEST_CASE("noise configuration validation") {
    NoiseConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.temperature = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = NoiseConfig{};
    cfg.q_cap_ref = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    DensityContext empty;
    CHECK_THROWS_AS(spectral_density(NoiseChannel::dielectric, 1e9, NoiseConfig{}, empty), ValidationError);
    CHECK_THROWS_AS(spectral_density(NoiseChannel::purcell, 1e9, NoiseConfig{}, empty), ValidationError);
}
