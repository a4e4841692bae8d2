#include <doctest.h>

#include <cmath>

#include "cos2phi/circuit.hpp"
#include "cos2phi/constants.hpp"
#include "cos2phi/errors.hpp"

using namespace cos2phi;

namespace {

CircuitParams device() {
    CircuitParams p;
    p.ec = 0.21;
    p.junctions = {42.49, 53.9, 88.11, 35.73, 35.73};
    return p;
}

}  // namespace

TEST_CASE("series pair reduces to an SNS channel") {
    const auto a = effective_arm(40.0, 40.0);
    CHECK(a.ej_sigma == 80.0);
    CHECK(a.tau == doctest::Approx(1.0));
    const auto b = effective_arm(10.0, 30.0);
    CHECK(b.tau == doctest::Approx(0.75));
    CHECK_THROWS_AS(effective_arm(0.0, 0.0), ValidationError);
    CHECK_THROWS_AS(effective_arm(-1.0, 2.0), ValidationError);
}

TEST_CASE("small SQUID tuning") {
    const auto sym = small_squid(30.0, 30.0, 0.5);
    CHECK(std::abs(sym.ej45_eff) < 1e-12);
    const auto asym = small_squid(40.0, 20.0, 0.5);
    CHECK(asym.ej45_eff == doctest::Approx(20.0));
    CHECK(asym.d == doctest::Approx(1.0 / 3.0));
    CHECK(small_squid(40.0, 20.0, 0.0).ej45_eff == doctest::Approx(60.0));
}

TEST_CASE("SQUID phase offset is continuous and odd") {
    for (double d : {-0.4, 0.0, 0.2, 0.9}) {
        double prev = squid_phase_offset(d, -3.0 * kTwoPi);
        for (int i = 1; i <= 6000; ++i) {
            const double phi_s = -3.0 * kTwoPi + 6.0 * kTwoPi * i / 6000.0;
            const double cur = squid_phase_offset(d, phi_s);
            CHECK(std::abs(cur - prev) < 0.05);
            prev = cur;
        }
        CHECK(squid_phase_offset(d, 1.3) == doctest::Approx(-squid_phase_offset(d, -1.3)));
    }
    // d = 0 gives exactly half the loop phase.
    CHECK(squid_phase_offset(0.0, 2.2) == doctest::Approx(1.1));
}

TEST_CASE("rebased and raw bias flux are inverse") {
    const auto p = device();
    for (double pc : {0.0, 0.2, 0.378, 0.45}) {
        const FluxBias f = make_flux_bias(0.47, pc, p.junctions);
        const FluxBias g = flux_from_raw(f.phi_b_raw, pc, p.junctions);
        CHECK(g.phi_bias == doctest::Approx(0.47).epsilon(1e-14));
        CHECK(g.delta == doctest::Approx(f.delta));
    }
}

TEST_CASE("closed-form flux slope matches finite differences of the potential") {
    auto p = device();
    p.junctions.ej5 = 30.0;  // asymmetric SQUID so delta moves with Phi_ctrl
    for (double ec_int : {0.0, 0.3}) {
        p.ec_int_left = ec_int;
        p.ec_int_right = ec_int;
        for (double pc : {0.2, 0.378, 0.44}) {
            const FluxBias f = make_flux_bias(0.43, pc, p.junctions);
            const PotentialFluxDerivative dbias(p, f, true);
            const PotentialFluxDerivative dctrl(p, f, false);
            const double h = 1e-4;
            for (int k = 0; k < 16; ++k) {
                const double phi = -kPi + kTwoPi * (k + 0.37) / 16.0;
                auto v = [&](const FluxBias &x) { return total_potential(p, x, phi); };
                // fourth-order central differences
                auto fd = [&](auto at) {
                    return (-v(at(2 * h)) + 8.0 * v(at(h)) - 8.0 * v(at(-h)) + v(at(-2 * h))) / (12.0 * h);
                };
                const double fd_bias = fd([&](double s) { return make_flux_bias(0.43 + s, pc, p.junctions); });
                const double fd_ctrl = fd([&](double s) { return flux_from_raw(f.phi_b_raw, pc + s, p.junctions); });
                CAPTURE(phi);
                CAPTURE(pc);
                CHECK(dbias(phi) == doctest::Approx(fd_bias).epsilon(1e-6).scale(1.0));
                CHECK(dctrl(phi) == doctest::Approx(fd_ctrl).epsilon(1e-6).scale(1.0));
            }
        }
    }
}

TEST_CASE("parameter validation names the field") {
    auto p = device();
    p.ec = -0.1;
    try {
        validate(p);
        FAIL("expected a validation error");
    } catch (const ValidationError &e) {
        CHECK(e.field() == "ec");
    }
    p = device();
    p.junctions.ej3 = std::nan("");
    CHECK_THROWS_AS(validate(p), ValidationError);
}
