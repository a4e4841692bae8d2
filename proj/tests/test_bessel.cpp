#include <doctest.h>

#include <cmath>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "cos2phi/bessel.hpp"

using namespace cos2phi;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

Big reference_k0(double x) { return boost::math::cyl_bessel_k(0, Big(x)); }

}  // namespace

TEST_CASE("K0 against 50-digit reference") {
    double worst = 0.0;
    for (int i = 0; i <= 120; ++i) {
        const double x = std::pow(10.0, -6.0 + 8.8 * i / 120.0);  // 1e-6 .. ~630
        const Big ref = reference_k0(x);
        const double got = bessel_k0(x);
        const double rel = static_cast<double>(abs((Big(got) - ref) / ref));
        worst = std::max(worst, rel);
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("scaled K0 and K0 sinh against reference") {
    for (double x : {1e-4, 0.3, 1.9999, 2.0, 2.0001, 7.5, 40.0, 300.0, 2000.0}) {
        const Big ref = reference_k0(x);
        const Big scaled = ref * exp(Big(x));
        const Big with_sinh = ref * sinh(Big(x));
        CHECK(std::abs(bessel_k0_scaled(x) / static_cast<double>(scaled) - 1.0) < 1e-12);
        CHECK(std::abs(bessel_k0_sinh(x) / static_cast<double>(with_sinh) - 1.0) < 1e-12);
    }
}

TEST_CASE("K0 sinh stays finite where K0 underflows") {
    const double x = 1000.0;
    CHECK(std::isfinite(bessel_k0_sinh(x)));
    // K0(x) sinh(x) -> sqrt(pi / (8 x)) for large x
    CHECK(bessel_k0_sinh(x) == doctest::Approx(std::sqrt(M_PI / (8.0 * x))).epsilon(1e-3));
}

TEST_CASE("K0 domain") {
    CHECK_THROWS(bessel_k0(0.0));
    CHECK_THROWS(bessel_k0(-1.0));
}
