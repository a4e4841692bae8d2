#include "cos2phi/bessel.hpp"

#include <cmath>
#include <numbers>

#include "cos2phi/errors.hpp"

namespace cos2phi {

namespace {

constexpr double kSeriesLimit = 2.0;
constexpr double kEps = 1e-17;

// Ascending series:
//   K0 = -(ln(x/2) + gamma) I0(x) + sum_{k>=1} (x^2/4)^k / (k!)^2 H_k
double k0_series(double x) {
    const double y = 0.25 * x * x;
    double term = 1.0;  // (y^k / (k!)^2)
    double harmonic = 0.0;
    double i0 = 1.0;
    double tail = 0.0;
    for (int k = 1; k < 200; ++k) {
        term *= y / (static_cast<double>(k) * k);
        harmonic += 1.0 / k;
        i0 += term;
        tail += term * harmonic;
        if (term * harmonic < kEps * std::abs(tail)) break;
    }
    return -(std::log(0.5 * x) + std::numbers::egamma) * i0 + tail;
}

// Steed's continued fraction (Temme's CF2 for nu = 0); returns e^x K0(x).
double k0_scaled_cf(double x) {
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0, q2 = 1.0;
    const double a1 = 0.25;
    double q = a1, c = a1, a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 1; i < 10000; ++i) {
        a -= 2.0 * i;
        c = -a * c / (i + 1.0);
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < kEps) return std::sqrt(std::numbers::pi / (2.0 * x)) / s;
    }
    throw NumericalError("K0 continued fraction did not converge");
}

}  // namespace

double bessel_k0(double x) {
    if (!(x > 0.0)) throw ValidationError("x", "K0 needs x > 0");
    if (x <= kSeriesLimit) return k0_series(x);
    return std::exp(-x) * k0_scaled_cf(x);
}

double bessel_k0_scaled(double x) {
    if (!(x > 0.0)) throw ValidationError("x", "K0 needs x > 0");
    if (x <= kSeriesLimit) return std::exp(x) * k0_series(x);
    return k0_scaled_cf(x);
}

double bessel_k0_sinh(double x) {
    // K0 sinh = (e^x K0) (1 - e^{-2x}) / 2
    return 0.5 * bessel_k0_scaled(x) * -std::expm1(-2.0 * x);
}

}  // namespace cos2phi
