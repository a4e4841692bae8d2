#ifndef COS2PHI_BESSEL_HPP
#define COS2PHI_BESSEL_HPP

namespace cos2phi {

// Modified Bessel function of the second kind, order zero, x > 0.
double bessel_k0(double x);

// e^x K0(x); finite for all x > 0.
double bessel_k0_scaled(double x);

// K0(x) sinh(x) without overflow for large x.
double bessel_k0_sinh(double x);

}  // namespace cos2phi

#endif  // COS2PHI_BESSEL_HPP
