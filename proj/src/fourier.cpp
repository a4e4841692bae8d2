#include "cos2phi/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <unsupported/Eigen/FFT>

#include "cos2phi/constants.hpp"
#include "cos2phi/errors.hpp"

namespace cos2phi {

namespace {

int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

struct Sampled {
    Eigen::VectorXcd u;
    double scale;
};

Sampled sample(const PeriodicFunction &f, int max_k, int grid) {
    std::vector<double> values(grid);
    double scale = 0.0;
    for (int j = 0; j < grid; ++j) {
        values[j] = f(kTwoPi * j / grid);
        scale = std::max(scale, std::abs(values[j]));
    }
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spectrum;
    fft.fwd(spectrum, values);
    Eigen::VectorXcd u(max_k + 1);
    for (int k = 0; k <= max_k; ++k) u[k] = spectrum[k] / static_cast<double>(grid);
    return {u, scale};
}

}  // namespace

Eigen::VectorXcd fourier_coefficients_on_grid(const PeriodicFunction &f, int max_k, int grid_points) {
    if (grid_points < 2 * max_k + 1) {
        throw NumericalError("quadrature grid too small for the requested harmonics");
    }
    return sample(f, max_k, grid_points).u;
}

ComplexCoefficients fourier_coefficients(const PeriodicFunction &f, int max_k, const FourierOptions &opts) {
    if (max_k < 0) throw ValidationError("max_harmonic", "must be >= 0");
    int grid = next_pow2(std::max(opts.min_grid, 4 * (max_k + 1)));
    Sampled prev = sample(f, max_k, grid);
    double change = 0.0;
    while (grid < opts.grid_cap) {
        grid *= 2;
        Sampled next = sample(f, max_k, grid);
        change = (next.u - prev.u).cwiseAbs().maxCoeff();
        const double floor = opts.tol * std::max(next.scale, std::numeric_limits<double>::min());
        prev = std::move(next);
        if (change <= floor) return {prev.u, grid, prev.scale};
    }
    const double rel = prev.scale > 0.0 ? change / prev.scale : change;
    throw DecompositionError("Fourier coefficients not converged at grid cap", rel);
}

double PeriodicPotential::operator()(double phi) const {
    double acc = 0.0;
    for (const auto &h : coefficients) acc += h.c_cos * std::cos(h.n * phi) + h.c_sin * std::sin(h.n * phi);
    return acc;
}

PeriodicPotential fourier_decompose(const PeriodicFunction &f, int max_harmonic, double tol) {
    FourierOptions opts;
    opts.tol = tol;
    const ComplexCoefficients cc = fourier_coefficients(f, max_harmonic, opts);

    PeriodicPotential out;
    out.max_harmonic = max_harmonic;
    out.grid_points = cc.grid_points;
    out.coefficients.reserve(max_harmonic + 1);
    out.coefficients.push_back({0, cc.u[0].real(), 0.0});
    for (int n = 1; n <= max_harmonic; ++n) {
        out.coefficients.push_back({n, 2.0 * cc.u[n].real(), -2.0 * cc.u[n].imag()});
    }

    // Offset test grid so it never coincides with the quadrature nodes.
    constexpr int kTestPoints = 4096;
    double worst = 0.0;
    for (int j = 0; j < kTestPoints; ++j) {
        const double phi = kTwoPi * (j + 0.5) / kTestPoints;
        worst = std::max(worst, std::abs(f(phi) - out(phi)));
    }
    out.truncation_residual = cc.scale > 0.0 ? worst / cc.scale : worst;
    return out;
}

}  // namespace cos2phi
