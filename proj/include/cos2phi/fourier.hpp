#ifndef COS2PHI_FOURIER_HPP
#define COS2PHI_FOURIER_HPP

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace cos2phi {

using PeriodicFunction = std::function<double(double)>;

// f(phi) = sum_n c_cos cos(n phi) + c_sin sin(n phi)
struct Harmonic {
    int n = 0;
    double c_cos = 0.0;
    double c_sin = 0.0;
};

struct PeriodicPotential {
    std::vector<Harmonic> coefficients;
    int max_harmonic = 0;
    int grid_points = 0;           // quadrature grid that met the tolerance
    double truncation_residual = 0.0;  // sup |f - series| / max|f| on a test grid

    double operator()(double phi) const;
};

struct FourierOptions {
    double tol = 1e-10;
    int min_grid = 256;
    int grid_cap = 1 << 20;
};

// Complex coefficients u_k (k = 0..max_k) of f = sum_k u_k e^{i k phi} for a
// real f, so u_{-k} = conj(u_k). Trapezoidal quadrature, grid doubled until
// every coefficient moves by less than tol * max|f|.
struct ComplexCoefficients {
    Eigen::VectorXcd u;
    int grid_points = 0;
    double scale = 0.0;  // max|f| on the final grid
};

ComplexCoefficients fourier_coefficients(const PeriodicFunction &f, int max_k,
                                         const FourierOptions &opts = {});

// Same quadrature on a caller-chosen grid, no convergence loop.
Eigen::VectorXcd fourier_coefficients_on_grid(const PeriodicFunction &f, int max_k, int grid_points);

PeriodicPotential fourier_decompose(const PeriodicFunction &f, int max_harmonic = 20, double tol = 1e-10);

}  // namespace cos2phi

#endif  // COS2PHI_FOURIER_HPP
