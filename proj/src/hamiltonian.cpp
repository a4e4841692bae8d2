#include "cos2phi/hamiltonian.hpp"

#include <algorithm>
#include <cmath>

#include "cos2phi/constants.hpp"
#include "cos2phi/errors.hpp"

namespace cos2phi {

namespace {

constexpr double kPhaseGridTol = 1e-10;
constexpr int kPhaseGridCap = 1 << 14;

int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Exact charge-basis elements of the sawtooth phi and of sin(phi/2) on
// [-pi, pi), optionally taken about a shifted branch cut. Both jump at the
// cut, so grid quadrature converges only algebraically there.
Eigen::MatrixXcd branch_operator(int n_charge, bool half_sine, double shift) {
    const int dim = 2 * n_charge + 1;
    Eigen::VectorXcd u(dim);
    u[0] = 0.0;
    const std::complex<double> i(0.0, 1.0);
    for (int k = 1; k < dim; ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        const double kk = static_cast<double>(k);
        const double mag = half_sine ? sign * kk / (kPi * (kk * kk - 0.25)) : sign / kk;
        u[k] = i * mag * std::exp(-i * (kk * shift));
    }
    return toeplitz_from_coefficients(u, n_charge);
}

}  // namespace

Eigen::MatrixXcd toeplitz_from_coefficients(const Eigen::VectorXcd &u, int n_charge) {
    const int dim = 2 * n_charge + 1;
    if (u.size() < dim) throw NumericalError("too few Fourier coefficients for the charge basis");
    Eigen::MatrixXcd h(dim, dim);
    for (int m = 0; m < dim; ++m) {
        for (int n = 0; n < dim; ++n) {
            const int k = m - n;
            h(m, n) = k >= 0 ? u[k] : std::conj(u[-k]);
        }
    }
    return h;
}

Eigen::MatrixXcd hamiltonian_from_potential(double ec, double ng, const PeriodicFunction &potential,
                                            int n_charge, const FourierOptions &opts) {
    if (n_charge < 1) throw ValidationError("n_charge", "must be >= 1");
    const ComplexCoefficients cc = fourier_coefficients(potential, 2 * n_charge, opts);
    Eigen::MatrixXcd h = toeplitz_from_coefficients(cc.u, n_charge);
    for (int m = 0; m < h.rows(); ++m) {
        const double n = m - n_charge - ng;
        h(m, m) = std::complex<double>(h(m, m).real() + 4.0 * ec * n * n, 0.0);
    }
    return h;
}

Eigen::MatrixXcd build_hamiltonian(const CircuitParams &params, const FluxBias &flux, int n_charge) {
    validate(params);
    if (n_charge < 10) throw ValidationError("n_charge", "charge basis half-size must be >= 10");
    const CircuitPotential potential(params, flux);
    return hamiltonian_from_potential(params.ec, params.ng, std::cref(potential), n_charge);
}

EigenSystem eigensystem(const Eigen::MatrixXcd &h, int k_levels, double ng) {
    const int dim = static_cast<int>(h.rows());
    if (k_levels < 1 || k_levels > dim) throw ValidationError("levels", "k_levels must be in [1, dim]");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
    if (solver.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver did not converge");

    EigenSystem out;
    out.n_charge = (dim - 1) / 2;
    out.ng = ng;
    out.energies = solver.eigenvalues().head(k_levels);
    out.states = solver.eigenvectors().leftCols(k_levels);
    for (int l = 0; l < k_levels; ++l) {
        auto col = out.states.col(l);
        const double peak = col.cwiseAbs().maxCoeff();
        Eigen::Index idx = 0;
        // First index within rounding of the peak, so near-ties resolve the same way everywhere.
        while (std::abs(col[idx]) < peak * (1.0 - 1e-9)) ++idx;
        const std::complex<double> phase = std::abs(col[idx]) > 0.0 ? col[idx] / std::abs(col[idx]) : 1.0;
        col /= phase;
        col.normalize();
    }
    return out;
}

EigenSystem solve_circuit(const CircuitParams &params, const FluxBias &flux, int k_levels, int n_charge) {
    return eigensystem(build_hamiltonian(params, flux, n_charge), k_levels, params.ng);
}

Eigen::MatrixXcd phase_wavefunctions(const EigenSystem &eig, int grid_points) {
    const int dim = static_cast<int>(eig.states.rows());
    Eigen::MatrixXcd basis(grid_points, dim);
    const double norm = 1.0 / std::sqrt(kTwoPi);
    for (int j = 0; j < grid_points; ++j) {
        const double phi = -kPi + kTwoPi * j / grid_points;
        for (int m = 0; m < dim; ++m) {
            const double n = m - eig.n_charge;
            basis(j, m) = std::polar(norm, n * phi);
        }
    }
    return basis * eig.states;
}

Eigen::MatrixXcd phase_operator_matrix(const EigenSystem &eig, const std::function<double(double)> &op) {
    const int dim = static_cast<int>(eig.states.rows());
    int grid = next_pow2(4 * dim);
    auto integrate = [&](int g) {
        const Eigen::MatrixXcd psi = phase_wavefunctions(eig, g);
        Eigen::VectorXd weights(g);
        for (int j = 0; j < g; ++j) weights[j] = op(-kPi + kTwoPi * j / g) * kTwoPi / g;
        return Eigen::MatrixXcd(psi.adjoint() * weights.asDiagonal() * psi);
    };
    Eigen::MatrixXcd prev = integrate(grid);
    while (grid < kPhaseGridCap) {
        grid *= 2;
        Eigen::MatrixXcd next = integrate(grid);
        const double change = (next - prev).cwiseAbs().maxCoeff();
        const double scale = std::max(1.0, next.cwiseAbs().maxCoeff());
        prev = std::move(next);
        if (change <= kPhaseGridTol * scale) return prev;
    }
    throw NumericalError("phase-grid matrix element not converged; wavefunction not localized within [-pi, pi)");
}

Eigen::MatrixXcd potential_derivative(const CircuitParams &params, const FluxBias &flux, bool wrt_bias,
                                      int n_charge) {
    const PotentialFluxDerivative dv(params, flux, wrt_bias);
    return toeplitz_from_coefficients(fourier_coefficients(std::cref(dv), 2 * n_charge).u, n_charge);
}

Eigen::MatrixXcd operator_matrix(const EigenSystem &eig, OperatorKind kind, const CircuitParams &params,
                                 const FluxBias &flux) {
    const auto &v = eig.states;
    switch (kind) {
    case OperatorKind::charge_n: {
        Eigen::VectorXd n(v.rows());
        for (Eigen::Index m = 0; m < n.size(); ++m) n[m] = static_cast<double>(m - eig.n_charge);
        return v.adjoint() * n.asDiagonal() * v;
    }
    case OperatorKind::phase_phi:
        return v.adjoint() * branch_operator(eig.n_charge, false, 0.0) * v;
    case OperatorKind::sin_half_phase:
        return v.adjoint() * branch_operator(eig.n_charge, true, 0.0) * v;
    case OperatorKind::sin_half_phase_right:
        return v.adjoint() * branch_operator(eig.n_charge, true, kTwoPi * flux.phi_bias) * v;
    case OperatorKind::dH_dPhi_bias:
    case OperatorKind::dH_dPhi_ctrl: {
        const Eigen::MatrixXcd d =
            potential_derivative(params, flux, kind == OperatorKind::dH_dPhi_bias, eig.n_charge);
        return v.adjoint() * d * v;
    }
    }
    throw ValidationError("op_kind", "unknown operator");
}

std::complex<double> operator_matrix_element(const EigenSystem &eig, OperatorKind kind, int i, int j,
                                             const CircuitParams &params, const FluxBias &flux) {
    if (i < 0 || j < 0 || i >= eig.levels() || j >= eig.levels()) {
        throw ValidationError("level", "level index outside the computed eigensystem");
    }
    return operator_matrix(eig, kind, params, flux)(i, j);
}

}  // namespace cos2phi
