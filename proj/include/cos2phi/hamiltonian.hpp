#ifndef COS2PHI_HAMILTONIAN_HPP
#define COS2PHI_HAMILTONIAN_HPP

#include <complex>

#include <Eigen/Dense>

#include "cos2phi/circuit.hpp"
#include "cos2phi/fourier.hpp"

namespace cos2phi {

inline constexpr int kDefaultNCharge = 40;

// Charge-basis Hamiltonian 4 E_C (n - n_g)^2 + U(phi), n in [-n_charge, n_charge].
// U enters through all harmonics |k| <= 2 n_charge; e^{ik phi} shifts n by k.
Eigen::MatrixXcd hamiltonian_from_potential(double ec, double ng, const PeriodicFunction &potential,
                                            int n_charge, const FourierOptions &opts = {});

// Hermitian Toeplitz matrix with entries H(m, n) = u_{m-n}.
Eigen::MatrixXcd toeplitz_from_coefficients(const Eigen::VectorXcd &u, int n_charge);

Eigen::MatrixXcd build_hamiltonian(const CircuitParams &params, const FluxBias &flux,
                                   int n_charge = kDefaultNCharge);

struct EigenSystem {
    Eigen::VectorXd energies;  // GHz, ascending
    Eigen::MatrixXcd states;   // columns over the charge basis
    int n_charge = 0;
    double ng = 0.0;

    int levels() const { return static_cast<int>(energies.size()); }
};

// Lowest k_levels eigenpairs. Each state's largest-magnitude amplitude is made
// real and positive so results are deterministic.
EigenSystem eigensystem(const Eigen::MatrixXcd &h, int k_levels, double ng = 0.0);

// Convenience: build + diagonalize.
EigenSystem solve_circuit(const CircuitParams &params, const FluxBias &flux, int k_levels,
                          int n_charge = kDefaultNCharge);

enum class OperatorKind {
    charge_n,
    phase_phi,
    sin_half_phase,        // sin(phi/2), phi on [-pi, pi)
    sin_half_phase_right,  // sin(psi/2), psi = phi - 2 pi phi_bias wrapped to [-pi, pi)
    dH_dPhi_bias,          // GHz per Phi0
    dH_dPhi_ctrl,          // GHz per Phi0, raw bias flux held fixed
};

// Matrix elements <i|O|j> for all pairs of levels held in `eig`.
Eigen::MatrixXcd operator_matrix(const EigenSystem &eig, OperatorKind kind, const CircuitParams &params,
                                 const FluxBias &flux);

std::complex<double> operator_matrix_element(const EigenSystem &eig, OperatorKind kind, int i, int j,
                                             const CircuitParams &params, const FluxBias &flux);

// dU/dPhi in the charge basis (GHz per Phi0), from the closed-form slope of
// the potential. The control-loop derivative is taken at fixed raw bias flux.
Eigen::MatrixXcd potential_derivative(const CircuitParams &params, const FluxBias &flux, bool wrt_bias,
                                      int n_charge);

// psi(phi) = sum_n a_n e^{i n phi} / sqrt(2 pi) on a uniform grid over [-pi, pi).
Eigen::MatrixXcd phase_wavefunctions(const EigenSystem &eig, int grid_points);

// Elements of a smooth 2pi-periodic operator O(phi) by quadrature on
// [-pi, pi). The grid is doubled until the elements are stable. The branch
// operators of OperatorKind are evaluated exactly instead.
Eigen::MatrixXcd phase_operator_matrix(const EigenSystem &eig, const std::function<double(double)> &op);

}  // namespace cos2phi

#endif  // COS2PHI_HAMILTONIAN_HPP
