#ifndef COS2PHI_FLUXONIUM_HPP
#define COS2PHI_FLUXONIUM_HPP

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "cos2phi/noise.hpp"

namespace cos2phi {

struct FluxoniumParams {
    double ec = 1.0;       // GHz
    double ej = 4.1;       // GHz
    double el = 0.8;       // GHz
    double phi_ext = 0.5;  // Phi0
    int basis_size = 120;

    void validate() const;
};

// 4 E_C n^2 - E_J cos(phi) + E_L (phi - phi_ext)^2 / 2 in the oscillator basis
// of the LC part, centred on phi_ext. Real symmetric.
Eigen::MatrixXd build_fluxonium(const FluxoniumParams &p);

struct FluxoniumEigen {
    FluxoniumParams params;
    Eigen::VectorXd energies;  // GHz, ascending
    Eigen::MatrixXd states;    // columns over the oscillator basis
    double top_population = 0.0;  // largest weight on the last basis state

    int levels() const { return static_cast<int>(energies.size()); }
};

inline constexpr double kFluxoniumTruncation = 1e-6;

// Lowest k_levels eigenpairs. Throws NumericalError when one of the lowest
// max(5, k_levels) states leaks more than 1e-6 onto the last basis state.
FluxoniumEigen solve_fluxonium(const FluxoniumParams &p, int k_levels = 5);

double fluxonium_frequency(const FluxoniumParams &p);

enum class FluxoniumOperator {
    charge_n,
    phase_phi,
    sin_half_phase,
    dH_dPhi_ext,  // GHz per Phi0
};

// Operator in the oscillator basis.
Eigen::MatrixXcd fluxonium_operator(const FluxoniumParams &p, FluxoniumOperator kind);

// Elements <i|O|j> between the levels held in `eig`.
Eigen::MatrixXcd fluxonium_operator_matrix(const FluxoniumEigen &eig, FluxoniumOperator kind);

std::complex<double> fluxonium_matrix_element(const FluxoniumEigen &eig, FluxoniumOperator kind, int i, int j);

// Oscillator-basis matrices of cos(s x) and sin(s x) for x = a + a^dagger,
// from displacement-operator elements. Exposed for testing.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> oscillator_trig(int basis_size, double s);

// One flux loop (bias slot), quasiparticles on the small junction only,
// inductive loss through E_L, dielectric loss through E_C.
LevelOperators fluxonium_level_operators(const FluxoniumParams &p, int levels);

T1Budget fluxonium_t1_budget(const FluxoniumParams &p, const NoiseConfig &cfg, const ResonatorParams &res);

struct FluxoniumSweepPoint {
    double phi_ext = 0.0;
    Eigen::VectorXd transitions;  // f_{0->k}
    T1Budget budget;
    std::string error;
};

std::vector<FluxoniumSweepPoint> fluxonium_sweep(const FluxoniumParams &p, const std::vector<double> &phi_ext,
                                                 const NoiseConfig &cfg, const ResonatorParams &res, int levels,
                                                 int workers = 1);

}  // namespace cos2phi

#endif  // COS2PHI_FLUXONIUM_HPP
