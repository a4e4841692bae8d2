#ifndef COS2PHI_SPECTRA_HPP
#define COS2PHI_SPECTRA_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cos2phi/circuit.hpp"
#include "cos2phi/hamiltonian.hpp"

namespace cos2phi {

struct ResonatorParams {
    double f_res_bare = 5.344;  // GHz
    double g_coupling = 0.025;  // GHz

    void validate() const;
};

struct ResonatorShift {
    double shift = 0.0;             // GHz
    double truncation_delta = 0.0;  // change when one more level is added, GHz
    bool near_degenerate = false;   // some |f_is| within 1 MHz of f_res
};

inline constexpr double kResonanceCollision = 1e-3;  // GHz

// Dispersive pull of the resonator with the qubit in `from_state`:
//   g^2 sum_{i != s} |<i|n|s>|^2 (-2 f_is) / (f_is^2 - f_res^2),  f_is = E_i - E_s.
// A transition above the resonator pulls it down.
ResonatorShift resonator_shift(const EigenSystem &eig, const Eigen::MatrixXcd &charge, const ResonatorParams &res,
                               int from_state, int n_levels);

ResonatorShift resonator_shift(const CircuitParams &params, const FluxBias &flux, const ResonatorParams &res,
                               int from_state, int n_levels, int n_charge = kDefaultNCharge);

struct SpectrumPoint {
    FluxBias flux;
    Eigen::VectorXd transitions;  // f_{0->k}, k = 1..levels
    std::vector<int> labels;      // eigen-index of each tracked level
    std::string error;            // non-empty when this point failed
};

inline constexpr double kDegeneracyTol = 1e-6;  // GHz

// One eigensolve per point. Levels follow energy order; inside clusters of
// near-degenerate levels the order is chosen by maximal overlap with the
// previous point.
std::vector<SpectrumPoint> transition_spectrum_sweep(const CircuitParams &params, const std::vector<FluxBias> &grid,
                                                     int levels, int n_charge = kDefaultNCharge, int workers = 1);

double qubit_frequency(const CircuitParams &params, const FluxBias &flux, int n_charge = kDefaultNCharge);

struct SpectroscopyRow {
    double phi_bias = 0.0;
    double phi_ctrl = 0.0;
    double f01 = 0.0;
    double sigma = 0.0;
};

struct SpectroscopyDataset {
    std::vector<SpectroscopyRow> rows;

    void validate() const;
};

inline constexpr double kDefaultSigmaCap = 0.010;  // GHz

// Drops rows whose uncertainty exceeds the cap.
SpectroscopyDataset filter_by_uncertainty(const SpectroscopyDataset &data, double sigma_cap = kDefaultSigmaCap);

struct FitConstraints {
    bool tie_ej4_ej5 = true;
    int n_charge = kDefaultNCharge;
    int max_iterations = 2000;
    double rel_tol = 1e-9;
};

struct FitResult {
    JunctionSet junctions;
    double residual_rms = 0.0;       // GHz, unweighted
    double objective = 0.0;          // weighted chi^2
    Eigen::VectorXd sensitivity;     // 1-sigma relative uncertainty per free parameter
    std::vector<std::string> parameter_names;
    std::vector<double> objective_history;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

// Weighted least-squares fit of the junction energies with E_C held fixed.
// Parameters are fitted in log space. The model is symmetric under ej1 <-> ej2,
// so only the unordered pair is identifiable.
FitResult fit_spectrum(const SpectroscopyDataset &data, double fixed_ec, const JunctionSet &initial,
                       const FitConstraints &constraints = {});

double spectrum_objective(const SpectroscopyDataset &data, const CircuitParams &params, int n_charge);

}  // namespace cos2phi

#endif  // COS2PHI_SPECTRA_HPP
