#ifndef COS2PHI_NOISE_HPP
#define COS2PHI_NOISE_HPP

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cos2phi/circuit.hpp"
#include "cos2phi/hamiltonian.hpp"
#include "cos2phi/spectra.hpp"

namespace cos2phi {

struct NoiseConfig {
    double q_cap_ref = 1e5;            // A_cap at 6 GHz
    double alpha_cap = 0.7;
    double q_ind_ref = 5e8;            // A_ind at 0.5 GHz
    double mutual_inductance_bias = 1800.0;  // Phi0 / A
    double mutual_inductance_ctrl = 1800.0;  // Phi0 / A
    double bias_line_impedance = 50.0;       // Ohm
    double x_qp = 7e-10;
    double gap = 44.0;                 // GHz, Al gap Delta/h
    double a_one_over_f = 1.5e-5;      // Phi0
    double temperature = 0.040;        // K
    double loaded_q_resonator = 5000.0;
    std::optional<double> effective_capacitance;  // F; default e^2 / (2 E_C)
    std::optional<double> effective_inductance;   // H; default (Phi0/2pi)^2 / E_J,eff

    void validate() const;
};

enum class NoiseChannel : int {
    dielectric = 0,
    inductive,
    fbl_ohmic_bias,
    fbl_ohmic_ctrl,
    quasiparticle,
    purcell,
    one_over_f_bias,
    one_over_f_ctrl,
};

inline constexpr int kChannelCount = 8;
inline constexpr std::array<std::string_view, kChannelCount> kChannelNames = {
    "dielectric", "inductive",   "fbl_ohmic_bias",  "fbl_ohmic_ctrl",
    "quasiparticle", "purcell", "one_over_f_bias", "one_over_f_ctrl"};

inline std::string_view channel_name(NoiseChannel c) { return kChannelNames[static_cast<int>(c)]; }

struct T1Budget {
    std::array<double, kChannelCount> rates{};  // 1/s
    double total_rate = 0.0;                    // 1/s
    double t1 = 0.0;                            // s, +inf when lossless
    double f01 = 0.0;                           // GHz

    double rate(NoiseChannel c) const { return rates[static_cast<int>(c)]; }
    NoiseChannel dominant() const;
    // Total with one channel removed.
    double total_without(NoiseChannel c) const;
};

// ---- spectral model, SI units -------------------------------------------

double q_cap(double omega, const NoiseConfig &cfg);
double q_ind(double omega, const NoiseConfig &cfg);
double thermal_coth(double omega, double temperature);

// Optional inputs required by some channels.
struct DensityContext {
    std::optional<double> capacitance;  // F   (dielectric)
    std::optional<double> inductance;   // H   (inductive)
    std::optional<double> mutual;       // H   (Ohmic bias line)
    std::optional<double> ej_joule;     // J   (quasiparticle admittance)
};

double qp_admittance_re(double omega, double ej_joule, const NoiseConfig &cfg);

// Appendix densities with coth(hbar|w|/2kT) thermal factors. Purcell has no
// density and is rejected here.
double spectral_density(NoiseChannel channel, double omega, const NoiseConfig &cfg, const DensityContext &ctx);

// Fermi golden rule |m|^2 S / hbar^2.
double golden_rule_rate(double matrix_element, double s_value);

// ---- transition couplings -----------------------------------------------

struct QpJunction {
    double sin_half = 0.0;  // |<f|sin(phi/2)|i>|
    double ej = 0.0;        // energy unit
};

// Everything the channels need for one transition. Energy-like quantities are
// expressed in a common unit of `energy_unit_hz` Hz (1e9 -> GHz).
struct TransitionCouplings {
    double freq = 0.0;     // transition frequency (energy unit)
    double charge = 0.0;   // |<f|n|i>|
    double phase = 0.0;    // |<f|phi|i>|
    std::array<double, 2> flux{};  // |<f|dH/dPhi_k|i>|, energy unit per Phi0 (bias, ctrl)
    std::vector<QpJunction> qp;
    double ec = 0.0;            // energy unit
    double ej_inductive = 0.0;  // energy unit
    double f_res = 0.0;         // energy unit
    double g = 0.0;             // energy unit
    double energy_unit_hz = 1e9;
};

std::array<double, kChannelCount> channel_rates(const TransitionCouplings &tc, const NoiseConfig &cfg);

// Operators on the lowest levels of a qubit, shared by the two-level budget
// and the rate-matrix model.
struct LevelOperators {
    Eigen::VectorXd energies;  // GHz
    Eigen::MatrixXcd charge;
    Eigen::MatrixXcd phase;
    std::array<Eigen::MatrixXcd, 2> flux;  // GHz/Phi0; an empty matrix disables the loop
    std::vector<std::pair<Eigen::MatrixXcd, double>> qp;  // (sin(phi/2) elements, E_J in GHz)
    double ec = 0.0;
    double ej_inductive = 0.0;

    int levels() const { return static_cast<int>(energies.size()); }
};

TransitionCouplings transition_couplings(const LevelOperators &ops, int upper, int lower, const ResonatorParams &res);

LevelOperators circuit_level_operators(const CircuitParams &params, const FluxBias &flux, int levels,
                                       int n_charge = kDefaultNCharge);

// 1 -> 0 budget from precomputed operators.
T1Budget t1_budget(const LevelOperators &ops, const ResonatorParams &res, const NoiseConfig &cfg);

T1Budget t1_budget(const CircuitParams &params, const FluxBias &flux, const ResonatorParams &res,
                   const NoiseConfig &cfg, int n_charge = kDefaultNCharge);

struct PurcellEstimate {
    double rate = 0.0;         // 1/s
    bool far_detuned = true;   // |Delta0| >= 10 g01
};

PurcellEstimate purcell_rate(double f01, double charge01, const ResonatorParams &res, const NoiseConfig &cfg);
PurcellEstimate purcell_rate(const CircuitParams &params, const FluxBias &flux, const ResonatorParams &res,
                             const NoiseConfig &cfg, int n_charge = kDefaultNCharge);

struct T1SweepPoint {
    FluxBias flux;
    T1Budget budget;
    std::string error;
};

std::vector<T1SweepPoint> t1_sweep(const CircuitParams &params, const std::vector<FluxBias> &grid,
                                   const ResonatorParams &res, const NoiseConfig &cfg,
                                   int n_charge = kDefaultNCharge, int workers = 1);

}  // namespace cos2phi

#endif  // COS2PHI_NOISE_HPP
