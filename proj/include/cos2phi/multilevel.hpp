#ifndef COS2PHI_MULTILEVEL_HPP
#define COS2PHI_MULTILEVEL_HPP

#include <vector>

#include <Eigen/Dense>

#include "cos2phi/noise.hpp"

namespace cos2phi {

// Generator of dp/dt = B p. Column i holds the rates out of level i:
// B(j, i) = Gamma_{i->j} for j != i and B(i, i) = -sum_j Gamma_{i->j}.
struct RateMatrix {
    Eigen::MatrixXd b;              // 1/s
    double temperature = 0.0;       // K
    Eigen::VectorXd frequencies;    // level energies relative to the ground state, GHz

    int dimension() const { return static_cast<int>(b.rows()); }
    // Boltzmann populations at `temperature`.
    Eigen::VectorXd stationary() const;
};

inline constexpr int kDefaultLevels = 5;

// Assembles B from downward rates down(i, j) = Gamma_{i->j} for i > j (entries
// with i <= j are ignored). Upward rates follow from detailed balance.
RateMatrix rate_matrix_from_downward(const Eigen::MatrixXd &down, const Eigen::VectorXd &energies, double temperature);

// Golden-rule rates of every channel for every pair of the lowest levels.
RateMatrix build_rate_matrix(const LevelOperators &ops, const ResonatorParams &res, const NoiseConfig &cfg,
                             double temperature);

RateMatrix build_rate_matrix(const CircuitParams &params, const FluxBias &flux, const NoiseConfig &cfg,
                             const ResonatorParams &res, int n_levels, double temperature,
                             int n_charge = kDefaultNCharge);

// Largest |Gamma_{i->j} - Gamma_{j->i} exp(h(f_i - f_j)/kT)| relative to the rate scale.
double detailed_balance_residual(const RateMatrix &rm);

struct PopulationTrace {
    std::vector<double> times;     // s
    Eigen::MatrixXd populations;   // one row per time, one column per level
    bool used_fallback = false;    // matrix exponential instead of the eigenbasis
    double condition = 0.0;        // condition number of the eigenvector matrix
};

inline constexpr double kMaxEigenCondition = 1e12;

PopulationTrace evolve_populations(const RateMatrix &rm, const Eigen::VectorXd &p0, const std::vector<double> &times);

struct EffectiveT1 {
    double t1 = 0.0;            // s
    double amplitude = 0.0;     // fitted p1(0) - p1(inf)
    double residual = 0.0;      // rms residual / rms signal
    bool good_fit = true;       // residual <= 5%
    double slowest_rate = 0.0;  // |lambda_slow|, 1/s
};

inline constexpr double kFitResidualLimit = 0.05;
inline constexpr int kFitPoints = 200;

// Starts in |1>, fits p1(t) - p1(inf) to A exp(-t/T1) on [0, 5/|lambda_slow|].
EffectiveT1 effective_t1(const RateMatrix &rm);

struct MultilevelT1 {
    double t1 = 0.0;             // N-level effective T1, s
    double t1_two_level = 0.0;   // 1 / (total golden-rule 1->0 rate), s
    double t1_next = 0.0;        // same with N + 1 levels, s
    bool converged = true;       // |T1(N+1) - T1(N)| < 2% T1(N)
    bool good_fit = true;
};

inline constexpr double kLevelConvergence = 0.02;

MultilevelT1 multilevel_t1(const CircuitParams &params, const FluxBias &flux, const NoiseConfig &cfg,
                           const ResonatorParams &res, int n_levels = kDefaultLevels,
                           int n_charge = kDefaultNCharge);

struct MultilevelSweepPoint {
    FluxBias flux;
    MultilevelT1 result;
    std::string error;
};

std::vector<MultilevelSweepPoint> multilevel_t1_sweep(const CircuitParams &params, const std::vector<FluxBias> &grid,
                                                      const NoiseConfig &cfg, const ResonatorParams &res,
                                                      int n_levels = kDefaultLevels, int n_charge = kDefaultNCharge,
                                                      int workers = 1);

}  // namespace cos2phi

#endif  // COS2PHI_MULTILEVEL_HPP
