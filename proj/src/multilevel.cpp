#include "cos2phi/multilevel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

#include "cos2phi/constants.hpp"
#include "cos2phi/errors.hpp"
#include "cos2phi/parallel.hpp"

namespace cos2phi {

namespace {

// h f / k_B T for f in GHz.
Eigen::VectorXd reduced_energies(const Eigen::VectorXd &freq, double temperature) {
    return freq * (Const::planck_h * kGHz / (Const::boltzmann_kB * temperature));
}

LevelOperators truncate(const LevelOperators &ops, int n) {
    LevelOperators out;
    out.energies = ops.energies.head(n);
    out.charge = ops.charge.topLeftCorner(n, n);
    out.phase = ops.phase.size() > 0 ? Eigen::MatrixXcd(ops.phase.topLeftCorner(n, n)) : Eigen::MatrixXcd();
    for (int k = 0; k < 2; ++k)
        if (ops.flux[k].size() > 0) out.flux[k] = ops.flux[k].topLeftCorner(n, n);
    for (const auto &[m, ej] : ops.qp) out.qp.emplace_back(m.topLeftCorner(n, n), ej);
    out.ec = ops.ec;
    out.ej_inductive = ops.ej_inductive;
    return out;
}

// Spectral data of B in the detailed-balance symmetrization
// S = D^{-1/2} B D^{1/2}, D = diag(pi). Returns false when that route is not
// usable.
struct SymmetricDecomposition {
    Eigen::VectorXd lambda;
    Eigen::MatrixXd v;      // D^{1/2} Q
    Eigen::MatrixXd v_inv;  // Q^T D^{-1/2}
    double condition = 0.0;
};

bool symmetric_decomposition(const RateMatrix &rm, SymmetricDecomposition &out) {
    if (detailed_balance_residual(rm) > 1e-8) return false;
    const Eigen::VectorXd pi = rm.stationary();
    if (pi.minCoeff() <= 0.0) return false;
    const double condition = std::sqrt(pi.maxCoeff() / pi.minCoeff());
    if (!(condition <= kMaxEigenCondition)) return false;
    const Eigen::VectorXd sq = pi.cwiseSqrt();
    Eigen::MatrixXd s = sq.cwiseInverse().asDiagonal() * rm.b * sq.asDiagonal();
    s = 0.5 * (s + s.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    if (es.info() != Eigen::Success) return false;
    out.lambda = es.eigenvalues();
    out.v = sq.asDiagonal() * es.eigenvectors();
    out.v_inv = es.eigenvectors().transpose() * sq.cwiseInverse().asDiagonal();
    out.condition = condition;
    return true;
}

// Round-off below zero is clipped; anything larger is left visible.
double clip_roundoff(double p) { return (p < 0.0 && p > -1e-12) ? 0.0 : p; }

}  // namespace

Eigen::VectorXd RateMatrix::stationary() const {
    const Eigen::VectorXd x = reduced_energies(frequencies, temperature);
    Eigen::VectorXd w = (-(x.array() - x.minCoeff())).exp();
    return w / w.sum();
}

RateMatrix rate_matrix_from_downward(const Eigen::MatrixXd &down, const Eigen::VectorXd &energies,
                                     double temperature) {
    const int n = static_cast<int>(energies.size());
    if (n < 2) throw ValidationError("n_levels", "must be >= 2");
    if (down.rows() != n || down.cols() != n) throw ValidationError("rates", "shape does not match the level count");
    if (!(temperature > 0.0)) throw ValidationError("temperature", "must be > 0");
    RateMatrix rm;
    rm.temperature = temperature;
    rm.frequencies = energies.array() - energies[0];
    rm.b = Eigen::MatrixXd::Zero(n, n);
    const Eigen::VectorXd x = reduced_energies(rm.frequencies, temperature);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < i; ++j) {
            const double g = down(i, j);
            if (!(g >= 0.0) || !std::isfinite(g)) throw NumericalError("downward rate must be finite and >= 0");
            rm.b(j, i) = g;
            rm.b(i, j) = g * std::exp(-(x[i] - x[j]));
        }
    }
    for (int i = 0; i < n; ++i) rm.b(i, i) = -(rm.b.col(i).sum() - rm.b(i, i));
    return rm;
}

RateMatrix build_rate_matrix(const LevelOperators &ops, const ResonatorParams &res, const NoiseConfig &cfg,
                             double temperature) {
    NoiseConfig c = cfg;
    c.temperature = temperature;
    c.validate();
    res.validate();
    const int n = ops.levels();
    if (n < 2) throw ValidationError("n_levels", "must be >= 2");
    Eigen::MatrixXd down = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        for (int j = 0; j < i; ++j) {
            const auto rates = channel_rates(transition_couplings(ops, i, j, res), c);
            for (double r : rates) down(i, j) += r;
        }
    }
    return rate_matrix_from_downward(down, ops.energies, temperature);
}

RateMatrix build_rate_matrix(const CircuitParams &params, const FluxBias &flux, const NoiseConfig &cfg,
                             const ResonatorParams &res, int n_levels, double temperature, int n_charge) {
    if (n_levels < 2) throw ValidationError("n_levels", "must be >= 2");
    return build_rate_matrix(circuit_level_operators(params, flux, n_levels, n_charge), res, cfg, temperature);
}

double detailed_balance_residual(const RateMatrix &rm) {
    const int n = rm.dimension();
    const Eigen::VectorXd x = reduced_energies(rm.frequencies, rm.temperature);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < i; ++j) {
            const double down = rm.b(j, i);
            const double up = rm.b(i, j);
            const double expected = down * std::exp(-(x[i] - x[j]));
            const double scale = std::max(down, up);
            if (scale > 0.0) worst = std::max(worst, std::abs(up - expected) / scale);
        }
    }
    return worst;
}

PopulationTrace evolve_populations(const RateMatrix &rm, const Eigen::VectorXd &p0, const std::vector<double> &times) {
    const int n = rm.dimension();
    if (p0.size() != n) throw ValidationError("p0", "length does not match the level count");
    if (p0.minCoeff() < 0.0) throw ValidationError("p0", "entries must be >= 0");
    if (std::abs(p0.sum() - 1.0) > 1e-9) throw ValidationError("p0", "must sum to 1");
    for (double t : times)
        if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("times", "must be finite and >= 0");

    PopulationTrace trace;
    trace.times = times;
    trace.populations.resize(static_cast<Eigen::Index>(times.size()), n);

    SymmetricDecomposition sd;
    if (symmetric_decomposition(rm, sd)) {
        trace.condition = sd.condition;
        const Eigen::VectorXd c = sd.v_inv * p0;
        for (std::size_t k = 0; k < times.size(); ++k) {
            const Eigen::VectorXd e = (sd.lambda * times[k]).array().exp();
            trace.populations.row(static_cast<Eigen::Index>(k)) = (sd.v * e.cwiseProduct(c)).transpose();
        }
    } else {
        Eigen::EigenSolver<Eigen::MatrixXd> es(rm.b);
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
        const auto &sv = svd.singularValues();
        trace.condition = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
        if (es.info() == Eigen::Success && trace.condition <= kMaxEigenCondition) {
            const Eigen::MatrixXcd v = es.eigenvectors();
            const Eigen::VectorXcd c = v.partialPivLu().solve(p0.cast<std::complex<double>>());
            for (std::size_t k = 0; k < times.size(); ++k) {
                const Eigen::VectorXcd e = (es.eigenvalues() * times[k]).array().exp();
                trace.populations.row(static_cast<Eigen::Index>(k)) = (v * e.cwiseProduct(c)).real().transpose();
            }
        } else {
            trace.used_fallback = true;
            for (std::size_t k = 0; k < times.size(); ++k) {
                const Eigen::MatrixXd bt = rm.b * times[k];
                trace.populations.row(static_cast<Eigen::Index>(k)) = (bt.exp() * p0).transpose();
            }
        }
    }
    trace.populations = trace.populations.unaryExpr(&clip_roundoff);
    return trace;
}

EffectiveT1 effective_t1(const RateMatrix &rm) {
    const int n = rm.dimension();
    if (n < 2) throw ValidationError("n_levels", "must be >= 2");

    Eigen::VectorXd lambda;
    SymmetricDecomposition sd;
    if (symmetric_decomposition(rm, sd)) {
        lambda = sd.lambda;
    } else {
        Eigen::EigenSolver<Eigen::MatrixXd> es(rm.b, false);
        lambda = es.eigenvalues().real();
    }
    const double scale = lambda.cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) throw NumericalError("rate matrix has no decay");
    double slow = std::numeric_limits<double>::infinity();
    for (double l : lambda)
        if (std::abs(l) > 1e-12 * scale) slow = std::min(slow, std::abs(l));

    EffectiveT1 out;
    out.slowest_rate = slow;
    const double t_end = 5.0 / slow;
    std::vector<double> times(kFitPoints);
    times[0] = 0.0;
    const double t_start = t_end * 1e-6;
    for (int k = 1; k < kFitPoints; ++k)
        times[k] = t_start * std::pow(t_end / t_start, double(k - 1) / double(kFitPoints - 2));
    times.push_back(1000.0 / slow);

    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(n);
    p0[1] = 1.0;
    const PopulationTrace trace = evolve_populations(rm, p0, times);
    const double p_inf = trace.populations(kFitPoints, 1);
    Eigen::VectorXd t(kFitPoints), y(kFitPoints);
    for (int k = 0; k < kFitPoints; ++k) {
        t[k] = times[k];
        y[k] = trace.populations(k, 1) - p_inf;
    }

    // Levenberg-Marquardt on y = a exp(-r t).
    double a = y[0];
    double r = 0.0;
    for (int k = 1; k < kFitPoints; ++k) {
        if (y[k] <= a / std::exp(1.0)) {
            r = 1.0 / t[k];
            break;
        }
    }
    if (r == 0.0) r = slow;
    auto sse = [&](double aa, double rr) { return (y.array() - aa * (-rr * t.array()).exp()).square().sum(); };
    double cost = sse(a, r);
    double mu = 1e-3;
    for (int it = 0; it < 500; ++it) {
        const Eigen::ArrayXd e = (-r * t.array()).exp();
        const Eigen::ArrayXd res = y.array() - a * e;
        Eigen::Matrix<double, Eigen::Dynamic, 2> j(kFitPoints, 2);
        j.col(0) = e.matrix();
        j.col(1) = (-a * t.array() * e).matrix() * r;  // derivative w.r.t. log r
        Eigen::Matrix2d jtj = j.transpose() * j;
        const Eigen::Vector2d g = j.transpose() * res.matrix();
        bool improved = false;
        for (int tries = 0; tries < 30 && !improved; ++tries) {
            Eigen::Matrix2d m = jtj;
            m.diagonal() *= (1.0 + mu);
            const Eigen::Vector2d step = m.ldlt().solve(g);
            const double a_new = a + step[0];
            const double r_new = r * std::exp(step[1]);
            const double c_new = sse(a_new, r_new);
            if (c_new < cost) {
                const double rel = (cost - c_new) / std::max(cost, 1e-300);
                a = a_new;
                r = r_new;
                cost = c_new;
                mu = std::max(mu / 10.0, 1e-12);
                improved = true;
                if (rel < 1e-15) it = 500;
            } else {
                mu *= 10.0;
            }
        }
        if (!improved) break;
    }
    if (!(r > 0.0) || !std::isfinite(r)) throw NumericalError("effective T1 fit failed");
    out.t1 = 1.0 / r;
    out.amplitude = a;
    const double norm = y.squaredNorm();
    out.residual = norm > 0.0 ? std::sqrt(cost / norm) : 0.0;
    out.good_fit = out.residual <= kFitResidualLimit;
    return out;
}

MultilevelT1 multilevel_t1(const CircuitParams &params, const FluxBias &flux, const NoiseConfig &cfg,
                           const ResonatorParams &res, int n_levels, int n_charge) {
    if (n_levels < 2) throw ValidationError("n_levels", "must be >= 2");
    const LevelOperators all = circuit_level_operators(params, flux, n_levels + 1, n_charge);
    MultilevelT1 out;
    out.t1_two_level = t1_budget(truncate(all, 2), res, cfg).t1;
    const EffectiveT1 e = effective_t1(build_rate_matrix(truncate(all, n_levels), res, cfg, cfg.temperature));
    const EffectiveT1 next = effective_t1(build_rate_matrix(all, res, cfg, cfg.temperature));
    out.t1 = e.t1;
    out.t1_next = next.t1;
    out.good_fit = e.good_fit;
    out.converged = std::abs(next.t1 - e.t1) < kLevelConvergence * e.t1;
    return out;
}

std::vector<MultilevelSweepPoint> multilevel_t1_sweep(const CircuitParams &params, const std::vector<FluxBias> &grid,
                                                      const NoiseConfig &cfg, const ResonatorParams &res,
                                                      int n_levels, int n_charge, int workers) {
    if (grid.empty()) throw ValidationError("flux_grid", "sweep grid is empty");
    return parallel_map(grid.size(), workers, [&](std::size_t i) {
        MultilevelSweepPoint p;
        p.flux = grid[i];
        try {
            p.result = multilevel_t1(params, grid[i], cfg, res, n_levels, n_charge);
        } catch (const std::exception &e) {
            p.error = e.what();
        }
        return p;
    });
}

}  // namespace cos2phi
