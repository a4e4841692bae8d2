#include "cos2phi/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cos2phi/errors.hpp"
#include "cos2phi/parallel.hpp"
#include "cos2phi/simplex.hpp"

namespace cos2phi {

void ResonatorParams::validate() const {
    if (!(f_res_bare > 0.0) || !std::isfinite(f_res_bare)) throw ValidationError("f_res_ghz", "must be > 0");
    if (!(g_coupling >= 0.0) || !std::isfinite(g_coupling)) throw ValidationError("g_ghz", "must be >= 0");
}

namespace {

double shift_sum(const EigenSystem &eig, const Eigen::MatrixXcd &charge, const ResonatorParams &res, int s,
                 int n_levels, bool &collision) {
    const double g2 = res.g_coupling * res.g_coupling;
    const double fr2 = res.f_res_bare * res.f_res_bare;
    double acc = 0.0;
    for (int i = 0; i < n_levels; ++i) {
        if (i == s) continue;
        const double f = eig.energies[i] - eig.energies[s];
        if (std::abs(std::abs(f) - res.f_res_bare) < kResonanceCollision) collision = true;
        acc += std::norm(charge(i, s)) * (-2.0 * f) / (f * f - fr2);
    }
    return g2 * acc;
}

}  // namespace

ResonatorShift resonator_shift(const EigenSystem &eig, const Eigen::MatrixXcd &charge, const ResonatorParams &res,
                               int from_state, int n_levels) {
    if (from_state < 0 || n_levels < from_state + 2) {
        throw ValidationError("n_levels", "need n_levels >= from_state + 2");
    }
    if (eig.levels() < n_levels + 1) throw ValidationError("n_levels", "eigensystem holds too few levels");
    ResonatorShift out;
    bool collision = false;
    out.shift = shift_sum(eig, charge, res, from_state, n_levels, collision);
    bool ignored = false;
    out.truncation_delta = shift_sum(eig, charge, res, from_state, n_levels + 1, ignored) - out.shift;
    out.near_degenerate = collision;
    return out;
}

ResonatorShift resonator_shift(const CircuitParams &params, const FluxBias &flux, const ResonatorParams &res,
                               int from_state, int n_levels, int n_charge) {
    res.validate();
    const EigenSystem eig = solve_circuit(params, flux, n_levels + 1, n_charge);
    const Eigen::MatrixXcd charge = operator_matrix(eig, OperatorKind::charge_n, params, flux);
    return resonator_shift(eig, charge, res, from_state, n_levels);
}

double qubit_frequency(const CircuitParams &params, const FluxBias &flux, int n_charge) {
    const Eigen::MatrixXcd h = build_hamiltonian(params, flux, n_charge);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver did not converge");
    return solver.eigenvalues()[1] - solver.eigenvalues()[0];
}

std::vector<SpectrumPoint> transition_spectrum_sweep(const CircuitParams &params, const std::vector<FluxBias> &grid,
                                                     int levels, int n_charge, int workers) {
    if (grid.empty()) throw ValidationError("flux_grid", "sweep grid is empty");
    if (levels < 1) throw ValidationError("levels", "must be >= 1");

    struct Solved {
        EigenSystem eig;
        std::string error;
    };
    const auto solved = parallel_map(grid.size(), workers, [&](std::size_t i) {
        Solved s;
        try {
            s.eig = solve_circuit(params, grid[i], levels + 1, n_charge);
        } catch (const std::exception &e) {
            s.error = e.what();
        }
        return s;
    });

    std::vector<SpectrumPoint> out(grid.size());
    const Eigen::MatrixXcd *prev_states = nullptr;
    std::vector<int> prev_labels;
    for (std::size_t p = 0; p < grid.size(); ++p) {
        out[p].flux = grid[p];
        if (!solved[p].error.empty()) {
            out[p].error = solved[p].error;
            continue;
        }
        const EigenSystem &eig = solved[p].eig;
        const int k = eig.levels();
        std::vector<int> labels(k);
        for (int i = 0; i < k; ++i) labels[i] = i;

        if (prev_states != nullptr) {
            // Reorder inside each near-degenerate cluster by overlap with the previous point.
            int start = 0;
            while (start < k) {
                int stop = start + 1;
                while (stop < k && eig.energies[stop] - eig.energies[stop - 1] < kDegeneracyTol) ++stop;
                std::vector<int> pool(labels.begin() + start, labels.begin() + stop);
                for (int slot = start; slot < stop; ++slot) {
                    const auto ref = prev_states->col(prev_labels[slot]);
                    auto best = std::max_element(pool.begin(), pool.end(), [&](int a, int b) {
                        return std::abs(ref.dot(eig.states.col(a))) < std::abs(ref.dot(eig.states.col(b)));
                    });
                    labels[slot] = *best;
                    pool.erase(best);
                }
                start = stop;
            }
        }
        out[p].labels = labels;
        out[p].transitions.resize(levels);
        for (int l = 1; l <= levels; ++l) out[p].transitions[l - 1] = eig.energies[labels[l]] - eig.energies[labels[0]];
        prev_states = &eig.states;
        prev_labels = labels;
    }
    return out;
}

void SpectroscopyDataset::validate() const {
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto &r = rows[i];
        const std::string where = "row " + std::to_string(i + 1);
        if (!std::isfinite(r.phi_bias) || !std::isfinite(r.phi_ctrl)) throw ValidationError(where, "non-finite flux");
        if (!std::isfinite(r.f01)) throw ValidationError(where, "non-finite f01");
        if (!(r.sigma > 0.0) || !std::isfinite(r.sigma)) throw ValidationError(where, "uncertainty must be > 0");
    }
}

SpectroscopyDataset filter_by_uncertainty(const SpectroscopyDataset &data, double sigma_cap) {
    SpectroscopyDataset out;
    std::copy_if(data.rows.begin(), data.rows.end(), std::back_inserter(out.rows),
                 [&](const SpectroscopyRow &r) { return r.sigma <= sigma_cap; });
    return out;
}

double spectrum_objective(const SpectroscopyDataset &data, const CircuitParams &params, int n_charge) {
    double chi2 = 0.0;
    for (const auto &r : data.rows) {
        const FluxBias flux = make_flux_bias(r.phi_bias, r.phi_ctrl, params.junctions);
        const double z = (qubit_frequency(params, flux, n_charge) - r.f01) / r.sigma;
        chi2 += z * z;
    }
    return chi2;
}

namespace {

JunctionSet unpack(const Eigen::VectorXd &p, bool tie) {
    JunctionSet j;
    j.ej1 = std::exp(p[0]);
    j.ej2 = std::exp(p[1]);
    j.ej3 = std::exp(p[2]);
    j.ej4 = std::exp(p[3]);
    j.ej5 = tie ? j.ej4 : std::exp(p[4]);
    return j;
}

}  // namespace

FitResult fit_spectrum(const SpectroscopyDataset &data, double fixed_ec, const JunctionSet &initial,
                       const FitConstraints &constraints) {
    data.validate();
    if (data.rows.size() < 5) throw ValidationError("dataset", "need at least 5 rows to fit");
    if (!(fixed_ec > 0.0)) throw ValidationError("ec", "charging energy must be > 0");
    const bool tie = constraints.tie_ej4_ej5;
    const double init[] = {initial.ej1, initial.ej2, initial.ej3, initial.ej4, initial.ej5};
    const int n_par = tie ? 4 : 5;
    for (int i = 0; i < n_par; ++i) {
        if (!(init[i] > 0.0)) throw ValidationError("initial", "initial junction energies must be > 0");
    }

    Eigen::VectorXd x0(n_par);
    for (int i = 0; i < n_par; ++i) x0[i] = std::log(init[i]);

    auto objective = [&](const Eigen::VectorXd &p) {
        CircuitParams params;
        params.ec = fixed_ec;
        params.junctions = unpack(p, tie);
        try {
            return spectrum_objective(data, params, constraints.n_charge);
        } catch (const Error &) {
            return std::numeric_limits<double>::infinity();
        }
    };

    SimplexOptions opts;
    opts.max_iterations = constraints.max_iterations;
    opts.rel_tol = constraints.rel_tol;
    const SimplexResult sr = minimize_simplex(objective, x0, opts);

    FitResult out;
    out.junctions = unpack(sr.x, tie);
    out.objective = sr.value;
    out.iterations = sr.iterations;
    out.evaluations = sr.evaluations;
    out.converged = sr.converged && std::isfinite(sr.value);
    out.objective_history = sr.best_history;
    out.parameter_names = tie ? std::vector<std::string>{"ej1", "ej2", "ej3", "ej4=ej5"}
                              : std::vector<std::string>{"ej1", "ej2", "ej3", "ej4", "ej5"};

    CircuitParams fitted;
    fitted.ec = fixed_ec;
    fitted.junctions = out.junctions;
    double ss = 0.0;
    for (const auto &r : data.rows) {
        const double diff = qubit_frequency(fitted, make_flux_bias(r.phi_bias, r.phi_ctrl, fitted.junctions),
                                            constraints.n_charge) -
                            r.f01;
        ss += diff * diff;
    }
    out.residual_rms = std::sqrt(ss / data.rows.size());

    // Gauss-Newton covariance (J^T J)^-1 of the weighted residuals in log
    // space; its diagonal gives the 1-sigma relative uncertainties including
    // the correlations between parameters.
    constexpr double step = 1e-5;
    const auto rows = static_cast<Eigen::Index>(data.rows.size());
    Eigen::MatrixXd jac(rows, n_par);
    auto residuals = [&](const Eigen::VectorXd &p) {
        CircuitParams params;
        params.ec = fixed_ec;
        params.junctions = unpack(p, tie);
        Eigen::VectorXd r(rows);
        for (Eigen::Index k = 0; k < rows; ++k) {
            const auto &row = data.rows[static_cast<std::size_t>(k)];
            r[k] = qubit_frequency(params, make_flux_bias(row.phi_bias, row.phi_ctrl, params.junctions),
                                   constraints.n_charge) /
                   row.sigma;
        }
        return r;
    };
    out.sensitivity = Eigen::VectorXd::Constant(n_par, std::numeric_limits<double>::infinity());
    try {
        for (int i = 0; i < n_par; ++i) {
            Eigen::VectorXd up = sr.x, down = sr.x;
            up[i] += step;
            down[i] -= step;
            jac.col(i) = (residuals(up) - residuals(down)) / (2.0 * step);
        }
        const Eigen::MatrixXd fisher = jac.transpose() * jac;
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(fisher);
        if (lu.isInvertible()) {
            const Eigen::VectorXd var = lu.inverse().diagonal();
            for (int i = 0; i < n_par; ++i)
                if (var[i] > 0.0) out.sensitivity[i] = std::sqrt(var[i]);
        }
    } catch (const Error &) {
        // leave the uncertainties infinite
    }
    return out;
}

}  // namespace cos2phi
