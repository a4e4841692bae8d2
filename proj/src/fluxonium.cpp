#include "cos2phi/fluxonium.hpp"

#include <algorithm>
#include <cmath>

#include "cos2phi/constants.hpp"
#include "cos2phi/errors.hpp"
#include "cos2phi/parallel.hpp"

namespace cos2phi {

namespace {

double phi_zpf(const FluxoniumParams &p) { return std::pow(2.0 * p.ec / p.el, 0.25); }

// a + a^dagger and a^dagger - a.
Eigen::MatrixXd ladder_sum(int n) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) x(k - 1, k) = x(k, k - 1) = std::sqrt(double(k));
    return x;
}

Eigen::MatrixXd ladder_diff(int n) {
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        y(k, k - 1) = std::sqrt(double(k));
        y(k - 1, k) = -std::sqrt(double(k));
    }
    return y;
}

}  // namespace

void FluxoniumParams::validate() const {
    if (!(ec > 0.0) || !std::isfinite(ec)) throw ValidationError("ec", "must be finite and > 0");
    if (!(el > 0.0) || !std::isfinite(el)) throw ValidationError("el", "must be finite and > 0");
    if (!(ej >= 0.0) || !std::isfinite(ej)) throw ValidationError("ej", "must be finite and >= 0");
    if (!std::isfinite(phi_ext)) throw ValidationError("phi_ext", "must be finite");
    if (basis_size < 20) throw ValidationError("basis_size", "must be >= 20");
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> oscillator_trig(int n, double s) {
    // <m|exp(i s x)|n> = (i s)^k sqrt(n_<!/n_>!) e^{-s^2/2} L_{n_<}^{(k)}(s^2), k = |m - n|.
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd sn = Eigen::MatrixXd::Zero(n, n);
    const double x = s * s;
    const double log_s = std::log(std::abs(s));
    const double sign_s = s < 0.0 ? -1.0 : 1.0;
    for (int k = 0; k < n; ++k) {
        if (s == 0.0 && k > 0) break;
        double l_prev = 0.0;
        double l = 1.0;
        for (int j = 0; j + k < n; ++j) {
            if (j == 1) {
                l_prev = l;
                l = 1.0 + k - x;
            } else if (j > 1) {
                const double next = ((2.0 * (j - 1) + 1.0 + k - x) * l - (j - 1 + k) * l_prev) / j;
                l_prev = l;
                l = next;
            }
            double log_pref = -0.5 * x + 0.5 * (std::lgamma(j + 1.0) - std::lgamma(j + k + 1.0));
            if (k > 0) log_pref += k * log_s;
            double r = std::exp(log_pref) * l;
            if (k % 2 == 1 && sign_s < 0.0) r = -r;
            const int m = j + k;
            if (k % 2 == 0) {
                const double v = (k % 4 == 0 ? 1.0 : -1.0) * r;
                c(m, j) = c(j, m) = v;
            } else {
                const double v = (k % 4 == 1 ? 1.0 : -1.0) * r;
                sn(m, j) = sn(j, m) = v;
            }
        }
    }
    return {c, sn};
}

Eigen::MatrixXd build_fluxonium(const FluxoniumParams &p) {
    p.validate();
    const int n = p.basis_size;
    const double omega = std::sqrt(8.0 * p.el * p.ec);
    const double ext = kTwoPi * p.phi_ext;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) h(k, k) = omega * (k + 0.5);
    if (p.ej != 0.0) {
        const auto [c, s] = oscillator_trig(n, phi_zpf(p));
        // cos(theta + ext), theta = phi - ext
        h -= p.ej * (std::cos(ext) * c - std::sin(ext) * s);
    }
    return h;
}

FluxoniumEigen solve_fluxonium(const FluxoniumParams &p, int k_levels) {
    if (k_levels < 1) throw ValidationError("levels", "must be >= 1");
    const Eigen::MatrixXd h = build_fluxonium(p);
    if (k_levels > p.basis_size) throw ValidationError("levels", "exceeds basis_size");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) throw NumericalError("fluxonium eigensolver failed");
    FluxoniumEigen out;
    out.params = p;
    out.energies = es.eigenvalues().head(k_levels);
    out.states = es.eigenvectors().leftCols(k_levels);
    const int checked = std::min(std::max(5, k_levels), p.basis_size);
    for (int k = 0; k < checked; ++k) {
        const double top = es.eigenvectors()(p.basis_size - 1, k);
        out.top_population = std::max(out.top_population, top * top);
    }
    if (out.top_population > kFluxoniumTruncation)
        throw NumericalError("fluxonium basis too small: top-level population " +
                             std::to_string(out.top_population));
    // Deterministic sign: largest component positive.
    for (int k = 0; k < k_levels; ++k) {
        Eigen::Index idx;
        out.states.col(k).cwiseAbs().maxCoeff(&idx);
        if (out.states(idx, k) < 0.0) out.states.col(k) *= -1.0;
    }
    return out;
}

double fluxonium_frequency(const FluxoniumParams &p) {
    const FluxoniumEigen e = solve_fluxonium(p, 2);
    return e.energies[1] - e.energies[0];
}

Eigen::MatrixXcd fluxonium_operator(const FluxoniumParams &p, FluxoniumOperator kind) {
    p.validate();
    const int n = p.basis_size;
    const double zpf = phi_zpf(p);
    const double ext = kTwoPi * p.phi_ext;
    const std::complex<double> i(0.0, 1.0);
    switch (kind) {
    case FluxoniumOperator::charge_n:
        return i * (0.5 / zpf) * ladder_diff(n).cast<std::complex<double>>();
    case FluxoniumOperator::phase_phi: {
        Eigen::MatrixXd phi = zpf * ladder_sum(n);
        phi.diagonal().array() += ext;
        return phi.cast<std::complex<double>>();
    }
    case FluxoniumOperator::sin_half_phase: {
        const auto [c, s] = oscillator_trig(n, 0.5 * zpf);
        // sin((theta + ext) / 2)
        return (std::cos(0.5 * ext) * s + std::sin(0.5 * ext) * c).cast<std::complex<double>>();
    }
    case FluxoniumOperator::dH_dPhi_ext:
        return (-kTwoPi * p.el * zpf * ladder_sum(n)).cast<std::complex<double>>();
    }
    throw ValidationError("operator", "unknown fluxonium operator");
}

Eigen::MatrixXcd fluxonium_operator_matrix(const FluxoniumEigen &eig, FluxoniumOperator kind) {
    const Eigen::MatrixXcd v = eig.states.cast<std::complex<double>>();
    return v.adjoint() * fluxonium_operator(eig.params, kind) * v;
}

std::complex<double> fluxonium_matrix_element(const FluxoniumEigen &eig, FluxoniumOperator kind, int i, int j) {
    if (i < 0 || j < 0 || i >= eig.levels() || j >= eig.levels())
        throw ValidationError("level", "index outside the computed levels");
    const Eigen::VectorXcd vi = eig.states.col(i).cast<std::complex<double>>();
    const Eigen::VectorXcd vj = eig.states.col(j).cast<std::complex<double>>();
    return vi.dot(fluxonium_operator(eig.params, kind) * vj);
}

LevelOperators fluxonium_level_operators(const FluxoniumParams &p, int levels) {
    const FluxoniumEigen eig = solve_fluxonium(p, levels);
    LevelOperators ops;
    ops.energies = eig.energies;
    ops.charge = fluxonium_operator_matrix(eig, FluxoniumOperator::charge_n);
    ops.phase = fluxonium_operator_matrix(eig, FluxoniumOperator::phase_phi);
    ops.flux[0] = fluxonium_operator_matrix(eig, FluxoniumOperator::dH_dPhi_ext);
    ops.qp.emplace_back(fluxonium_operator_matrix(eig, FluxoniumOperator::sin_half_phase), p.ej);
    ops.ec = p.ec;
    ops.ej_inductive = p.el;
    return ops;
}

T1Budget fluxonium_t1_budget(const FluxoniumParams &p, const NoiseConfig &cfg, const ResonatorParams &res) {
    return t1_budget(fluxonium_level_operators(p, 2), res, cfg);
}

std::vector<FluxoniumSweepPoint> fluxonium_sweep(const FluxoniumParams &p, const std::vector<double> &phi_ext,
                                                 const NoiseConfig &cfg, const ResonatorParams &res, int levels,
                                                 int workers) {
    if (phi_ext.empty()) throw ValidationError("phi_ext", "sweep grid is empty");
    if (levels < 2) throw ValidationError("levels", "must be >= 2");
    return parallel_map(phi_ext.size(), workers, [&](std::size_t k) {
        FluxoniumSweepPoint pt;
        pt.phi_ext = phi_ext[k];
        try {
            FluxoniumParams q = p;
            q.phi_ext = phi_ext[k];
            const LevelOperators ops = fluxonium_level_operators(q, levels);
            pt.transitions = ops.energies.tail(levels - 1).array() - ops.energies[0];
            pt.budget = t1_budget(ops, res, cfg);
        } catch (const std::exception &e) {
            pt.error = e.what();
        }
        return pt;
    });
}

}  // namespace cos2phi
