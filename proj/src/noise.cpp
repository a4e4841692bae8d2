#include "cos2phi/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cos2phi/bessel.hpp"
#include "cos2phi/constants.hpp"
#include "cos2phi/errors.hpp"
#include "cos2phi/parallel.hpp"

namespace cos2phi {

namespace {

constexpr double kQcapRefOmega = kTwoPi * 6.0e9;
constexpr double kQindRefOmega = kTwoPi * 0.5e9;

void require(bool ok, const char *field, const char *what) {
    if (!ok) throw ValidationError(field, what);
}

}  // namespace

void NoiseConfig::validate() const {
    require(q_cap_ref > 0.0, "q_cap_ref", "must be > 0");
    require(std::isfinite(alpha_cap), "alpha_cap", "must be finite");
    require(q_ind_ref > 0.0, "q_ind_ref", "must be > 0");
    require(mutual_inductance_bias >= 0.0 && std::isfinite(mutual_inductance_bias), "mutual_inductance_bias",
            "must be finite and >= 0");
    require(mutual_inductance_ctrl >= 0.0 && std::isfinite(mutual_inductance_ctrl), "mutual_inductance_ctrl",
            "must be finite and >= 0");
    require(bias_line_impedance > 0.0 && std::isfinite(bias_line_impedance), "bias_line_impedance",
            "must be finite and > 0");
    require(x_qp >= 0.0 && std::isfinite(x_qp), "x_qp", "must be finite and >= 0");
    require(gap > 0.0 && std::isfinite(gap), "gap", "must be finite and > 0");
    require(a_one_over_f >= 0.0 && std::isfinite(a_one_over_f), "a_one_over_f", "must be finite and >= 0");
    require(temperature > 0.0 && std::isfinite(temperature), "temperature", "must be finite and > 0");
    require(loaded_q_resonator > 0.0, "loaded_q_resonator", "must be > 0");
    if (effective_capacitance) require(*effective_capacitance > 0.0, "effective_capacitance", "must be > 0");
    if (effective_inductance) require(*effective_inductance > 0.0, "effective_inductance", "must be > 0");
}

NoiseChannel T1Budget::dominant() const {
    return static_cast<NoiseChannel>(std::max_element(rates.begin(), rates.end()) - rates.begin());
}

double T1Budget::total_without(NoiseChannel c) const {
    double acc = 0.0;
    for (int i = 0; i < kChannelCount; ++i)
        if (i != static_cast<int>(c)) acc += rates[i];
    return acc;
}

double thermal_coth(double omega, double temperature) {
    const double x = Const::hbar * std::abs(omega) / (2.0 * Const::boltzmann_kB * temperature);
    return 1.0 / std::tanh(x);
}

double q_cap(double omega, const NoiseConfig &cfg) {
    if (omega == 0.0) throw ValidationError("omega", "must be non-zero");
    return cfg.q_cap_ref * std::pow(kQcapRefOmega / std::abs(omega), cfg.alpha_cap);
}

double q_ind(double omega, const NoiseConfig &cfg) {
    if (omega == 0.0) throw ValidationError("omega", "must be non-zero");
    const double scale = 2.0 * Const::boltzmann_kB * cfg.temperature;
    const double x0 = Const::hbar * kQindRefOmega / scale;
    const double x = Const::hbar * std::abs(omega) / scale;
    return cfg.q_ind_ref * bessel_k0_sinh(x0) / bessel_k0_sinh(x);
}

double qp_admittance_re(double omega, double ej_joule, const NoiseConfig &cfg) {
    if (omega == 0.0) throw ValidationError("omega", "must be non-zero");
    const double delta = cfg.gap * kGHz * Const::planck_h;
    const double x = Const::hbar * std::abs(omega) / (2.0 * Const::boltzmann_kB * cfg.temperature);
    const double hw = Const::hbar * std::abs(omega);
    return cfg.x_qp * std::sqrt(2.0 / kPi) * 8.0 * ej_joule / (Const::resistance_quantum_RK * delta) *
           std::pow(2.0 * delta / hw, 1.5) * std::sqrt(x) * bessel_k0_sinh(x);
}

double spectral_density(NoiseChannel channel, double omega, const NoiseConfig &cfg, const DensityContext &ctx) {
    if (omega == 0.0) throw ValidationError("omega", "must be non-zero");
    const double w = std::abs(omega);
    const double coth = thermal_coth(w, cfg.temperature);
    auto need = [](const std::optional<double> &v, const char *name) {
        if (!v) throw ValidationError(name, "required by this noise channel");
        return *v;
    };
    switch (channel) {
    case NoiseChannel::dielectric:
        return Const::hbar / (need(ctx.capacitance, "capacitance") * q_cap(w, cfg)) * coth;
    case NoiseChannel::inductive:
        return Const::hbar / (need(ctx.inductance, "inductance") * q_ind(w, cfg)) * coth;
    case NoiseChannel::fbl_ohmic_bias:
    case NoiseChannel::fbl_ohmic_ctrl: {
        const double m = need(ctx.mutual, "mutual_inductance");
        return m * m * w * Const::hbar / cfg.bias_line_impedance * coth;
    }
    case NoiseChannel::quasiparticle:
        return Const::hbar * w * qp_admittance_re(w, need(ctx.ej_joule, "ej"), cfg) * coth;
    case NoiseChannel::one_over_f_bias:
    case NoiseChannel::one_over_f_ctrl: {
        const double a = cfg.a_one_over_f * Const::flux_quantum_Phi0;
        return kTwoPi * a * a / w;
    }
    case NoiseChannel::purcell:
        break;
    }
    throw ValidationError("channel", "Purcell decay has no spectral density; use purcell_rate");
}

double golden_rule_rate(double matrix_element, double s_value) {
    if (!(s_value >= 0.0)) throw ValidationError("s_value", "spectral density must be >= 0");
    return matrix_element * matrix_element * s_value / (Const::hbar * Const::hbar);
}

std::array<double, kChannelCount> channel_rates(const TransitionCouplings &tc, const NoiseConfig &cfg) {
    if (!(tc.freq > 0.0)) throw NumericalError("transition frequency must be positive");
    const double joule = tc.energy_unit_hz * Const::planck_h;  // one energy unit in J
    const double omega = kTwoPi * tc.freq * tc.energy_unit_hz;
    const double phi0 = Const::flux_quantum_Phi0;
    const double reduced_phi0 = phi0 / kTwoPi;

    std::array<double, kChannelCount> r{};
    auto set = [&](NoiseChannel c, double v) { r[static_cast<int>(c)] = v; };

    DensityContext ctx;
    ctx.capacitance = cfg.effective_capacitance.value_or(
        Const::electron_charge_e * Const::electron_charge_e / (2.0 * tc.ec * joule));
    set(NoiseChannel::dielectric,
        golden_rule_rate(2.0 * Const::electron_charge_e * tc.charge,
                         spectral_density(NoiseChannel::dielectric, omega, cfg, ctx)));

    if (cfg.effective_inductance || tc.ej_inductive > 0.0) {
        ctx.inductance = cfg.effective_inductance.value_or(reduced_phi0 * reduced_phi0 / (tc.ej_inductive * joule));
        set(NoiseChannel::inductive, golden_rule_rate(reduced_phi0 * tc.phase,
                                                      spectral_density(NoiseChannel::inductive, omega, cfg, ctx)));
    }

    const double mutual[2] = {cfg.mutual_inductance_bias * phi0, cfg.mutual_inductance_ctrl * phi0};
    const NoiseChannel ohmic[2] = {NoiseChannel::fbl_ohmic_bias, NoiseChannel::fbl_ohmic_ctrl};
    const NoiseChannel pink[2] = {NoiseChannel::one_over_f_bias, NoiseChannel::one_over_f_ctrl};
    for (int k = 0; k < 2; ++k) {
        const double element = tc.flux[k] * joule / phi0;  // J/Wb
        ctx.mutual = mutual[k];
        set(ohmic[k], golden_rule_rate(element, spectral_density(ohmic[k], omega, cfg, ctx)));
        set(pink[k], golden_rule_rate(element, spectral_density(pink[k], omega, cfg, ctx)));
    }

    double qp = 0.0;
    for (const auto &j : tc.qp) {
        ctx.ej_joule = j.ej * joule;
        qp += golden_rule_rate(phi0 / kPi * j.sin_half,
                               spectral_density(NoiseChannel::quasiparticle, omega, cfg, ctx));
    }
    set(NoiseChannel::quasiparticle, qp);

    const double detuning = kTwoPi * (tc.freq - tc.f_res) * tc.energy_unit_hz;
    if (tc.g > 0.0 && tc.charge > 0.0) {
        if (detuning == 0.0) throw NumericalError("Purcell rate diverges at zero detuning");
        const double kappa = kTwoPi * tc.f_res * tc.energy_unit_hz / cfg.loaded_q_resonator;
        const double g01 = kTwoPi * tc.g * tc.energy_unit_hz * tc.charge;
        set(NoiseChannel::purcell, kappa * (g01 / detuning) * (g01 / detuning));
    }
    return r;
}

PurcellEstimate purcell_rate(double f01, double charge01, const ResonatorParams &res, const NoiseConfig &cfg) {
    const double detuning = kTwoPi * (f01 - res.f_res_bare) * kGHz;
    const double g01 = kTwoPi * res.g_coupling * kGHz * charge01;
    if (g01 == 0.0) return {0.0, true};
    if (detuning == 0.0) throw NumericalError("Purcell rate diverges at zero detuning");
    const double kappa = kTwoPi * res.f_res_bare * kGHz / cfg.loaded_q_resonator;
    return {kappa * (g01 / detuning) * (g01 / detuning), std::abs(detuning) >= 10.0 * g01};
}

PurcellEstimate purcell_rate(const CircuitParams &params, const FluxBias &flux, const ResonatorParams &res,
                             const NoiseConfig &cfg, int n_charge) {
    const EigenSystem eig = solve_circuit(params, flux, 2, n_charge);
    const double n01 = std::abs(operator_matrix(eig, OperatorKind::charge_n, params, flux)(0, 1));
    return purcell_rate(eig.energies[1] - eig.energies[0], n01, res, cfg);
}

TransitionCouplings transition_couplings(const LevelOperators &ops, int upper, int lower,
                                         const ResonatorParams &res) {
    TransitionCouplings tc;
    tc.freq = ops.energies[upper] - ops.energies[lower];
    tc.charge = std::abs(ops.charge(lower, upper));
    tc.phase = ops.phase.size() > 0 ? std::abs(ops.phase(lower, upper)) : 0.0;
    for (int k = 0; k < 2; ++k) tc.flux[k] = ops.flux[k].size() > 0 ? std::abs(ops.flux[k](lower, upper)) : 0.0;
    for (const auto &[m, ej] : ops.qp) tc.qp.push_back({std::abs(m(lower, upper)), ej});
    tc.ec = ops.ec;
    tc.ej_inductive = ops.ej_inductive;
    tc.f_res = res.f_res_bare;
    tc.g = res.g_coupling;
    tc.energy_unit_hz = kGHz;
    return tc;
}

LevelOperators circuit_level_operators(const CircuitParams &params, const FluxBias &flux, int levels, int n_charge) {
    const EigenSystem eig = solve_circuit(params, flux, levels, n_charge);
    LevelOperators ops;
    ops.energies = eig.energies;
    ops.charge = operator_matrix(eig, OperatorKind::charge_n, params, flux);
    ops.phase = operator_matrix(eig, OperatorKind::phase_phi, params, flux);
    ops.flux[0] = operator_matrix(eig, OperatorKind::dH_dPhi_bias, params, flux);
    ops.flux[1] = operator_matrix(eig, OperatorKind::dH_dPhi_ctrl, params, flux);

    const CircuitPotential potential(params, flux);
    ops.qp.emplace_back(operator_matrix(eig, OperatorKind::sin_half_phase, params, flux), potential.left().ej_sigma);
    ops.qp.emplace_back(operator_matrix(eig, OperatorKind::sin_half_phase_right, params, flux),
                        potential.right().ej_sigma);
    ops.ec = params.ec;
    // Inductive-loss scale: magnitude of the cos/sin(2 phi) harmonic.
    ops.ej_inductive = 2.0 * std::abs(fourier_coefficients(std::cref(potential), 2).u[2]);
    return ops;
}

T1Budget t1_budget(const LevelOperators &ops, const ResonatorParams &res, const NoiseConfig &cfg) {
    cfg.validate();
    res.validate();
    T1Budget b;
    b.f01 = ops.energies[1] - ops.energies[0];
    b.rates = channel_rates(transition_couplings(ops, 1, 0, res), cfg);
    for (double r : b.rates) b.total_rate += r;
    b.t1 = b.total_rate > 0.0 ? 1.0 / b.total_rate : std::numeric_limits<double>::infinity();
    return b;
}

T1Budget t1_budget(const CircuitParams &params, const FluxBias &flux, const ResonatorParams &res,
                   const NoiseConfig &cfg, int n_charge) {
    return t1_budget(circuit_level_operators(params, flux, 2, n_charge), res, cfg);
}

std::vector<T1SweepPoint> t1_sweep(const CircuitParams &params, const std::vector<FluxBias> &grid,
                                   const ResonatorParams &res, const NoiseConfig &cfg, int n_charge, int workers) {
    if (grid.empty()) throw ValidationError("flux_grid", "sweep grid is empty");
    return parallel_map(grid.size(), workers, [&](std::size_t i) {
        T1SweepPoint p;
        p.flux = grid[i];
        try {
            p.budget = t1_budget(params, grid[i], res, cfg, n_charge);
        } catch (const std::exception &e) {
            p.error = e.what();
        }
        return p;
    });
}

}  // namespace cos2phi
