#include "cos2phi/circuit.hpp"

#include <cmath>

#include "cos2phi/constants.hpp"

#include "cos2phi/errors.hpp"

namespace cos2phi {

EffectiveArm effective_arm(double ej_a, double ej_b) {
    if (!(ej_a >= 0.0) || !(ej_b >= 0.0)) {
        throw ValidationError("arm", "junction energies must be non-negative");
    }
    const double sum = ej_a + ej_b;
    if (sum == 0.0) throw ValidationError("arm", "invalid arm: both junction energies are zero");
    return {sum, 4.0 * ej_a * ej_b / (sum * sum)};
}

double squid_phase_offset(double d, double phi_s_rad) {
    const double x = 0.5 * phi_s_rad;
    // tan has period pi; pick the branch index so that arctan(d tan x) is
    // continuous in x. For d < 0 the branch runs backwards.
    const double k = std::round(x / kPi);
    const double sgn = (d > 0.0) - (d < 0.0);
    return x + std::atan(d * std::tan(x - k * kPi)) + sgn * k * kPi;
}

SmallSquid small_squid(double ej4, double ej5, double phi_s) {
    const double sum = ej4 + ej5;
    if (!(sum > 0.0)) throw ValidationError("ej4+ej5", "small SQUID needs ej4 + ej5 > 0");
    const double d = (ej4 - ej5) / sum;
    const double c = std::cos(kPi * phi_s);
    const double s = std::sin(kPi * phi_s);
    SmallSquid out;
    out.d = d;
    out.ej45_eff = sum * std::sqrt(c * c + d * d * s * s);
    out.delta = squid_phase_offset(d, kTwoPi * phi_s);
    return out;
}

namespace {

double asymmetry(const JunctionSet &j) {
    const double sum = j.ej4 + j.ej5;
    return sum > 0.0 ? (j.ej4 - j.ej5) / sum : 0.0;
}

}  // namespace

FluxBias make_flux_bias(double phi_bias, double phi_ctrl, const JunctionSet &junctions) {
    FluxBias f;
    f.phi_bias = phi_bias;
    f.phi_ctrl = phi_ctrl;
    f.delta = squid_phase_offset(asymmetry(junctions), kTwoPi * phi_ctrl);
    f.phi_b_raw = phi_bias + f.delta / kTwoPi;
    return f;
}

FluxBias flux_from_raw(double phi_b_raw, double phi_ctrl, const JunctionSet &junctions) {
    FluxBias f;
    f.phi_ctrl = phi_ctrl;
    f.delta = squid_phase_offset(asymmetry(junctions), kTwoPi * phi_ctrl);
    f.phi_b_raw = phi_b_raw;
    f.phi_bias = phi_b_raw - f.delta / kTwoPi;
    return f;
}

void validate(const JunctionSet &j) {
    const double vals[] = {j.ej1, j.ej2, j.ej3, j.ej4, j.ej5};
    const char *names[] = {"ej1", "ej2", "ej3", "ej4", "ej5"};
    for (int i = 0; i < 5; ++i) {
        if (!std::isfinite(vals[i]) || vals[i] < 0.0) {
            throw ValidationError(names[i], "junction energy must be finite and >= 0");
        }
    }
}

void validate(const CircuitParams &p) {
    if (!std::isfinite(p.ec) || !(p.ec > 0.0)) throw ValidationError("ec", "charging energy must be > 0");
    validate(p.junctions);
    if (!std::isfinite(p.ec_int_left) || p.ec_int_left < 0.0) {
        throw ValidationError("ec_int_left", "internal-mode charging energy must be >= 0");
    }
    if (!std::isfinite(p.ec_int_right) || p.ec_int_right < 0.0) {
        throw ValidationError("ec_int_right", "internal-mode charging energy must be >= 0");
    }
    if (!std::isfinite(p.ng)) throw ValidationError("ng", "offset charge must be finite");
}

EffectiveArm left_arm(const JunctionSet &j) {
    if (j.ej1 + j.ej2 == 0.0) return {};
    return effective_arm(j.ej1, j.ej2);
}

EffectiveArm right_arm(const JunctionSet &j, double phi_ctrl) {
    const double ej45 = j.ej4 + j.ej5 > 0.0 ? small_squid(j.ej4, j.ej5, phi_ctrl).ej45_eff : 0.0;
    if (j.ej3 + ej45 == 0.0) return {};
    return effective_arm(j.ej3, ej45);
}

CircuitPotential::CircuitPotential(const CircuitParams &params, const FluxBias &flux)
    : left_(left_arm(params.junctions)),
      right_(right_arm(params.junctions, flux.phi_ctrl)),
      ec_int_left_(params.ec_int_left),
      ec_int_right_(params.ec_int_right),
      right_shift_(kTwoPi * flux.phi_bias) {}

double CircuitPotential::operator()(double phi) const {
    const double psi = phi - right_shift_;
    return sns_epr(left_, phi) + internal_mode_epr(left_, ec_int_left_, phi) + sns_epr(right_, psi) +
           internal_mode_epr(right_, ec_int_right_, psi);
}

double total_potential(const CircuitParams &params, const FluxBias &flux, double phi) {
    return CircuitPotential(params, flux)(phi);
}

PotentialFluxDerivative::PotentialFluxDerivative(const CircuitParams &params, const FluxBias &flux, bool wrt_bias)
    : right_(right_arm(params.junctions, flux.phi_ctrl)),
      ec_int_right_(params.ec_int_right),
      right_shift_(kTwoPi * flux.phi_bias),
      wrt_bias_(wrt_bias) {
    // psi = phi - 2 pi Phi_b,raw + delta(Phi_ctrl)
    if (wrt_bias) {
        d_shift_ = -kTwoPi;
        return;
    }
    const auto &j = params.junctions;
    const double sum = j.ej4 + j.ej5;
    if (!(sum > 0.0) || right_.ej_sigma == 0.0) return;
    const double d = (j.ej4 - j.ej5) / sum;
    const double c = std::cos(kPi * flux.phi_ctrl);
    const double s = std::sin(kPi * flux.phi_ctrl);
    const double root2 = c * c + d * d * s * s;
    const double ej45 = sum * std::sqrt(root2);
    const double dej45 = root2 > 0.0 ? sum * kPi * s * c * (d * d - 1.0) / std::sqrt(root2) : 0.0;
    const double e = j.ej3 + ej45;
    d_sigma_ = dej45;
    d_tau_ = 4.0 * j.ej3 * dej45 * (j.ej3 - ej45) / (e * e * e);
    d_shift_ = d == 0.0 ? kPi : kPi * (1.0 + d / root2);
}

double PotentialFluxDerivative::operator()(double phi) const {
    const double e = right_.ej_sigma;
    if (e == 0.0) return 0.0;
    const double tau = right_.tau;
    const double psi = phi - right_shift_;
    const double sh = std::sin(0.5 * psi);
    const double s2 = sh * sh;
    const double q = 1.0 - tau * s2;
    const double rq = std::sqrt(q);
    // V = -E sqrt(q), q = 1 - tau sin^2(psi/2)
    double dv_de = -rq;
    double dv_dtau = 0.5 * e * s2 / rq;
    double dv_dpsi = 0.25 * e * tau * std::sin(psi) / rq;
    if (ec_int_right_ > 0.0) {
        // W = sqrt(2 ec E) q^(1/4)
        const double a = std::sqrt(2.0 * ec_int_right_ * e);
        const double q14 = std::sqrt(rq);
        const double qm34 = 1.0 / (q14 * rq);
        dv_de += 0.5 * a / e * q14;
        dv_dtau += -0.25 * a * s2 * qm34;
        dv_dpsi += -0.125 * a * tau * std::sin(psi) * qm34;
    }
    if (wrt_bias_) return dv_dpsi * d_shift_;
    return dv_de * d_sigma_ + dv_dtau * d_tau_ + dv_dpsi * d_shift_;
}

}  // namespace cos2phi
