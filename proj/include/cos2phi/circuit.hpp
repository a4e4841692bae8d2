#ifndef COS2PHI_CIRCUIT_HPP
#define COS2PHI_CIRCUIT_HPP

#include <cmath>

#include "cos2phi/constants.hpp"

namespace cos2phi {

// All energies are E/h in GHz. Fluxes are in units of Phi0, phases in radians.

struct JunctionSet {
    double ej1 = 0.0;
    double ej2 = 0.0;
    double ej3 = 0.0;
    double ej4 = 0.0;
    double ej5 = 0.0;
};

// Two junctions in series reduced to a single SNS-like channel.
struct EffectiveArm {
    double ej_sigma = 0.0;
    double tau = 0.0;
};

struct CircuitParams {
    double ec = 0.21;
    JunctionSet junctions;
    double ec_int_left = 0.0;   // 0 disables the internal-mode term
    double ec_int_right = 0.0;
    double ng = 0.0;
};

// Operating point of the two loops. `phi_bias` is the rebased big-loop flux in
// which the symmetry point sits at 0.5; `phi_ctrl` is the small-loop flux
// Phi_S. `delta` and `phi_b_raw` are derived and kept consistent by the
// factory functions below.
struct FluxBias {
    double phi_bias = 0.5;
    double phi_ctrl = 0.0;
    double delta = 0.0;
    double phi_b_raw = 0.5;
};

struct SmallSquid {
    double ej45_eff = 0.0;
    double d = 0.0;
    double delta = 0.0;
};

EffectiveArm effective_arm(double ej_a, double ej_b);

// Effective energy, asymmetry and phase offset of the SQUID formed by ej4/ej5.
// The cosine argument is pi * Phi_S / Phi0 (the standard SQUID result).
SmallSquid small_squid(double ej4, double ej5, double phi_s);

// Continuous branch of phi_s/2 + arctan(d tan(phi_s/2)), phi_s in radians.
double squid_phase_offset(double d, double phi_s_rad);

template <typename Scalar>
Scalar sns_epr(const EffectiveArm &arm, Scalar phi) {
    using std::sin;
    using std::sqrt;
    const Scalar s = sin(phi / Scalar(2));
    return -Scalar(arm.ej_sigma) * sqrt(Scalar(1) - Scalar(arm.tau) * s * s);
}

template <typename Scalar>
Scalar internal_mode_epr(const EffectiveArm &arm, double ec_int, Scalar phi) {
    using std::sin;
    using std::sqrt;
    if (ec_int == 0.0 || arm.ej_sigma == 0.0) return Scalar(0);
    const Scalar s = sin(phi / Scalar(2));
    const Scalar inner = sqrt(Scalar(1) - Scalar(arm.tau) * s * s);
    return Scalar(arm.ej_sigma) * sqrt(Scalar(2.0 * ec_int / arm.ej_sigma) * inner);
}

FluxBias make_flux_bias(double phi_bias, double phi_ctrl, const JunctionSet &junctions);
FluxBias flux_from_raw(double phi_b_raw, double phi_ctrl, const JunctionSet &junctions);

void validate(const JunctionSet &junctions);
void validate(const CircuitParams &params);

// Potential energy of the qubit mode at a fixed operating point. The right
// arm sees the phase phi - 2*pi*phi_bias, i.e. the delta offset is absorbed
// into the rebased coordinate.
class CircuitPotential {
  public:
    CircuitPotential(const CircuitParams &params, const FluxBias &flux);

    double operator()(double phi) const;

    const EffectiveArm &left() const { return left_; }
    const EffectiveArm &right() const { return right_; }
    double right_shift() const { return right_shift_; }

  private:
    EffectiveArm left_;
    EffectiveArm right_;
    double ec_int_left_;
    double ec_int_right_;
    double right_shift_;
};

double total_potential(const CircuitParams &params, const FluxBias &flux, double phi);

// dV/dPhi (GHz per Phi0) for one loop, differentiated in closed form. The
// control-loop derivative holds the raw big-loop flux fixed, so it includes
// the motion of the SQUID phase offset delta.
class PotentialFluxDerivative {
  public:
    PotentialFluxDerivative(const CircuitParams &params, const FluxBias &flux, bool wrt_bias);

    double operator()(double phi) const;

  private:
    EffectiveArm right_;
    double ec_int_right_;
    double right_shift_;
    bool wrt_bias_;
    double d_sigma_ = 0.0;  // d ej_sigma / d Phi_ctrl
    double d_tau_ = 0.0;    // d tau / d Phi_ctrl
    double d_shift_ = 0.0;  // d psi / d Phi at fixed phi
};

// Right arm (ej3 in series with the small SQUID) at the given control flux.
EffectiveArm right_arm(const JunctionSet &junctions, double phi_ctrl);
EffectiveArm left_arm(const JunctionSet &junctions);

}  // namespace cos2phi

#endif  // COS2PHI_CIRCUIT_HPP
