#include <doctest.h>

#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

#include "cos2phi/circuit.hpp"
#include "cos2phi/constants.hpp"
#include "cos2phi/hamiltonian.hpp"

using namespace cos2phi;

namespace {

CircuitParams device() {
    CircuitParams p;
    p.ec = 0.21;
    p.junctions = {42.49, 53.9, 88.11, 35.73, 35.73};
    return p;
}

// Charge-basis transmon written out by hand: 4 Ec (n - ng)^2 on the diagonal,
// -Ej/2 on the first off-diagonals.
Eigen::VectorXd transmon_levels(double ec, double ej, double ng, int n_charge) {
    const int dim = 2 * n_charge + 1;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (int m = 0; m < dim; ++m) {
        const double n = m - n_charge - ng;
        h(m, m) = 4.0 * ec * n * n;
        if (m + 1 < dim) h(m, m + 1) = h(m + 1, m) = -0.5 * ej;
    }
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h).eigenvalues();
}

std::complex<double> psi_at(const EigenSystem &eig, int level, double phi) {
    std::complex<double> acc = 0.0;
    for (Eigen::Index m = 0; m < eig.states.rows(); ++m)
        acc += eig.states(m, level) * std::polar(1.0, double(m - eig.n_charge) * phi);
    return acc / std::sqrt(kTwoPi);
}

}  // namespace

TEST_CASE("charge-basis transmon matches the hand-built tridiagonal matrix") {
    for (double ng : {0.0, 0.25, 0.5}) {
        const double ec = 0.3, ej = 15.0;
        auto u = [ej](double phi) { return -ej * std::cos(phi); };
        const Eigen::MatrixXcd h = hamiltonian_from_potential(ec, ng, u, 30);
        CHECK((h - h.adjoint()).norm() < 1e-12);
        const auto eig = eigensystem(h, 6, ng);
        const Eigen::VectorXd ref = transmon_levels(ec, ej, ng, 30);
        for (int k = 0; k < 6; ++k) CHECK(std::abs(eig.energies[k] - ref[k]) < 1e-9);
    }
    // deep transmon limit: f01 -> sqrt(8 Ej Ec) - Ec
    const double ec = 0.2, ej = 40.0;
    auto u = [ej](double phi) { return -ej * std::cos(phi); };
    const auto eig = eigensystem(hamiltonian_from_potential(ec, 0.0, u, 30), 2);
    const double f01 = eig.energies[1] - eig.energies[0];
    CHECK(f01 == doctest::Approx(std::sqrt(8.0 * ej * ec) - ec).epsilon(0.01));
}

TEST_CASE("eigenvalues converged at n_charge = 40") {
    const auto p = device();
    for (double pc : {0.367, 0.378, 0.406}) {
        const FluxBias f = make_flux_bias(0.5, pc, p.junctions);
        const auto a = solve_circuit(p, f, 5, 40);
        const auto b = solve_circuit(p, f, 5, 60);
        for (int k = 0; k < 5; ++k) CHECK(std::abs(a.energies[k] - b.energies[k]) < 1e-6);
    }
}

TEST_CASE("flux derivative operator satisfies Hellmann-Feynman") {
    auto p = device();
    p.junctions.ej5 = 31.0;
    const double pb = 0.45, pc = 0.39;
    const FluxBias f = make_flux_bias(pb, pc, p.junctions);
    const auto eig = solve_circuit(p, f, 4, 40);
    const Eigen::MatrixXcd db = operator_matrix(eig, OperatorKind::dH_dPhi_bias, p, f);
    const Eigen::MatrixXcd dc = operator_matrix(eig, OperatorKind::dH_dPhi_ctrl, p, f);
    const double h = 1e-4;
    auto level = [&](const FluxBias &x, int k) { return solve_circuit(p, x, 4, 40).energies[k]; };
    for (int k = 0; k < 3; ++k) {
        auto fd = [&](auto at) {
            return (-level(at(2 * h), k) + 8.0 * level(at(h), k) - 8.0 * level(at(-h), k) + level(at(-2 * h), k)) /
                   (12.0 * h);
        };
        const double eb = fd([&](double s) { return make_flux_bias(pb + s, pc, p.junctions); });
        const double ecl = fd([&](double s) { return flux_from_raw(f.phi_b_raw, pc + s, p.junctions); });
        CAPTURE(k);
        CHECK(std::abs(db(k, k).imag()) < 1e-9);
        CHECK(db(k, k).real() == doctest::Approx(eb).epsilon(1e-6));
        CHECK(dc(k, k).real() == doctest::Approx(ecl).epsilon(1e-6));
    }
}

TEST_CASE("branch-cut operators match quadrature over the wavefunctions") {
    const auto p = device();
    const FluxBias f = make_flux_bias(0.47, 0.378, p.junctions);
    const auto eig = solve_circuit(p, f, 3, 40);
    const Eigen::MatrixXcd s = operator_matrix(eig, OperatorKind::sin_half_phase, p, f);
    const Eigen::MatrixXcd sr = operator_matrix(eig, OperatorKind::sin_half_phase_right, p, f);
    const Eigen::MatrixXcd ph = operator_matrix(eig, OperatorKind::phase_phi, p, f);
    const double shift = kTwoPi * f.phi_bias;
    auto wrap = [](double x) { return x - kTwoPi * std::floor((x + kPi) / kTwoPi); };
    // Composite 30-point Gauss-Legendre on 32 panels: the integrands are trig
    // polynomials of degree <= 80 times a function smooth on [a, b].
    auto composite = [](const std::function<double(double)> &g, double a, double b) {
        constexpr int panels = 32;
        double sum = 0.0;
        for (int k = 0; k < panels; ++k)
            sum += boost::math::quadrature::gauss<double, 30>::integrate(g, a + (b - a) * k / panels,
                                                                         a + (b - a) * (k + 1) / panels);
        return sum;
    };
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            auto element = [&](const std::function<double(double)> &op, double a, double b) {
                auto re = [&](double x) { return (std::conj(psi_at(eig, i, x)) * psi_at(eig, j, x)).real() * op(x); };
                auto im = [&](double x) { return (std::conj(psi_at(eig, i, x)) * psi_at(eig, j, x)).imag() * op(x); };
                return std::complex<double>(composite(re, a, b), composite(im, a, b));
            };
            const auto ref_s = element([](double x) { return std::sin(x / 2.0); }, -kPi, kPi);
            const auto ref_phi = element([](double x) { return x; }, -kPi, kPi);
            // the right-arm branch cut sits at phi = shift - pi; split there
            const double cut = wrap(shift - kPi);
            auto op_r = [&](double x) { return std::sin(wrap(x - shift) / 2.0); };
            const auto ref_r = element(op_r, -kPi, cut) + element(op_r, cut, kPi);
            CAPTURE(i);
            CAPTURE(j);
            CHECK(std::abs(s(i, j) - ref_s) < 1e-9);
            CHECK(std::abs(ph(i, j) - ref_phi) < 1e-9);
            CHECK(std::abs(sr(i, j) - ref_r) < 1e-9);
        }
    }
}

TEST_CASE("charge matrix element shrinks as the control flux approaches half a flux quantum") {
    const auto p = device();
    double prev = 1e9;
    for (double pc : {0.406, 0.395, 0.378, 0.367}) {
        const FluxBias f = make_flux_bias(0.5, pc, p.junctions);
        const auto eig = solve_circuit(p, f, 2, 40);
        const double n01 = std::abs(operator_matrix_element(eig, OperatorKind::charge_n, 0, 1, p, f));
        CAPTURE(pc);
        CHECK(n01 < prev);
        prev = n01;
    }
}

TEST_CASE("phase wavefunctions are normalized") {
    const auto p = device();
    const FluxBias f = make_flux_bias(0.5, 0.378, p.junctions);
    const auto eig = solve_circuit(p, f, 3, 40);
    const Eigen::MatrixXcd psi = phase_wavefunctions(eig, 1024);
    for (int k = 0; k < 3; ++k) CHECK(psi.col(k).squaredNorm() * kTwoPi / 1024.0 == doctest::Approx(1.0));
    CHECK_THROWS(operator_matrix_element(eig, OperatorKind::charge_n, 0, 5, p, f));
}
