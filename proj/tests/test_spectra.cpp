#include <doctest.h>

#include <cmath>
#include <random>

#include "cos2phi/errors.hpp"
#include "cos2phi/hamiltonian.hpp"
#include "cos2phi/spectra.hpp"

using namespace cos2phi;

namespace {

CircuitParams device() {
    CircuitParams p;
    p.ec = 0.21;
    p.junctions = {42.49, 53.9, 88.11, 35.73, 35.73};
    return p;
}

// Qubit levels coupled to a truncated oscillator through g n (a + a^dagger);
// returns E(0,1) - E(0,0) - f_res for the dressed states.
double exact_dispersive_shift(const EigenSystem &eig, const Eigen::MatrixXcd &charge, int levels, double f_res,
                              double g, int photons) {
    const int dim = levels * photons;
    auto index = [photons](int q, int k) { return q * photons + k; };
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
    for (int q = 0; q < levels; ++q)
        for (int k = 0; k < photons; ++k) h(index(q, k), index(q, k)) = eig.energies[q] + f_res * k;
    for (int q = 0; q < levels; ++q)
        for (int r = 0; r < levels; ++r)
            for (int k = 0; k + 1 < photons; ++k) {
                const std::complex<double> c = g * charge(q, r) * std::sqrt(double(k + 1));
                h(index(q, k + 1), index(r, k)) += c;   // a^dagger
                h(index(q, k), index(r, k + 1)) += c;   // a
            }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    auto dressed = [&](int bare) {
        Eigen::Index best;
        es.eigenvectors().row(bare).cwiseAbs().maxCoeff(&best);
        return es.eigenvalues()[best];
    };
    return dressed(index(0, 1)) - dressed(index(0, 0)) - f_res;
}

SpectroscopyDataset synthetic(const CircuitParams &truth, int n_charge, double noise, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    SpectroscopyDataset d;
    for (double pc : {0.367, 0.378, 0.395, 0.406}) {
        for (double pb : {0.42, 0.47, 0.5, 0.53, 0.58}) {
            const double f = qubit_frequency(truth, make_flux_bias(pb, pc, truth.junctions), n_charge);
            const double sigma = noise > 0.0 ? noise * f : 1e-3;
            d.rows.push_back({pb, pc, f + (noise > 0.0 ? sigma * gauss(rng) : 0.0), sigma});
        }
    }
    return d;
}

}  // namespace

TEST_CASE("dispersive shift agrees with exact diagonalization at weak coupling") {
    const auto p = device();
    for (double pc : {0.378, 0.406}) {
        const FluxBias f = make_flux_bias(0.5, pc, p.junctions);
        const auto eig = solve_circuit(p, f, 7, 40);
        const Eigen::MatrixXcd charge = operator_matrix(eig, OperatorKind::charge_n, p, f);
        ResonatorParams res;
        res.g_coupling = 1e-3;
        const auto shift = resonator_shift(eig, charge, res, 0, 6);
        const double exact = exact_dispersive_shift(eig, charge, 6, res.f_res_bare, res.g_coupling, 4);
        CAPTURE(pc);
        CHECK(shift.shift == doctest::Approx(exact).epsilon(1e-3));
    }
}

TEST_CASE("single transition below the resonator pushes it up") {
    EigenSystem eig;
    eig.energies = Eigen::Vector3d(0.0, 1.0, 30.0);
    Eigen::MatrixXcd charge = Eigen::MatrixXcd::Zero(3, 3);
    charge(0, 1) = charge(1, 0) = 0.5;
    ResonatorParams res;
    const auto s = resonator_shift(eig, charge, res, 0, 2);
    const double g = res.g_coupling, fr = res.f_res_bare;
    CHECK(s.shift == doctest::Approx(g * g * 0.25 * 2.0 / (fr * fr - 1.0)));
    CHECK(s.shift > 0.0);
    CHECK_FALSE(s.near_degenerate);
    eig.energies[1] = fr + 1e-4;
    CHECK(resonator_shift(eig, charge, res, 0, 2).near_degenerate);
}

TEST_CASE("f01 at Phi_ctrl = 0.406 is U-shaped around the sweet spot") {
    const auto p = device();
    std::vector<FluxBias> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(make_flux_bias(0.4 + 0.01 * i, 0.406, p.junctions));
    const auto pts = transition_spectrum_sweep(p, grid, 3, 40, 2);
    REQUIRE(pts.size() == grid.size());
    int argmin = 0;
    for (int i = 0; i <= 20; ++i) {
        REQUIRE(pts[i].error.empty());
        if (pts[i].transitions[0] < pts[argmin].transitions[0]) argmin = i;
    }
    CHECK(argmin == 10);
    CHECK(pts[0].transitions[0] > pts[10].transitions[0] + 0.1);
    CHECK(pts[20].transitions[0] > pts[10].transitions[0] + 0.1);
    CHECK(pts[3].transitions[0] == doctest::Approx(pts[17].transitions[0]).epsilon(1e-9));
    for (const auto &pt : pts) CHECK(pt.transitions[0] > 0.0);
}

TEST_CASE("sweep output does not depend on the worker count") {
    const auto p = device();
    std::vector<FluxBias> grid;
    for (int i = 0; i < 9; ++i) grid.push_back(make_flux_bias(0.45 + 0.0125 * i, 0.378, p.junctions));
    const auto a = transition_spectrum_sweep(p, grid, 2, 30, 1);
    const auto b = transition_spectrum_sweep(p, grid, 2, 30, 4);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK((a[i].transitions - b[i].transitions).norm() == 0.0);
}

TEST_CASE("noiseless fit recovers the junction energies") {
    auto truth = device();
    truth.junctions = {45.0, 50.0, 85.0, 34.0, 34.0};
    const int nq = 20;
    const auto data = synthetic(truth, nq, 0.0, 1);
    JunctionSet start = truth.junctions;
    start.ej1 *= 1.04;
    start.ej2 *= 0.97;
    start.ej3 *= 1.03;
    start.ej4 *= 0.96;
    start.ej5 = start.ej4;
    FitConstraints fc;
    fc.n_charge = nq;
    const auto fit = fit_spectrum(data, truth.ec, start, fc);
    CHECK(fit.converged);
    const double got[] = {fit.junctions.ej1, fit.junctions.ej2, fit.junctions.ej3, fit.junctions.ej4};
    const double want[] = {45.0, 50.0, 85.0, 34.0};
    for (int i = 0; i < 4; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-3));
    CHECK(fit.residual_rms < 1e-4);
    CHECK(fit.objective_history.front() >= fit.objective_history.back());
    CHECK(fit.sensitivity.size() == 4);
}

TEST_CASE("uncertainty filter and dataset validation") {
    SpectroscopyDataset d;
    d.rows = {{0.5, 0.378, 0.4, 0.005}, {0.5, 0.378, 0.41, 0.02}, {0.51, 0.378, 0.42, 0.01}};
    CHECK(filter_by_uncertainty(d).rows.size() == 2);
    d.rows[0].sigma = 0.0;
    CHECK_THROWS_AS(d.validate(), ValidationError);
    SpectroscopyDataset tiny;
    tiny.rows = {{0.5, 0.378, 0.4, 0.005}};
    CHECK_THROWS_AS(fit_spectrum(tiny, 0.21, device().junctions), ValidationError);
}
