#include <doctest.h>

#include <cmath>

#include <boost/numeric/odeint.hpp>

#include "cos2phi/errors.hpp"
#include "cos2phi/multilevel.hpp"

using namespace cos2phi;

namespace {

CircuitParams device() {
    CircuitParams p;
    p.ec = 0.21;
    p.junctions = {42.49, 53.9, 88.11, 35.73, 35.73};
    return p;
}

using State = std::vector<double>;

// Independent oracle: adaptive Dormand-Prince integration of dp/dt = B p.
Eigen::MatrixXd integrate_ode(const Eigen::MatrixXd &b, const Eigen::VectorXd &p0, const std::vector<double> &times) {
    namespace odeint = boost::numeric::odeint;
    const int n = static_cast<int>(p0.size());
    auto rhs = [&](const State &x, State &dx, double) {
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += b(i, j) * x[j];
            dx[i] = acc;
        }
    };
    State x(p0.data(), p0.data() + n);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(times.size()), n);
    std::size_t row = 0;
    auto observer = [&](const State &s, double) {
        for (int i = 0; i < n; ++i) out(static_cast<Eigen::Index>(row), i) = s[i];
        ++row;
    };
    auto stepper = odeint::make_dense_output(1e-13, 1e-13, odeint::runge_kutta_dopri5<State>());
    const double dt0 = 1e-3 / b.cwiseAbs().maxCoeff();
    odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), dt0, observer);
    return out;
}

RateMatrix device_rates(double pb, double pc, int n) {
    const auto p = device();
    return build_rate_matrix(p, make_flux_bias(pb, pc, p.junctions), NoiseConfig{}, ResonatorParams{}, n, 0.040);
}

}  // namespace

TEST_CASE("rate matrix obeys detailed balance and conserves probability") {
    const RateMatrix rm = device_rates(0.5, 0.378, 5);
    CHECK(detailed_balance_residual(rm) < 1e-10);
    const Eigen::RowVectorXd colsum = rm.b.colwise().sum();
    CHECK(colsum.cwiseAbs().maxCoeff() < 1e-9 * rm.b.cwiseAbs().maxCoeff());
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            if (i != j) CHECK(rm.b(i, j) >= 0.0);
}

TEST_CASE("Boltzmann distribution is stationary") {
    const RateMatrix rm = device_rates(0.45, 0.395, 5);
    const Eigen::VectorXd pi = rm.stationary();
    CHECK(pi.sum() == doctest::Approx(1.0));
    CHECK((rm.b * pi).norm() < 1e-8 * rm.b.norm() * pi.norm());
    const auto trace = evolve_populations(rm, pi, {0.0, 1e-6, 1e-3});
    for (int k = 0; k < 3; ++k) CHECK((trace.populations.row(k).transpose() - pi).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("eigenbasis evolution matches the ODE oracle") {
    for (double pc : {0.378, 0.406}) {
        const RateMatrix rm = device_rates(0.5, pc, 5);
        Eigen::VectorXd p0 = Eigen::VectorXd::Zero(5);
        p0[1] = 1.0;
        const double t_end = 5.0 / effective_t1(rm).slowest_rate;
        std::vector<double> times;
        for (int k = 0; k <= 40; ++k) times.push_back(t_end * k / 40.0);
        const auto trace = evolve_populations(rm, p0, times);
        const Eigen::MatrixXd ref = integrate_ode(rm.b, p0, times);
        CAPTURE(pc);
        CHECK_FALSE(trace.used_fallback);
        CHECK((trace.populations - ref).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("general eigensolver path for a generator without detailed balance") {
    Eigen::Matrix3d b;
    b << -3.0, 1.0, 0.5,  //
        2.0, -1.5, 2.0,   //
        1.0, 0.5, -2.5;
    RateMatrix rm;
    rm.b = b * 1e4;
    rm.temperature = 0.04;
    rm.frequencies = Eigen::Vector3d(0.0, 0.3, 0.7);
    CHECK(detailed_balance_residual(rm) > 1e-3);
    const Eigen::Vector3d p0(0.2, 0.5, 0.3);
    std::vector<double> times{0.0, 1e-5, 5e-5, 2e-4, 1e-3};
    const auto trace = evolve_populations(rm, p0, times);
    const Eigen::MatrixXd ref = integrate_ode(rm.b, p0, times);
    CHECK((trace.populations - ref).cwiseAbs().maxCoeff() < 1e-8);
    for (int k = 0; k < 5; ++k) CHECK(trace.populations.row(k).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("two-level system relaxes at the summed up and down rate") {
    Eigen::MatrixXd down = Eigen::MatrixXd::Zero(2, 2);
    down(1, 0) = 2.0e5;
    const RateMatrix rm = rate_matrix_from_downward(down, Eigen::Vector2d(0.0, 0.5), 0.04);
    const double up = rm.b(1, 0);
    CHECK(up == doctest::Approx(2.0e5 * std::exp(-0.5e9 * 6.62607015e-34 / (1.380649e-23 * 0.04))));
    const auto e = effective_t1(rm);
    CHECK(e.t1 == doctest::Approx(1.0 / (2.0e5 + up)).epsilon(1e-6));
    CHECK(e.good_fit);
}

TEST_CASE("N-level lifetime never exceeds the two-level estimate") {
    const auto p = device();
    for (double pb : {0.45, 0.5}) {
        for (double pc : {0.378, 0.406}) {
            const auto r = multilevel_t1(p, make_flux_bias(pb, pc, p.junctions), NoiseConfig{}, ResonatorParams{}, 5);
            CAPTURE(pb);
            CAPTURE(pc);
            CHECK(r.t1 <= r.t1_two_level * (1.0 + 1e-9));
            CHECK(r.good_fit);
        }
    }
}

TEST_CASE("population input validation") {
    const RateMatrix rm = device_rates(0.5, 0.378, 3);
    CHECK_THROWS_AS(evolve_populations(rm, Eigen::Vector3d(0.5, 0.6, 0.0), {0.0}), ValidationError);
    CHECK_THROWS_AS(evolve_populations(rm, Eigen::Vector3d(1.2, -0.2, 0.0), {0.0}), ValidationError);
    CHECK_THROWS_AS(evolve_populations(rm, Eigen::Vector3d(1.0, 0.0, 0.0), {-1.0}), ValidationError);
    CHECK_THROWS_AS(evolve_populations(rm, Eigen::Vector2d(1.0, 0.0), {0.0}), ValidationError);
}
