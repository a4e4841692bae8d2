#ifndef COS2PHI_SIMPLEX_HPP
#define COS2PHI_SIMPLEX_HPP

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace cos2phi {

struct SimplexOptions {
    int max_iterations = 2000;
    double rel_tol = 1e-9;       // on the objective spread across the simplex
    double x_tol = 1e-10;        // simplex diameter
    double initial_step = 0.05;  // per coordinate
    int max_restarts = 4;
};

struct SimplexResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    std::vector<double> best_history;  // best value after each iteration
};

// Nelder-Mead downhill simplex; restarted from the incumbent until a restart
// no longer improves the objective. Deterministic.
SimplexResult minimize_simplex(const std::function<double(const Eigen::VectorXd &)> &objective,
                               const Eigen::VectorXd &x0, const SimplexOptions &opts = {});

}  // namespace cos2phi

#endif  // COS2PHI_SIMPLEX_HPP
