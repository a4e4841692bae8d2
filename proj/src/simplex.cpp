#include "cos2phi/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cos2phi {

namespace {

struct Run {
    Eigen::VectorXd x;
    double value;
    bool converged;
};

}  // namespace

SimplexResult minimize_simplex(const std::function<double(const Eigen::VectorXd &)> &objective,
                               const Eigen::VectorXd &x0, const SimplexOptions &opts) {
    const int n = static_cast<int>(x0.size());
    SimplexResult res;
    auto eval = [&](const Eigen::VectorXd &x) {
        ++res.evaluations;
        const double v = objective(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    auto run = [&](const Eigen::VectorXd &start, double start_value) -> Run {
        std::vector<Eigen::VectorXd> pts(n + 1, start);
        std::vector<double> vals(n + 1, start_value);
        for (int i = 0; i < n; ++i) {
            pts[i + 1][i] += opts.initial_step;
            vals[i + 1] = eval(pts[i + 1]);
        }
        std::vector<int> order(n + 1);
        while (res.iterations < opts.max_iterations) {
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
            const int best = order.front(), worst = order.back(), second = order[n - 1];

            double diameter = 0.0;
            for (int i = 0; i <= n; ++i) diameter = std::max(diameter, (pts[i] - pts[best]).cwiseAbs().maxCoeff());
            const double spread = vals[worst] - vals[best];
            if (spread <= opts.rel_tol * std::abs(vals[best]) || diameter <= opts.x_tol) {
                return {pts[best], vals[best], true};
            }
            ++res.iterations;

            Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
            for (int i = 0; i <= n; ++i)
                if (i != worst) centroid += pts[i];
            centroid /= n;

            const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
            const double fr = eval(xr);
            if (fr < vals[best]) {
                const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
                const double fe = eval(xe);
                if (fe < fr) {
                    pts[worst] = xe, vals[worst] = fe;
                } else {
                    pts[worst] = xr, vals[worst] = fr;
                }
            } else if (fr < vals[second]) {
                pts[worst] = xr, vals[worst] = fr;
            } else {
                const bool outside = fr < vals[worst];
                const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                                   : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
                const double fc = eval(xc);
                if (fc < std::min(fr, vals[worst])) {
                    pts[worst] = xc, vals[worst] = fc;
                } else {
                    for (int i = 0; i <= n; ++i) {
                        if (i == best) continue;
                        pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
                        vals[i] = eval(pts[i]);
                    }
                }
            }
            res.best_history.push_back(*std::min_element(vals.begin(), vals.end()));
        }
        const auto it = std::min_element(vals.begin(), vals.end());
        return {pts[it - vals.begin()], *it, false};
    };

    Run current = run(x0, eval(x0));
    for (int r = 0; r < opts.max_restarts && current.converged; ++r) {
        Run next = run(current.x, current.value);
        const bool improved = next.value < current.value - opts.rel_tol * std::abs(current.value);
        if (next.value <= current.value) current = next;
        if (!improved) break;
    }
    res.x = current.x;
    res.value = current.value;
    res.converged = current.converged;
    return res;
}

}  // namespace cos2phi
