#include "cos2phi/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "cos2phi/errors.hpp"
#include "cos2phi/parallel.hpp"
#include "cos2phi/simplex.hpp"

namespace cos2phi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool uniform(const Eigen::VectorXd &axis) {
    if (axis.size() < 2) return false;
    const double step = (axis[axis.size() - 1] - axis[0]) / double(axis.size() - 1);
    for (Eigen::Index i = 1; i < axis.size(); ++i)
        if (std::abs(axis[i] - axis[i - 1] - step) > 1e-6 * std::abs(step)) return false;
    return true;
}

double axis_step(const Eigen::VectorXd &axis) { return (axis[axis.size() - 1] - axis[0]) / double(axis.size() - 1); }

double wrap_unit(double x) { return x - std::floor(x); }

// Running sums for a masked correlation coefficient.
struct Moments {
    double n = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;

    void add(double x, double y) {
        n += 1;
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }

    double correlation() const {
        if (n < 2) return kNaN;
        const double vx = sxx - sx * sx / n;
        const double vy = syy - sy * sy / n;
        if (!(vx > 0.0) || !(vy > 0.0)) return kNaN;
        return (sxy - sx * sy / n) / std::sqrt(vx * vy);
    }
};

// Vertex of the parabola through (-1, a), (0, b), (1, c).
double parabolic_offset(double a, double b, double c) {
    if (!std::isfinite(a) || !std::isfinite(c)) return 0.0;
    const double den = a - 2.0 * b + c;
    if (!(den < 0.0)) return 0.0;
    return std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
}

// Vertex of the least-squares quadratic surface through a 3x3 patch centred
// on a local maximum; falls back to per-axis parabolas when the surface is
// not concave or the vertex leaves the patch.
Eigen::Vector2d quadratic_vertex(const Eigen::Matrix3d &z) {
    Eigen::Matrix<double, 9, 6> a;
    Eigen::Matrix<double, 9, 1> y;
    int row = 0;
    for (int i = -1; i <= 1; ++i) {
        for (int j = -1; j <= 1; ++j) {
            a.row(row) << 1.0, i, j, i * i, i * j, j * j;
            y[row] = z(i + 1, j + 1);
            ++row;
        }
    }
    if (z.allFinite()) {
        const Eigen::Matrix<double, 6, 1> c = a.colPivHouseholderQr().solve(y);
        Eigen::Matrix2d hess;
        hess << 2.0 * c[3], c[4], c[4], 2.0 * c[5];
        if (hess(0, 0) < 0.0 && hess.determinant() > 0.0) {
            const Eigen::Vector2d v = hess.partialPivLu().solve(-Eigen::Vector2d(c[1], c[2]));
            if (v.cwiseAbs().maxCoeff() <= 1.0) return v;
        }
    }
    return {parabolic_offset(z(0, 1), z(1, 1), z(2, 1)), parabolic_offset(z(1, 0), z(1, 1), z(1, 2))};
}

// Correlation of the kernel with the map displaced by a fractional placement
// (p, q), using bilinear interpolation of the map.
double ncc_at(const Heatmap &h, const KernelRegion &k, double p, double q) {
    const Eigen::Index nf = h.values.rows();
    const Eigen::Index nc = h.values.cols();
    Moments mo;
    for (int a = 0; a < k.fbl_size; ++a) {
        for (int b = 0; b < k.coil_size; ++b) {
            const double x = h.values(k.fbl_start + a, k.coil_start + b);
            if (!std::isfinite(x)) continue;
            const double u = p + a;
            const double v = q + b;
            const Eigen::Index i0 = static_cast<Eigen::Index>(std::floor(u));
            const Eigen::Index j0 = static_cast<Eigen::Index>(std::floor(v));
            if (i0 < 0 || j0 < 0 || i0 + 1 >= nf || j0 + 1 >= nc) continue;
            const double tu = u - i0;
            const double tv = v - j0;
            const double y = (1 - tu) * (1 - tv) * h.values(i0, j0) + tu * (1 - tv) * h.values(i0 + 1, j0) +
                             (1 - tu) * tv * h.values(i0, j0 + 1) + tu * tv * h.values(i0 + 1, j0 + 1);
            if (std::isfinite(y)) mo.add(x, y);
        }
    }
    return mo.n >= 0.5 * k.fbl_size * k.coil_size ? mo.correlation() : kNaN;
}

double cross(const Eigen::Vector2d &a, const Eigen::Vector2d &b) { return a.x() * b.y() - a.y() * b.x(); }

Eigen::Vector2d upper_half(Eigen::Vector2d v) {
    if (v.y() < 0.0 || (v.y() == 0.0 && v.x() < 0.0)) v = -v;
    return v;
}

}  // namespace

void CrosstalkMatrix::validate() const {
    if (!m.allFinite()) throw ValidationError("crosstalk.matrix", "entries must be finite");
    if (!offset.allFinite()) throw ValidationError("crosstalk.offset", "entries must be finite");
    if (std::abs(m.determinant()) <= 1e-14 * std::max(1.0, m.cwiseAbs().maxCoeff() * m.cwiseAbs().maxCoeff()))
        throw ValidationError("crosstalk.matrix", "must be invertible");
}

CrosstalkMatrix device_crosstalk() {
    CrosstalkMatrix cm;
    cm.m << 0.0993, 0.0307, 0.14225, 0.03525;
    return cm;
}

Eigen::Vector2d apply_crosstalk(const CrosstalkMatrix &cm, double fbl_ma, double coil_ma) {
    return cm.m * Eigen::Vector2d(fbl_ma, coil_ma) + cm.offset;
}

Eigen::Vector2d currents_for_flux(const CrosstalkMatrix &cm, double phi_b_tilde, double phi_ctrl) {
    cm.validate();
    return cm.m.partialPivLu().solve(Eigen::Vector2d(phi_b_tilde, phi_ctrl) - cm.offset);
}

FluxBias rebase_flux(double phi_b_tilde, double phi_s, double d) {
    if (!(std::abs(d) <= 1.0)) throw ValidationError("d", "SQUID asymmetry must lie in [-1, 1]");
    FluxBias f;
    f.phi_ctrl = phi_s;
    f.delta = squid_phase_offset(d, kTwoPi * phi_s);
    f.phi_b_raw = phi_b_tilde + 0.5 * phi_s;
    f.phi_bias = f.phi_b_raw - f.delta / kTwoPi;
    return f;
}

double tilde_from_rebased(const FluxBias &flux) { return flux.phi_b_raw - 0.5 * flux.phi_ctrl; }

void Heatmap::validate() const {
    if (fbl.size() < 2 || coil.size() < 2) throw ValidationError("heatmap", "needs at least 2 points per axis");
    if (values.rows() != fbl.size() || values.cols() != coil.size())
        throw ValidationError("heatmap", "value grid does not match the axes");
    auto monotone = [](const Eigen::VectorXd &a) {
        for (Eigen::Index i = 1; i < a.size(); ++i)
            if (!(a[i] > a[i - 1])) return false;
        return true;
    };
    if (!fbl.allFinite() || !monotone(fbl)) throw ValidationError("heatmap.fbl", "axis must be increasing");
    if (!coil.allFinite() || !monotone(coil)) throw ValidationError("heatmap.coil", "axis must be increasing");
}

Heatmap winsorized(const Heatmap &h, double fraction) {
    if (!(fraction >= 0.0 && fraction < 0.5)) throw ValidationError("winsorize", "must lie in [0, 0.5)");
    Heatmap out = h;
    std::vector<double> v;
    for (Eigen::Index k = 0; k < h.values.size(); ++k)
        if (std::isfinite(h.values.data()[k])) v.push_back(h.values.data()[k]);
    if (v.empty() || fraction == 0.0) return out;
    std::sort(v.begin(), v.end());
    const auto at = [&](double f) { return v[static_cast<std::size_t>(std::floor(f * double(v.size() - 1)))]; };
    const double lo = at(fraction);
    const double hi = at(1.0 - fraction);
    for (Eigen::Index k = 0; k < out.values.size(); ++k) {
        double &x = out.values.data()[k];
        if (std::isfinite(x)) x = std::clamp(x, lo, hi);
    }
    return out;
}

Eigen::MatrixXd normalized_cross_correlation(const Heatmap &h, const KernelRegion &k, int workers) {
    h.validate();
    const int nf = static_cast<int>(h.fbl.size());
    const int nc = static_cast<int>(h.coil.size());
    if (k.fbl_size < 2 || k.coil_size < 2 || k.fbl_start < 0 || k.coil_start < 0 ||
        k.fbl_start + k.fbl_size > nf || k.coil_start + k.coil_size > nc)
        throw ValidationError("kernel", "kernel region must lie inside the map");
    const Eigen::MatrixXd kern = h.values.block(k.fbl_start, k.coil_start, k.fbl_size, k.coil_size);
    const int pf = nf - k.fbl_size + 1;
    const int pc = nc - k.coil_size + 1;
    const double min_count = 0.5 * k.fbl_size * k.coil_size;
    const auto rows = parallel_map(static_cast<std::size_t>(pf), workers, [&](std::size_t p) {
        Eigen::RowVectorXd row(pc);
        for (int q = 0; q < pc; ++q) {
            Moments mo;
            for (int a = 0; a < k.fbl_size; ++a) {
                for (int b = 0; b < k.coil_size; ++b) {
                    const double x = kern(a, b);
                    const double y = h.values(static_cast<Eigen::Index>(p) + a, q + b);
                    if (std::isfinite(x) && std::isfinite(y)) mo.add(x, y);
                }
            }
            row[q] = mo.n >= min_count ? mo.correlation() : kNaN;
        }
        return row;
    });
    Eigen::MatrixXd out(pf, pc);
    for (int p = 0; p < pf; ++p) out.row(p) = rows[p];
    return out;
}

LatticeResult detect_lattice(const Heatmap &h, const KernelRegion &kernel, const LatticeOptions &opts) {
    if (!(opts.threshold > -1.0 && opts.threshold < 1.0)) throw ValidationError("threshold", "must lie in (-1, 1)");
    if (!(opts.cluster_radius >= 0.0)) throw ValidationError("cluster_radius", "must be >= 0");
    if (!(opts.peak_radius >= 1.0)) throw ValidationError("peak_radius", "must be >= 1");
    h.validate();
    if (!uniform(h.fbl) || !uniform(h.coil))
        throw ValidationError("heatmap", "lattice detection needs uniformly spaced axes");
    const Eigen::MatrixXd ncc = normalized_cross_correlation(winsorized(h, opts.winsorize), kernel, opts.workers);
    const int reach = static_cast<int>(std::floor(opts.peak_radius));
    const double r2 = opts.peak_radius * opts.peak_radius;
    const Eigen::Index pf = ncc.rows();
    const Eigen::Index pc = ncc.cols();

    struct Peak {
        double score;
        double p, q;  // sub-pixel placement
    };
    std::vector<Peak> candidates;
    for (Eigen::Index p = 0; p < pf; ++p) {
        for (Eigen::Index q = 0; q < pc; ++q) {
            const double s = ncc(p, q);
            if (!std::isfinite(s) || s < opts.threshold) continue;
            bool is_max = true;
            for (int dp = -reach; dp <= reach && is_max; ++dp) {
                for (int dq = -reach; dq <= reach; ++dq) {
                    if ((dp == 0 && dq == 0) || dp * dp + dq * dq > r2) continue;
                    const Eigen::Index pp = p + dp, qq = q + dq;
                    if (pp < 0 || qq < 0 || pp >= pf || qq >= pc) continue;
                    const double o = ncc(pp, qq);
                    if (std::isfinite(o) && o > s) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (!is_max) continue;
            const auto at = [&](Eigen::Index a, Eigen::Index b) {
                return (a < 0 || b < 0 || a >= pf || b >= pc) ? kNaN : ncc(a, b);
            };
            Eigen::Matrix3d patch;
            for (int dp = -1; dp <= 1; ++dp)
                for (int dq = -1; dq <= 1; ++dq) patch(dp + 1, dq + 1) = at(p + dp, q + dq);
            const Eigen::Vector2d off = quadratic_vertex(patch);
            candidates.push_back({s, double(p) + off.x(), double(q) + off.y()});
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const Peak &a, const Peak &b) { return a.score > b.score; });
    std::vector<Peak> clusters;
    for (const auto &c : candidates) {
        bool merged = false;
        for (const auto &k : clusters) {
            if (std::hypot(c.p - k.p, c.q - k.q) <= opts.cluster_radius) {
                merged = true;
                break;
            }
        }
        if (!merged) clusters.push_back(c);
    }
    if (clusters.size() < 3) throw NumericalError("insufficient periodicity: fewer than 3 correlation peaks");

    // Sub-pixel refinement on the interpolated map. On anisotropic maps the
    // correlation ridge is far narrower across than along, and the grid
    // maximum can sit several pixels from the true displacement.
    const Heatmap clipped = winsorized(h, opts.winsorize);
    for (auto &c : clusters) {
        const Eigen::Vector2d start(std::round(c.p), std::round(c.q));
        SimplexOptions so;
        so.initial_step = 0.5;
        so.x_tol = 1e-4;
        so.rel_tol = 1e-12;
        so.max_iterations = 400;
        const auto res = minimize_simplex(
            [&](const Eigen::VectorXd &x) {
                if ((x - start).cwiseAbs().maxCoeff() > opts.peak_radius) return 2.0;
                const double r = ncc_at(clipped, kernel, x[0], x[1]);
                return std::isfinite(r) ? -r : 2.0;
            },
            start, so);
        if (res.value < -c.score) {
            c.p = res.x[0];
            c.q = res.x[1];
            c.score = -res.value;
        }
    }

    const double sf = axis_step(h.fbl);
    const double sc = axis_step(h.coil);
    LatticeResult out;
    for (const auto &c : clusters) {
        out.peaks.emplace_back((c.p - kernel.fbl_start) * sf, (c.q - kernel.coil_start) * sc);
        out.scores.push_back(c.score);
    }

    // Shortest difference vector, then the shortest one not parallel to it.
    std::vector<Eigen::Vector2d> diffs;
    for (std::size_t a = 0; a < out.peaks.size(); ++a)
        for (std::size_t b = a + 1; b < out.peaks.size(); ++b) diffs.push_back(upper_half(out.peaks[b] - out.peaks[a]));
    std::stable_sort(diffs.begin(), diffs.end(),
                     [](const Eigen::Vector2d &a, const Eigen::Vector2d &b) { return a.norm() < b.norm(); });
    const double min_sin = std::sin(kMinLatticeAngleDeg * kPi / 180.0);
    Eigen::Vector2d v1 = diffs.front();
    Eigen::Vector2d v2 = Eigen::Vector2d::Zero();
    for (const auto &d : diffs) {
        if (std::abs(cross(v1, d)) > min_sin * v1.norm() * d.norm()) {
            v2 = d;
            break;
        }
    }
    if (v2.norm() == 0.0) throw NumericalError("insufficient periodicity: peaks lie along a single direction");

    // Least-squares refinement of (origin, v1, v2) over every peak that sits
    // close to a lattice site.
    Eigen::Matrix2d basis;
    basis << v1, v2;
    const Eigen::Matrix2d inv = basis.inverse();
    std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>> sites;
    for (const auto &pk : out.peaks) {
        const Eigen::Vector2d c = inv * (pk - out.peaks.front());
        const Eigen::Vector2d r = c.array().round();
        if ((c - r).cwiseAbs().maxCoeff() < 0.25) sites.emplace_back(r, pk);
    }
    if (sites.size() >= 3) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * sites.size(), 6);
        Eigen::VectorXd y(2 * sites.size());
        for (std::size_t s = 0; s < sites.size(); ++s) {
            const auto &[ij, pk] = sites[s];
            for (int ax = 0; ax < 2; ++ax) {
                const Eigen::Index row = 2 * static_cast<Eigen::Index>(s) + ax;
                a(row, ax) = 1.0;
                a(row, 2 + ax) = ij.x();
                a(row, 4 + ax) = ij.y();
                y[row] = pk[ax];
            }
        }
        const Eigen::VectorXd sol = a.colPivHouseholderQr().solve(y);
        if (a.colPivHouseholderQr().rank() == 6) {
            v1 = Eigen::Vector2d(sol[2], sol[3]);
            v2 = Eigen::Vector2d(sol[4], sol[5]);
            out.fit_residual = std::sqrt((a * sol - y).squaredNorm() / double(sites.size()));
        }
    }
    out.v1 = upper_half(v1);
    out.v2 = upper_half(v2);
    return out;
}

CrosstalkMatrix lattice_to_matrix(const Eigen::Vector2d &v1, const Eigen::Vector2d &v2) {
    if (!v1.allFinite() || !v2.allFinite() || v1.norm() == 0.0 || v2.norm() == 0.0)
        throw ValidationError("lattice", "vectors must be finite and non-zero");
    const double sin_angle = std::abs(cross(v1, v2)) / (v1.norm() * v2.norm());
    if (sin_angle < std::sin(kMinLatticeAngleDeg * kPi / 180.0))
        throw NumericalError("lattice vectors are nearly parallel; matrix would be ill-conditioned");
    Eigen::Matrix2d basis;
    basis << v1, v2;
    CrosstalkMatrix cm;
    cm.m = basis.inverse();
    return cm;
}

double UnitCellModel::operator()(double phi_b_tilde, double phi_ctrl) const {
    const int nb = static_cast<int>(values.rows());
    const int ns = static_cast<int>(values.cols());
    const double fb = wrap_unit(rebase_flux(phi_b_tilde, phi_ctrl, d).phi_bias) * nb;
    const double fs = wrap_unit(phi_ctrl) * ns;
    const int i0 = static_cast<int>(std::floor(fb));
    const int j0 = static_cast<int>(std::floor(fs));
    const double tb = fb - i0;
    const double ts = fs - j0;
    auto v = [&](int i, int j) { return values(((i % nb) + nb) % nb, ((j % ns) + ns) % ns); };
    return (1 - tb) * (1 - ts) * v(i0, j0) + tb * (1 - ts) * v(i0 + 1, j0) + (1 - tb) * ts * v(i0, j0 + 1) +
           tb * ts * v(i0 + 1, j0 + 1);
}

UnitCellModel unit_cell_model(const CircuitParams &params, const ResonatorParams &res, int size, int n_charge,
                              int n_levels, int workers) {
    if (size < 4) throw ValidationError("size", "unit cell grid must be >= 4");
    validate(params);
    const auto &j = params.junctions;
    UnitCellModel model;
    model.d = j.ej4 + j.ej5 > 0.0 ? (j.ej4 - j.ej5) / (j.ej4 + j.ej5) : 0.0;
    const std::size_t cells = static_cast<std::size_t>(size) * size;
    const auto vals = parallel_map(cells, workers, [&](std::size_t k) {
        const double pb = double(k / size) / size;
        const double ps = double(k % size) / size;
        try {
            return 1e3 * resonator_shift(params, make_flux_bias(pb, ps, j), res, 0, n_levels, n_charge).shift;
        } catch (const NumericalError &) {
            return kNaN;
        }
    });
    model.values.resize(size, size);
    for (std::size_t k = 0; k < cells; ++k) model.values(k / size, k % size) = vals[k];
    return model;
}

double model_agreement(const Heatmap &h, const UnitCellModel &model, const CrosstalkMatrix &cm, double winsorize) {
    std::vector<double> xs, ys;
    xs.reserve(static_cast<std::size_t>(h.values.size()));
    ys.reserve(static_cast<std::size_t>(h.values.size()));
    for (Eigen::Index i = 0; i < h.fbl.size(); ++i) {
        for (Eigen::Index j = 0; j < h.coil.size(); ++j) {
            const double y = h.values(i, j);
            if (!std::isfinite(y)) continue;
            const Eigen::Vector2d f = apply_crosstalk(cm, h.fbl[i], h.coil[j]);
            const double x = model(f.x(), f.y());
            if (!std::isfinite(x)) continue;
            xs.push_back(x);
            ys.push_back(y);
        }
    }
    if (xs.size() < 2) return -1.0;
    auto clip = [winsorize](std::vector<double> &v) {
        if (winsorize <= 0.0) return;
        std::vector<double> s = v;
        std::sort(s.begin(), s.end());
        const double lo = s[static_cast<std::size_t>(std::floor(winsorize * double(s.size() - 1)))];
        const double hi = s[static_cast<std::size_t>(std::floor((1.0 - winsorize) * double(s.size() - 1)))];
        for (double &x : v) x = std::clamp(x, lo, hi);
    };
    clip(xs);
    clip(ys);
    Moments mo;
    for (std::size_t k = 0; k < xs.size(); ++k) mo.add(xs[k], ys[k]);
    const double c = mo.correlation();
    return std::isfinite(c) ? c : -1.0;
}

CrosstalkCalibration calibrate_crosstalk(const Heatmap &h, const KernelRegion &kernel, const UnitCellModel &model,
                                         const LatticeOptions &opts) {
    CrosstalkCalibration out;
    out.lattice = detect_lattice(h, kernel, opts);
    const CrosstalkMatrix base = lattice_to_matrix(out.lattice.v1, out.lattice.v2);

    std::map<std::array<int, 4>, bool> seen;
    std::vector<Eigen::Matrix2i> choices;
    const int r = kAssignmentRange;
    for (int a = -r; a <= r; ++a)
        for (int b = -r; b <= r; ++b)
            for (int c = -r; c <= r; ++c)
                for (int e = -r; e <= r; ++e) {
                    if (std::abs(a * e - b * c) != 1) continue;
                    Eigen::Matrix2i u;
                    u << a, b, c, e;
                    const Eigen::Matrix2d m = u.cast<double>() * base.m;
                    if (m(0, 0) == 0.0 || m(1, 1) == 0.0) continue;
                    if (m(0, 0) < 0.0) u.row(0) *= -1;
                    if (m(1, 1) < 0.0) u.row(1) *= -1;
                    const std::array<int, 4> key{u(0, 0), u(0, 1), u(1, 0), u(1, 1)};
                    if (seen.emplace(key, true).second) choices.push_back(u);
                }
    const auto scores = parallel_map(choices.size(), opts.workers, [&](std::size_t k) {
        CrosstalkMatrix cm;
        cm.m = choices[k].cast<double>() * base.m;
        return model_agreement(h, model, cm, opts.winsorize);
    });
    std::size_t best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k)
        if (scores[k] > scores[best]) best = k;
    double second = -1.0;
    for (std::size_t k = 0; k < scores.size(); ++k)
        if (k != best) second = std::max(second, scores[k]);
    out.assignment = choices[best];
    out.matrix.m = choices[best].cast<double>() * base.m;
    out.score = scores[best];
    out.runner_up = second;
    out.ambiguous = second >= (1.0 - kAssignmentMargin) * out.score;
    out.lattice_matrix = out.matrix;

    // Refine the four entries against the model. The lattice estimate is only
    // as good as the map sampling along its weakly varying direction.
    const Eigen::Matrix2d m0 = out.matrix.m;
    SimplexOptions so;
    so.initial_step = 0.01;
    so.x_tol = 1e-7;
    so.rel_tol = 1e-12;
    const auto fit = minimize_simplex(
        [&](const Eigen::VectorXd &x) {
            CrosstalkMatrix cm;
            cm.m = m0.array() * (1.0 + Eigen::Map<const Eigen::Array22d>(x.data())) ;
            return -model_agreement(h, model, cm, opts.winsorize);
        },
        Eigen::VectorXd::Zero(4), so);
    if (-fit.value > out.score) {
        out.matrix.m = m0.array() * (1.0 + Eigen::Map<const Eigen::Array22d>(fit.x.data()));
        out.score = -fit.value;
    }
    return out;
}

}  // namespace cos2phi
