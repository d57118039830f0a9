#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace tailmix {

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = std::numeric_limits<double>::infinity();
    int evaluations = 0;
    bool converged = false;
};

/// Minimizes f over R^d from a starting point, with standard reflection /
/// expansion / contraction coefficients. f may return +inf to encode hard
/// constraints. Small dimension only (2-3 here).
inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& start,
                                    double initial_step = 0.25,
                                    double tol = 1e-10,
                                    int max_evals = 2000) {
    const int d = static_cast<int>(start.size());
    const int np = d + 1;
    std::vector<Eigen::VectorXd> pts(np, start);
    std::vector<double> vals(np);
    int evals = 0;

    for (int i = 1; i < np; ++i) {
        double step = initial_step;
        if (start[i - 1] != 0.0) step = initial_step * std::abs(start[i - 1]);
        pts[i][i - 1] += step;
    }
    for (int i = 0; i < np; ++i) {
        vals[i] = f(pts[i]);
        ++evals;
    }

    auto order = [&] {
        std::vector<int> idx(np);
        for (int i = 0; i < np; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return vals[a] < vals[b]; });
        std::vector<Eigen::VectorXd> p2(np);
        std::vector<double> v2(np);
        for (int i = 0; i < np; ++i) {
            p2[i] = pts[idx[i]];
            v2[i] = vals[idx[i]];
        }
        pts.swap(p2);
        vals.swap(v2);
    };

    order();
    while (evals < max_evals) {
        const double spread = std::abs(vals[np - 1] - vals[0]);
        const double scale = 1.0 + std::abs(vals[0]);
        if (spread <= tol * scale) break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < np - 1; ++i) centroid += pts[i];
        centroid /= static_cast<double>(np - 1);

        Eigen::VectorXd xr = centroid + (centroid - pts[np - 1]);
        double fr = f(xr);
        ++evals;

        if (fr < vals[0]) {
            Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[np - 1]);
            double fe = f(xe);
            ++evals;
            if (fe < fr) {
                pts[np - 1] = xe;
                vals[np - 1] = fe;
            } else {
                pts[np - 1] = xr;
                vals[np - 1] = fr;
            }
        } else if (fr < vals[np - 2]) {
            pts[np - 1] = xr;
            vals[np - 1] = fr;
        } else {
            Eigen::VectorXd xc = centroid + 0.5 * (pts[np - 1] - centroid);
            double fc = f(xc);
            ++evals;
            if (fc < vals[np - 1]) {
                pts[np - 1] = xc;
                vals[np - 1] = fc;
            } else {
                for (int i = 1; i < np; ++i) {
                    pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
                    vals[i] = f(pts[i]);
                    ++evals;
                }
            }
        }
        order();
    }

    NelderMeadResult out;
    out.x = pts[0];
    out.value = vals[0];
    out.evaluations = evals;
    out.converged = std::abs(vals[np - 1] - vals[0]) <= tol * (1.0 + std::abs(vals[0]));
    return out;
}

}  // namespace tailmix
