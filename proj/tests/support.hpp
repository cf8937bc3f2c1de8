#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "osp/moments.hpp"

namespace osp::test {

inline MomentSet exponential(int n) { return compute_moments(default_model(Family::Exponential), n); }
inline MomentSet uniform(int n) { return compute_moments(default_model(Family::Uniform), n); }

inline MomentSet normal(int n) {
    ParentModel m;
    m.family = Family::Normal;
    m.method = MomentMethod::Quadrature;
    return compute_moments(m, n);
}

// FMSPE of a single row written as Var(a'Z - Z_s) + bias^2, independent of
// the expansion used by the library.
inline double fmspe(const Eigen::VectorXd& a, const MomentSlice& sl, int col, double delta) {
    const Eigen::VectorXd& w = sl.omega.col(col);
    const double var = a.dot(sl.sigma_obs * a) - 2.0 * a.dot(w) + sl.omega_ff(col, col);
    const double bias = a.dot(sl.alpha_obs) + delta * a.sum() - sl.alpha_future[col] - delta;
    return var + bias * bias;
}

inline double min_eigenvalue(const Eigen::MatrixXd& w) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (w + w.transpose()));
    return es.eigenvalues().minCoeff();
}

using Objective = std::function<double(const Eigen::VectorXd&)>;

// Plain Nelder-Mead.
inline Eigen::VectorXd nelder_mead(const Objective& f, Eigen::VectorXd x0, double step, int iters) {
    const int d = static_cast<int>(x0.size());
    std::vector<Eigen::VectorXd> p(d + 1, x0);
    for (int i = 0; i < d; ++i) p[i + 1][i] += step;
    std::vector<double> fv(d + 1);
    for (int i = 0; i <= d; ++i) fv[i] = f(p[i]);
    std::vector<int> idx(d + 1);
    for (int it = 0; it < iters; ++it) {
        for (int i = 0; i <= d; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        const int best = idx[0], worst = idx[d], second = idx[d - 1];
        Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < d; ++i) c += p[idx[i]];
        c /= d;
        const Eigen::VectorXd xr = c + (c - p[worst]);
        const double fr = f(xr);
        if (fr < fv[best]) {
            const Eigen::VectorXd xe = c + 2.0 * (c - p[worst]);
            const double fe = f(xe);
            if (fe < fr) { p[worst] = xe; fv[worst] = fe; }
            else { p[worst] = xr; fv[worst] = fr; }
        } else if (fr < fv[second]) {
            p[worst] = xr;
            fv[worst] = fr;
        } else {
            const Eigen::VectorXd xc = c + 0.5 * (p[worst] - c);
            const double fc = f(xc);
            if (fc < fv[worst]) {
                p[worst] = xc;
                fv[worst] = fc;
            } else {
                for (int i = 1; i <= d; ++i) {
                    p[idx[i]] = p[best] + 0.5 * (p[idx[i]] - p[best]);
                    fv[idx[i]] = f(p[idx[i]]);
                }
            }
        }
    }
    return p[std::min_element(fv.begin(), fv.end()) - fv.begin()];
}

// Newton steps with central-difference gradient and Hessian. Exact up to
// rounding on quadratics, so a couple of steps polish a Nelder-Mead point.
inline Eigen::VectorXd newton_polish(const Objective& f, Eigen::VectorXd x, int steps, double h = 1e-2) {
    const int d = static_cast<int>(x.size());
    for (int s = 0; s < steps; ++s) {
        Eigen::VectorXd g(d);
        Eigen::MatrixXd H(d, d);
        const double f0 = f(x);
        for (int i = 0; i < d; ++i) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
            e[i] = h;
            const double fp = f(x + e), fm = f(x - e);
            g[i] = (fp - fm) / (2 * h);
            H(i, i) = (fp - 2 * f0 + fm) / (h * h);
            for (int j = 0; j < i; ++j) {
                Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
                u[j] = h;
                H(i, j) = H(j, i) = (f(x + e + u) - f(x + e - u) - f(x - e + u) + f(x - e - u)) / (4 * h * h);
            }
        }
        x -= H.ldlt().solve(g);
    }
    return x;
}

// Minimizes from `starts` random points in [-2, 2]^d; returns every solution.
inline std::vector<Eigen::VectorXd> multistart_minimize(const Objective& f, int d, int starts, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<Eigen::VectorXd> out;
    for (int k = 0; k < starts; ++k) {
        Eigen::VectorXd x0(d);
        for (int i = 0; i < d; ++i) x0[i] = u(rng);
        out.push_back(newton_polish(f, nelder_mead(f, x0, 0.5, 400 * d), 3));
    }
    return out;
}

}  // namespace osp::test
