#include "osp/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "osp/error.hpp"

namespace osp {

CensoredSample make_censored_sample(std::span<const double> raw, int n, int r, Transform transform) {
    if (r < 1 || r > n) throw ValidationError("need 1 <= r <= n, got r = " + std::to_string(r) + ", n = " + std::to_string(n));
    if (raw.size() < static_cast<std::size_t>(r))
        throw ValidationError("only " + std::to_string(raw.size()) + " values supplied for r = " + std::to_string(r));
    if (raw.size() > static_cast<std::size_t>(n))
        throw ValidationError(std::to_string(raw.size()) + " values supplied but n = " + std::to_string(n));
    std::vector<double> v(raw.begin(), raw.end());
    for (double& x : v) {
        if (!std::isfinite(x)) throw ValidationError("non-finite data value");
        if (transform == Transform::Log) {
            if (!(x > 0.0)) throw ValidationError("log transform requires strictly positive data");
            x = std::log(x);
        }
    }
    std::sort(v.begin(), v.end());
    CensoredSample s;
    s.n = n;
    s.r = r;
    s.transform = transform;
    s.x = Eigen::Map<const Eigen::VectorXd>(v.data(), r);
    return s;
}

GlsSystem make_gls(const MomentSlice& slice) {
    if (slice.r < 2) throw ValidationError("r >= 2 observed order statistics are needed to identify sigma");
    GlsSystem g;
    g.chol.compute(slice.sigma_obs);
    if (g.chol.info() != Eigen::Success) throw NumericalError("observed covariance block is singular");
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(slice.r);
    g.inv_one = g.chol.solve(one);
    g.inv_alpha = g.chol.solve(slice.alpha_obs);
    g.v1 = one.dot(g.inv_one);
    g.v2 = slice.alpha_obs.dot(g.inv_alpha);
    g.v3 = one.dot(g.inv_alpha);
    g.big_delta = g.v1 * g.v2 - g.v3 * g.v3;
    if (!(g.big_delta > 0.0)) throw NumericalError("Delta = V1 V2 - V3^2 is not positive");
    return g;
}

BlueResult blue(const CensoredSample& sample, const MomentSlice& slice) {
    if (sample.n != slice.n || sample.r != slice.r)
        throw ValidationError("sample (n, r) does not match the moment slice");
    const GlsSystem g = make_gls(slice);
    BlueResult b;
    b.mu_star = g.mu_weights().dot(sample.x);
    b.sigma_star = g.sigma_weights().dot(sample.x);
    b.var_mu = g.v2 / g.big_delta;
    b.var_sigma = g.v1 / g.big_delta;
    b.cov_mu_sigma = -g.v3 / g.big_delta;
    b.big_delta = g.big_delta;
    b.v1 = g.v1;
    b.v2 = g.v2;
    b.v3 = g.v3;
    return b;
}

DeltaEstimate delta_hat(const BlueResult& b) {
    if (b.sigma_star == 0.0) throw ValidationError("sigma* = 0: delta is undefined");
    return {b.mu_star / b.sigma_star, std::abs(b.sigma_star) < 1e-8 * std::abs(b.mu_star)};
}

}  // namespace osp
