#pragma once

#include <span>

#include <Eigen/Dense>

#include "osp/moments.hpp"

namespace osp {

enum class Transform { None, Log };

/// The first r order statistics of a sample of size n (Type-II right censored).
struct CensoredSample {
    int n = 0;
    int r = 0;
    Eigen::VectorXd x;  ///< observed values on the analysis scale, non-decreasing
    Transform transform = Transform::None;
};

/// Builds a censored sample from raw values: optional natural-log transform,
/// then sort and keep the r smallest. `raw` may hold anywhere between r and
/// n values (the complete sample or just the observed part).
CensoredSample make_censored_sample(std::span<const double> raw, int n, int r, Transform transform = Transform::None);

/// Generalized least squares pieces shared by the BLUEs and the BLUP:
/// Sigma_obs^{-1} applied to 1 and alpha, and the quadratic forms
/// V1 = 1'S^{-1}1, V2 = a'S^{-1}a, V3 = 1'S^{-1}a with Delta = V1 V2 - V3^2.
struct GlsSystem {
    Eigen::LLT<Eigen::MatrixXd> chol;
    Eigen::VectorXd inv_one;
    Eigen::VectorXd inv_alpha;
    double v1 = 0, v2 = 0, v3 = 0;
    double big_delta = 0;

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return chol.solve(b); }
    /// Coefficient vectors with mu* = mu_weights'X and sigma* = sigma_weights'X.
    Eigen::VectorXd mu_weights() const { return (v2 * inv_one - v3 * inv_alpha) / big_delta; }
    Eigen::VectorXd sigma_weights() const { return (v1 * inv_alpha - v3 * inv_one) / big_delta; }
};

/// Factorizes sigma_obs; throws ValidationError for r < 2 and NumericalError
/// when sigma_obs is not positive definite or Delta <= 0.
GlsSystem make_gls(const MomentSlice& slice);

struct BlueResult {
    double mu_star = 0;
    double sigma_star = 0;
    double var_mu = 0;        ///< x sigma^2
    double var_sigma = 0;     ///< x sigma^2
    double cov_mu_sigma = 0;  ///< x sigma^2
    double big_delta = 0;
    double v1 = 0, v2 = 0, v3 = 0;
};

BlueResult blue(const CensoredSample& sample, const MomentSlice& slice);

struct DeltaEstimate {
    double value = 0;
    bool unstable = false;  ///< |sigma*| < 1e-8 |mu*|
};

/// Plug-in ratio mu*/sigma*.
DeltaEstimate delta_hat(const BlueResult& b);

}  // namespace osp
