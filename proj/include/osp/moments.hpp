#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "osp/family.hpp"

namespace osp {

enum class MomentMethod { ClosedForm, Quadrature, MonteCarlo };

std::string to_string(MomentMethod m);
MomentMethod parse_method(std::string_view name);

/// Which standardized parent to use and how to get its order-statistic moments.
struct ParentModel {
    Family family = Family::Normal;
    MomentMethod method = MomentMethod::Quadrature;
    double quad_rel_tol = 1e-8;
    std::int64_t mc_reps = 1'000'000;
    std::uint64_t mc_seed = 0;
    /// Standardized quantile for Family::CustomQuantile; must be thread-safe.
    QuantileFn quantile;

    /// Throws ValidationError for unsupported (family, method) pairs.
    void validate() const;
};

/// The default method for a family: closed form where it exists, quadrature otherwise.
ParentModel default_model(Family family);

struct Provenance {
    Family family = Family::Normal;
    MomentMethod method = MomentMethod::ClosedForm;
    double tolerance = 0.0;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> reps;
    double pd_nudge = 0.0;                   ///< epsilon added to the diagonal to restore PD
    std::optional<Eigen::VectorXd> alpha_se;  ///< Monte Carlo only
    std::optional<Eigen::MatrixXd> sigma_se;  ///< Monte Carlo only
};

/// Means and covariances of the standardized order statistics Z_{1:n} .. Z_{n:n}.
/// Immutable; the constructor enforces the invariants.
class MomentSet {
public:
    MomentSet(Eigen::VectorXd alpha, Eigen::MatrixXd sigma, Provenance provenance);

    int n() const { return static_cast<int>(alpha_.size()); }
    const Eigen::VectorXd& alpha() const { return alpha_; }
    const Eigen::MatrixXd& sigma() const { return sigma_; }
    const Provenance& provenance() const { return provenance_; }
    /// Soft-invariant violations (e.g. non-decaying covariance rows).
    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    Eigen::VectorXd alpha_;
    Eigen::MatrixXd sigma_;
    Provenance provenance_;
    std::vector<std::string> warnings_;
};

/// Observed/future partition of a MomentSet for a censoring index r and
/// target order statistics s_1 < ... < s_l (1-based, all > r).
struct MomentSlice {
    int n = 0;
    int r = 0;
    std::vector<int> targets;
    Family family = Family::Normal;
    MomentMethod method = MomentMethod::ClosedForm;

    Eigen::VectorXd alpha_obs;     ///< alpha_1 .. alpha_r
    Eigen::MatrixXd sigma_obs;     ///< r x r
    Eigen::MatrixXd omega;         ///< r x l, column k = Cov(Z_obs, Z_{s_k})
    Eigen::MatrixXd omega_ff;      ///< l x l, Cov(Z_{s_k}, Z_{s_m})
    Eigen::VectorXd alpha_future;  ///< alpha_{s_1} .. alpha_{s_l}

    int size() const { return static_cast<int>(targets.size()); }
    /// Position of order statistic s in `targets`; throws if absent.
    int column_of(int s) const;
};

MomentSet compute_moments(const ParentModel& model, int n);

/// An empty target list is allowed (estimation only needs the observed block).
MomentSlice slice_moments(const MomentSet& ms, int r, const std::vector<int>& targets);

std::string moments_to_json(const MomentSet& ms);
MomentSet moments_from_json(std::string_view text);
void save_moments(const MomentSet& ms, const std::filesystem::path& path);
MomentSet load_moments(const std::filesystem::path& path);

namespace detail {

/// Quadrature engine, exposed for testing against the closed forms.
MomentSet quadrature_moments(const ParentModel& model, int n);

/// Sample mean and covariance of sorted standardized samples with
/// block-jackknife standard errors. Used by MomentMethod::MonteCarlo and the
/// Monte Carlo oracle.
MomentSet monte_carlo_moments(const ParentModel& model, int n, std::int64_t reps, std::uint64_t seed);

/// Quantile evaluated from p and its complement q = 1 - p, so that the
/// upper tail keeps full precision.
double quantile_pq(const ParentModel& model, double p, double q);

}  // namespace detail

}  // namespace osp
