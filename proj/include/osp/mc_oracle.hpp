#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "osp/moments.hpp"
#include "osp/prediction.hpp"

namespace osp {

struct SimPredictor {
    std::string name;
    LinearPredictor predictor;  ///< must predict exactly the plan's targets
};

/// A brute-force sampling experiment: draw samples of size n from
/// mu + sigma Z, censor at r, and score every predictor against the truth.
struct SimPlan {
    ParentModel model;  ///< family (and quantile for custom parents) to sample from
    int n = 0;
    int r = 0;
    std::vector<int> targets;
    double mu = 0.0;
    double sigma = 1.0;
    std::int64_t reps = 1'000'000;
    std::uint64_t seed = 0;
    std::vector<SimPredictor> predictors;
    std::vector<Eigen::VectorXd> weights;  ///< optional quadratic forms w'Mw to report
    double tolerance_se = 3.0;

    void validate() const;
};

struct PredictorReport {
    std::string name;
    PredictorKind kind = PredictorKind::BLUP;
    Eigen::MatrixXd empirical;  ///< data units^2
    Eigen::MatrixXd se;         ///< jackknife standard errors
    Eigen::MatrixXd analytic;   ///< sigma^2 x blip_mspe at delta = mu / sigma
    std::vector<double> quad_form, quad_form_se, quad_form_analytic;
    double max_abs_z = 0.0;  ///< max |empirical - analytic| / se over the entries
    bool pass = false;
};

struct SimReport {
    std::string family;
    int n = 0, r = 0;
    std::vector<int> targets;
    double mu = 0, sigma = 1;
    std::int64_t reps = 0;
    std::uint64_t seed = 0;
    double tolerance_se = 3.0;
    Eigen::VectorXd empirical_alpha;  ///< mean of the standardized order statistics Z_{1:n}..Z_{n:n}
    Eigen::VectorXd alpha_se;
    std::vector<PredictorReport> predictors;
    bool pass = false;
};

/// Runs the experiment; `analytic` supplies the moments behind the analytic
/// MSPE matrices (it must have n = plan.n).
SimReport simulate(const SimPlan& plan, const MomentSet& analytic);
/// Same, with analytic moments from the family's default engine.
SimReport simulate(const SimPlan& plan);

/// Sample moments of sorted standardized draws with standard errors.
MomentSet empirical_moments(Family family, int n, std::int64_t reps, std::uint64_t seed);
MomentSet empirical_moments(const ParentModel& model, int n, std::int64_t reps, std::uint64_t seed);

nlohmann::json report_to_json(const SimReport& report);

}  // namespace osp
