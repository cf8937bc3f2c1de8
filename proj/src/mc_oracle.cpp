#include "osp/mc_oracle.hpp"

#include <algorithm>
#include <cmath>

#include "osp/error.hpp"
#include "osp/random.hpp"
#include "parallel.hpp"

namespace osp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void SimPlan::validate() const {
    if (model.family == Family::CustomQuantile) check_quantile_function(model.quantile);
    if (n < 2 || r < 1 || r >= n) throw ValidationError("simulation needs 1 <= r < n");
    if (targets.empty()) throw ValidationError("simulation needs at least one target");
    for (std::size_t k = 0; k < targets.size(); ++k) {
        if (targets[k] <= r || targets[k] > n) throw ValidationError("targets must lie in (r, n]");
        if (k > 0 && targets[k] <= targets[k - 1]) throw ValidationError("targets must be strictly increasing");
    }
    if (!(sigma > 0.0) || !std::isfinite(mu)) throw ValidationError("need finite mu and sigma > 0");
    if (reps < 10'000) throw ValidationError("simulation needs reps >= 10^4");
    if (reps > 1'000'000'000'000LL / n) throw ValidationError("reps too large");
    if (predictors.empty()) throw ValidationError("simulation needs at least one predictor");
    for (const auto& p : predictors) {
        if (p.predictor.targets != targets) throw ValidationError("predictor '" + p.name + "' targets differ from the plan");
        if (p.predictor.coeffs.cols() != r || p.predictor.n != n) throw ValidationError("predictor '" + p.name + "' shape mismatch");
    }
    for (const auto& w : weights)
        if (w.size() != static_cast<Eigen::Index>(targets.size())) throw ValidationError("weight vector length must equal the target count");
    if (!(tolerance_se > 0.0)) throw ValidationError("tolerance multiple must be positive");
}

namespace {

struct BlockSums {
    std::int64_t count = 0;
    VectorXd z_sum;
    std::vector<MatrixXd> err_cross;  // per predictor, sum of e e'
};

// Leave-one-block-out jackknife of block means: returns (estimate, se).
template <class Get>
std::pair<double, double> jackknife(const std::vector<BlockSums>& blocks, std::int64_t total, double total_sum, Get get) {
    const double G = static_cast<double>(blocks.size());
    const double est = total_sum / static_cast<double>(total);
    std::vector<double> loo(blocks.size());
    double mean = 0.0;
    for (std::size_t g = 0; g < blocks.size(); ++g) {
        loo[g] = (total_sum - get(blocks[g])) / static_cast<double>(total - blocks[g].count);
        mean += loo[g];
    }
    mean /= G;
    double ss = 0.0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    return {est, std::sqrt((G - 1.0) / G * ss)};
}

}  // namespace

SimReport simulate(const SimPlan& plan, const MomentSet& analytic) {
    plan.validate();
    if (analytic.n() != plan.n) throw ValidationError("analytic moments have the wrong n");
    const int n = plan.n, r = plan.r, l = static_cast<int>(plan.targets.size());
    const std::size_t np = plan.predictors.size();
    const std::int64_t block_count = 100;

    std::vector<BlockSums> blocks(static_cast<std::size_t>(block_count));
    detail::parallel_for(blocks.size(), [&](std::size_t b) {
        const std::int64_t lo = plan.reps * static_cast<std::int64_t>(b) / block_count;
        const std::int64_t hi = plan.reps * static_cast<std::int64_t>(b + 1) / block_count;
        BlockSums& blk = blocks[b];
        blk.count = hi - lo;
        blk.z_sum = VectorXd::Zero(n);
        blk.err_cross.assign(np, MatrixXd::Zero(l, l));
        VectorXd z(n), truth(l), err(l);
        for (std::int64_t rep = lo; rep < hi; ++rep) {
            ReplicationStream rng(plan.seed, static_cast<std::uint64_t>(rep));
            for (int i = 0; i < n; ++i) {
                const double u = rng.uniform();
                z[i] = detail::quantile_pq(plan.model, u, 1.0 - u);
            }
            std::sort(z.data(), z.data() + n);
            blk.z_sum += z;
            const VectorXd x = VectorXd::Constant(n, plan.mu) + plan.sigma * z;
            for (int k = 0; k < l; ++k) truth[k] = x[plan.targets[k] - 1];
            for (std::size_t p = 0; p < np; ++p) {
                err.noalias() = plan.predictors[p].predictor.coeffs * x.head(r) - truth;
                blk.err_cross[p].noalias() += err * err.transpose();
            }
        }
    });

    std::int64_t total = 0;
    VectorXd z_total = VectorXd::Zero(n);
    std::vector<MatrixXd> cross_total(np, MatrixXd::Zero(l, l));
    for (const auto& blk : blocks) {
        total += blk.count;
        z_total += blk.z_sum;
        for (std::size_t p = 0; p < np; ++p) cross_total[p] += blk.err_cross[p];
    }

    SimReport rep;
    rep.family = to_string(plan.model.family);
    rep.n = n;
    rep.r = r;
    rep.targets = plan.targets;
    rep.mu = plan.mu;
    rep.sigma = plan.sigma;
    rep.reps = plan.reps;
    rep.seed = plan.seed;
    rep.tolerance_se = plan.tolerance_se;
    rep.empirical_alpha.resize(n);
    rep.alpha_se.resize(n);
    for (int i = 0; i < n; ++i) {
        const auto [est, se] = jackknife(blocks, total, z_total[i], [i](const BlockSums& b) { return b.z_sum[i]; });
        rep.empirical_alpha[i] = est;
        rep.alpha_se[i] = se;
    }

    const MomentSlice slice = slice_moments(analytic, r, plan.targets);
    const double delta = plan.mu / plan.sigma;
    const double s2 = plan.sigma * plan.sigma;
    rep.pass = true;
    for (std::size_t p = 0; p < np; ++p) {
        PredictorReport pr;
        pr.name = plan.predictors[p].name;
        pr.kind = plan.predictors[p].predictor.kind;
        pr.empirical.resize(l, l);
        pr.se.resize(l, l);
        for (int i = 0; i < l; ++i) {
            for (int j = 0; j < l; ++j) {
                const auto [est, se] = jackknife(blocks, total, cross_total[p](i, j),
                                                 [p, i, j](const BlockSums& b) { return b.err_cross[p](i, j); });
                pr.empirical(i, j) = est;
                pr.se(i, j) = se;
            }
        }
        pr.analytic = s2 * blip_mspe(plan.predictors[p].predictor.coeffs, plan.targets, slice, delta).w;
        for (const auto& w : plan.weights) {
            const double total_q = w.dot(cross_total[p] * w);
            const auto [est, se] = jackknife(blocks, total, total_q,
                                             [&w, p](const BlockSums& b) { return w.dot(b.err_cross[p] * w); });
            pr.quad_form.push_back(est);
            pr.quad_form_se.push_back(se);
            pr.quad_form_analytic.push_back(w.dot(pr.analytic * w));
        }
        pr.pass = true;
        for (int i = 0; i < l; ++i) {
            for (int j = 0; j < l; ++j) {
                if (!(pr.se(i, j) > 0.0)) throw NumericalError("non-positive Monte Carlo standard error");
                const double z = std::abs(pr.empirical(i, j) - pr.analytic(i, j)) / pr.se(i, j);
                pr.max_abs_z = std::max(pr.max_abs_z, z);
                if (z > plan.tolerance_se) pr.pass = false;
            }
        }
        rep.pass = rep.pass && pr.pass;
        rep.predictors.push_back(std::move(pr));
    }
    return rep;
}

SimReport simulate(const SimPlan& plan) {
    if (plan.model.family == Family::CustomQuantile) {
        ParentModel m = plan.model;
        m.method = MomentMethod::Quadrature;
        return simulate(plan, compute_moments(m, plan.n));
    }
    return simulate(plan, compute_moments(default_model(plan.model.family), plan.n));
}

MomentSet empirical_moments(const ParentModel& model, int n, std::int64_t reps, std::uint64_t seed) {
    return detail::monte_carlo_moments(model, n, reps, seed);
}

MomentSet empirical_moments(Family family, int n, std::int64_t reps, std::uint64_t seed) {
    ParentModel m;
    m.family = family;
    m.method = MomentMethod::MonteCarlo;
    return empirical_moments(m, n, reps, seed);
}

namespace {

nlohmann::json matrix_json(const MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

nlohmann::json report_to_json(const SimReport& report) {
    nlohmann::json j;
    j["family"] = report.family;
    j["n"] = report.n;
    j["r"] = report.r;
    j["targets"] = report.targets;
    j["mu"] = report.mu;
    j["sigma"] = report.sigma;
    j["reps"] = report.reps;
    j["seed"] = report.seed;
    j["tolerance_se"] = report.tolerance_se;
    j["empirical_alpha"] = std::vector<double>(report.empirical_alpha.data(), report.empirical_alpha.data() + report.empirical_alpha.size());
    j["alpha_se"] = std::vector<double>(report.alpha_se.data(), report.alpha_se.data() + report.alpha_se.size());
    nlohmann::json preds = nlohmann::json::array();
    for (const auto& p : report.predictors) {
        nlohmann::json e;
        e["name"] = p.name;
        e["kind"] = to_string(p.kind);
        e["empirical_mspe"] = matrix_json(p.empirical);
        e["standard_error"] = matrix_json(p.se);
        e["analytic_mspe"] = matrix_json(p.analytic);
        e["max_abs_z"] = p.max_abs_z;
        if (!p.quad_form.empty()) {
            e["quad_form"] = p.quad_form;
            e["quad_form_se"] = p.quad_form_se;
            e["quad_form_analytic"] = p.quad_form_analytic;
        }
        e["verdict"] = p.pass ? "PASS" : "FAIL";
        preds.push_back(std::move(e));
    }
    j["predictors"] = std::move(preds);
    j["verdict"] = report.pass ? "PASS" : "FAIL";
    j["mspe_units"] = "data";
    return j;
}

}  // namespace osp
