#include "osp/moments.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>
#include <json.hpp>

#include "osp/error.hpp"
#include "osp/quadrature.hpp"
#include "osp/random.hpp"
#include "parallel.hpp"

namespace osp {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

std::string to_string(MomentMethod m) {
    switch (m) {
        case MomentMethod::ClosedForm: return "closed-form";
        case MomentMethod::Quadrature: return "quadrature";
        case MomentMethod::MonteCarlo: return "monte-carlo";
    }
    return "unknown";
}

MomentMethod parse_method(std::string_view name) {
    if (name == "closed-form") return MomentMethod::ClosedForm;
    if (name == "quadrature") return MomentMethod::Quadrature;
    if (name == "monte-carlo") return MomentMethod::MonteCarlo;
    throw ValidationError("unknown moment method '" + std::string(name) + "'");
}

void ParentModel::validate() const {
    if (method == MomentMethod::ClosedForm && family != Family::Exponential && family != Family::Uniform)
        throw ValidationError("closed-form moments are only available for exponential and uniform, not " +
                              to_string(family));
    if (family == Family::CustomQuantile) check_quantile_function(quantile);
    if (method == MomentMethod::Quadrature && !(quad_rel_tol > 0.0 && quad_rel_tol < 1e-2))
        throw ValidationError("quadrature tolerance must lie in (0, 1e-2)");
    if (method == MomentMethod::MonteCarlo && mc_reps < 2)
        throw ValidationError("Monte Carlo moments need at least 2 replications");
}

ParentModel default_model(Family family) {
    ParentModel m;
    m.family = family;
    m.method = (family == Family::Exponential || family == Family::Uniform) ? MomentMethod::ClosedForm
                                                                            : MomentMethod::Quadrature;
    return m;
}

// ---------------------------------------------------------------------------
// MomentSet

MomentSet::MomentSet(VectorXd alpha, MatrixXd sigma, Provenance provenance)
    : alpha_(std::move(alpha)), sigma_(std::move(sigma)), provenance_(std::move(provenance)) {
    const Eigen::Index n = alpha_.size();
    if (n < 1) throw ValidationError("invariant violation: moment set needs n >= 1");
    if (sigma_.rows() != n || sigma_.cols() != n)
        throw ValidationError("invariant violation: sigma must be " + std::to_string(n) + "x" + std::to_string(n));
    if (!alpha_.allFinite() || !sigma_.allFinite())
        throw ValidationError("invariant violation: non-finite moments");
    for (Eigen::Index i = 1; i < n; ++i)
        if (!(alpha_[i] > alpha_[i - 1]))
            throw ValidationError("invariant violation: alpha not strictly increasing at i = " + std::to_string(i + 1));

    const bool monte_carlo = provenance_.method == MomentMethod::MonteCarlo;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double a = sigma_(i, j), b = sigma_(j, i);
            if (std::abs(a - b) > 1e-12 * std::max(std::abs(a), std::abs(b)))
                throw ValidationError("invariant violation: sigma is not symmetric at (" + std::to_string(i + 1) +
                                      "," + std::to_string(j + 1) + ")");
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            if (!(sigma_(i, j) > 0.0)) {
                const std::string msg = "sigma(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ") <= 0";
                if (!monte_carlo) throw ValidationError("invariant violation: " + msg);
                warnings_.push_back(msg);
            }
        }
    }
    Eigen::LLT<MatrixXd> llt(sigma_);
    if (llt.info() != Eigen::Success)
        throw ValidationError("invariant violation: sigma is not positive definite");

    // Covariances should decay away from the diagonal along each row.
    int decay_violations = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = i + 1; k < n; ++k)
            if (sigma_(i, k) > sigma_(i, k - 1) * (1.0 + 1e-10)) ++decay_violations;
    if (decay_violations > 0)
        warnings_.push_back(std::to_string(decay_violations) + " covariance row entries increase away from the diagonal");
}

int MomentSlice::column_of(int s) const {
    for (int k = 0; k < size(); ++k)
        if (targets[k] == s) return k;
    throw ValidationError("order statistic " + std::to_string(s) + " is not a target of this slice");
}

// ---------------------------------------------------------------------------
// Engines

namespace {

MomentSet closed_form_moments(const ParentModel& model, int n) {
    VectorXd alpha(n);
    MatrixXd sigma(n, n);
    if (model.family == Family::Exponential) {
        // Exponential spacings: Z_{i:n} = sum_{k<=i} E_k / (n - k + 1).
        VectorXd mean_part(n), var_part(n);
        double m = 0.0, v = 0.0;
        for (int k = 1; k <= n; ++k) {
            const double w = 1.0 / (n - k + 1);
            m += w;
            v += w * w;
            mean_part[k - 1] = m;
            var_part[k - 1] = v;
        }
        alpha = mean_part;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) sigma(i, j) = var_part[std::min(i, j)];
    } else {
        const double np1 = n + 1.0;
        const double denom = np1 * np1 * (n + 2.0);
        for (int i = 1; i <= n; ++i) {
            alpha[i - 1] = i / np1;
            for (int j = 1; j <= n; ++j) {
                const int lo = std::min(i, j), hi = std::max(i, j);
                sigma(i - 1, j - 1) = lo * (n - hi + 1.0) / denom;
            }
        }
    }
    Provenance prov;
    prov.family = model.family;
    prov.method = MomentMethod::ClosedForm;
    return MomentSet(std::move(alpha), std::move(sigma), std::move(prov));
}

double log_beta_weight(double log_coef, int a, int b, double u) {
    // log(coef * u^a * (1-u)^b)
    double v = log_coef;
    if (a > 0) v += a * std::log(u);
    if (b > 0) v += b * std::log1p(-u);
    return v;
}

}  // namespace

namespace detail {

double quantile_pq(const ParentModel& model, double p, double q) {
    if (!(p > 0.0) || !(q > 0.0))
        throw NumericalError("quantile requested at the edge of (0, 1); the quadrature tolerance is too tight");
    switch (model.family) {
        case Family::Exponential: return -std::log(q);
        case Family::Uniform: return p;
        case Family::Normal:
            return p < 0.5 ? -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p)
                           : std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
        case Family::Gumbel: return p < 0.5 ? -std::log(-std::log(p)) : -std::log(-std::log1p(-q));
        case Family::CustomQuantile: return model.quantile(p);
    }
    return NAN;
}

MomentSet quadrature_moments(const ParentModel& model, int n) {
    if (n < 1 || n > 200) throw ValidationError("quadrature moments require 1 <= n <= 200, got " + std::to_string(n));
    model.validate();
    const double tol = model.quad_rel_tol / 20.0;
    const quad::Options opts{tol, 0.0, 4000};
    const double lg_n1 = std::lgamma(n + 1.0);

    auto Q = [&model](double p) { return quantile_pq(model, p, 1.0 - p); };
    auto fail = [](const std::string& what) {
        throw NumericalError("quadrature did not converge for " + what);
    };

    // Means and variances: single integrals against the Beta(i, n-i+1) density.
    VectorXd alpha(n), var(n);
    detail::parallel_for(static_cast<std::size_t>(n), [&](std::size_t k) {
        const int i = static_cast<int>(k) + 1;
        const double lc = lg_n1 - std::lgamma(i) - std::lgamma(n - i + 1.0);
        auto mean_f = [&](double u) { return Q(u) * std::exp(log_beta_weight(lc, i - 1, n - i, u)); };
        const auto m = quad::integrate(mean_f, 0.0, 1.0, opts);
        if (!m.converged) fail("alpha_" + std::to_string(i));
        auto var_f = [&](double u) {
            const double d = Q(u) - m.value;
            return d * d * std::exp(log_beta_weight(lc, i - 1, n - i, u));
        };
        const auto v = quad::integrate(var_f, 0.0, 1.0, opts);
        if (!v.converged) fail("sigma_" + std::to_string(i) + std::to_string(i));
        alpha[i - 1] = m.value;
        var[i - 1] = v.value;
    });

    // Covariances: with v = u + (1-u) t the triangle u < v maps onto the unit
    // square and the inner integral carries (1-u)^{n-i}.
    std::vector<std::pair<int, int>> pairs;
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j) pairs.emplace_back(i, j);
    std::vector<double> cov(pairs.size());
    detail::parallel_for(pairs.size(), [&](std::size_t k) {
        const auto [i, j] = pairs[k];
        const double lc = lg_n1 - std::lgamma(i) - std::lgamma(j - i) - std::lgamma(n - j + 1.0);
        const double ai = alpha[i - 1], aj = alpha[j - 1];
        bool inner_ok = true;
        auto outer = [&](double u) {
            const double one_minus_u = 1.0 - u;
            auto inner_f = [&](double t) {
                const double p = u + one_minus_u * t;
                const double q = one_minus_u * (1.0 - t);
                double w = 1.0;
                if (j - i - 1 > 0) w *= std::pow(t, j - i - 1);
                if (n - j > 0) w *= std::pow(1.0 - t, n - j);
                return (quantile_pq(model, p, q) - aj) * w;
            };
            const auto in = quad::integrate(inner_f, 0.0, 1.0, opts);
            if (!in.converged) inner_ok = false;
            return (Q(u) - ai) * std::exp(log_beta_weight(lc, i - 1, n - i, u)) * in.value;
        };
        const auto out = quad::integrate(outer, 0.0, 1.0, opts);
        if (!out.converged || !inner_ok) fail("sigma_" + std::to_string(i) + "," + std::to_string(j));
        cov[k] = out.value;
    });

    MatrixXd sigma(n, n);
    for (int i = 0; i < n; ++i) sigma(i, i) = var[i];
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto [i, j] = pairs[k];
        sigma(i - 1, j - 1) = sigma(j - 1, i - 1) = cov[k];
    }
    if (!alpha.allFinite() || !sigma.allFinite()) throw NumericalError("quadrature produced non-finite moments");
    Provenance prov;
    prov.family = model.family;
    prov.method = MomentMethod::Quadrature;
    prov.tolerance = model.quad_rel_tol;
    return MomentSet(std::move(alpha), std::move(sigma), std::move(prov));
}

MomentSet monte_carlo_moments(const ParentModel& model, int n, std::int64_t reps, std::uint64_t seed) {
    if (n < 1) throw ValidationError("Monte Carlo moments require n >= 1");
    if (reps < 2) throw ValidationError("Monte Carlo moments need at least 2 replications (standard errors undefined)");
    if (model.family == Family::CustomQuantile) check_quantile_function(model.quantile);

    // Fixed block partition of the replication range; block sums are merged
    // in block order, so the result is independent of the thread count.
    const std::int64_t blocks = std::min<std::int64_t>(100, reps);
    struct Block {
        std::int64_t count = 0;
        VectorXd sum;
        MatrixXd cross;
    };
    std::vector<Block> parts(static_cast<std::size_t>(blocks));
    detail::parallel_for(parts.size(), [&](std::size_t b) {
        const std::int64_t lo = reps * static_cast<std::int64_t>(b) / blocks;
        const std::int64_t hi = reps * static_cast<std::int64_t>(b + 1) / blocks;
        Block& blk = parts[b];
        blk.count = hi - lo;
        blk.sum = VectorXd::Zero(n);
        blk.cross = MatrixXd::Zero(n, n);
        std::vector<double> z(static_cast<std::size_t>(n));
        for (std::int64_t rep = lo; rep < hi; ++rep) {
            ReplicationStream rng(seed, static_cast<std::uint64_t>(rep));
            for (auto& v : z) {
                const double u = rng.uniform();
                v = quantile_pq(model, u, 1.0 - u);
            }
            std::sort(z.begin(), z.end());
            const Eigen::Map<const VectorXd> zv(z.data(), n);
            blk.sum += zv;
            blk.cross.selfadjointView<Eigen::Upper>().rankUpdate(zv);
        }
        blk.cross = blk.cross.selfadjointView<Eigen::Upper>();
    });

    VectorXd sum = VectorXd::Zero(n);
    MatrixXd cross = MatrixXd::Zero(n, n);
    for (const auto& blk : parts) {
        sum += blk.sum;
        cross += blk.cross;
    }
    auto estimate = [n](std::int64_t count, const VectorXd& s, const MatrixXd& c) {
        const double N = static_cast<double>(count);
        VectorXd mean = s / N;
        MatrixXd cov = (c - N * mean * mean.transpose()) / (N - 1.0);
        (void)n;
        return std::pair{mean, cov};
    };
    auto [alpha, sigma] = estimate(reps, sum, cross);

    // Leave-one-block-out jackknife.
    VectorXd alpha_se = VectorXd::Zero(n);
    MatrixXd sigma_se = MatrixXd::Zero(n, n);
    if (blocks >= 2 && reps - parts[0].count >= 2) {
        std::vector<std::pair<VectorXd, MatrixXd>> loo;
        VectorXd mean_a = VectorXd::Zero(n);
        MatrixXd mean_s = MatrixXd::Zero(n, n);
        for (const auto& blk : parts) {
            loo.push_back(estimate(reps - blk.count, sum - blk.sum, cross - blk.cross));
            mean_a += loo.back().first;
            mean_s += loo.back().second;
        }
        const double G = static_cast<double>(blocks);
        mean_a /= G;
        mean_s /= G;
        for (const auto& [a, s] : loo) {
            alpha_se += (a - mean_a).cwiseAbs2();
            sigma_se += (s - mean_s).cwiseAbs2();
        }
        alpha_se = (alpha_se * ((G - 1.0) / G)).cwiseSqrt();
        sigma_se = (sigma_se * ((G - 1.0) / G)).cwiseSqrt();
    } else {
        alpha_se.setConstant(INFINITY);
        sigma_se.setConstant(INFINITY);
    }

    MatrixXd sym = 0.5 * (sigma + sigma.transpose());
    double nudge = 0.0;
    if (Eigen::LLT<MatrixXd>(sym).info() != Eigen::Success) {
        const double eps0 = 1e-10 * sym.trace() / n;
        bool ok = false;
        for (int doubling = 0; doubling <= 3 && !ok; ++doubling) {
            nudge = eps0 * std::ldexp(1.0, doubling);
            ok = Eigen::LLT<MatrixXd>(sym + nudge * MatrixXd::Identity(n, n)).info() == Eigen::Success;
        }
        if (!ok) throw NumericalError("Monte Carlo covariance is not positive definite after diagonal nudging");
        sym += nudge * MatrixXd::Identity(n, n);
    }

    Provenance prov;
    prov.family = model.family;
    prov.method = MomentMethod::MonteCarlo;
    prov.seed = seed;
    prov.reps = reps;
    prov.pd_nudge = nudge;
    prov.alpha_se = alpha_se;
    prov.sigma_se = sigma_se;
    return MomentSet(std::move(alpha), std::move(sym), std::move(prov));
}

}  // namespace detail

MomentSet compute_moments(const ParentModel& model, int n) {
    model.validate();
    switch (model.method) {
        case MomentMethod::ClosedForm:
            if (n < 1) throw ValidationError("n must be >= 1");
            return closed_form_moments(model, n);
        case MomentMethod::Quadrature: return detail::quadrature_moments(model, n);
        case MomentMethod::MonteCarlo: return detail::monte_carlo_moments(model, n, model.mc_reps, model.mc_seed);
    }
    throw ValidationError("unsupported moment method");
}

MomentSlice slice_moments(const MomentSet& ms, int r, const std::vector<int>& targets) {
    const int n = ms.n();
    if (r < 1 || r >= n + (targets.empty() ? 1 : 0))
        throw ValidationError("censoring index r = " + std::to_string(r) + " out of range for n = " + std::to_string(n));
    for (std::size_t k = 0; k < targets.size(); ++k) {
        if (targets[k] <= r || targets[k] > n)
            throw ValidationError("target " + std::to_string(targets[k]) + " must satisfy r < s <= n");
        if (k > 0 && targets[k] <= targets[k - 1])
            throw ValidationError("targets must be strictly increasing (duplicates are rejected)");
    }
    MomentSlice sl;
    sl.n = n;
    sl.r = r;
    sl.targets = targets;
    sl.family = ms.provenance().family;
    sl.method = ms.provenance().method;
    sl.alpha_obs = ms.alpha().head(r);
    sl.sigma_obs = ms.sigma().topLeftCorner(r, r);
    const int l = static_cast<int>(targets.size());
    sl.omega.resize(r, l);
    sl.omega_ff.resize(l, l);
    sl.alpha_future.resize(l);
    for (int k = 0; k < l; ++k) {
        const int s = targets[k] - 1;
        sl.omega.col(k) = ms.sigma().col(s).head(r);
        sl.alpha_future[k] = ms.alpha()[s];
        for (int m = 0; m < l; ++m) sl.omega_ff(k, m) = ms.sigma()(s, targets[m] - 1);
    }
    return sl;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

json vector_json(const VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json matrix_json(const MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

VectorXd vector_from(const json& j, std::size_t n, const char* what) {
    if (!j.is_array() || j.size() != n) throw ValidationError(std::string("malformed moment file: ") + what + " must have length n");
    VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (!j[i].is_number()) throw ValidationError(std::string("malformed moment file: non-numeric ") + what);
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

MatrixXd matrix_from(const json& j, std::size_t n, const char* what) {
    if (!j.is_array() || j.size() != n) throw ValidationError(std::string("malformed moment file: ") + what + " must have n rows");
    MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) m.row(static_cast<Eigen::Index>(i)) = vector_from(j[i], n, what).transpose();
    return m;
}

}  // namespace

std::string moments_to_json(const MomentSet& ms) {
    const auto& p = ms.provenance();
    json j;
    j["n"] = ms.n();
    j["family"] = to_string(p.family);
    j["method"] = to_string(p.method);
    j["tolerance"] = p.tolerance;
    j["seed"] = p.seed ? json(*p.seed) : json(nullptr);
    j["alpha"] = vector_json(ms.alpha());
    j["sigma"] = matrix_json(ms.sigma());
    if (p.reps) j["reps"] = *p.reps;
    if (p.pd_nudge != 0.0) j["pd_nudge"] = p.pd_nudge;
    if (p.alpha_se) j["alpha_se"] = vector_json(*p.alpha_se);
    if (p.sigma_se) j["sigma_se"] = matrix_json(*p.sigma_se);
    return j.dump(1);
}

MomentSet moments_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed moment file: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("malformed moment file: expected a JSON object");
    for (const char* key : {"n", "family", "method", "tolerance", "alpha", "sigma"})
        if (!j.contains(key)) throw ValidationError(std::string("malformed moment file: missing '") + key + "'");
    if (!j["n"].is_number_integer()) throw ValidationError("malformed moment file: n must be an integer");
    const auto n = j["n"].get<std::int64_t>();
    if (n < 1) throw ValidationError("invariant violation: n must be >= 1");
    const auto un = static_cast<std::size_t>(n);

    Provenance p;
    p.family = parse_family(j["family"].get<std::string>());
    p.method = parse_method(j["method"].get<std::string>());
    p.tolerance = j["tolerance"].get<double>();
    if (j.contains("seed") && !j["seed"].is_null()) p.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("reps")) p.reps = j["reps"].get<std::int64_t>();
    if (j.contains("pd_nudge")) p.pd_nudge = j["pd_nudge"].get<double>();
    if (j.contains("alpha_se")) p.alpha_se = vector_from(j["alpha_se"], un, "alpha_se");
    if (j.contains("sigma_se")) p.sigma_se = matrix_from(j["sigma_se"], un, "sigma_se");
    return MomentSet(vector_from(j["alpha"], un, "alpha"), matrix_from(j["sigma"], un, "sigma"), std::move(p));
}

void save_moments(const MomentSet& ms, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write moment file " + path.string());
    out << moments_to_json(ms) << '\n';
    if (!out) throw ValidationError("failed writing moment file " + path.string());
}

MomentSet load_moments(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read moment file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return moments_from_json(buf.str());
}

}  // namespace osp
