#include "osp/efficiency.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "osp/error.hpp"
#include "parallel.hpp"

namespace osp {

using Eigen::MatrixXd;

std::string to_string(EfficiencyKind k) {
    switch (k) {
        case EfficiencyKind::RE1: return "re1";
        case EfficiencyKind::D: return "d";
        case EfficiencyKind::Trace: return "trace";
    }
    return "unknown";
}

EfficiencyKind parse_efficiency_kind(std::string_view name) {
    if (name == "re1" || name == "RE1") return EfficiencyKind::RE1;
    if (name == "d" || name == "D") return EfficiencyKind::D;
    if (name == "trace" || name == "Trace") return EfficiencyKind::Trace;
    throw ValidationError("unknown efficiency kind '" + std::string(name) + "'");
}

void EfficiencySpec::validate() const {
    const std::size_t want = kind == EfficiencyKind::RE1 ? 1 : 2;
    if (targets.size() != want)
        throw ValidationError(to_string(kind) + " efficiency needs exactly " + std::to_string(want) + " target(s)");
    if (want == 2 && targets[0] == targets[1]) throw ValidationError("the two targets must be distinct");
    for (int s : targets)
        if (s <= r || s > n) throw ValidationError("targets must lie in (r, n]");
}

namespace {

std::vector<int> sorted_targets(std::vector<int> t) {
    std::sort(t.begin(), t.end());
    return t;
}

}  // namespace

EfficiencyEvaluator::EfficiencyEvaluator(EfficiencySpec spec, const MomentSet& moments)
    : spec_(std::move(spec)) {
    spec_.validate();
    if (moments.n() != spec_.n) throw ValidationError("moment set n does not match the efficiency spec");
    slice_ = slice_moments(moments, spec_.r, sorted_targets(spec_.targets));
    blup_ = blup(slice_);
    blup_mspe_ = blup_mspe(slice_);
    blup_criterion_ = criterion(blup_mspe_.w);
    if (!(blup_criterion_ > 0.0)) throw NumericalError("degenerate BLUP MSPE matrix");
}

double EfficiencyEvaluator::criterion(const MatrixXd& w) const {
    switch (spec_.kind) {
        case EfficiencyKind::RE1: return w(0, 0);
        case EfficiencyKind::D: return w(0, 0) * w(1, 1) - w(0, 1) * w(1, 0);
        case EfficiencyKind::Trace: return w.trace();
    }
    return NAN;
}

double EfficiencyEvaluator::plugin(double build_delta, double eval_delta) const {
    if (build_delta == 0.0 || eval_delta == 0.0) throw ValidationError("efficiency is defined for delta != 0");
    const LinearPredictor p = blip(slice_, build_delta);
    return criterion(blip_mspe(p, slice_, eval_delta).w) / blup_criterion_;
}

double EfficiencyEvaluator::at(double delta) const { return plugin(delta, delta); }

double EfficiencyEvaluator::blup_against_itself(double delta) const {
    if (delta == 0.0) throw ValidationError("efficiency is defined for delta != 0");
    return criterion(blip_mspe(blup_, slice_, delta).w) / criterion(blip_mspe(blup_, slice_, delta).w);
}

double efficiency_at(const EfficiencySpec& spec, double delta) {
    spec.validate();
    return EfficiencyEvaluator(spec, compute_moments(spec.model, spec.n)).at(delta);
}

std::vector<double> log_grid(double lo, double hi, int points) {
    if (!(lo > 0.0 && hi > lo) || points < 2) throw ValidationError("log grid needs 0 < lo < hi and >= 2 points");
    std::vector<double> g(static_cast<std::size_t>(points));
    const double a = std::log(lo), b = std::log(hi);
    for (int k = 0; k < points; ++k) g[k] = std::exp(a + (b - a) * k / (points - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

std::vector<double> linear_grid(double lo, double step, double hi) {
    if (!(step > 0.0) || !(hi >= lo)) throw ValidationError("grid needs step > 0 and hi >= lo");
    std::vector<double> g;
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 0.5));
    for (long k = 0; k <= count; ++k) g.push_back(lo + step * static_cast<double>(k));
    return g;
}

DeltaStar find_delta_star(const EfficiencyFn& eff, double lo, double hi) {
    if (!(lo > 0.0 && hi > lo)) throw ValidationError("search interval must satisfy 0 < lo < hi");
    constexpr int kScan = 512;
    const auto grid = log_grid(lo, hi, kScan);
    std::vector<double> vals(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) vals[k] = eff(grid[k]);
    const auto best = static_cast<std::size_t>(std::max_element(vals.begin(), vals.end()) - vals.begin());
    if (best == 0 || best + 1 == grid.size()) return {grid[best], vals[best], true};

    // Golden-section search on the bracketing grid cells.
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = grid[best - 1], b = grid[best + 1];
    double c = b - ratio * (b - a), d = a + ratio * (b - a);
    double fc = eff(c), fd = eff(d);
    while (b - a > 1e-10 * std::max(1.0, b)) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = eff(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = eff(d);
        }
    }
    const double x = 0.5 * (a + b);
    double fx = eff(x);
    if (vals[best] > fx) return {grid[best], vals[best], false};
    return {x, fx, false};
}

double iem(const EfficiencyFn& eff, double delta_max, int points) {
    if (!(delta_max > 0.0) || !std::isfinite(delta_max)) throw ValidationError("delta_max must be positive");
    if (points < 2) throw ValidationError("iem needs at least 2 grid points");
    const double h = delta_max / (points - 1);
    // eff is undefined at 0; use its value at delta_max / points instead.
    double sum = 0.5 * eff(delta_max / points) + 0.5 * eff(delta_max);
    for (int k = 1; k < points - 1; ++k) sum += eff(h * k);
    return sum / (points - 1);
}

std::vector<double> crossings(const EfficiencyFn& eff, double lo, double hi, int scan_points) {
    const auto grid = log_grid(lo, hi, scan_points);
    std::vector<double> g(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) g[k] = eff(grid[k]) - 1.0;
    std::vector<double> roots;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        if (!(g[k] * g[k + 1] < 0.0)) continue;
        double a = grid[k], b = grid[k + 1], ga = g[k];
        while (b - a > 1e-7) {
            const double m = 0.5 * (a + b);
            const double gm = eff(m) - 1.0;
            if (gm == 0.0) {
                a = b = m;
                break;
            }
            if ((gm < 0.0) == (ga < 0.0)) {
                a = m;
                ga = gm;
            } else {
                b = m;
            }
        }
        roots.push_back(0.5 * (a + b));
    }
    return roots;
}

EfficiencyCurve curve(const EfficiencyEvaluator& evaluator, std::vector<double> delta_grid) {
    if (delta_grid.empty()) throw ValidationError("empty delta grid");
    for (std::size_t k = 0; k < delta_grid.size(); ++k) {
        if (!(delta_grid[k] > 0.0)) throw ValidationError("delta grid values must be > 0");
        if (k > 0 && !(delta_grid[k] > delta_grid[k - 1])) throw ValidationError("delta grid must be strictly increasing");
    }
    EfficiencyCurve c{std::move(delta_grid), {}, evaluator.spec()};
    c.values.resize(c.delta_grid.size());
    detail::parallel_for(c.delta_grid.size(), [&](std::size_t k) { c.values[k] = evaluator.at(c.delta_grid[k]); });
    for (double v : c.values)
        if (!(std::isfinite(v) && v > 0.0)) throw NumericalError("efficiency curve produced a non-positive value");
    return c;
}

std::string curve_csv_rows(const EfficiencyCurve& c) {
    std::string targets;
    for (std::size_t k = 0; k < c.spec.targets.size(); ++k) {
        if (k > 0) targets += ';';
        targets += std::to_string(c.spec.targets[k]);
    }
    std::string out;
    char buf[128];
    for (std::size_t k = 0; k < c.values.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,", c.delta_grid[k], c.values[k]);
        out += buf;
        out += to_string(c.spec.kind) + ',' + std::to_string(c.spec.n) + ',' + std::to_string(c.spec.r) + ',' + targets + '\n';
    }
    return out;
}

}  // namespace osp
