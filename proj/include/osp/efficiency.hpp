#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "osp/moments.hpp"
#include "osp/prediction.hpp"

namespace osp {

enum class EfficiencyKind { RE1, D, Trace };

std::string to_string(EfficiencyKind k);
EfficiencyKind parse_efficiency_kind(std::string_view name);

/// RE1 compares a single target; D and Trace compare a pair s < t.
struct EfficiencySpec {
    EfficiencyKind kind = EfficiencyKind::RE1;
    int n = 0;
    int r = 0;
    std::vector<int> targets;
    ParentModel model;

    void validate() const;
};

/// Efficiency of the BLIP relative to the BLUP as a function of delta.
/// Ratios are BLIP over BLUP, so values below 1 favour the BLIP.
class EfficiencyEvaluator {
public:
    EfficiencyEvaluator(EfficiencySpec spec, const MomentSet& moments);

    /// BLIP built and assessed at the same delta.
    double at(double delta) const;
    /// BLIP built at build_delta (e.g. a plug-in estimate), assessed at eval_delta.
    double plugin(double build_delta, double eval_delta) const;
    /// Debug route: the BLUP rows stand in for the BLIP, so the ratio is 1.
    double blup_against_itself(double delta) const;

    const EfficiencySpec& spec() const { return spec_; }
    const MomentSlice& slice() const { return slice_; }
    const MspeMatrix& blup_reference() const { return blup_mspe_; }
    /// The criterion (single MSPE, determinant or trace) applied to an MSPE matrix.
    double criterion(const Eigen::MatrixXd& w) const;

private:
    EfficiencySpec spec_;
    MomentSlice slice_;
    LinearPredictor blup_;
    MspeMatrix blup_mspe_;
    double blup_criterion_;
};

/// Convenience form that computes the moments from spec.model.
double efficiency_at(const EfficiencySpec& spec, double delta);

using EfficiencyFn = std::function<double(double)>;

struct DeltaStar {
    double delta = 0;
    double value = 0;
    bool at_boundary = false;  ///< the grid maximum sits on an interval end
};

/// Maximizer over [lo, hi]: 512-point log-spaced scan, then golden-section refinement.
DeltaStar find_delta_star(const EfficiencyFn& eff, double lo, double hi);

/// Average of eff over (0, delta_max) by the composite trapezoid rule on
/// `points` equally spaced nodes; the node at 0 takes the value at delta_max / points.
double iem(const EfficiencyFn& eff, double delta_max, int points = 4096);

/// Points in [lo, hi] where eff - 1 changes sign, located on a log-spaced
/// scan and refined by bisection to 1e-6.
std::vector<double> crossings(const EfficiencyFn& eff, double lo, double hi, int scan_points = 2048);

struct EfficiencyCurve {
    std::vector<double> delta_grid;
    std::vector<double> values;
    EfficiencySpec spec;
};

EfficiencyCurve curve(const EfficiencyEvaluator& evaluator, std::vector<double> delta_grid);

/// Grid lo, lo + step, ..., up to hi (inclusive within half a step).
std::vector<double> linear_grid(double lo, double step, double hi);
std::vector<double> log_grid(double lo, double hi, int points);

inline constexpr std::string_view kCurveCsvHeader = "delta,value,kind,n,r,targets";
/// Curve rows (no header) with 12 significant digits; targets joined by ';'.
std::string curve_csv_rows(const EfficiencyCurve& c);

}  // namespace osp
