#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "osp/estimation.hpp"
#include "osp/moments.hpp"

namespace osp {

enum class PredictorKind { BLUP, BLIP, KaminskyBLIP, ScaleBLIP };

std::string to_string(PredictorKind k);
PredictorKind parse_predictor_kind(std::string_view name);

/// Linear predictors of X_{s_1:n} .. X_{s_l:n}: row k of `coeffs` is the
/// coefficient vector applied to the r observed order statistics.
struct LinearPredictor {
    PredictorKind kind = PredictorKind::BLUP;
    int n = 0;
    int r = 0;
    std::vector<int> targets;
    Eigen::MatrixXd coeffs;       ///< l x r
    std::optional<double> delta;  ///< delta = mu/sigma the rows were built with (BLIP only)
};

/// Mean squared predictive error matrix in units of sigma^2.
struct MspeMatrix {
    Eigen::MatrixXd w;
    std::optional<double> delta;  ///< delta it was evaluated at; none when delta-free
};

/// Normal equations of the BLIP at a given delta:
///   Gamma = Sigma + (alpha + delta 1)(alpha + delta 1)'
///   Delta_s = omega_s + (alpha_s + delta)(alpha + delta 1)
class GammaSystem {
public:
    GammaSystem(const MomentSlice& slice, double delta);

    double delta() const { return delta_; }
    const Eigen::MatrixXd& gamma() const { return gamma_; }
    /// Right-hand side Delta_s for the target in slice column k.
    Eigen::VectorXd rhs(int column) const;
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return chol_.solve(b); }

private:
    double delta_;
    Eigen::MatrixXd omega_;
    Eigen::VectorXd alpha_future_;
    Eigen::VectorXd shifted_alpha_;
    Eigen::MatrixXd gamma_;
    Eigen::LLT<Eigen::MatrixXd> chol_;
};

/// Best linear unbiased predictors for every slice target.
LinearPredictor blup(const MomentSlice& slice);
/// Joint BLUP MSPE matrix; delta-free.
MspeMatrix blup_mspe(const MomentSlice& slice);

/// Best linear invariant predictors a_k = Gamma^{-1} Delta_{s_k}. The same
/// rows are the marginal, joint and simultaneous BLIPs.
LinearPredictor blip(const MomentSlice& slice, double delta);

/// MSPE matrix (units of sigma^2) of arbitrary coefficient rows predicting
/// `targets` (a subset of the slice targets), evaluated at delta_eval.
MspeMatrix blip_mspe(const Eigen::MatrixXd& coeffs, const std::vector<int>& targets, const MomentSlice& slice,
                     double delta_eval);
MspeMatrix blip_mspe(const LinearPredictor& predictor, const MomentSlice& slice, double delta_eval);

/// Classical BLIP obtained by shrinking the BLUP by a multiple of sigma*.
struct KaminskyPrediction {
    int target = 0;
    double prediction = 0;
    double mspe = 0;  ///< x sigma^2
};
std::vector<KaminskyPrediction> kaminsky_blip(const MomentSlice& slice, const BlueResult& b,
                                              const CensoredSample& sample);
/// The same predictor in coefficient form: BLUP rows minus c12/(1+c22) times
/// the sigma* weights.
LinearPredictor kaminsky_predictor(const MomentSlice& slice);

/// Scale-family BLIP: (Sigma + alpha alpha')^{-1} (omega_s + alpha_s alpha).
LinearPredictor scale_blip(const MomentSlice& slice);
/// Scale-family MSPE: the location-free (delta = 0) form of the expansion.
MspeMatrix scale_mspe(const LinearPredictor& predictor, const MomentSlice& slice);

struct Predictions {
    Eigen::VectorXd value;                   ///< on the analysis scale
    std::optional<Eigen::VectorXd> original;  ///< exp(value) for log-transformed samples
};
Predictions predict(const LinearPredictor& predictor, const CensoredSample& sample);

/// w'M_rival w - w'M_opt w with both matrices evaluated at delta. Never
/// negative (beyond rounding) when `optimal` holds the BLIP rows for delta.
double dominance_gap(const LinearPredictor& optimal, const Eigen::MatrixXd& rival_coeffs, const MomentSlice& slice,
                     double delta, const Eigen::VectorXd& weights);

/// JSON export {"kind","targets","delta","coeffs","mspe","mspe_units"};
/// `scale` multiplies the MSPE entries (1 for sigma2 units).
nlohmann::json predictor_to_json(const LinearPredictor& predictor, const MspeMatrix& mspe,
                                 std::string_view units = "sigma2", double scale = 1.0);

}  // namespace osp
