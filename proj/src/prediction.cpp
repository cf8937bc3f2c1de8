#include "osp/prediction.hpp"

#include <cmath>

#include "osp/error.hpp"

namespace osp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(PredictorKind k) {
    switch (k) {
        case PredictorKind::BLUP: return "blup";
        case PredictorKind::BLIP: return "blip";
        case PredictorKind::KaminskyBLIP: return "kaminsky-blip";
        case PredictorKind::ScaleBLIP: return "scale-blip";
    }
    return "unknown";
}

PredictorKind parse_predictor_kind(std::string_view name) {
    if (name == "blup") return PredictorKind::BLUP;
    if (name == "blip") return PredictorKind::BLIP;
    if (name == "kaminsky-blip" || name == "kaminsky") return PredictorKind::KaminskyBLIP;
    if (name == "scale-blip") return PredictorKind::ScaleBLIP;
    throw ValidationError("unknown predictor '" + std::string(name) + "'");
}

namespace {

void require_targets(const MomentSlice& slice) {
    if (slice.targets.empty()) throw ValidationError("the moment slice has no target order statistics");
}

LinearPredictor make_predictor(PredictorKind kind, const MomentSlice& slice, MatrixXd coeffs,
                               std::optional<double> delta = std::nullopt) {
    if (!coeffs.allFinite()) throw NumericalError("non-finite predictor coefficients");
    return {kind, slice.n, slice.r, slice.targets, std::move(coeffs), delta};
}

/// A and B of the BLUP for every slice target, plus Sigma^{-1} omega.
struct BlupPieces {
    GlsSystem gls;
    MatrixXd inv_omega;  // r x l
    VectorXd a, b;       // l
};

BlupPieces blup_pieces(const MomentSlice& slice) {
    require_targets(slice);
    BlupPieces p{make_gls(slice), {}, {}, {}};
    p.inv_omega = p.gls.chol.solve(slice.omega);
    p.a = VectorXd::Ones(slice.size()) - p.inv_omega.transpose() * VectorXd::Ones(slice.r);
    p.b = slice.alpha_future - p.inv_omega.transpose() * slice.alpha_obs;
    return p;
}

}  // namespace

// ---------------------------------------------------------------------------

GammaSystem::GammaSystem(const MomentSlice& slice, double delta)
    : delta_(delta), omega_(slice.omega), alpha_future_(slice.alpha_future) {
    if (!std::isfinite(delta)) throw ValidationError("delta must be finite");
    shifted_alpha_ = slice.alpha_obs + VectorXd::Constant(slice.r, delta);
    gamma_ = slice.sigma_obs + shifted_alpha_ * shifted_alpha_.transpose();
    chol_.compute(gamma_);
    if (chol_.info() != Eigen::Success) throw NumericalError("internal error: Gamma is not positive definite");
}

VectorXd GammaSystem::rhs(int column) const {
    return omega_.col(column) + (alpha_future_[column] + delta_) * shifted_alpha_;
}

LinearPredictor blup(const MomentSlice& slice) {
    const BlupPieces p = blup_pieces(slice);
    const auto& g = p.gls;
    MatrixXd coeffs(slice.size(), slice.r);
    for (int k = 0; k < slice.size(); ++k) {
        const double a = p.a[k], b = p.b[k];
        coeffs.row(k) = (p.inv_omega.col(k) + (g.v2 * a - g.v3 * b) / g.big_delta * g.inv_one +
                         (g.v1 * b - g.v3 * a) / g.big_delta * g.inv_alpha)
                            .transpose();
    }
    return make_predictor(PredictorKind::BLUP, slice, std::move(coeffs));
}

MspeMatrix blup_mspe(const MomentSlice& slice) {
    const BlupPieces p = blup_pieces(slice);
    const auto& g = p.gls;
    const int l = slice.size();
    MatrixXd w(l, l);
    for (int i = 0; i < l; ++i) {
        for (int j = i; j < l; ++j) {
            // [A_i B_i] [[V1, V3], [V3, V2]]^{-1} [A_j B_j]'
            const double c = (p.a[i] * p.a[j] * g.v2 + p.b[i] * p.b[j] * g.v1 - (p.a[i] * p.b[j] + p.b[i] * p.a[j]) * g.v3) /
                             g.big_delta;
            w(i, j) = w(j, i) = slice.omega_ff(i, j) - slice.omega.col(i).dot(p.inv_omega.col(j)) + c;
        }
    }
    return {std::move(w), std::nullopt};
}

LinearPredictor blip(const MomentSlice& slice, double delta) {
    require_targets(slice);
    const GammaSystem sys(slice, delta);
    MatrixXd coeffs(slice.size(), slice.r);
    for (int k = 0; k < slice.size(); ++k) coeffs.row(k) = sys.solve(sys.rhs(k)).transpose();
    return make_predictor(PredictorKind::BLIP, slice, std::move(coeffs), delta);
}

MspeMatrix blip_mspe(const MatrixXd& coeffs, const std::vector<int>& targets, const MomentSlice& slice,
                     double delta_eval) {
    if (!std::isfinite(delta_eval)) throw ValidationError("delta must be finite");
    const int l = static_cast<int>(targets.size());
    if (coeffs.rows() != l || coeffs.cols() != slice.r)
        throw ValidationError("coefficient matrix must be " + std::to_string(l) + "x" + std::to_string(slice.r));
    std::vector<int> col(l);
    for (int k = 0; k < l; ++k) col[k] = slice.column_of(targets[k]);

    VectorXd alpha_s(l);
    MatrixXd omega_s(slice.r, l), omega_ff(l, l);
    for (int k = 0; k < l; ++k) {
        alpha_s[k] = slice.alpha_future[col[k]];
        omega_s.col(k) = slice.omega.col(col[k]);
        for (int m = 0; m < l; ++m) omega_ff(k, m) = slice.omega_ff(col[k], col[m]);
    }
    const VectorXd e_one = coeffs.rowwise().sum() - VectorXd::Ones(l);  // a_i'1 - 1
    const VectorXd e_alpha = coeffs * slice.alpha_obs - alpha_s;         // a_i'alpha - alpha_{s_i}
    const MatrixXd cross = coeffs * omega_s;                             // (i, j) = a_i' omega_{s_j}
    const double d = delta_eval;
    MatrixXd w = d * d * e_one * e_one.transpose() + d * (e_one * e_alpha.transpose() + e_alpha * e_one.transpose()) +
                 coeffs * slice.sigma_obs * coeffs.transpose() - cross - cross.transpose() + omega_ff +
                 e_alpha * e_alpha.transpose();
    w = 0.5 * (w + w.transpose()).eval();
    return {std::move(w), delta_eval};
}

MspeMatrix blip_mspe(const LinearPredictor& predictor, const MomentSlice& slice, double delta_eval) {
    if (predictor.n != slice.n || predictor.r != slice.r)
        throw ValidationError("predictor (n, r) does not match the moment slice");
    return blip_mspe(predictor.coeffs, predictor.targets, slice, delta_eval);
}

namespace {

struct KaminskyTerms {
    VectorXd c12;
    double c22;
};

KaminskyTerms kaminsky_terms(const BlupPieces& p) {
    const auto& g = p.gls;
    // sigma^2 c12 = Cov(sigma*, A mu* + B sigma*) = A Cov(mu*, sigma*) + B Var(sigma*)
    return {(p.b * g.v1 - p.a * g.v3) / g.big_delta, g.v1 / g.big_delta};
}

}  // namespace

std::vector<KaminskyPrediction> kaminsky_blip(const MomentSlice& slice, const BlueResult& b,
                                              const CensoredSample& sample) {
    if (sample.n != slice.n || sample.r != slice.r)
        throw ValidationError("sample (n, r) does not match the moment slice");
    const BlupPieces p = blup_pieces(slice);
    const KaminskyTerms t = kaminsky_terms(p);
    const LinearPredictor bl = blup(slice);
    const MspeMatrix bm = blup_mspe(slice);
    std::vector<KaminskyPrediction> out;
    for (int k = 0; k < slice.size(); ++k) {
        const double shrink = t.c12[k] / (1.0 + t.c22);
        out.push_back({slice.targets[k], bl.coeffs.row(k).dot(sample.x) - shrink * b.sigma_star,
                       bm.w(k, k) - t.c12[k] * t.c12[k] / (1.0 + t.c22)});
    }
    return out;
}

LinearPredictor kaminsky_predictor(const MomentSlice& slice) {
    const BlupPieces p = blup_pieces(slice);
    const KaminskyTerms t = kaminsky_terms(p);
    MatrixXd coeffs = blup(slice).coeffs;
    const VectorXd sw = p.gls.sigma_weights();
    for (int k = 0; k < slice.size(); ++k) coeffs.row(k) -= (t.c12[k] / (1.0 + t.c22)) * sw.transpose();
    return make_predictor(PredictorKind::KaminskyBLIP, slice, std::move(coeffs));
}

LinearPredictor scale_blip(const MomentSlice& slice) {
    require_targets(slice);
    const MatrixXd m = slice.sigma_obs + slice.alpha_obs * slice.alpha_obs.transpose();
    Eigen::LLT<MatrixXd> chol(m);
    if (chol.info() != Eigen::Success) throw NumericalError("internal error: Sigma + alpha alpha' is not positive definite");
    MatrixXd coeffs(slice.size(), slice.r);
    for (int k = 0; k < slice.size(); ++k)
        coeffs.row(k) = chol.solve(slice.omega.col(k) + slice.alpha_future[k] * slice.alpha_obs).transpose();
    return make_predictor(PredictorKind::ScaleBLIP, slice, std::move(coeffs));
}

MspeMatrix scale_mspe(const LinearPredictor& predictor, const MomentSlice& slice) {
    MspeMatrix m = blip_mspe(predictor, slice, 0.0);
    m.delta.reset();
    return m;
}

Predictions predict(const LinearPredictor& predictor, const CensoredSample& sample) {
    if (predictor.coeffs.cols() != sample.r || predictor.r != sample.r)
        throw ValidationError("predictor expects r = " + std::to_string(predictor.r) + " observations, sample has " +
                              std::to_string(sample.r));
    if (predictor.n != sample.n)
        throw ValidationError("predictor built for n = " + std::to_string(predictor.n) + ", sample has n = " +
                              std::to_string(sample.n));
    Predictions p;
    p.value = predictor.coeffs * sample.x;
    if (sample.transform == Transform::Log) p.original = p.value.array().exp().matrix();
    return p;
}

double dominance_gap(const LinearPredictor& optimal, const MatrixXd& rival_coeffs, const MomentSlice& slice,
                     double delta, const VectorXd& weights) {
    if (rival_coeffs.rows() != optimal.coeffs.rows() || rival_coeffs.cols() != optimal.coeffs.cols())
        throw ValidationError("rival coefficient matrix shape does not match the optimal predictor");
    if (weights.size() != optimal.coeffs.rows()) throw ValidationError("weight vector length must equal the number of targets");
    if (optimal.delta && *optimal.delta != delta)
        throw ValidationError("dominance must be assessed at the delta the optimal predictor was built with");
    const MatrixXd opt = blip_mspe(optimal, slice, delta).w;
    const MatrixXd riv = blip_mspe(rival_coeffs, optimal.targets, slice, delta).w;
    return weights.dot(riv * weights) - weights.dot(opt * weights);
}

nlohmann::json predictor_to_json(const LinearPredictor& predictor, const MspeMatrix& mspe, std::string_view units,
                                 double scale) {
    nlohmann::json j;
    j["kind"] = to_string(predictor.kind);
    j["targets"] = predictor.targets;
    j["delta"] = predictor.delta ? nlohmann::json(*predictor.delta) : nlohmann::json(nullptr);
    nlohmann::json coeffs = nlohmann::json::array(), w = nlohmann::json::array();
    for (Eigen::Index i = 0; i < predictor.coeffs.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index k = 0; k < predictor.coeffs.cols(); ++k) row.push_back(predictor.coeffs(i, k));
        coeffs.push_back(std::move(row));
    }
    for (Eigen::Index i = 0; i < mspe.w.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index k = 0; k < mspe.w.cols(); ++k) row.push_back(mspe.w(i, k) * scale);
        w.push_back(std::move(row));
    }
    j["coeffs"] = std::move(coeffs);
    j["mspe"] = std::move(w);
    j["mspe_units"] = std::string(units);
    return j;
}

}  // namespace osp
