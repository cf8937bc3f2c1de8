#include "osp/family.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include "osp/error.hpp"

namespace osp {

std::string to_string(Family f) {
    switch (f) {
        case Family::Exponential: return "exponential";
        case Family::Uniform: return "uniform";
        case Family::Normal: return "normal";
        case Family::Gumbel: return "gumbel";
        case Family::CustomQuantile: return "custom-quantile";
    }
    return "unknown";
}

Family parse_family(std::string_view name) {
    if (name == "exponential") return Family::Exponential;
    if (name == "uniform") return Family::Uniform;
    if (name == "normal") return Family::Normal;
    if (name == "gumbel") return Family::Gumbel;
    if (name == "custom-quantile") return Family::CustomQuantile;
    throw ValidationError("unknown family '" + std::string(name) + "'");
}

double standard_quantile(Family f, double u) {
    switch (f) {
        case Family::Exponential: return -std::log1p(-u);
        case Family::Uniform: return u;
        case Family::Normal: return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
        case Family::Gumbel: return -std::log(-std::log(u));
        case Family::CustomQuantile: break;
    }
    throw ValidationError("family " + to_string(f) + " has no built-in quantile function");
}

std::optional<double> parent_second_moment(Family f) {
    constexpr double pi = std::numbers::pi;
    constexpr double gamma = std::numbers::egamma;
    switch (f) {
        case Family::Exponential: return 2.0;
        case Family::Uniform: return 1.0 / 3.0;
        case Family::Normal: return 1.0;
        case Family::Gumbel: return gamma * gamma + pi * pi / 6.0;
        case Family::CustomQuantile: return std::nullopt;
    }
    return std::nullopt;
}

void check_quantile_function(const QuantileFn& q) {
    if (!q) throw ValidationError("custom-quantile family requires a quantile function");
    constexpr int kPoints = 1000;
    double prev = -INFINITY;
    for (int k = 1; k < kPoints; ++k) {
        const double u = static_cast<double>(k) / kPoints;
        const double v = q(u);
        if (!std::isfinite(v)) throw ValidationError("quantile function is not finite at u = " + std::to_string(u));
        if (!(v > prev)) throw ValidationError("quantile function is not strictly increasing near u = " + std::to_string(u));
        prev = v;
    }
}

}  // namespace osp
