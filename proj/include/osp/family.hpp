#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace osp {

/// Standardized parent distributions.
///
/// Standardizations: Exponential is the unit-rate exponential on (0, inf),
/// Uniform is U(0, 1), Normal is N(0, 1), and Gumbel is the maximum-form
/// extreme value law with density exp(-z - exp(-z)).
enum class Family { Exponential, Uniform, Normal, Gumbel, CustomQuantile };

using QuantileFn = std::function<double(double)>;

std::string to_string(Family f);
Family parse_family(std::string_view name);

/// Standardized quantile function Q(u) for the built-in families.
/// Throws ValidationError for CustomQuantile.
double standard_quantile(Family f, double u);

/// E[Z^2] of the standardized parent; nullopt when it is not known in closed form.
std::optional<double> parent_second_moment(Family f);

/// Checks that q is finite and strictly increasing on an interior grid of (0, 1).
void check_quantile_function(const QuantileFn& q);

}  // namespace osp
