#pragma once

#include <array>

namespace osp {

// Lead concentrations (ug/dL) in 15 soil samples;
// the analysis uses natural logs with n = 15, r = 9.
inline constexpr std::array<double, 15> kLeadData = {26, 63, 3, 70, 16, 5, 1, 57, 5, 3, 24, 2, 1, 48, 3};
inline constexpr int kLeadN = 15;
inline constexpr int kLeadR = 9;

}  // namespace osp
