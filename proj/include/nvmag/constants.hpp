#pragma once

#include <numbers>

namespace nvmag {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Vacuum permeability, T m / A.
inline constexpr double kMu0 = 4.0e-7 * std::numbers::pi;

// NV electron gyromagnetic ratio.
inline constexpr double kGammaNvHzPerT = 28.024e9;
inline constexpr double kGammaE = kTwoPi * kGammaNvHzPerT;  // rad/s/T

// Ground-state zero-field splitting.
inline constexpr double kZeroFieldSplittingHz = 2.870e9;

// Reference impedance used for the drive-current convention.
inline constexpr double kLineImpedance = 50.0;

}  // namespace nvmag
