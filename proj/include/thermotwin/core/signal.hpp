#pragma once

#include <span>
#include <vector>

#include "thermotwin/core/types.hpp"

namespace thermotwin {

/// Linear interpolation of every channel onto `target`. Points that coincide
/// with source samples are copied exactly.
Trajectory resample_trajectory(const Trajectory& traj, const TimeGrid& target);

/// Resample one uniformly sampled series.
std::vector<double> resample_series(std::span<const double> values, const TimeGrid& source, const TimeGrid& target);

/// Savitzky-Golay smoothing. Interior points use the centred least-squares
/// polynomial; the first and last window/2 points are evaluated from the fit
/// to the first (last) full window.
std::vector<double> savgol_filter(std::span<const double> series, std::size_t window, std::size_t poly_order);

double rmse(std::span<const double> pred, std::span<const double> truth);

}  // namespace thermotwin
