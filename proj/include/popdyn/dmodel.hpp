#pragma once

#include "popdyn/types.hpp"

namespace popdyn::dmodel {

/// Cumulative viewers x(t). While promotion runs (t <= t_e) this is the
/// exponential saturation qN(1 - e^{-alpha t}); afterwards the integrated
/// decay tail is added. Nondecreasing, bounded by qN, continuous at t_e.
double cumulative(const DModelParams& p, double t);

/// Instantaneous view rate v(t): alpha*qN*e^{-alpha t} up to the cutoff,
/// then the same value at t_e damped by e^{-gamma (t - t_e)}. Strictly
/// decreasing in t and continuous at the cutoff.
double view_rate(const DModelParams& p, double t);

/// Daily view counts for days 1..horizon, i.e. the view rate sampled at
/// integer days. This is the series fitted against observed traces.
Trace daily_counts(const DModelParams& p, std::size_t horizon);

}  // namespace popdyn::dmodel
