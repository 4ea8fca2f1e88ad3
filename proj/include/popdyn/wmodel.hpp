#pragma once

#include "popdyn/types.hpp"

namespace popdyn::wmodel {

/// Roots and discriminant of the continuous WOM solution:
///   phi = sqrt((beta qN - 1)^2 - (beta x0 - 1)^2 + 1)
///   x1  = qN + (phi - 1)/beta,  x2 = qN - (phi + 1)/beta.
/// Throws DegenerateDiscriminantError when phi^2 <= 0.
WDerived derived(const WModelParams& p);

/// Closed-form cumulative viewers x(t) = (x1 + g(t) x2) / (1 + g(t)) with
/// g(t) = ((x1 - x0)/(x0 - x2)) e^{-phi t}. Equals x0 at t = 0 and tends to
/// x1 as t grows. The curve is not capped at qN; above the diffusion
/// threshold the continuous approximation may overshoot (see
/// final_population).
double continuous_cumulative(const WModelParams& p, double t);

/// min(x1, qN): the viewer population the cascade settles at, with the
/// continuous-model overshoot above the diffusion threshold capped at the
/// interested pool.
double final_population(const WModelParams& p);

/// Daily new-viewer counts dx(1..horizon) from the slot recursion
///   dx(t+1) = beta q dx(t) s(t),   s(t) = N - x(t)/q,
/// seeded with dx(1) = beta q x0 (N - x0/q). The increment is clamped so
/// the cumulative count never exceeds qN, and the recursion stops there.
Trace discrete_trace(const WModelParams& p, std::size_t horizon);

/// Sensitivity of the final population to the seed count:
/// dx1/dx0 = -(beta x0 - 1)/phi, strictly positive below the threshold.
double dx1_dx0(const WModelParams& p);

/// Sensitivity of the final population to the fan-out:
/// dx1/dbeta = (x1 - x0)/(phi beta), strictly positive below the threshold.
double dx1_dbeta(const WModelParams& p);

/// Where the growth of x1 as a function of beta switches from convex to
/// concave on (0, 2/(qN + x0)).
struct InflectionResult {
  double theta = 0.0;      // fan-out rate at the curvature sign change
  double threshold = 0.0;  // 2/(qN + x0), right end of the search interval
  /// theta / threshold, the sign-change location in units of the threshold.
  double normalized() const { return theta / threshold; }
};

/// Locates the curvature sign change of x1(beta) by bisecting the second
/// central difference over (0, 2/(qN + x0)). Throws NoInflectionError when
/// the second difference does not change sign on the interval.
InflectionResult inflection_beta(double q, double n, double x0);

}  // namespace popdyn::wmodel
