#include "popdyn/wmodel.hpp"

#include <algorithm>
#include <cmath>

namespace popdyn::wmodel {

WDerived derived(const WModelParams& p) {
  const double qn = p.pop.interested_pool();
  const double u = p.beta * qn - 1.0;
  const double w = p.beta * p.x0 - 1.0;
  const double phi2 = u * u - w * w + 1.0;
  if (!(phi2 > 0.0))
    throw DegenerateDiscriminantError(
        "degenerate discriminant: phi^2 <= 0 for beta=" +
        std::to_string(p.beta) + ", x0=" + std::to_string(p.x0));
  WDerived d;
  d.phi = std::sqrt(phi2);
  d.x1 = qn + (d.phi - 1.0) / p.beta;
  d.x2 = qn + (-d.phi - 1.0) / p.beta;
  d.full_diffusion = p.beta >= p.diffusion_threshold();
  return d;
}

double continuous_cumulative(const WModelParams& p, double t) {
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
  const WDerived d = derived(p);
  const double g = (d.x1 - p.x0) / (p.x0 - d.x2) * std::exp(-d.phi * t);
  return (d.x1 + g * d.x2) / (1.0 + g);
}

double final_population(const WModelParams& p) {
  return std::min(derived(p).x1, p.pop.interested_pool());
}

Trace discrete_trace(const WModelParams& p, std::size_t horizon) {
  if (horizon < 1) throw ParamError("horizon must be at least 1");
  const double qn = p.pop.interested_pool();
  std::vector<double> counts(horizon, 0.0);
  double x = p.x0;
  double dx = p.beta * p.pop.q * p.x0 * unaware_count(p.pop, p.x0);
  for (std::size_t t = 0; t < horizon; ++t) {
    if (dx <= 0.0) break;
    if (x + dx >= qn) {
      // One oversize step would breach the fixed population; take exactly
      // the remaining headroom and stop.
      counts[t] = qn - x;
      x = qn;
      break;
    }
    counts[t] = dx;
    x += dx;
    dx = p.beta * p.pop.q * dx * unaware_count(p.pop, x);
  }
  return Trace(std::move(counts));
}

namespace {

// x1 as a function of beta with the other parameters held fixed; used by
// the curvature search. q, n, x0 are assumed valid.
double x1_of_beta(double q, double n, double x0, double beta) {
  const double qn = q * n;
  const double u = beta * qn - 1.0;
  const double w = beta * x0 - 1.0;
  const double phi2 = u * u - w * w + 1.0;
  if (!(phi2 > 0.0))
    throw DegenerateDiscriminantError("phi^2 <= 0 inside beta sweep");
  return qn + (std::sqrt(phi2) - 1.0) / beta;
}

void require_below_threshold(const WModelParams& p) {
  if (!(p.beta < p.diffusion_threshold()))
    throw DomainError("sensitivity defined only below the diffusion threshold");
}

}  // namespace

double dx1_dx0(const WModelParams& p) {
  require_below_threshold(p);
  const WDerived d = derived(p);
  return -(p.beta * p.x0 - 1.0) / d.phi;
}

double dx1_dbeta(const WModelParams& p) {
  require_below_threshold(p);
  const WDerived d = derived(p);
  return (d.x1 - p.x0) / (d.phi * p.beta);
}

InflectionResult inflection_beta(double q, double n, double x0) {
  const PopulationConfig pop(n, q);
  if (!(x0 > 0.0) || !(x0 < pop.interested_pool()))
    throw ParamError("seed x0 must lie in (0, qN)");
  const double threshold = 2.0 / (pop.interested_pool() + x0);

  const double h = threshold * 5e-4;  // finite-difference step
  const auto second_diff = [&](double beta) {
    return x1_of_beta(q, n, x0, beta + h) - 2.0 * x1_of_beta(q, n, x0, beta) +
           x1_of_beta(q, n, x0, beta - h);
  };

  // Coarse scan for the sign change, then bisection inside the bracket.
  const int scan_points = 512;
  const double lo = threshold * 2e-3;
  const double hi = threshold * (1.0 - 2e-3);
  double prev_beta = lo;
  double prev_val = second_diff(lo);
  double bracket_lo = 0.0, bracket_hi = 0.0;
  bool found = false;
  for (int i = 1; i <= scan_points; ++i) {
    const double beta = lo + (hi - lo) * i / scan_points;
    const double val = second_diff(beta);
    if (prev_val > 0.0 && val <= 0.0) {
      bracket_lo = prev_beta;
      bracket_hi = beta;
      found = true;
      break;
    }
    prev_beta = beta;
    prev_val = val;
  }
  if (!found)
    throw NoInflectionError(
        "second difference of x1(beta) does not change sign on the interval");

  const double tol = std::min(1e-8, threshold * 1e-6);
  while (bracket_hi - bracket_lo > tol) {
    const double mid = 0.5 * (bracket_lo + bracket_hi);
    if (second_diff(mid) > 0.0)
      bracket_lo = mid;
    else
      bracket_hi = mid;
  }

  InflectionResult r;
  r.theta = 0.5 * (bracket_lo + bracket_hi);
  r.threshold = threshold;
  return r;
}

}  // namespace popdyn::wmodel
