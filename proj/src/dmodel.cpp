#include "popdyn/dmodel.hpp"

#include <cmath>

namespace popdyn::dmodel {

double cumulative(const DModelParams& p, double t) {
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
  const double qn = p.pop.interested_pool();
  if (t <= p.t_e) return qn * (1.0 - std::exp(-p.alpha * t));
  // Past the cutoff: saturation reached by t_e plus the integrated tail
  // alpha*qN*e^{-alpha t_e} * (1 - e^{-gamma (t - t_e)}) / gamma.
  const double at_cutoff = qn * (1.0 - std::exp(-p.alpha * p.t_e));
  const double tail = p.alpha * qn * std::exp(-p.alpha * p.t_e) *
                      (1.0 - std::exp(-p.gamma * (t - p.t_e))) / p.gamma;
  return at_cutoff + tail;
}

double view_rate(const DModelParams& p, double t) {
  if (!(t >= 0.0)) throw DomainError("time must be nonnegative");
  const double peak = p.alpha * p.pop.interested_pool();
  if (t <= p.t_e) return peak * std::exp(-p.alpha * t);
  return peak * std::exp(-p.alpha * p.t_e) * std::exp(-p.gamma * (t - p.t_e));
}

Trace daily_counts(const DModelParams& p, std::size_t horizon) {
  std::vector<double> counts(horizon);
  for (std::size_t day = 1; day <= horizon; ++day)
    counts[day - 1] = view_rate(p, static_cast<double>(day));
  return Trace(std::move(counts));
}

}  // namespace popdyn::dmodel
