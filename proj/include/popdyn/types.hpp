#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace popdyn {

/// Invalid parameter or configuration value.
class ParamError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Evaluation requested outside a model's domain of validity.
class DomainError : public std::domain_error {
  using std::domain_error::domain_error;
};

/// The closed-form solution of the word-of-mouth model does not exist
/// (the discriminant under the square root is not positive).
class DegenerateDiscriminantError : public DomainError {
  using DomainError::DomainError;
};

/// No curvature sign change found on the searched interval.
class NoInflectionError : public DomainError {
  using DomainError::DomainError;
};

/// Malformed or inconsistent input data.
class DataError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Optimizer failure (non-finite residuals, unusable problem).
class FitError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Fixed pool of potential viewers together with the probability q that a
/// user who learns about the video is interested enough to watch it.
struct PopulationConfig {
  double n = 0.0;  // potential user population, > 0
  double q = 0.0;  // intrinsic attractiveness, in (0, 1]

  PopulationConfig(double n_, double q_) : n(n_), q(q_) {
    if (!(n > 0.0) || !std::isfinite(n))
      throw ParamError("population n must be positive and finite");
    if (!(q > 0.0) || !(q <= 1.0))
      throw ParamError("attractiveness q must lie in (0, 1]");
  }

  /// qN, the number of users who would watch if everyone were told.
  double interested_pool() const { return q * n; }
};

/// Headcount of users who have not heard of the video, implied by a
/// cumulative viewer count x under the fixed-population assumption.
inline double unaware_count(const PopulationConfig& pop, double x) {
  return pop.n - x / pop.q;
}

/// Headcount of users who heard of the video but were not interested.
inline double uninterested_count(const PopulationConfig& pop, double x) {
  return x * (1.0 - pop.q) / pop.q;
}

/// Parameters of the directly-recommended diffusion model: promotion pushes
/// the video at rate alpha until the cutoff time t_e, after which residual
/// views die off at the much faster rate gamma.
struct DModelParams {
  PopulationConfig pop;
  double alpha;  // direct recommendation rate per time unit, > 0
  double t_e;    // promotion cutoff time, >= 0 (may be +infinity)
  double gamma;  // post-cutoff decay rate, > alpha

  DModelParams(PopulationConfig pop_, double alpha_, double t_e_, double gamma_)
      : pop(pop_), alpha(alpha_), t_e(t_e_), gamma(gamma_) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw ParamError("alpha must be positive and finite");
    if (!(t_e >= 0.0)) throw ParamError("cutoff t_e must be nonnegative");
    if (!(gamma > alpha))
      throw ParamError("decay gamma must exceed alpha");
  }

  /// Convenience factory using the default decay of one order of magnitude
  /// above the recommendation rate.
  static DModelParams with_default_decay(PopulationConfig pop_, double alpha_,
                                         double t_e_) {
    return DModelParams(pop_, alpha_, t_e_, 10.0 * alpha_);
  }
};

/// Parameters of the word-of-mouth diffusion model. beta is the per-viewer
/// recommendation fan-out normalized by N (beta*N friends told on average);
/// x0 is the seed population that bootstraps the cascade and may be
/// fractional in the fluid model.
struct WModelParams {
  PopulationConfig pop;
  double beta;  // normalized fan-out, > 0
  double x0;    // seed population, in (0, qN)

  WModelParams(PopulationConfig pop_, double beta_, double x0_)
      : pop(pop_), beta(beta_), x0(x0_) {
    if (!(beta > 0.0) || !std::isfinite(beta))
      throw ParamError("beta must be positive and finite");
    if (!(x0 > 0.0) || !(x0 < pop.interested_pool()))
      throw ParamError("seed x0 must lie in (0, qN)");
  }

  /// Mean number of friends each new viewer recommends the video to.
  double fanout() const { return beta * pop.n; }

  /// Fan-out threshold above which the information reaches everyone.
  double diffusion_threshold() const {
    return 2.0 / (pop.interested_pool() + x0);
  }
};

/// Quantities derived from the closed-form solution of the WOM model.
struct WDerived {
  double x1 = 0.0;   // asymptotic viewer population (upper root)
  double x2 = 0.0;   // lower root of the rate polynomial
  double phi = 0.0;  // discriminant root controlling the diffusion speed
  bool full_diffusion = false;  // beta >= 2/(qN + x0)
};

/// A per-video daily view-count series. counts[0] is day 1.
struct Trace {
  std::vector<double> counts;

  Trace() = default;
  explicit Trace(std::vector<double> c) : counts(std::move(c)) {
    for (double v : counts)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ParamError("trace entries must be finite and nonnegative");
  }

  std::size_t horizon() const { return counts.size(); }

  double total() const {
    double s = 0.0;
    for (double v : counts) s += v;
    return s;
  }
};

}  // namespace popdyn
