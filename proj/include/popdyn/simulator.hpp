#pragma once

#include <cstdint>
#include <vector>

#include "popdyn/types.hpp"

namespace popdyn::sim {

/// Information state of a single agent.
enum class AgentState : std::uint8_t { Unaware = 0, Interested = 1, NotInterested = 2 };

struct SimConfig {
  std::size_t horizon = 0;       // days to simulate, >= 1
  std::uint64_t rng_seed = 0;    // base seed; replication k uses derive_seed(rng_seed, k)
  std::size_t replications = 1;  // >= 1

  SimConfig(std::size_t horizon_, std::uint64_t seed_, std::size_t replications_ = 1)
      : horizon(horizon_), rng_seed(seed_), replications(replications_) {
    if (horizon < 1) throw ParamError("horizon must be at least 1");
    if (replications < 1) throw ParamError("replications must be at least 1");
  }
};

/// One replication: the daily view counts plus the end-of-day partition of
/// agents over the three information states (the three series sum to N on
/// every day).
struct Replication {
  Trace views;
  std::vector<double> unaware;
  std::vector<double> interested;      // know the video and want it (watched or queued)
  std::vector<double> not_interested;
  bool subunit_fanout = false;  // fan-out below one friend per viewer was
                                // realized as a Bernoulli(beta*N) draw

  double cumulative_views() const { return views.total(); }
};

/// Agent-level realization of direct recommendation: each day up to the
/// cutoff every unaware agent is exposed independently with probability
/// 1 - e^{-alpha} and, once exposed, is interested with probability q.
/// Exposure stops after the cutoff day; the batch exposed on the cutoff day
/// itself watches over that day and the following ones with per-day
/// completion probability 1 - e^{-gamma}. That trailing-off rule is one
/// admissible agent-level reading of the fluid model's decay tail.
std::vector<Replication> simulate_direct(const DModelParams& p, const SimConfig& cfg);

/// Agent-level word-of-mouth cascade: round(x0) seed agents watch in slot 0
/// (recorded as day 1 of the trace); in each following slot every agent who
/// watched in the previous slot recommends the video to beta*N uniformly
/// random agents (with replacement, self-recommendation possible). Unaware
/// recipients learn of the video and watch with probability q. Fractional
/// fan-out is realized per recommender as floor(beta*N) plus a Bernoulli
/// draw on the remainder, so the mean fan-out is exactly beta*N.
std::vector<Replication> simulate_wom(const WModelParams& p, const SimConfig& cfg);

/// Multiplies every count by an independent lognormal factor with unit mean
/// and the given relative standard deviation. relative_sd = 0 is identity.
Trace add_observation_noise(const Trace& trace, double relative_sd,
                            std::uint64_t rng_seed);

/// Pointwise mean of the daily views across replications.
Trace mean_views(const std::vector<Replication>& reps);

}  // namespace popdyn::sim
