#include "popdyn/simulator.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "popdyn/rng.hpp"

namespace popdyn::sim {

namespace {

long long rounded_population(const PopulationConfig& pop) {
  const long long n = std::llround(pop.n);
  if (n < 1) throw ParamError("population rounds to less than one agent");
  return n;
}

long long binomial(std::mt19937_64& gen, long long trials, double p) {
  if (trials <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  std::binomial_distribution<long long> dist(trials, p);
  return dist(gen);
}

}  // namespace

std::vector<Replication> simulate_direct(const DModelParams& p, const SimConfig& cfg) {
  const long long n = rounded_population(p.pop);
  const double p_expose = 1.0 - std::exp(-p.alpha);
  const double p_finish = 1.0 - std::exp(-p.gamma);
  // Last day with promotion running. The batch exposed on that day trails
  // off geometrically instead of watching at once.
  const bool endless = std::isinf(p.t_e);
  const double cutoff = endless ? std::numeric_limits<double>::infinity()
                                : std::floor(p.t_e);

  std::vector<Replication> reps;
  reps.reserve(cfg.replications);
  for (std::size_t r = 0; r < cfg.replications; ++r) {
    std::mt19937_64 gen(derive_seed(cfg.rng_seed, r));
    Replication rep;
    rep.views.counts.resize(cfg.horizon, 0.0);
    rep.unaware.resize(cfg.horizon);
    rep.interested.resize(cfg.horizon);
    rep.not_interested.resize(cfg.horizon);

    long long unaware = n;
    long long interested = 0;  // watched or queued behind the cutoff batch
    long long not_interested = 0;
    long long pending = 0;  // interested agents from the cutoff batch, not yet watched

    for (std::size_t day = 1; day <= cfg.horizon; ++day) {
      const double d = static_cast<double>(day);
      long long watched_today = 0;
      if (d <= cutoff) {
        const long long exposed = binomial(gen, unaware, p_expose);
        const long long keen = binomial(gen, exposed, p.pop.q);
        unaware -= exposed;
        interested += keen;
        not_interested += exposed - keen;
        if (d == cutoff) {
          pending += keen;  // final batch watches over the tail
        } else {
          watched_today = keen;
        }
      }
      if (pending > 0) {
        const long long done = binomial(gen, pending, p_finish);
        pending -= done;
        watched_today += done;
      }
      rep.views.counts[day - 1] = static_cast<double>(watched_today);
      rep.unaware[day - 1] = static_cast<double>(unaware);
      rep.interested[day - 1] = static_cast<double>(interested);
      rep.not_interested[day - 1] = static_cast<double>(not_interested);
    }
    reps.push_back(std::move(rep));
  }
  return reps;
}

std::vector<Replication> simulate_wom(const WModelParams& p, const SimConfig& cfg) {
  const long long n = rounded_population(p.pop);
  const long long seeds = std::llround(p.x0);
  if (seeds < 1)
    throw ParamError("stochastic simulation needs at least one whole seed");
  const double fanout = p.fanout();
  const long long fan_floor = static_cast<long long>(std::floor(fanout));
  const double fan_frac = fanout - static_cast<double>(fan_floor);

  std::vector<Replication> reps;
  reps.reserve(cfg.replications);
  for (std::size_t r = 0; r < cfg.replications; ++r) {
    std::mt19937_64 gen(derive_seed(cfg.rng_seed, r));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<long long> pick(0, n - 1);

    Replication rep;
    rep.subunit_fanout = fanout < 1.0;
    rep.views.counts.resize(cfg.horizon, 0.0);
    rep.unaware.resize(cfg.horizon);
    rep.interested.resize(cfg.horizon);
    rep.not_interested.resize(cfg.horizon);

    std::vector<AgentState> state(static_cast<std::size_t>(n), AgentState::Unaware);
    std::vector<long long> fresh;  // watched in the current slot
    fresh.reserve(static_cast<std::size_t>(seeds));
    for (long long i = 0; i < seeds && i < n; ++i) {
      state[static_cast<std::size_t>(i)] = AgentState::Interested;
      fresh.push_back(i);
    }
    long long unaware = n - static_cast<long long>(fresh.size());
    long long interested = static_cast<long long>(fresh.size());
    long long not_interested = 0;

    // Slot 0 holds the seed views and is recorded as day 1.
    rep.views.counts[0] = static_cast<double>(fresh.size());
    rep.unaware[0] = static_cast<double>(unaware);
    rep.interested[0] = static_cast<double>(interested);
    rep.not_interested[0] = static_cast<double>(not_interested);

    std::vector<long long> next;
    for (std::size_t slot = 1; slot < cfg.horizon; ++slot) {
      next.clear();
      for (long long rec = 0; rec < static_cast<long long>(fresh.size()); ++rec) {
        long long fan = fan_floor;
        if (fan_frac > 0.0 && unit(gen) < fan_frac) ++fan;
        for (long long k = 0; k < fan; ++k) {
          const long long target = pick(gen);
          AgentState& st = state[static_cast<std::size_t>(target)];
          if (st != AgentState::Unaware) continue;
          --unaware;
          if (unit(gen) < p.pop.q) {
            st = AgentState::Interested;
            ++interested;
            next.push_back(target);
          } else {
            st = AgentState::NotInterested;
            ++not_interested;
          }
        }
      }
      fresh.swap(next);
      rep.views.counts[slot] = static_cast<double>(fresh.size());
      rep.unaware[slot] = static_cast<double>(unaware);
      rep.interested[slot] = static_cast<double>(interested);
      rep.not_interested[slot] = static_cast<double>(not_interested);
    }
    reps.push_back(std::move(rep));
  }
  return reps;
}

Trace add_observation_noise(const Trace& trace, double relative_sd,
                            std::uint64_t rng_seed) {
  if (!(relative_sd >= 0.0))
    throw ParamError("relative_sd must be nonnegative");
  if (relative_sd == 0.0) return trace;
  // Unit-mean lognormal: sigma^2 = ln(1 + sd^2), mu = -sigma^2/2.
  const double sigma2 = std::log1p(relative_sd * relative_sd);
  const double sigma = std::sqrt(sigma2);
  std::mt19937_64 gen(derive_seed(rng_seed, 0));
  std::lognormal_distribution<double> noise(-0.5 * sigma2, sigma);
  std::vector<double> out(trace.counts.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = trace.counts[i] * noise(gen);
  return Trace(std::move(out));
}

Trace mean_views(const std::vector<Replication>& reps) {
  if (reps.empty()) throw ParamError("no replications to average");
  const std::size_t horizon = reps.front().views.horizon();
  std::vector<double> mean(horizon, 0.0);
  for (const Replication& rep : reps) {
    if (rep.views.horizon() != horizon)
      throw ParamError("replications have mismatched horizons");
    for (std::size_t i = 0; i < horizon; ++i) mean[i] += rep.views.counts[i];
  }
  for (double& v : mean) v /= static_cast<double>(reps.size());
  return Trace(std::move(mean));
}

}  // namespace popdyn::sim
