// Acceptance suite: runs every shipping criterion end to end and prints one
// PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "popdyn/analysis.hpp"
#include "popdyn/dmodel.hpp"
#include "popdyn/fitting.hpp"
#include "popdyn/pipeline.hpp"
#include "popdyn/rng.hpp"
#include "popdyn/simulator.hpp"
#include "popdyn/wmodel.hpp"

using namespace popdyn;

#ifndef FIXTURES_DIR
#define FIXTURES_DIR "tests/fixtures"
#endif

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s — %s\n", pass ? "PASS" : "FAIL", id,
              name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------- criterion 1
void figure_reproduction() {
  const PopulationConfig pop(100000.0, 0.5);
  const double beta = 1.67e-5;  // beta*N = 1.67
  const double x1_low = wmodel::derived(WModelParams(pop, beta, 1000.0)).x1;
  const double x1_high = wmodel::derived(WModelParams(pop, beta, 5000.0)).x1;
  const bool exact = std::fabs(x1_low - 4830.0) <= 1.0 &&
                     std::fabs(x1_high - 16032.0) <= 1.0;
  const bool loose = std::fabs(x1_low - 5000.0) / 5000.0 <= 0.20 &&
                     std::fabs(x1_high - 15000.0) / 15000.0 <= 0.20;
  report(1, "asymptotic population at the figure parameters", exact && loose,
         fmt("x1(x0=1000)=%.4f (target 4830±1), x1(x0=5000)=%.4f (target "
             "16032±1); within 20%% of the read-off 5000/15000: %s",
             x1_low, x1_high, loose ? "yes" : "no"));
}

// ---------------------------------------------------------------- criterion 2
void threshold_boundary() {
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_phi = 0.0, worst_x1 = 0.0;
  for (int draw = 0; draw < 1000; ++draw) {
    const double n = std::exp(std::log(1e3) + unit(gen) * std::log(1e5));
    const double q = 0.01 + 0.99 * unit(gen);
    const double x0 =
        q * n * std::exp(std::log(1e-5) + unit(gen) * std::log(0.9 / 1e-5));
    const WModelParams p(PopulationConfig(n, q), 2.0 / (q * n + x0), x0);
    const WDerived d = wmodel::derived(p);
    worst_phi = std::max(worst_phi, std::fabs(d.phi - 1.0));
    worst_x1 = std::max(worst_x1, std::fabs(d.x1 - q * n) / (q * n));
  }
  report(2, "phi = 1 and x1 = qN at the diffusion threshold",
         worst_phi < 1e-9 && worst_x1 < 1e-9,
         fmt("1000 draws; max |phi-1| = %.2e, max |x1-qN|/qN = %.2e "
             "(tolerance 1e-9)",
             worst_phi, worst_x1));
}

// ---------------------------------------------------------------- criterion 3
void concavity_in_seeds() {
  std::mt19937_64 gen(102);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int bad_points = 0;
  for (int draw = 0; draw < 100; ++draw) {
    const double n = std::exp(std::log(1e3) + unit(gen) * std::log(1e5));
    const double q = 0.05 + 0.95 * unit(gen);
    const double x0_hi = 0.9 * q * n;
    const double beta = (0.05 + 0.9 * unit(gen)) * 2.0 / (q * n + x0_hi);
    const double x0_lo = 1e-3 * q * n;
    const double h = (x0_hi - x0_lo) / 101.0;
    for (int i = 1; i <= 100; ++i) {
      const double x0 = x0_lo + h * i;
      const double mid = oracles::x1_reference(q, n, beta, x0);
      const double up = oracles::x1_reference(q, n, beta, x0 + h);
      const double dn = oracles::x1_reference(q, n, beta, x0 - h);
      if (!(up - 2.0 * mid + dn < 0.0)) ++bad_points;
    }
  }
  report(3, "x1 concave in x0 below the threshold", bad_points == 0,
         fmt("100 draws x 100-point grids; %d non-concave points", bad_points));
}

// ---------------------------------------------------------------- criterion 4
void growth_and_inflection() {
  std::mt19937_64 gen(103);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  bool all_ok = true;
  std::string canonical_detail;
  for (int draw = 0; draw < 20; ++draw) {
    double q = 0.5, n = 100000.0, x0 = 1000.0;  // canonical figure parameters
    if (draw > 0) {
      n = std::exp(std::log(1e3) + unit(gen) * std::log(1e5));
      q = 0.05 + 0.95 * unit(gen);
      x0 = q * n * std::exp(std::log(1e-4) + unit(gen) * std::log(0.8 / 1e-4));
    }
    const double threshold = 2.0 / (q * n + x0);

    // Strict growth on a fine grid.
    bool increasing = true;
    const int grid = 10000;
    double prev = oracles::x1_reference(q, n, threshold * 1e-3, x0);
    for (int i = 1; i <= grid; ++i) {
      const double beta = threshold * (1e-3 + (1.0 - 2e-3) * i / grid);
      const double x1 = oracles::x1_reference(q, n, beta, x0);
      if (!(x1 > prev)) increasing = false;
      prev = x1;
    }

    // Exactly one curvature sign change, located by the brute-force scan.
    double spacing = 0.0;
    const double scanned = oracles::inflection_sign_scan(q, n, x0, grid, &spacing);
    const auto found = wmodel::inflection_beta(q, n, x0);
    const bool located = scanned > 0.0 &&
                         std::fabs(found.theta - scanned) <= spacing &&
                         found.theta > 0.0 && found.theta < threshold;
    if (!(increasing && located)) all_ok = false;

    if (draw == 0) {
      // Report both stated candidates without asserting either: the unit
      // interval (1, 2) in threshold-halves, and the quarter-threshold
      // closed-form candidate.
      const double normalized = found.theta * (q * n + x0);
      canonical_detail = fmt(
          "canonical draw: theta=%.6e, theta*(qN+x0)=%.4f, inside (1,2): %s; "
          "quarter-threshold candidate 0.5 deviates by %.0f%%",
          found.theta, normalized, normalized > 1.0 && normalized < 2.0 ? "yes" : "no",
          100.0 * std::fabs(normalized - 0.5) / 0.5);
    }
  }
  report(4, "x1 strictly increasing in beta with one inflection", all_ok,
         fmt("20 draws; %s", canonical_detail.c_str()));
}

// ---------------------------------------------------------------- criterion 5
void gradient_checks() {
  std::mt19937_64 gen(104);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int draw = 0; draw < 1000; ++draw) {
    const double n = std::exp(std::log(1e3) + unit(gen) * std::log(1e6));
    const double q = 0.05 + 0.9 * unit(gen);
    const double x0 = (0.01 + 0.5 * unit(gen)) * q * n;
    const double beta = (0.05 + 0.9 * unit(gen)) * 2.0 / (q * n + x0);
    const WModelParams p(PopulationConfig(n, q), beta, x0);

    const double hx = 1e-4 * x0;
    const double fd_x0 = (oracles::x1_reference(q, n, beta, x0 + hx) -
                          oracles::x1_reference(q, n, beta, x0 - hx)) /
                         (2.0 * hx);
    worst = std::max(worst, std::fabs(wmodel::dx1_dx0(p) - fd_x0) / std::fabs(fd_x0));

    const double hb = 1e-4 * beta;
    const double fd_b = (oracles::x1_reference(q, n, beta + hb, x0) -
                         oracles::x1_reference(q, n, beta - hb, x0)) /
                        (2.0 * hb);
    worst = std::max(worst, std::fabs(wmodel::dx1_dbeta(p) - fd_b) / std::fabs(fd_b));
  }
  report(5, "closed-form sensitivities match finite differences", worst < 1e-6,
         fmt("1000 draws; max relative deviation %.2e (tolerance 1e-6)", worst));
}

// ---------------------------------------------------------------- criterion 6
void fluid_convergence() {
  // Direct model: the aggregated simulation is exact in expectation, so the
  // mean trajectory error is Monte-Carlo noise and must shrink with N.
  const double q = 0.5, alpha = 0.1;
  const std::size_t horizon = 60, reps = 100;
  std::vector<double> errors;
  for (const double n : {1e3, 1e4, 1e5}) {
    const DModelParams p(PopulationConfig(n, q), alpha,
                         std::numeric_limits<double>::infinity(), 1.0);
    const auto sims = sim::simulate_direct(p, sim::SimConfig(horizon, 2026, reps));
    const Trace mean = sim::mean_views(sims);
    double cum = 0.0, worst = 0.0;
    for (std::size_t day = 1; day <= horizon; ++day) {
      cum += mean.counts[day - 1];
      const double fluid = dmodel::cumulative(p, static_cast<double>(day));
      worst = std::max(worst, std::fabs(cum - fluid) / (q * n));
    }
    errors.push_back(worst);
  }
  const bool direct_ok = errors[2] < 0.03;
  const bool monotone = errors[0] > errors[1] && errors[1] > errors[2];

  // WOM endpoint against the analytic limit at matched normalized
  // parameters (beta*N = 1.67, x0 = N/100).
  std::vector<double> wom_errors;
  for (const double n : {1e3, 1e4, 1e5}) {
    const WModelParams p(PopulationConfig(n, q), 1.67 / n, 0.01 * n);
    const double x1 = wmodel::derived(p).x1;
    const auto sims = sim::simulate_wom(p, sim::SimConfig(150, 2027, reps));
    double mean_final = 0.0;
    for (const auto& rep : sims) mean_final += rep.cumulative_views();
    mean_final /= static_cast<double>(sims.size());
    wom_errors.push_back(std::fabs(mean_final - x1) / x1);
  }
  const bool wom_ok = wom_errors[2] < 0.10;
  const bool wom_monotone =
      wom_errors[0] > wom_errors[1] && wom_errors[1] > wom_errors[2];

  report(6, "stochastic simulator converges to the fluid models",
         direct_ok && monotone && wom_ok && wom_monotone,
         fmt("direct sup-norm/qN at N=1e3,1e4,1e5: %.4f, %.4f, %.4f "
             "(<0.03 at 1e5, monotone: %s); wom endpoint error vs x1: "
             "%.4f, %.4f, %.4f (<0.10 at 1e5, monotone: %s)",
             errors[0], errors[1], errors[2], monotone ? "yes" : "no",
             wom_errors[0], wom_errors[1], wom_errors[2],
             wom_monotone ? "yes" : "no"));
}

// ---------------------------------------------------------------- criterion 7
struct RecoveryStats {
  int correct = 0;
  int recovered = 0;  // correctly classified and parameter within 5%
  std::vector<double> param_errors;
};

void fit_round_trip() {
  std::mt19937_64 gen(105);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto log_uniform = [&](double lo, double hi) {
    return std::exp(std::log(lo) + unit(gen) * std::log(hi / lo));
  };

  const std::size_t horizon = 120;
  const int per_model = 100;
  RecoveryStats d_stats, w_stats;

  for (int i = 0; i < per_model; ++i) {
    const double n = 1e6;
    const double alpha = log_uniform(0.03, 0.4);
    const double q = log_uniform(0.05, 1.0);
    const double te = log_uniform(0.2 * horizon, 0.9 * horizon);
    const DModelParams truth(PopulationConfig(n, q), alpha, te,
                             alpha * log_uniform(3.0, 15.0));
    const Trace trace = dmodel::daily_counts(truth, horizon);
    const fit::FitResult res = fit::select_best(trace, n);
    if (res.model_kind == fit::ModelKind::DModel) {
      ++d_stats.correct;
      const double err = std::fabs(res.dparams->alpha - alpha) / alpha;
      d_stats.param_errors.push_back(err);
      if (err <= 0.05) ++d_stats.recovered;
    }
  }
  for (int i = 0; i < per_model; ++i) {
    const double n = 1e5;
    const double q = log_uniform(0.1, 1.0);
    const double growth = log_uniform(1.15, 4.0);  // beta q N
    const double bn = growth / q;
    const double x0 = log_uniform(1.0, 0.05 * q * n);
    const WModelParams truth(PopulationConfig(n, q), bn / n, x0);
    const Trace trace = wmodel::discrete_trace(truth, horizon);
    const fit::FitResult res = fit::select_best(trace, n);
    if (res.model_kind == fit::ModelKind::WModel) {
      ++w_stats.correct;
      const double err = std::fabs(res.wparams->fanout() - bn) / bn;
      w_stats.param_errors.push_back(err);
      if (err <= 0.05) ++w_stats.recovered;
    }
  }

  const double class_rate =
      static_cast<double>(d_stats.correct + w_stats.correct) / (2.0 * per_model);
  const double d_rec = d_stats.correct
                           ? static_cast<double>(d_stats.recovered) / d_stats.correct
                           : 0.0;
  const double w_rec = w_stats.correct
                           ? static_cast<double>(w_stats.recovered) / w_stats.correct
                           : 0.0;

  // Noisy variant: 10% lognormal observation noise over 50 seeds; median
  // recovery within 20%.
  const DModelParams d_truth(PopulationConfig(1e6, 0.3), 0.1, 30.0, 1.0);
  const Trace d_clean = dmodel::daily_counts(d_truth, 90);
  const WModelParams w_truth(PopulationConfig(1e5, 0.4), 3.0 / 1e5, 10.0);
  const Trace w_clean = wmodel::discrete_trace(w_truth, 90);
  std::vector<double> d_noisy_err, w_noisy_err;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Trace dn = sim::add_observation_noise(d_clean, 0.10, derive_seed(600, seed));
    const fit::FitResult dr = fit::fit_dmodel(dn, 1e6);
    d_noisy_err.push_back(std::fabs(dr.dparams->alpha - 0.1) / 0.1);
    const Trace wn = sim::add_observation_noise(w_clean, 0.10, derive_seed(700, seed));
    const fit::FitResult wr = fit::fit_wmodel(wn, 1e5);
    w_noisy_err.push_back(std::fabs(wr.wparams->fanout() - 3.0) / 3.0);
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double d_med = median(d_noisy_err);
  const double w_med = median(w_noisy_err);

  const bool pass = class_rate >= 0.95 && d_rec >= 0.95 && w_rec >= 0.95 &&
                    d_med <= 0.20 && w_med <= 0.20;
  report(7, "synthetic corpus round trip (200 traces + noise study)", pass,
         fmt("classification %.1f%% (>=95%%); noise-free recovery within 5%%: "
             "alpha %.1f%%, beta*N %.1f%%; noisy medians: alpha %.3f, "
             "beta*N %.3f (<=0.20)",
             100.0 * class_rate, 100.0 * d_rec, 100.0 * w_rec, d_med, w_med));
}

// ---------------------------------------------------------------- criterion 8
void nmse_values() {
  const Trace actual({1.0, 2.0, 3.0});
  const double perfect = fit::nmse(actual, actual);
  const double hand = fit::nmse(Trace({2.0, 2.0, 2.0}), actual);

  std::mt19937_64 gen(106);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_scale = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    std::vector<double> av(30), pv(30);
    for (std::size_t i = 0; i < 30; ++i) {
      av[i] = 0.5 + 100.0 * unit(gen);
      pv[i] = 0.5 + 100.0 * unit(gen);
    }
    const double base = fit::nmse(Trace(pv), Trace(av));
    const double c = std::exp((unit(gen) - 0.5) * 20.0);
    for (auto& v : av) v *= c;
    for (auto& v : pv) v *= c;
    const double scaled = fit::nmse(Trace(pv), Trace(av));
    worst_scale = std::max(worst_scale, std::fabs(scaled - base) / base);
  }
  const bool pass = perfect == 0.0 &&
                    std::fabs(hand - 1.0 / 6.0) < 1e-15 && worst_scale < 1e-12;
  report(8, "normalized error metric unit values", pass,
         fmt("perfect fit %.1e, hand case |nmse-1/6| = %.1e, worst scale "
             "drift %.1e (tolerance 1e-12)",
             perfect, std::fabs(hand - 1.0 / 6.0), worst_scale));
}

// ---------------------------------------------------------------- criterion 9
void pipeline_golden() {
  const auto records = pipeline::read_records_csv(
      std::string(FIXTURES_DIR) + "/records_golden.csv");
  const auto result = pipeline::run(records);
  const auto& tv = result.summary.per_type.at("TV");
  const auto& traces = result.traces.at(pipeline::VideoType::TV);

  // The documented removal set is exactly {ua, ub, uc}.
  const auto filtered = pipeline::active_user_filter(records, 0.25);
  std::set<std::string> survivors;
  for (const auto& r : filtered.records) survivors.insert(r.user_id);
  const bool set_ok =
      survivors == std::set<std::string>{"ud", "ue", "uf", "ug"};

  const bool removal_ok = set_ok && tv.removed_users == 3 &&
                          tv.population == 4.0 &&
                          std::fabs(tv.removed_view_fraction - 720.0 / 3049.0) < 1e-12;
  const bool cold_ok = traces.size() == 1 && traces.count("hot") == 1 &&
                       traces.at("hot").total() == 1000.0;

  // Order sensitivity: cold-filtering before the population is fixed keeps
  // the video carried by occasional viewers.
  const std::int64_t d0 = pipeline::parse_iso_day("2014-09-01");
  const pipeline::DayWindow window{d0, d0 + 4};
  const auto cold_first = pipeline::cold_video_filter(
      pipeline::build_daily_traces(records, window), 1000.0);
  const bool order_observable =
      cold_first.count("niche") == 1 && traces.count("niche") == 0;

  report(9, "ingestion golden fixture and filtering order",
         removal_ok && cold_ok && order_observable,
         fmt("removed users 3 (share %.4f <= 0.25), N=4; kept 1000-view video, "
             "dropped 999; reversed filter order keeps the occasional-viewer "
             "video: %s",
             tv.removed_view_fraction, order_observable ? "yes" : "no"));
}

// --------------------------------------------------------------- criterion 10
void planted_correlations() {
  std::mt19937_64 gen(107);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.3);

  std::vector<analysis::CompositeVideo> composites;
  std::map<std::string, double> totals;
  const double n = 1e6;
  for (int s = 0; s < 60; ++s) {
    const double q = std::exp(std::log(0.02) + unit(gen) * std::log(0.8 / 0.02));
    {
      analysis::EpisodeFit f;
      f.video_id = "d" + std::to_string(s) + "_e1";
      f.series_id = "d" + std::to_string(s);
      f.episode = 1;
      f.kind = fit::ModelKind::DModel;
      f.q = q;
      f.n = n;
      f.alpha = 0.05 * std::pow(q, 1.1) * std::exp(noise(gen));
      f.t_e = 30.0;
      f.gamma = 10.0 * *f.alpha;
      auto c = analysis::aggregate_series(f.series_id, {f});
      totals[f.video_id] = (0.3 + 0.4 * unit(gen)) * c.mean_q * n;
      composites.push_back(std::move(c));
    }
    {
      analysis::EpisodeFit f;
      f.video_id = "w" + std::to_string(s) + "_e1";
      f.series_id = "w" + std::to_string(s);
      f.episode = 1;
      f.kind = fit::ModelKind::WModel;
      f.q = q;
      f.n = n;
      f.beta = 2.0 * std::pow(q, -1.2) * std::exp(noise(gen)) / n;
      f.x0 = 30.0;
      auto c = analysis::aggregate_series(f.series_id, {f});
      totals[f.video_id] = (0.3 + 0.4 * unit(gen)) * c.mean_q * n;
      composites.push_back(std::move(c));
    }
  }
  const auto rep = analysis::case_study_report(composites, totals);
  double d_r = 0.0, w_r = 0.0;
  for (const auto& pair : rep.pairs) {
    if (pair.name == "d_logq_logalpha") d_r = pair.pearson_r;
    if (pair.name == "w_logq_logbn") w_r = pair.pearson_r;
  }

  const double hand = analysis::pearson(std::vector{1.0, 2.0, 3.0, 4.0},
                                        std::vector{2.0, 1.0, 4.0, 3.0});

  const bool pass = d_r >= 0.5 && w_r <= -0.5 && std::fabs(hand - 0.6) < 1e-12;
  report(10, "planted correlations and hand-computed coefficient", pass,
         fmt("planted positive r=%.3f (>=0.5), planted negative r=%.3f "
             "(<=-0.5), |pearson-0.6| = %.1e (tolerance 1e-12)",
             d_r, w_r, std::fabs(hand - 0.6)));
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();

  figure_reproduction();
  threshold_boundary();
  concavity_in_seeds();
  growth_and_inflection();
  gradient_checks();
  fluid_convergence();
  fit_round_trip();
  nmse_values();
  pipeline_golden();
  planted_correlations();

  const double seconds =
      std::chrono::duration<double>(clock::now() - t0).count();
  std::printf("%s: %d of 10 criteria passed in %.1f s\n",
              failures == 0 ? "SUCCESS" : "FAILURE", 10 - failures, seconds);
  return failures == 0 ? 0 : 1;
}
