#include "popdyn/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "popdyn/dmodel.hpp"
#include "popdyn/rng.hpp"
#include "popdyn/wmodel.hpp"

namespace popdyn::fit {

double nmse(const Trace& predicted, const Trace& actual) {
  if (predicted.horizon() != actual.horizon())
    throw DataError("nmse: trace lengths differ");
  const std::size_t t = actual.horizon();
  if (t == 0) throw DataError("nmse: empty traces");
  const double mean = actual.total() / static_cast<double>(t);
  if (mean == 0.0) throw DataError("nmse: actual trace has zero mean");
  double sq = 0.0;
  for (std::size_t i = 0; i < t; ++i) {
    const double d = predicted.counts[i] - actual.counts[i];
    sq += d * d;
  }
  return sq / static_cast<double>(t) / (mean * mean);
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Gaussian elimination with partial pivoting; A is n x n row-major and is
// destroyed. Returns false when the system is numerically singular.
bool solve_linear(std::vector<double> a, std::vector<double> b,
                  std::vector<double>& out) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t row = col + 1; row < n; ++row)
      if (std::fabs(a[row * n + col]) > std::fabs(a[pivot * n + col])) pivot = row;
    if (std::fabs(a[pivot * n + col]) < 1e-300) return false;
    if (pivot != col) {
      for (std::size_t k = col; k < n; ++k)
        std::swap(a[col * n + k], a[pivot * n + k]);
      std::swap(b[col], b[pivot]);
    }
    const double inv = 1.0 / a[col * n + col];
    for (std::size_t row = col + 1; row < n; ++row) {
      const double f = a[row * n + col] * inv;
      if (f == 0.0) continue;
      for (std::size_t k = col; k < n; ++k) a[row * n + k] -= f * a[col * n + k];
      b[row] -= f * b[col];
    }
  }
  out.assign(n, 0.0);
  for (std::size_t row = n; row-- > 0;) {
    double s = b[row];
    for (std::size_t k = row + 1; k < n; ++k) s -= a[row * n + k] * out[k];
    out[row] = s / a[row * n + row];
  }
  return true;
}

// Differentiates the projected composition r(project(p)); the step is
// projected exactly like optimizer trial points, so a coordinate sitting on
// its bound is probed inward instead of outside the feasible set.
void forward_difference_jacobian(const ResidualFn& residuals,
                                 std::span<const double> params,
                                 const std::vector<double>& r0,
                                 const ProjectFn* project,
                                 std::vector<double>& jac) {
  const std::size_t m = r0.size();
  const std::size_t n = params.size();
  jac.assign(m * n, 0.0);
  std::vector<double> p(params.begin(), params.end());
  std::vector<double> r1;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = 1e-6 * (std::fabs(params[i]) + 1e-9);
    double eff = 0.0;
    for (const double direction : {h, -h}) {
      p.assign(params.begin(), params.end());
      p[i] += direction;
      if (project) (*project)(p);
      eff = p[i] - params[i];
      if (std::fabs(eff) > 0.25 * h) break;
    }
    if (std::fabs(eff) <= 0.25 * h) continue;  // pinned parameter: zero column
    residuals(p, r1);
    for (std::size_t k = 0; k < m; ++k) jac[k * n + i] = (r1[k] - r0[k]) / eff;
  }
}

}  // namespace

LMOutcome levenberg_marquardt(const ResidualFn& residuals,
                              std::vector<double> init, const FitOptions& opts,
                              const JacobianFn* jacobian,
                              const ProjectFn* project) {
  opts.validate();
  const std::size_t n = init.size();
  if (n == 0) throw ParamError("no parameters to fit");
  if (project) (*project)(init);

  std::vector<double> r;
  residuals(init, r);
  const std::size_t m = r.size();
  if (m == 0) throw FitError("residual vector is empty");
  double ssr = dot(r, r);
  if (!std::isfinite(ssr))
    throw FitError("non-finite residual at the initial point");

  std::vector<double> params = init;
  std::vector<double> jac, jtj(n * n), jtr(n), a, step, trial, r_trial;
  double lambda = opts.initial_damping;
  FitDiagnostics diag;

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    diag.iterations = iter;
    if (jacobian)
      (*jacobian)(params, jac);
    else
      forward_difference_jacobian(residuals, params, r, project, jac);

    for (std::size_t i = 0; i < n; ++i) {
      jtr[i] = 0.0;
      for (std::size_t k = 0; k < m; ++k) jtr[i] += jac[k * n + i] * r[k];
      for (std::size_t j = i; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < m; ++k) s += jac[k * n + i] * jac[k * n + j];
        jtj[i * n + j] = s;
        jtj[j * n + i] = s;
      }
    }

    bool accepted = false;
    bool done = false;
    for (int attempt = 0; attempt < 64; ++attempt) {
      a = jtj;
      for (std::size_t i = 0; i < n; ++i)
        a[i * n + i] += lambda * std::max(jtj[i * n + i], 1e-30);
      std::vector<double> rhs(n);
      for (std::size_t i = 0; i < n; ++i) rhs[i] = -jtr[i];
      if (!solve_linear(a, rhs, step)) {
        lambda *= opts.damping_up;
        continue;
      }
      trial = params;
      for (std::size_t i = 0; i < n; ++i) trial[i] += step[i];
      if (project) (*project)(trial);
      residuals(trial, r_trial);
      const double ssr_trial = dot(r_trial, r_trial);
      if (std::isfinite(ssr_trial) && ssr_trial < ssr) {
        double rel_step = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          rel_step = std::max(rel_step, std::fabs(trial[i] - params[i]) /
                                            (std::fabs(params[i]) + 1e-12));
        const double improvement = (ssr - ssr_trial) / std::max(ssr, 1e-300);
        params.swap(trial);
        r.swap(r_trial);
        ssr = ssr_trial;
        lambda = std::max(lambda * opts.damping_down, 1e-14);
        accepted = true;
        if (rel_step < opts.convergence_tol ||
            improvement < opts.convergence_tol) {
          diag.converged = true;
          done = true;
        }
        break;
      }
      lambda *= opts.damping_up;
      if (lambda > 1e14) break;
    }
    if (!accepted) {
      // No improving step exists at any damping: already at a local minimum.
      diag.converged = true;
      break;
    }
    if (done) break;
  }

  diag.objective = ssr;
  diag.residual_norm = std::sqrt(ssr);
  return LMOutcome{std::move(params), diag};
}

namespace {

// Deterministic multistart perturbation factor in [1/range, range] for
// start k, parameter slot i. No RNG state: repeated fits are identical.
double perturb_factor(std::uint64_t k, std::uint64_t i, double range) {
  const double u =
      static_cast<double>(splitmix64(0xF17C0DEull + 64 * k + i) >> 11) *
      0x1.0p-53;
  return std::exp((2.0 * u - 1.0) * std::log(range));
}

void check_fittable(const Trace& trace) {
  if (trace.horizon() == 0) throw DataError("cannot fit an empty trace");
  if (trace.total() == 0.0)
    throw DataError("cannot fit a trace with zero mean");
}

struct Candidate {
  std::vector<double> params;
  FitDiagnostics diag;
  bool valid = false;
};

// Runs LM from each start and keeps the lowest final objective.
Candidate best_of_starts(const ResidualFn& residuals,
                         const std::vector<std::vector<double>>& starts,
                         const FitOptions& opts, const JacobianFn* jacobian,
                         const ProjectFn& project) {
  Candidate best;
  for (const auto& start : starts) {
    try {
      LMOutcome out = levenberg_marquardt(residuals, start, opts, jacobian,
                                          &project);
      if (!best.valid || out.diag.objective < best.diag.objective) {
        best.params = std::move(out.params);
        best.diag = out.diag;
        best.valid = true;
      }
    } catch (const FitError&) {
      // A start with non-finite residuals is skipped, not fatal.
    }
  }
  if (!best.valid) throw FitError("all fit starts failed");
  return best;
}

}  // namespace

ResidualFn dmodel_residuals(const Trace& trace, double n) {
  return [counts = trace.counts, n](std::span<const double> p,
                                    std::vector<double>& out) {
    const double alpha = p[0], q = p[1], te = p[2], gamma = p[3];
    const double peak = alpha * q * n;
    out.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
      const double t = static_cast<double>(i + 1);
      const double v = t <= te
                           ? peak * std::exp(-alpha * t)
                           : peak * std::exp(-alpha * te - gamma * (t - te));
      out[i] = v - counts[i];
    }
  };
}

JacobianFn dmodel_jacobian(const Trace& trace, double n) {
  return [m = trace.horizon(), n](std::span<const double> p,
                                  std::vector<double>& jac) {
    const double alpha = p[0], q = p[1], te = p[2], gamma = p[3];
    jac.assign(m * 4, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double t = static_cast<double>(i + 1);
      if (t <= te) {
        const double e = std::exp(-alpha * t);
        jac[i * 4 + 0] = q * n * e * (1.0 - alpha * t);
        jac[i * 4 + 1] = alpha * n * e;
      } else {
        const double e = std::exp(-alpha * te - gamma * (t - te));
        const double v = alpha * q * n * e;
        jac[i * 4 + 0] = q * n * e * (1.0 - alpha * te);
        jac[i * 4 + 1] = alpha * n * e;
        jac[i * 4 + 2] = v * (gamma - alpha);
        jac[i * 4 + 3] = -v * (t - te);
      }
    }
  };
}

ResidualFn wmodel_residuals(const Trace& trace, double n) {
  return [counts = trace.counts, n](std::span<const double> p,
                                    std::vector<double>& out) {
    const WModelParams params(PopulationConfig(n, p[1]), p[0] / n, p[2]);
    const Trace predicted = wmodel::discrete_trace(params, counts.size());
    out.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
      out[i] = predicted.counts[i] - counts[i];
  };
}

FitResult fit_dmodel(const Trace& trace, double n, const FitOptions& opts) {
  check_fittable(trace);
  if (!(n > 0.0)) throw ParamError("population n must be positive");
  opts.validate();
  const std::size_t horizon = trace.horizon();
  const double t_max = static_cast<double>(horizon);
  const auto& counts = trace.counts;

  // Parameter order: alpha, q, t_e, gamma.
  std::vector<std::pair<double, double>> box = opts.bounds;
  if (box.empty())
    box = {{1e-8, 8.0}, {1e-9, 1.0}, {0.0, t_max}, {1e-8, 64.0}};
  if (box.size() != 4) throw ParamError("fit_dmodel expects 4 bound pairs");

  const ProjectFn project = [box](std::span<double> p) {
    p[0] = std::clamp(p[0], std::max(box[0].first, 1e-12), box[0].second);
    p[1] = std::clamp(p[1], std::max(box[1].first, 1e-12),
                      std::min(box[1].second, 1.0));
    p[2] = std::clamp(p[2], std::max(box[2].first, 0.0), box[2].second);
    p[3] = std::clamp(p[3], box[3].first, box[3].second);
    // The decay must stay strictly above the recommendation rate.
    p[3] = std::max(p[3], p[0] * (1.0 + 1e-6));
  };

  const ResidualFn residuals = dmodel_residuals(trace, n);
  const JacobianFn jacobian = dmodel_jacobian(trace, n);

  // Initial estimates: the decay rate from the time to reach 63.2% of the
  // total, the attractiveness from extrapolated cumulative views, and the
  // cutoff from the sharpest break in the log-count curvature.
  const double total = trace.total();
  std::size_t t63 = horizon;
  double cum = 0.0;
  for (std::size_t i = 0; i < horizon; ++i) {
    cum += counts[i];
    if (cum >= 0.632 * total) {
      t63 = i + 1;
      break;
    }
  }
  const double alpha0 = std::clamp(1.0 / static_cast<double>(t63), 1e-4, 4.0);
  const double q0 =
      std::clamp(total / (n * (1.0 - std::exp(-alpha0 * t_max))), 1e-6, 1.0);
  double te0 = t_max;
  double best_break = 0.0;
  for (std::size_t i = 1; i + 1 < horizon; ++i) {
    const double curv = std::fabs(std::log(counts[i + 1] + 1e-9) -
                                  2.0 * std::log(counts[i] + 1e-9) +
                                  std::log(counts[i - 1] + 1e-9));
    if (curv > best_break) {
      best_break = curv;
      te0 = static_cast<double>(i + 1);
    }
  }
  if (best_break < 0.5) te0 = t_max;  // no visible cutoff in the window

  std::vector<std::vector<double>> starts;
  starts.push_back({alpha0, q0, te0, 10.0 * alpha0});
  const double te_grid[] = {t_max, 0.75 * t_max, 0.5 * t_max, 0.25 * t_max};
  for (int k = 1; k < opts.multistart_count; ++k) {
    const double a = alpha0 * perturb_factor(k, 0, 4.0);
    const double q = q0 * perturb_factor(k, 1, 4.0);
    const double te = k - 1 < 4 ? te_grid[k - 1] : te0 * perturb_factor(k, 2, 4.0);
    starts.push_back({a, q, te, 10.0 * a});
  }

  Candidate best = best_of_starts(residuals, starts, opts, &jacobian, project);
  const double alpha = best.params[0], q = best.params[1];
  const double te = best.params[2], gamma = best.params[3];
  FitResult result;
  result.model_kind = ModelKind::DModel;
  result.dparams = DModelParams(PopulationConfig(n, q), alpha, te, gamma);
  result.nmse = nmse(dmodel::daily_counts(*result.dparams, horizon), trace);
  result.iterations = best.diag.iterations;
  result.converged = best.diag.converged;
  result.residual_norm = best.diag.residual_norm;
  return result;
}

FitResult fit_wmodel(const Trace& trace, double n, const FitOptions& opts) {
  check_fittable(trace);
  if (!(n > 0.0)) throw ParamError("population n must be positive");
  opts.validate();
  const std::size_t horizon = trace.horizon();
  const auto& counts = trace.counts;

  // Parameter order: beta*N (fan-out), q, x0. Fitting the normalized
  // fan-out keeps the parameter magnitudes comparable.
  std::vector<std::pair<double, double>> box = opts.bounds;
  if (box.empty()) box = {{1e-8, 64.0}, {1e-9, 1.0}, {1e-12, 0.0}};
  if (box.size() != 3) throw ParamError("fit_wmodel expects 3 bound pairs");

  const ProjectFn project = [box, n](std::span<double> p) {
    p[0] = std::clamp(p[0], std::max(box[0].first, 1e-12), box[0].second);
    p[1] = std::clamp(p[1], std::max(box[1].first, 1e-12),
                      std::min(box[1].second, 1.0));
    // Seeds live strictly inside (0, qN); an upper bound of 0 means
    // "derive from q".
    double hi = box[2].second > 0.0 ? box[2].second : n;
    hi = std::min(hi, 0.995 * p[1] * n);
    const double lo = std::min(std::max(box[2].first, 1e-300), hi);
    p[2] = std::clamp(p[2], lo, hi);
  };

  const ResidualFn residuals = wmodel_residuals(trace, n);

  // Initial estimates from the early growth ratio and the final reach.
  const double total = trace.total();
  std::size_t first_pos = 0;
  while (first_pos < horizon && counts[first_pos] <= 0.0) ++first_pos;
  double ratio = 1.0;
  if (first_pos + 1 < horizon && counts[first_pos] > 0.0 &&
      counts[first_pos + 1] > 0.0)
    ratio = std::clamp(counts[first_pos + 1] / counts[first_pos], 0.05, 8.0);
  const double c0 = first_pos < horizon ? std::max(counts[first_pos], 1e-9) : 1e-9;
  // The final cumulative reach never exceeds qN, so total/n bounds q from
  // below; sweep starts up from there to cover partially diffused cascades.
  const double q_floor = std::clamp(total / n, 1e-4, 1.0);

  std::vector<std::vector<double>> starts;
  const int m = std::max(opts.multistart_count, 1);
  for (int k = 0; k < m; ++k) {
    const double u = m == 1 ? 0.0 : static_cast<double>(k) / (m - 1);
    double q = std::exp(std::log(q_floor) * (1.0 - u));  // q_floor .. 1
    if (k > 0) q = std::clamp(q * perturb_factor(k, 3, 1.5), 1e-4, 1.0);
    const double bn =
        std::clamp(ratio / q * (k == 0 ? 1.0 : perturb_factor(k, 4, 2.0)),
                   0.02, 48.0);
    const double x0 =
        std::clamp(c0 / (bn * q), 1e-6, 0.9 * q * n);
    starts.push_back({bn, q, x0});
  }

  Candidate best = best_of_starts(residuals, starts, opts, nullptr, project);
  const double bn = best.params[0], q = best.params[1], x0 = best.params[2];
  FitResult result;
  result.model_kind = ModelKind::WModel;
  result.wparams = WModelParams(PopulationConfig(n, q), bn / n, x0);
  result.nmse = nmse(wmodel::discrete_trace(*result.wparams, horizon), trace);
  result.iterations = best.diag.iterations;
  result.converged = best.diag.converged;
  result.residual_norm = best.diag.residual_norm;
  return result;
}

const FitResult& better_of(const FitResult& direct, const FitResult& wom) {
  return direct.nmse <= wom.nmse ? direct : wom;
}

FitResult select_best(const Trace& trace, double n, const FitOptions& opts) {
  // Explicit bounds are routed to the fitter whose parameter count they
  // match; the other fitter keeps its defaults.
  if (!opts.bounds.empty() && opts.bounds.size() != 3 && opts.bounds.size() != 4)
    throw ParamError("bounds must hold 4 pairs (direct) or 3 pairs (wom)");
  FitOptions d_opts = opts, w_opts = opts;
  if (opts.bounds.size() == 3) d_opts.bounds.clear();
  if (opts.bounds.size() == 4) w_opts.bounds.clear();

  std::optional<FitResult> d, w;
  std::string d_err, w_err;
  try {
    d = fit_dmodel(trace, n, d_opts);
  } catch (const std::exception& e) {
    d_err = e.what();
  }
  try {
    w = fit_wmodel(trace, n, w_opts);
  } catch (const std::exception& e) {
    w_err = e.what();
  }
  if (!d && !w) throw BothFitsFailedError(d_err, w_err);
  if (!w) return *d;
  if (!d) return *w;
  return better_of(*d, *w);
}

}  // namespace popdyn::fit
