#include "popdyn/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace popdyn::analysis {

Label classify_composite(std::span<const EpisodeFit> fits) {
  if (fits.empty()) throw DataError("cannot classify an empty episode list");
  std::size_t direct = 0;
  for (const auto& f : fits)
    if (f.kind == fit::ModelKind::DModel) ++direct;
  return 2 * direct > fits.size() ? Label::DRecommended : Label::WRecommended;
}

namespace {

std::optional<double> mean_of(const std::vector<EpisodeFit>& fits,
                              fit::ModelKind kind,
                              std::optional<double> EpisodeFit::*field) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& f : fits) {
    if (f.kind != kind || !(f.*field)) continue;
    sum += *(f.*field);
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

}  // namespace

CompositeVideo aggregate_series(const std::string& series_id,
                                std::vector<EpisodeFit> fits) {
  if (fits.empty()) throw DataError("cannot aggregate an empty episode list");
  for (const auto& f : fits)
    if (!f.series_id.empty() && f.series_id != series_id)
      throw DataError("episode " + f.video_id + " belongs to series " +
                      f.series_id + ", not " + series_id);
  CompositeVideo c;
  c.series_id = series_id;
  c.label = classify_composite(fits);
  c.n = fits.front().n;
  double q_sum = 0.0;
  for (const auto& f : fits) q_sum += f.q;
  c.mean_q = q_sum / static_cast<double>(fits.size());
  c.mean_alpha = mean_of(fits, fit::ModelKind::DModel, &EpisodeFit::alpha);
  c.mean_t_e = mean_of(fits, fit::ModelKind::DModel, &EpisodeFit::t_e);
  c.mean_gamma = mean_of(fits, fit::ModelKind::DModel, &EpisodeFit::gamma);
  c.mean_beta = mean_of(fits, fit::ModelKind::WModel, &EpisodeFit::beta);
  c.mean_x0 = mean_of(fits, fit::ModelKind::WModel, &EpisodeFit::x0);
  c.episode_fits = std::move(fits);
  return c;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DataError("pearson: length mismatch");
  const std::size_t n = xs.size();
  if (n < 2) throw DataError("pearson: need at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw DataError("pearson: zero variance input");
  return sxy / std::sqrt(sxx * syy);
}

namespace {

double pearson_of(const std::vector<ScatterPoint>& pts) {
  std::vector<double> xs, ys;
  xs.reserve(pts.size());
  ys.reserve(pts.size());
  for (const auto& p : pts) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  return pearson(xs, ys);
}

// Mean per-episode total view count of the composite; episodes without a
// trace are skipped.
double mean_episode_views(const CompositeVideo& c,
                          const std::map<std::string, double>& totals) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& f : c.episode_fits) {
    auto it = totals.find(f.video_id);
    if (it == totals.end()) continue;
    sum += it->second;
    ++count;
  }
  if (count == 0)
    throw DataError("no trace totals available for series " + c.series_id);
  return sum / static_cast<double>(count);
}

}  // namespace

CorrelationReport case_study_report(
    std::span<const CompositeVideo> composites,
    const std::map<std::string, double>& total_views_by_video) {
  CorrelationReport report;

  PairSet d_logq_logalpha{"d_logq_logalpha", "log_q", "log_alpha", {}, 0.0};
  PairSet d_alpha_completion{"d_alpha_completion", "alpha", "completion", {}, 0.0};
  PairSet w_logq_logbn{"w_logq_logbn", "log_q", "log_beta_n", {}, 0.0};
  PairSet w_seed_completion{"w_seedfrac_completion", "x0_over_qn", "completion", {}, 0.0};
  ScatterSet d_episodes{"d_episodes_logq_logalpha", "log_q", "log_alpha", {}};
  ScatterSet w_episodes{"w_episodes_logq_logbn", "log_q", "log_beta_n", {}};

  for (const auto& c : composites) {
    const double completion =
        mean_episode_views(c, total_views_by_video) / (c.mean_q * c.n);
    if (completion > 1.1)
      report.warnings.push_back("series " + c.series_id +
                                ": completion fraction " +
                                std::to_string(completion) +
                                " above 1.1, fit quality suspect");
    if (c.label == Label::DRecommended) {
      ++report.d_composites;
      if (c.mean_alpha) {
        d_logq_logalpha.points.push_back(
            {std::log(c.mean_q), std::log(*c.mean_alpha), c.series_id, c.label, 0});
        d_alpha_completion.points.push_back(
            {*c.mean_alpha, completion, c.series_id, c.label, 0});
      }
    } else {
      ++report.w_composites;
      if (c.mean_beta) {
        w_logq_logbn.points.push_back(
            {std::log(c.mean_q), std::log(*c.mean_beta * c.n), c.series_id,
             c.label, 0});
      }
      if (c.mean_x0) {
        w_seed_completion.points.push_back(
            {*c.mean_x0 / (c.mean_q * c.n), completion, c.series_id, c.label, 0});
      }
    }
    for (const auto& f : c.episode_fits) {
      if (f.kind == fit::ModelKind::DModel && f.alpha)
        d_episodes.points.push_back({std::log(f.q), std::log(*f.alpha),
                                     c.series_id, c.label, f.episode});
      if (f.kind == fit::ModelKind::WModel && f.beta)
        w_episodes.points.push_back({std::log(f.q), std::log(*f.beta * f.n),
                                     c.series_id, c.label, f.episode});
    }
  }

  if (report.d_composites < 2)
    throw InsufficientDataError(
        "fewer than two d-recommended composites; correlations undefined");
  if (report.w_composites < 2)
    throw InsufficientDataError(
        "fewer than two w-recommended composites; correlations undefined");

  for (PairSet* set :
       {&d_logq_logalpha, &d_alpha_completion, &w_logq_logbn, &w_seed_completion}) {
    set->pearson_r = pearson_of(set->points);
    report.pairs.push_back(std::move(*set));
  }
  report.episode_scatters.push_back(std::move(d_episodes));
  report.episode_scatters.push_back(std::move(w_episodes));
  return report;
}

}  // namespace popdyn::analysis
