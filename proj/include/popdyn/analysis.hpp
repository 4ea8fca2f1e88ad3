#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "popdyn/fitting.hpp"
#include "popdyn/types.hpp"

namespace popdyn::analysis {

/// Which recommendation force explains a video (or composite) better.
enum class Label { DRecommended, WRecommended };

inline const char* to_string(Label l) {
  return l == Label::DRecommended ? "d-recommended" : "w-recommended";
}

/// A fitted episode, as read from a fit batch joined with the series map.
struct EpisodeFit {
  std::string video_id;
  std::string series_id;
  int episode = 0;  // 1-based position within the series mapping
  fit::ModelKind kind = fit::ModelKind::DModel;
  double q = 0.0;
  double n = 0.0;
  std::optional<double> alpha, t_e, gamma, beta, x0;
  double nmse = 0.0;
  bool converged = false;
};

/// Episodes vote with their better-fitting model: strictly more direct-model
/// episodes than half makes the composite d-recommended; exact ties go to
/// w-recommended. Throws DataError on an empty list.
Label classify_composite(std::span<const EpisodeFit> fits);

/// A TV series (or other related-video group) collapsed into one unit by
/// averaging episode parameters.
struct CompositeVideo {
  std::string series_id;
  std::vector<EpisodeFit> episode_fits;
  Label label = Label::WRecommended;
  double n = 0.0;
  double mean_q = 0.0;  // averaged over all episodes
  // Averages over the episodes fitted by the respective model.
  std::optional<double> mean_alpha, mean_t_e, mean_gamma, mean_beta, mean_x0;
};

CompositeVideo aggregate_series(const std::string& series_id,
                                std::vector<EpisodeFit> fits);

/// Sample Pearson correlation coefficient. Throws DataError on mismatched
/// lengths, fewer than two points, or zero variance in either input.
double pearson(std::span<const double> xs, std::span<const double> ys);

/// Fewer than two composites in a class needed by a correlation pair.
class InsufficientDataError : public DataError {
  using DataError::DataError;
};

struct ScatterPoint {
  double x = 0.0, y = 0.0;
  std::string series_id;
  Label label = Label::WRecommended;
  int episode = 0;  // 0 for composite-level points
};

/// A named scatter with its correlation.
struct PairSet {
  std::string name;
  std::string x_name, y_name;
  std::vector<ScatterPoint> points;
  double pearson_r = 0.0;
};

/// Episode-level scatter kept for reproducing per-episode views; no
/// correlation is attached.
struct ScatterSet {
  std::string name;
  std::string x_name, y_name;
  std::vector<ScatterPoint> points;
};

struct CorrelationReport {
  std::vector<PairSet> pairs;
  std::vector<ScatterSet> episode_scatters;
  std::vector<std::string> warnings;  // e.g. completion fraction above 1.1
  std::size_t d_composites = 0;
  std::size_t w_composites = 0;
};

/// Builds the case-study statistics: for d-recommended composites the
/// (log q, log alpha) and (alpha, completion) pairs, for w-recommended the
/// (log q, log beta*N) and (x0/qN, completion) pairs, each with its Pearson
/// correlation, plus per-episode scatters. Completion of a composite is the
/// mean per-episode total view count divided by mean_q * N.
/// `total_views_by_video` maps video ids to their observed totals.
CorrelationReport case_study_report(
    std::span<const CompositeVideo> composites,
    const std::map<std::string, double>& total_views_by_video);

}  // namespace popdyn::analysis
