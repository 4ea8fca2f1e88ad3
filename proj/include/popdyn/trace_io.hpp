#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "popdyn/analysis.hpp"
#include "popdyn/fitting.hpp"
#include "popdyn/pipeline.hpp"
#include "popdyn/types.hpp"

namespace popdyn::io {

// ---- Trace CSV: header `video_id,day_index,views`, day_index is 1-based.

void write_traces_csv(std::ostream& out, const std::map<std::string, Trace>& traces);
void write_traces_csv_file(const std::string& path,
                           const std::map<std::string, Trace>& traces);

/// Strict reader; throws DataError with the offending line number.
std::map<std::string, Trace> read_traces_csv(std::istream& in);
std::map<std::string, Trace> read_traces_csv_file(const std::string& path);

/// Lenient reader for batch fitting: malformed rows poison only the video
/// they belong to, which lands in `failures` with its error message.
struct TraceReadResult {
  std::map<std::string, Trace> traces;
  std::map<std::string, std::string> failures;
};
TraceReadResult read_traces_csv_lenient(std::istream& in);

// ---- Fit results as JSON lines, one object per video.

struct FitLine {
  std::string video_id;
  bool failed = false;
  std::string error;
  fit::ModelKind model_kind = fit::ModelKind::DModel;
  double q = 0.0, n = 0.0, nmse = 0.0;
  bool converged = false;
  std::optional<double> alpha, beta, t_e, gamma, x0;
};

FitLine to_fit_line(const std::string& video_id, const fit::FitResult& result);

void write_fit_jsonl(std::ostream& out, const std::vector<FitLine>& lines);
void write_fit_jsonl_file(const std::string& path, const std::vector<FitLine>& lines);
std::vector<FitLine> read_fit_jsonl(std::istream& in);
std::vector<FitLine> read_fit_jsonl_file(const std::string& path);

// ---- Series mapping CSV: header `video_id,series_id`; file order defines
// the episode index within each series.

struct SeriesMap {
  std::map<std::string, std::string> series_by_video;
  std::map<std::string, int> episode_by_video;  // 1-based, per series
};
SeriesMap read_series_map(std::istream& in);
SeriesMap read_series_map_file(const std::string& path);

/// Joins fit lines with the series mapping; failed fits and unmapped videos
/// are skipped.
std::vector<analysis::EpisodeFit> join_episodes(const std::vector<FitLine>& fits,
                                                const SeriesMap& map);

// ---- JSON documents.

std::string corpus_summary_json(const pipeline::CorpusSummary& summary);
pipeline::CorpusSummary read_corpus_summary_file(const std::string& path);
std::string correlation_report_json(const analysis::CorrelationReport& report);
std::string composites_json(const std::vector<analysis::CompositeVideo>& composites);
std::vector<analysis::CompositeVideo> read_composites_json(std::istream& in);
std::vector<analysis::CompositeVideo> read_composites_json_file(const std::string& path);

// ---- Scatter CSV: header `x,y,series_id,label` (+ `episode` variant).

void write_scatter_csv(std::ostream& out, const std::vector<analysis::ScatterPoint>& pts,
                       bool with_episode);

/// Writes a string to a file, creating parent directories.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace popdyn::io
