#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "popdyn/types.hpp"

namespace popdyn::pipeline {

enum class VideoType { Movie, TV, News, MV, Other };

VideoType video_type_from_string(const std::string& s);
const char* to_string(VideoType t);

/// One viewing event. The timestamp is kept at day granularity (civil days
/// since 1970-01-01); finer resolution plays no role in daily traces.
struct ViewingRecord {
  std::int64_t day = 0;
  std::string user_id;
  std::string video_id;
  VideoType type = VideoType::Other;
};

/// Inclusive range of civil days.
struct DayWindow {
  std::int64_t start = 0;
  std::int64_t end = 0;
};

/// Days since 1970-01-01 for a civil date.
std::int64_t civil_day(int year, int month, int dom);

/// Parses an ISO-8601 timestamp or date (YYYY-MM-DD with optional time
/// suffix) down to its civil day. Throws DataError on malformed input.
std::int64_t parse_iso_day(const std::string& text);

std::string day_to_iso(std::int64_t day);

/// Reads a viewing-records CSV with header
/// `timestamp,user_id,video_id,video_type`. Malformed rows raise DataError
/// with the line number.
std::vector<ViewingRecord> parse_records_csv(std::istream& in);

/// File variant; transparently accepts gzip-compressed input.
std::vector<ViewingRecord> read_records_csv(const std::string& path);

/// Which boundary rule the occasional-viewer removal uses.
enum class RemovalRule {
  CapAtShare,     // largest low-activity prefix whose views stay <= the share
  FirstCrossing,  // smallest prefix whose views reach >= the share
};

struct UserFilterResult {
  std::vector<ViewingRecord> records;  // views of the retained users
  double population = 0.0;             // N: count of retained users
  double removed_view_fraction = 0.0;
  std::size_t removed_users = 0;
};

/// Removes whole users from the bottom of the per-user view-count ranking
/// (ties broken by user id) until the removed views meet the rule for the
/// given share of total views. Under CapAtShare the removal never passes
/// the share, except that a first user who alone exceeds it is still
/// removed. Call this per video type, before any video-level filtering.
UserFilterResult active_user_filter(const std::vector<ViewingRecord>& records,
                                    double removal_share = 0.25,
                                    RemovalRule rule = RemovalRule::CapAtShare);

/// Per-video daily view counts over the window. Each trace starts on the
/// video's first viewed day; later gap days are explicit zeros and the
/// trace extends to the window end. Records outside the window are ignored.
std::map<std::string, Trace> build_daily_traces(
    const std::vector<ViewingRecord>& records, DayWindow window);

/// Drops videos whose total views fall strictly below the threshold.
std::map<std::string, Trace> cold_video_filter(std::map<std::string, Trace> traces,
                                               double threshold = 1000.0);

struct TypeSummary {
  double population = 0.0;  // N after the active-user filter
  std::size_t retained_videos = 0;
  std::size_t retained_records = 0;
  double removed_view_fraction = 0.0;
  std::size_t removed_users = 0;
};

struct CorpusSummary {
  std::map<std::string, TypeSummary> per_type;  // keyed by video-type name
};

struct PipelineResult {
  std::map<VideoType, std::map<std::string, Trace>> traces;
  CorpusSummary summary;
};

/// Full ingestion: split by type, fix the population first (active-user
/// filter), then build traces and drop cold videos. A missing window
/// defaults to the day span of the input records.
PipelineResult run(const std::vector<ViewingRecord>& records,
                   std::optional<DayWindow> window = std::nullopt,
                   double cold_threshold = 1000.0, double removal_share = 0.25,
                   RemovalRule rule = RemovalRule::CapAtShare);

}  // namespace popdyn::pipeline
