#include "popdyn/pipeline.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <istream>
#include <sstream>
#include <unordered_map>

namespace popdyn::pipeline {

VideoType video_type_from_string(const std::string& s) {
  if (s == "Movie") return VideoType::Movie;
  if (s == "TV") return VideoType::TV;
  if (s == "News") return VideoType::News;
  if (s == "MV") return VideoType::MV;
  if (s == "Other") return VideoType::Other;
  throw DataError("unknown video type: " + s);
}

const char* to_string(VideoType t) {
  switch (t) {
    case VideoType::Movie: return "Movie";
    case VideoType::TV: return "TV";
    case VideoType::News: return "News";
    case VideoType::MV: return "MV";
    case VideoType::Other: return "Other";
  }
  return "Other";
}

std::int64_t civil_day(int year, int month, int dom) {
  // Days-from-civil conversion on the proleptic Gregorian calendar.
  year -= month <= 2;
  const std::int64_t era = (year >= 0 ? year : year - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(year - era * 400);
  const unsigned doy =
      (153u * static_cast<unsigned>(month + (month > 2 ? -3 : 9)) + 2u) / 5u +
      static_cast<unsigned>(dom) - 1u;
  const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::int64_t parse_iso_day(const std::string& text) {
  int y = 0, m = 0, d = 0;
  if (text.size() < 10 || std::sscanf(text.c_str(), "%4d-%2d-%2d", &y, &m, &d) != 3 ||
      text[4] != '-' || text[7] != '-')
    throw DataError("malformed ISO date: '" + text + "'");
  if (m < 1 || m > 12 || d < 1 || d > 31)
    throw DataError("date out of range: '" + text + "'");
  return civil_day(y, m, d);
}

std::string day_to_iso(std::int64_t day) {
  // Inverse of civil_day.
  std::int64_t z = day + 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned dom = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : static_cast<unsigned>(-9));
  char buf[48];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u",
                static_cast<long long>(y + (m <= 2)), m, dom);
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void strip_cr(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

}  // namespace

std::vector<ViewingRecord> parse_records_csv(std::istream& in) {
  std::vector<ViewingRecord> records;
  std::string line;
  std::size_t line_no = 0;
  if (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line != "timestamp,user_id,video_id,video_type")
      throw DataError("line 1: expected header timestamp,user_id,video_id,video_type");
  }
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4)
      throw DataError("line " + std::to_string(line_no) +
                      ": expected 4 fields, got " + std::to_string(fields.size()));
    ViewingRecord rec;
    try {
      rec.day = parse_iso_day(fields[0]);
      rec.type = video_type_from_string(fields[3]);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    rec.user_id = fields[1];
    rec.video_id = fields[2];
    if (rec.user_id.empty() || rec.video_id.empty())
      throw DataError("line " + std::to_string(line_no) + ": empty id field");
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<ViewingRecord> read_records_csv(const std::string& path) {
  // gzread hands back plain bytes for uncompressed files too, so one code
  // path covers both.
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw DataError("cannot open " + path);
  std::string content;
  char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) content.append(buf, static_cast<std::size_t>(n));
  const bool bad = n < 0;
  gzclose(f);
  if (bad) throw DataError("read error in " + path);
  std::istringstream ss(content);
  try {
    return parse_records_csv(ss);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

UserFilterResult active_user_filter(const std::vector<ViewingRecord>& records,
                                    double removal_share, RemovalRule rule) {
  if (!(removal_share >= 0.0) || !(removal_share < 1.0))
    throw ParamError("removal share must lie in [0, 1)");
  std::unordered_map<std::string, std::size_t> views_by_user;
  for (const auto& r : records) ++views_by_user[r.user_id];

  std::vector<std::pair<std::string, std::size_t>> ranking(views_by_user.begin(),
                                                           views_by_user.end());
  std::sort(ranking.begin(), ranking.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });

  const double total = static_cast<double>(records.size());
  const double budget = removal_share * total;
  std::size_t removed_views = 0;
  std::size_t cut = 0;  // number of users removed from the front of the ranking
  for (const auto& [user, views] : ranking) {
    const std::size_t next = removed_views + views;
    if (rule == RemovalRule::CapAtShare) {
      if (static_cast<double>(next) > budget) {
        // Never overshoot the share, except that a first user who alone
        // exceeds it is still removed.
        if (cut == 0 && total > 0.0) {
          removed_views = next;
          ++cut;
        }
        break;
      }
      removed_views = next;
      ++cut;
    } else {  // FirstCrossing: stop once the share is reached
      removed_views = next;
      ++cut;
      if (static_cast<double>(removed_views) >= budget) break;
    }
  }

  UserFilterResult result;
  result.removed_users = cut;
  result.population = static_cast<double>(ranking.size() - cut);
  result.removed_view_fraction =
      total > 0.0 ? static_cast<double>(removed_views) / total : 0.0;

  std::unordered_map<std::string, bool> removed;
  removed.reserve(cut);
  for (std::size_t i = 0; i < cut; ++i) removed[ranking[i].first] = true;
  result.records.reserve(records.size() - removed_views);
  for (const auto& r : records)
    if (!removed.count(r.user_id)) result.records.push_back(r);
  return result;
}

std::map<std::string, Trace> build_daily_traces(
    const std::vector<ViewingRecord>& records, DayWindow window) {
  if (window.end < window.start) throw ParamError("empty day window");
  std::unordered_map<std::string, std::unordered_map<std::int64_t, double>> acc;
  for (const auto& r : records) {
    if (r.day < window.start || r.day > window.end) continue;
    acc[r.video_id][r.day] += 1.0;
  }
  std::map<std::string, Trace> traces;
  for (auto& [video, by_day] : acc) {
    std::int64_t birth = window.end;
    for (const auto& [day, n] : by_day) birth = std::min(birth, day);
    std::vector<double> counts(static_cast<std::size_t>(window.end - birth + 1), 0.0);
    for (const auto& [day, n] : by_day)
      counts[static_cast<std::size_t>(day - birth)] = n;
    traces.emplace(video, Trace(std::move(counts)));
  }
  return traces;
}

std::map<std::string, Trace> cold_video_filter(std::map<std::string, Trace> traces,
                                               double threshold) {
  for (auto it = traces.begin(); it != traces.end();) {
    if (it->second.total() < threshold)
      it = traces.erase(it);
    else
      ++it;
  }
  return traces;
}

PipelineResult run(const std::vector<ViewingRecord>& records,
                   std::optional<DayWindow> window, double cold_threshold,
                   double removal_share, RemovalRule rule) {
  PipelineResult result;
  if (records.empty()) return result;

  DayWindow w{};
  if (window) {
    w = *window;
  } else {
    w.start = records.front().day;
    w.end = records.front().day;
    for (const auto& r : records) {
      w.start = std::min(w.start, r.day);
      w.end = std::max(w.end, r.day);
    }
  }

  std::map<VideoType, std::vector<ViewingRecord>> by_type;
  for (const auto& r : records)
    if (r.day >= w.start && r.day <= w.end) by_type[r.type].push_back(r);

  for (auto& [type, recs] : by_type) {
    // Population is fixed before any video-level filtering.
    UserFilterResult filtered = active_user_filter(recs, removal_share, rule);
    auto traces = build_daily_traces(filtered.records, w);
    traces = cold_video_filter(std::move(traces), cold_threshold);

    TypeSummary summary;
    summary.population = filtered.population;
    summary.removed_view_fraction = filtered.removed_view_fraction;
    summary.removed_users = filtered.removed_users;
    summary.retained_videos = traces.size();
    summary.retained_records = filtered.records.size();
    result.summary.per_type[to_string(type)] = summary;
    result.traces[type] = std::move(traces);
  }
  return result;
}

}  // namespace popdyn::pipeline
