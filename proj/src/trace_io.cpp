#include "popdyn/trace_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace popdyn::io {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

}  // namespace

void write_traces_csv(std::ostream& out, const std::map<std::string, Trace>& traces) {
  out << "video_id,day_index,views\n";
  for (const auto& [video, trace] : traces)
    for (std::size_t i = 0; i < trace.horizon(); ++i)
      out << video << ',' << (i + 1) << ',' << fmt(trace.counts[i]) << '\n';
}

void write_traces_csv_file(const std::string& path,
                           const std::map<std::string, Trace>& traces) {
  std::ostringstream ss;
  write_traces_csv(ss, traces);
  write_text_file(path, ss.str());
}

namespace {

// Shared row scanner. `on_error` decides whether a bad row aborts (strict)
// or just poisons one video (lenient).
template <typename OnRow, typename OnError>
void scan_trace_csv(std::istream& in, OnRow on_row, OnError on_error) {
  std::string line;
  std::size_t line_no = 0;
  if (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "video_id,day_index,views")
      throw DataError("line 1: expected header video_id,day_index,views");
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos) {
      on_error("", "line " + std::to_string(line_no) + ": expected 3 fields");
      continue;
    }
    const std::string video = line.substr(0, c1);
    const std::string day_s = line.substr(c1 + 1, c2 - c1 - 1);
    const std::string views_s = line.substr(c2 + 1);
    std::size_t pos = 0;
    long day = 0;
    double views = 0.0;
    bool ok = !video.empty();
    try {
      day = std::stol(day_s, &pos);
      ok = ok && pos == day_s.size() && day >= 1;
      views = std::stod(views_s, &pos);
      ok = ok && pos == views_s.size() && views >= 0.0;
    } catch (const std::exception&) {
      ok = false;
    }
    if (!ok) {
      on_error(video, "line " + std::to_string(line_no) + ": malformed row");
      continue;
    }
    on_row(video, static_cast<std::size_t>(day), views);
  }
}

std::map<std::string, Trace> assemble(
    std::map<std::string, std::map<std::size_t, double>>& rows) {
  std::map<std::string, Trace> traces;
  for (auto& [video, by_day] : rows) {
    std::size_t horizon = 0;
    for (const auto& [day, v] : by_day) horizon = std::max(horizon, day);
    std::vector<double> counts(horizon, 0.0);
    for (const auto& [day, v] : by_day) counts[day - 1] = v;
    traces.emplace(video, Trace(std::move(counts)));
  }
  return traces;
}

}  // namespace

std::map<std::string, Trace> read_traces_csv(std::istream& in) {
  std::map<std::string, std::map<std::size_t, double>> rows;
  scan_trace_csv(
      in,
      [&](const std::string& video, std::size_t day, double views) {
        rows[video][day] = views;
      },
      [](const std::string&, const std::string& message) {
        throw DataError(message);
      });
  return assemble(rows);
}

std::map<std::string, Trace> read_traces_csv_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return read_traces_csv(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

TraceReadResult read_traces_csv_lenient(std::istream& in) {
  std::map<std::string, std::map<std::size_t, double>> rows;
  TraceReadResult result;
  scan_trace_csv(
      in,
      [&](const std::string& video, std::size_t day, double views) {
        if (!result.failures.count(video)) rows[video][day] = views;
      },
      [&](const std::string& video, const std::string& message) {
        if (video.empty()) return;  // row not attributable to any video
        result.failures[video] = message;
        rows.erase(video);
      });
  result.traces = assemble(rows);
  return result;
}

FitLine to_fit_line(const std::string& video_id, const fit::FitResult& r) {
  FitLine line;
  line.video_id = video_id;
  line.model_kind = r.model_kind;
  line.nmse = r.nmse;
  line.converged = r.converged;
  if (r.model_kind == fit::ModelKind::DModel) {
    line.q = r.dparams->pop.q;
    line.n = r.dparams->pop.n;
    line.alpha = r.dparams->alpha;
    line.t_e = r.dparams->t_e;
    line.gamma = r.dparams->gamma;
  } else {
    line.q = r.wparams->pop.q;
    line.n = r.wparams->pop.n;
    line.beta = r.wparams->beta;
    line.x0 = r.wparams->x0;
  }
  return line;
}

void write_fit_jsonl(std::ostream& out, const std::vector<FitLine>& lines) {
  for (const auto& l : lines) {
    json j;
    j["video_id"] = l.video_id;
    if (l.failed) {
      j["failed"] = true;
      j["error"] = l.error;
    } else {
      j["model_kind"] = fit::to_string(l.model_kind);
      j["q"] = l.q;
      j["N"] = l.n;
      j["nmse"] = l.nmse;
      j["converged"] = l.converged;
      if (l.alpha) j["alpha"] = *l.alpha;
      if (l.beta) j["beta"] = *l.beta;
      if (l.t_e) j["t_e"] = *l.t_e;
      if (l.gamma) j["gamma"] = *l.gamma;
      if (l.x0) j["x0"] = *l.x0;
    }
    out << j.dump() << '\n';
  }
}

void write_fit_jsonl_file(const std::string& path, const std::vector<FitLine>& lines) {
  std::ostringstream ss;
  write_fit_jsonl(ss, lines);
  write_text_file(path, ss.str());
}

std::vector<FitLine> read_fit_jsonl(std::istream& in) {
  std::vector<FitLine> lines;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (raw.empty()) continue;
    json j;
    try {
      j = json::parse(raw);
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    FitLine l;
    try {
      l.video_id = j.at("video_id").get<std::string>();
      if (j.value("failed", false)) {
        l.failed = true;
        l.error = j.value("error", "");
      } else {
        const std::string kind = j.at("model_kind").get<std::string>();
        if (kind == "DModel")
          l.model_kind = fit::ModelKind::DModel;
        else if (kind == "WModel")
          l.model_kind = fit::ModelKind::WModel;
        else
          throw DataError("unknown model_kind " + kind);
        l.q = j.at("q").get<double>();
        l.n = j.at("N").get<double>();
        l.nmse = j.at("nmse").get<double>();
        l.converged = j.value("converged", false);
        if (j.contains("alpha")) l.alpha = j["alpha"].get<double>();
        if (j.contains("beta")) l.beta = j["beta"].get<double>();
        if (j.contains("t_e")) l.t_e = j["t_e"].get<double>();
        if (j.contains("gamma")) l.gamma = j["gamma"].get<double>();
        if (j.contains("x0")) l.x0 = j["x0"].get<double>();
      }
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    lines.push_back(std::move(l));
  }
  return lines;
}

std::vector<FitLine> read_fit_jsonl_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return read_fit_jsonl(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

SeriesMap read_series_map(std::istream& in) {
  SeriesMap map;
  std::map<std::string, int> next_episode;
  std::string line;
  std::size_t line_no = 0;
  if (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "video_id,series_id")
      throw DataError("line 1: expected header video_id,series_id");
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 >= line.size())
      throw DataError("line " + std::to_string(line_no) + ": expected video_id,series_id");
    const std::string video = line.substr(0, comma);
    const std::string series = line.substr(comma + 1);
    if (map.series_by_video.count(video))
      throw DataError("line " + std::to_string(line_no) + ": duplicate video " + video);
    map.series_by_video[video] = series;
    map.episode_by_video[video] = ++next_episode[series];
  }
  return map;
}

SeriesMap read_series_map_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return read_series_map(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::vector<analysis::EpisodeFit> join_episodes(const std::vector<FitLine>& fits,
                                                const SeriesMap& map) {
  std::vector<analysis::EpisodeFit> episodes;
  for (const auto& f : fits) {
    if (f.failed) continue;
    auto it = map.series_by_video.find(f.video_id);
    if (it == map.series_by_video.end()) continue;
    analysis::EpisodeFit e;
    e.video_id = f.video_id;
    e.series_id = it->second;
    e.episode = map.episode_by_video.at(f.video_id);
    e.kind = f.model_kind;
    e.q = f.q;
    e.n = f.n;
    e.alpha = f.alpha;
    e.t_e = f.t_e;
    e.gamma = f.gamma;
    e.beta = f.beta;
    e.x0 = f.x0;
    e.nmse = f.nmse;
    e.converged = f.converged;
    episodes.push_back(std::move(e));
  }
  return episodes;
}

std::string corpus_summary_json(const pipeline::CorpusSummary& summary) {
  json root;
  root["types"] = json::object();
  for (const auto& [type, s] : summary.per_type) {
    json t;
    t["N"] = s.population;
    t["retained_videos"] = s.retained_videos;
    t["retained_records"] = s.retained_records;
    t["removed_view_fraction"] = s.removed_view_fraction;
    t["removed_users"] = s.removed_users;
    root["types"][type] = t;
  }
  return root.dump(2) + "\n";
}

pipeline::CorpusSummary read_corpus_summary_file(const std::string& path) {
  auto in = open_input(path);
  json root;
  try {
    in >> root;
    pipeline::CorpusSummary summary;
    for (const auto& [type, t] : root.at("types").items()) {
      pipeline::TypeSummary s;
      s.population = t.at("N").get<double>();
      s.retained_videos = t.value("retained_videos", std::size_t{0});
      s.retained_records = t.value("retained_records", std::size_t{0});
      s.removed_view_fraction = t.value("removed_view_fraction", 0.0);
      s.removed_users = t.value("removed_users", std::size_t{0});
      summary.per_type[type] = s;
    }
    return summary;
  } catch (const json::exception& e) {
    throw DataError(path + ": bad corpus summary: " + e.what());
  }
}

std::string correlation_report_json(const analysis::CorrelationReport& report) {
  json root;
  root["d_composites"] = report.d_composites;
  root["w_composites"] = report.w_composites;
  root["pairs"] = json::array();
  for (const auto& p : report.pairs) {
    json e;
    e["name"] = p.name;
    e["x"] = p.x_name;
    e["y"] = p.y_name;
    e["pearson_r"] = p.pearson_r;
    e["points"] = p.points.size();
    root["pairs"].push_back(e);
  }
  root["warnings"] = report.warnings;
  return root.dump(2) + "\n";
}

namespace {

json episode_to_json(const analysis::EpisodeFit& e) {
  json j;
  j["video_id"] = e.video_id;
  j["series_id"] = e.series_id;
  j["episode"] = e.episode;
  j["model_kind"] = fit::to_string(e.kind);
  j["q"] = e.q;
  j["N"] = e.n;
  j["nmse"] = e.nmse;
  j["converged"] = e.converged;
  if (e.alpha) j["alpha"] = *e.alpha;
  if (e.t_e) j["t_e"] = *e.t_e;
  if (e.gamma) j["gamma"] = *e.gamma;
  if (e.beta) j["beta"] = *e.beta;
  if (e.x0) j["x0"] = *e.x0;
  return j;
}

analysis::EpisodeFit episode_from_json(const json& j) {
  analysis::EpisodeFit e;
  e.video_id = j.at("video_id").get<std::string>();
  e.series_id = j.at("series_id").get<std::string>();
  e.episode = j.at("episode").get<int>();
  e.kind = j.at("model_kind").get<std::string>() == "DModel"
               ? fit::ModelKind::DModel
               : fit::ModelKind::WModel;
  e.q = j.at("q").get<double>();
  e.n = j.at("N").get<double>();
  e.nmse = j.at("nmse").get<double>();
  e.converged = j.value("converged", false);
  if (j.contains("alpha")) e.alpha = j["alpha"].get<double>();
  if (j.contains("t_e")) e.t_e = j["t_e"].get<double>();
  if (j.contains("gamma")) e.gamma = j["gamma"].get<double>();
  if (j.contains("beta")) e.beta = j["beta"].get<double>();
  if (j.contains("x0")) e.x0 = j["x0"].get<double>();
  return e;
}

}  // namespace

std::string composites_json(const std::vector<analysis::CompositeVideo>& composites) {
  json arr = json::array();
  for (const auto& c : composites) {
    json j;
    j["series_id"] = c.series_id;
    j["label"] = c.label == analysis::Label::DRecommended ? "DRecommended"
                                                          : "WRecommended";
    j["N"] = c.n;
    j["mean_q"] = c.mean_q;
    if (c.mean_alpha) j["mean_alpha"] = *c.mean_alpha;
    if (c.mean_t_e) j["mean_t_e"] = *c.mean_t_e;
    if (c.mean_gamma) j["mean_gamma"] = *c.mean_gamma;
    if (c.mean_beta) j["mean_beta"] = *c.mean_beta;
    if (c.mean_x0) j["mean_x0"] = *c.mean_x0;
    j["episodes"] = json::array();
    for (const auto& e : c.episode_fits) j["episodes"].push_back(episode_to_json(e));
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

std::vector<analysis::CompositeVideo> read_composites_json(std::istream& in) {
  json arr;
  try {
    in >> arr;
  } catch (const json::exception& e) {
    throw DataError(std::string("bad composites JSON: ") + e.what());
  }
  std::vector<analysis::CompositeVideo> out;
  try {
    for (const auto& j : arr) {
      analysis::CompositeVideo c;
      c.series_id = j.at("series_id").get<std::string>();
      c.label = j.at("label").get<std::string>() == "DRecommended"
                    ? analysis::Label::DRecommended
                    : analysis::Label::WRecommended;
      c.n = j.at("N").get<double>();
      c.mean_q = j.at("mean_q").get<double>();
      if (j.contains("mean_alpha")) c.mean_alpha = j["mean_alpha"].get<double>();
      if (j.contains("mean_t_e")) c.mean_t_e = j["mean_t_e"].get<double>();
      if (j.contains("mean_gamma")) c.mean_gamma = j["mean_gamma"].get<double>();
      if (j.contains("mean_beta")) c.mean_beta = j["mean_beta"].get<double>();
      if (j.contains("mean_x0")) c.mean_x0 = j["mean_x0"].get<double>();
      for (const auto& e : j.at("episodes")) c.episode_fits.push_back(episode_from_json(e));
      out.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("bad composites JSON: ") + e.what());
  }
  return out;
}

std::vector<analysis::CompositeVideo> read_composites_json_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return read_composites_json(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_scatter_csv(std::ostream& out, const std::vector<analysis::ScatterPoint>& pts,
                       bool with_episode) {
  out << (with_episode ? "x,y,series_id,episode,label\n" : "x,y,series_id,label\n");
  for (const auto& p : pts) {
    out << fmt(p.x) << ',' << fmt(p.y) << ',' << p.series_id << ',';
    if (with_episode) out << p.episode << ',';
    out << analysis::to_string(p.label) << '\n';
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << content;
  if (!out) throw DataError("write failed for " + path);
}

}  // namespace popdyn::io
