// popdyn: command-line toolkit for modeling online-video popularity as an
// information-diffusion process, fitting observed traces to the direct and
// word-of-mouth models, and running the case-study analytics.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "popdyn/analysis.hpp"
#include "popdyn/dmodel.hpp"
#include "popdyn/fitting.hpp"
#include "popdyn/manifest.hpp"
#include "popdyn/pipeline.hpp"
#include "popdyn/simulator.hpp"
#include "popdyn/trace_io.hpp"
#include "popdyn/types.hpp"
#include "popdyn/wmodel.hpp"

namespace fs = std::filesystem;
using namespace popdyn;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct SimulateOpts {
  std::string model;
  double n = 0.0, q = 0.0;
  double alpha = 0.0, t_e = std::numeric_limits<double>::infinity(), gamma = 0.0;
  double beta_n = 0.0, x0 = 0.0;
  std::size_t days = 0, replications = 1;
  std::uint64_t seed = 12345;
  std::string output;
};

void run_simulate(const SimulateOpts& o) {
  const sim::SimConfig cfg(o.days, o.seed, o.replications);
  std::vector<sim::Replication> reps;
  Trace fluid;
  RunManifest manifest;
  manifest.command = "simulate";
  manifest.seed = o.seed;
  manifest.seeded = true;
  manifest.config = {{"model", o.model},
                     {"n", num(o.n)},
                     {"q", num(o.q)},
                     {"days", std::to_string(o.days)},
                     {"replications", std::to_string(o.replications)},
                     {"seed", std::to_string(o.seed)},
                     {"output", o.output}};

  if (o.model == "direct") {
    const double gamma = o.gamma > 0.0 ? o.gamma : 10.0 * o.alpha;
    const DModelParams params(PopulationConfig(o.n, o.q), o.alpha, o.t_e, gamma);
    reps = sim::simulate_direct(params, cfg);
    fluid = dmodel::daily_counts(params, o.days);
    manifest.config["alpha"] = num(o.alpha);
    manifest.config["te"] = num(o.t_e);
    manifest.config["gamma"] = num(gamma);
  } else {
    const WModelParams params(PopulationConfig(o.n, o.q), o.beta_n / o.n, o.x0);
    reps = sim::simulate_wom(params, cfg);
    // Reference trace in the simulator's convention: day 1 carries the
    // seeds, later days the recursion increments.
    const Trace inc = wmodel::discrete_trace(params, o.days);
    std::vector<double> counts(o.days, 0.0);
    counts[0] = o.x0;
    for (std::size_t i = 1; i < o.days; ++i) counts[i] = inc.counts[i - 1];
    fluid = Trace(std::move(counts));
    manifest.config["beta-n"] = num(o.beta_n);
    manifest.config["x0"] = num(o.x0);
  }

  for (std::size_t r = 0; r < reps.size(); ++r) {
    char name[32];
    std::snprintf(name, sizeof name, "rep_%04zu", r + 1);
    const std::string path =
        (fs::path(o.output) / (std::string(name) + ".csv")).string();
    io::write_traces_csv_file(path, {{name, reps[r].views}});
    manifest.outputs.push_back(path);
    if (reps[r].subunit_fanout && r == 0)
      std::cerr << "warning: fan-out below one friend per viewer, realized as "
                   "Bernoulli draws\n";
  }
  const std::string fluid_path = (fs::path(o.output) / "fluid.csv").string();
  io::write_traces_csv_file(fluid_path, {{"fluid", fluid}});
  manifest.outputs.push_back(fluid_path);
  manifest.write((fs::path(o.output) / "manifest.json").string());
  std::cout << "wrote " << reps.size()
            << " replications and the fluid reference to " << o.output << "\n";
}

struct FitOpts {
  std::string input, output;
  double n = 0.0;
  std::string summary, type;
  int max_iterations = 200;
  int multistarts = 8;
};

void print_nmse_summary(std::vector<double> values) {
  if (values.empty()) {
    std::cout << "fitted 0 videos\n";
    return;
  }
  std::sort(values.begin(), values.end());
  auto quantile = [&](double p) {
    const double idx = p * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (values[hi] - values[lo]) * (idx - static_cast<double>(lo));
  };
  std::cout << "nmse distribution over " << values.size() << " videos:\n"
            << "  min " << num(values.front()) << "  q1 " << num(quantile(0.25))
            << "  median " << num(quantile(0.5)) << "  q3 " << num(quantile(0.75))
            << "  max " << num(values.back()) << "\n";
}

void run_fit(const FitOpts& o) {
  double population = o.n;
  if (population <= 0.0) {
    if (o.summary.empty() || o.type.empty())
      throw ParamError("provide --n, or --summary together with --type");
    const auto summary = io::read_corpus_summary_file(o.summary);
    const auto it = summary.per_type.find(o.type);
    if (it == summary.per_type.end())
      throw DataError("type " + o.type + " not present in " + o.summary);
    population = it->second.population;
  }

  std::ifstream in(o.input);
  if (!in) throw DataError("cannot open " + o.input);
  const io::TraceReadResult read = io::read_traces_csv_lenient(in);

  fit::FitOptions fit_opts;
  fit_opts.max_iterations = o.max_iterations;
  fit_opts.multistart_count = o.multistarts;

  std::vector<io::FitLine> lines;
  std::vector<double> nmses;
  std::size_t failures = 0;
  for (const auto& [video, trace] : read.traces) {
    try {
      const fit::FitResult result = fit::select_best(trace, population, fit_opts);
      lines.push_back(io::to_fit_line(video, result));
      nmses.push_back(result.nmse);
    } catch (const std::exception& e) {
      io::FitLine line;
      line.video_id = video;
      line.failed = true;
      line.error = e.what();
      lines.push_back(std::move(line));
      ++failures;
    }
  }
  for (const auto& [video, message] : read.failures) {
    io::FitLine line;
    line.video_id = video;
    line.failed = true;
    line.error = message;
    lines.push_back(std::move(line));
    ++failures;
  }
  std::sort(lines.begin(), lines.end(),
            [](const io::FitLine& a, const io::FitLine& b) {
              return a.video_id < b.video_id;
            });
  io::write_fit_jsonl_file(o.output, lines);

  RunManifest manifest;
  manifest.command = "fit";
  manifest.config = {{"input", o.input},
                     {"n", num(population)},
                     {"max-iter", std::to_string(o.max_iterations)},
                     {"multistarts", std::to_string(o.multistarts)},
                     {"output", o.output}};
  if (!o.summary.empty()) manifest.config["summary"] = o.summary;
  if (!o.type.empty()) manifest.config["type"] = o.type;
  manifest.inputs = {o.input};
  manifest.outputs = {o.output};
  manifest.write(o.output + ".manifest.json");

  print_nmse_summary(std::move(nmses));
  if (failures > 0)
    std::cout << failures << " video(s) failed to fit; see their records in "
              << o.output << "\n";
}

struct PipelineOpts {
  std::string input, output;
  double threshold = 1000.0;
  double removal_share = 0.25;
  std::string removal_rule = "cap";
  std::string window_start, window_end;
};

void run_pipeline(const PipelineOpts& o) {
  const auto records = pipeline::read_records_csv(o.input);
  std::optional<pipeline::DayWindow> window;
  if (!o.window_start.empty() || !o.window_end.empty()) {
    if (o.window_start.empty() || o.window_end.empty())
      throw ParamError("provide both --window-start and --window-end");
    window = pipeline::DayWindow{pipeline::parse_iso_day(o.window_start),
                                 pipeline::parse_iso_day(o.window_end)};
  }
  const auto rule = o.removal_rule == "crossing"
                        ? pipeline::RemovalRule::FirstCrossing
                        : pipeline::RemovalRule::CapAtShare;
  const auto result =
      pipeline::run(records, window, o.threshold, o.removal_share, rule);

  RunManifest manifest;
  manifest.command = "pipeline";
  manifest.config = {{"input", o.input},
                     {"threshold", num(o.threshold)},
                     {"removal-share", num(o.removal_share)},
                     {"removal-rule", o.removal_rule},
                     {"output", o.output}};
  if (window) {
    manifest.config["window-start"] = pipeline::day_to_iso(window->start);
    manifest.config["window-end"] = pipeline::day_to_iso(window->end);
  }
  manifest.inputs = {o.input};

  for (const auto& [type, traces] : result.traces) {
    const std::string path =
        (fs::path(o.output) /
         ("traces_" + std::string(pipeline::to_string(type)) + ".csv"))
            .string();
    io::write_traces_csv_file(path, traces);
    manifest.outputs.push_back(path);
  }
  const std::string summary_path =
      (fs::path(o.output) / "corpus_summary.json").string();
  io::write_text_file(summary_path, io::corpus_summary_json(result.summary));
  manifest.outputs.push_back(summary_path);
  manifest.write((fs::path(o.output) / "manifest.json").string());

  for (const auto& [type, s] : result.summary.per_type)
    std::cout << type << ": N=" << num(s.population) << ", " << s.retained_videos
              << " videos kept, removed view fraction "
              << num(s.removed_view_fraction) << "\n";
}

struct AggregateOpts {
  std::string input, series_map, output;
};

void run_aggregate(const AggregateOpts& o) {
  const auto fits = io::read_fit_jsonl_file(o.input);
  const auto map = io::read_series_map_file(o.series_map);
  const auto episodes = io::join_episodes(fits, map);

  std::map<std::string, std::vector<analysis::EpisodeFit>> by_series;
  for (const auto& e : episodes) by_series[e.series_id].push_back(e);
  std::vector<analysis::CompositeVideo> composites;
  for (auto& [series, eps] : by_series) {
    std::sort(eps.begin(), eps.end(),
              [](const analysis::EpisodeFit& a, const analysis::EpisodeFit& b) {
                return a.episode < b.episode;
              });
    composites.push_back(analysis::aggregate_series(series, std::move(eps)));
  }
  io::write_text_file(o.output, io::composites_json(composites));

  RunManifest manifest;
  manifest.command = "aggregate";
  manifest.config = {{"input", o.input},
                     {"series-map", o.series_map},
                     {"output", o.output}};
  manifest.inputs = {o.input, o.series_map};
  manifest.outputs = {o.output};
  manifest.write(o.output + ".manifest.json");

  std::size_t d = 0;
  for (const auto& c : composites)
    if (c.label == analysis::Label::DRecommended) ++d;
  std::cout << composites.size() << " composite videos (" << d
            << " d-recommended, " << composites.size() - d
            << " w-recommended)\n";
}

struct ReportOpts {
  std::string composites, traces, output;
};

void run_report(const ReportOpts& o) {
  const auto composites = io::read_composites_json_file(o.composites);
  const auto traces = io::read_traces_csv_file(o.traces);
  std::map<std::string, double> totals;
  for (const auto& [video, trace] : traces) totals[video] = trace.total();

  const auto report = analysis::case_study_report(composites, totals);

  RunManifest manifest;
  manifest.command = "report";
  manifest.config = {{"composites", o.composites},
                     {"traces", o.traces},
                     {"output", o.output}};
  manifest.inputs = {o.composites, o.traces};

  for (const auto& pair : report.pairs) {
    const std::string path = (fs::path(o.output) / (pair.name + ".csv")).string();
    std::ostringstream ss;
    io::write_scatter_csv(ss, pair.points, false);
    io::write_text_file(path, ss.str());
    manifest.outputs.push_back(path);
    std::cout << pair.name << ": r=" << num(pair.pearson_r) << " over "
              << pair.points.size() << " composites\n";
  }
  for (const auto& scatter : report.episode_scatters) {
    const std::string path =
        (fs::path(o.output) / (scatter.name + ".csv")).string();
    std::ostringstream ss;
    io::write_scatter_csv(ss, scatter.points, true);
    io::write_text_file(path, ss.str());
    manifest.outputs.push_back(path);
  }
  const std::string report_path =
      (fs::path(o.output) / "correlation_report.json").string();
  io::write_text_file(report_path, io::correlation_report_json(report));
  manifest.outputs.push_back(report_path);
  manifest.write((fs::path(o.output) / "manifest.json").string());

  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"popdyn " + std::string(kToolVersion) +
               ": popularity-evolution modeling, fitting and analytics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  app.set_config("--config")
      ->envname("POPDYN_CONFIG")
      ->description("TOML-style key=value config file; flags win over it");

  SimulateOpts so;
  auto* simulate = app.add_subcommand(
      "simulate", "Generate stochastic traces plus the fluid reference");
  simulate->add_option("--model", so.model, "Diffusion force")
      ->required()
      ->check(CLI::IsMember({"direct", "wom"}));
  simulate->add_option("--n", so.n, "Potential user population")->required();
  simulate->add_option("--q", so.q, "Intrinsic attractiveness in (0,1]")->required();
  simulate->add_option("--alpha", so.alpha, "Direct recommendation rate");
  simulate->add_option("--te", so.t_e, "Promotion cutoff day (default: none)");
  simulate->add_option("--gamma", so.gamma, "Post-cutoff decay (default 10*alpha)");
  simulate->add_option("--beta-n", so.beta_n, "Mean fan-out beta*N");
  simulate->add_option("--x0", so.x0, "Seed population");
  simulate->add_option("--days", so.days, "Horizon in days")->required();
  simulate->add_option("--seed", so.seed, "Base RNG seed");
  simulate->add_option("--replications", so.replications, "Replication count");
  simulate->add_option("--output", so.output, "Output directory")->required();
  simulate->callback([&] { run_simulate(so); });

  FitOpts fo;
  auto* fit_cmd =
      app.add_subcommand("fit", "Fit both models per video, keep the better");
  fit_cmd->add_option("--input", fo.input, "Trace CSV")->required();
  fit_cmd->add_option("--output", fo.output, "Fit results (JSON lines)")->required();
  fit_cmd->add_option("--n", fo.n, "Population N (fixed, never fitted)");
  fit_cmd->add_option("--summary", fo.summary, "CorpusSummary JSON with per-type N");
  fit_cmd->add_option("--type", fo.type, "Video type to look up in --summary");
  fit_cmd->add_option("--max-iter", fo.max_iterations, "Optimizer iteration cap");
  fit_cmd->add_option("--multistarts", fo.multistarts, "Optimizer start points");
  fit_cmd->callback([&] { run_fit(fo); });

  PipelineOpts po;
  auto* pipe = app.add_subcommand(
      "pipeline", "Build daily traces and the per-type population from records");
  pipe->add_option("--input", po.input, "Viewing records CSV (gzip accepted)")
      ->required();
  pipe->add_option("--output", po.output, "Output directory")->required();
  pipe->add_option("--threshold", po.threshold, "Cold-video total view threshold");
  pipe->add_option("--removal-share", po.removal_share,
                   "Occasional-viewer view share");
  pipe->add_option("--removal-rule", po.removal_rule,
                   "cap (never overshoot) or crossing")
      ->check(CLI::IsMember({"cap", "crossing"}));
  pipe->add_option("--window-start", po.window_start,
                   "Collection window start (ISO date)");
  pipe->add_option("--window-end", po.window_end,
                   "Collection window end (ISO date)");
  pipe->callback([&] { run_pipeline(po); });

  AggregateOpts ao;
  auto* agg = app.add_subcommand("aggregate",
                                 "Collapse related episodes into composite videos");
  agg->add_option("--input", ao.input, "Fit results (JSON lines)")->required();
  agg->add_option("--series-map", ao.series_map, "CSV video_id,series_id")->required();
  agg->add_option("--output", ao.output, "Composites JSON")->required();
  agg->callback([&] { run_aggregate(ao); });

  ReportOpts ro;
  auto* rep = app.add_subcommand(
      "report", "Correlation statistics and scatter datasets for composites");
  rep->add_option("--composites", ro.composites, "Composites JSON")->required();
  rep->add_option("--traces", ro.traces, "Trace CSV with the observed counts")
      ->required();
  rep->add_option("--output", ro.output, "Output directory")->required();
  rep->callback([&] { run_report(ro); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help and version are successes
  } catch (const ParamError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
