#include "recount/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "recount/audit.hpp"
#include "recount/correlation.hpp"
#include "recount/csv.hpp"
#include "recount/errors.hpp"
#include "recount/ingest.hpp"
#include "recount/metrics.hpp"
#include "recount/report.hpp"
#include "recount/stats_tests.hpp"
#include "recount/synth.hpp"
#include "recount/types.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace recount {

namespace {

json opt_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

const char* method_name(TestMethod m) {
  switch (m) {
    case TestMethod::ks_two_sample: return "ks_two_sample";
    case TestMethod::perm_rstar: return "perm_rstar";
    case TestMethod::subsample_mean: return "subsample_mean";
  }
  return "?";
}

json test_result_json(const TestResult& t) {
  json null_fit = nullptr;
  if (t.null_fit) {
    null_fit = json{{"mu", t.null_fit->mu}, {"sigma", t.null_fit->sigma}};
  }
  return json{{"method", method_name(t.method)},
              {"statistic", t.statistic},
              {"p_value", t.p_value},
              {"p_empirical", opt_json(t.p_empirical)},
              {"p_two_sided", opt_json(t.p_two_sided)},
              {"p_analytic", opt_json(t.p_analytic)},
              {"n1", t.n1},
              {"n2", t.n2},
              {"replicates", t.replicates},
              {"seed", t.seed ? json(*t.seed) : json(nullptr)},
              {"stream", t.stream ? json(*t.stream) : json(nullptr)},
              {"null_fit", null_fit}};
}

json exclusions_json(const std::vector<Exclusion>& exclusions) {
  json arr = json::array();
  for (const Exclusion& e : exclusions) {
    arr.push_back({{"code", e.code}, {"metric", e.metric}, {"reason", e.reason}});
  }
  return arr;
}

std::string read_stream(std::istream& in) {
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Dataset load_centers(const std::string& in, std::vector<InputRef>& inputs,
                     std::optional<std::set<EventId>> schema = std::nullopt) {
  if (in == "-") {
    std::string text = read_stream(std::cin);
    inputs.push_back(input_ref_text("-", text));
    return parse_centers_text(text, "stdin", std::move(schema));
  }
  inputs.push_back(input_ref(in));
  return parse_centers(in, std::move(schema));
}

std::vector<double> read_value_file(const std::string& path,
                                    std::vector<InputRef>& inputs) {
  std::string text;
  if (path == "-") {
    text = read_stream(std::cin);
    inputs.push_back(input_ref_text("-", text));
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    text = read_stream(in);
    inputs.push_back(input_ref(path));
  }
  std::vector<double> values;
  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      std::size_t used = 0;
      double v = std::stod(line, &used);
      if (used != line.size()) throw std::invalid_argument(line);
      values.push_back(v);
    } catch (const std::exception&) {
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": expected one number per line, got '" + line + "'");
    }
  }
  return values;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

fs::path prepare_out_dir(const std::string& out_dir) {
  fs::path dir(out_dir);
  fs::create_directories(dir);
  return dir;
}

std::optional<Channel> parse_channel_filter(const std::string& value) {
  if (value == "C") return Channel::computerized;
  if (value == "M") return Channel::manual;
  return std::nullopt;  // "all"
}

EventId event_or_throw(const std::string& name) {
  std::optional<EventId> e = parse_event(name);
  if (!e) throw ValidationError("unknown event " + name);
  return *e;
}

json window_series_json(const WindowSeries& series) {
  double min_r = 1.0, max_r = -1.0;
  for (const WindowPoint& p : series.points) {
    min_r = std::min(min_r, p.r);
    max_r = std::max(max_r, p.r);
  }
  return json{{"n_centers", series.n_centers},
              {"n_excluded", series.n_excluded},
              {"n_points", series.points.size()},
              {"min_r", series.points.empty() ? json(nullptr) : json(min_r)},
              {"max_r", series.points.empty() ? json(nullptr) : json(max_r)}};
}

json table1_json(const Table1& grid) {
  auto cell = [&](ChannelGroup g, SStratum s) {
    const Table1Cell& c = grid.cell(g, s);
    return json{{"r", opt_json(c.r)}, {"n", c.n}};
  };
  auto row = [&](ChannelGroup g) {
    return json{{"s_le_split", cell(g, SStratum::le_split)},
                {"s_gt_split", cell(g, SStratum::gt_split)},
                {"all", cell(g, SStratum::all)}};
  };
  return json{{"manual", row(ChannelGroup::manual)},
              {"computerized", row(ChannelGroup::computerized)},
              {"both", row(ChannelGroup::both)}};
}

json geo_aggregate_json(const GeoAggregate& a) {
  return json{{"state", a.geo.state},
              {"county", a.geo.county},
              {"township", a.geo.township},
              {"n_centers", a.n_centers},
              {"mean_s", a.mean_s},
              {"delta_pct", a.delta_pct},
              {"r_1998", opt_json(a.r_1998)},
              {"r_si", opt_json(a.r_si)}};
}

// Histogram of replicate statistics for Fig-19-style plots.
std::string replicate_histogram_csv(const std::vector<double>& stats,
                                    const std::optional<NormalFit>& fit) {
  BinSpec bins = freedman_diaconis_bins(stats);
  Histogram h = histogram_fd(stats, bins.lo, bins.width, bins.n_bins);
  std::string out = "bin_lo,bin_hi,count,density,normal_density\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    double lo = h.lo + h.width * static_cast<double>(b);
    double hi = lo + h.width;
    double mid = 0.5 * (lo + hi);
    double normal = 0.0;
    if (fit && fit->sigma > 0) {
      double z = (mid - fit->mu) / fit->sigma;
      normal = std::exp(-0.5 * z * z) /
               (fit->sigma * std::sqrt(2.0 * 3.14159265358979323846));
    }
    out += csv::format_line({csv::format_double(lo), csv::format_double(hi),
                             std::to_string(h.counts[b]),
                             csv::format_double(h.densities[b]),
                             csv::format_double(normal)}) +
           "\n";
  }
  return out;
}

GeoAggregatesResult aggregates_or_throw(const Dataset& ds, GeoLevel level,
                                        std::optional<Channel> channel) {
  GeoAggregatesResult result = geo_aggregates(ds, level, channel);
  if (result.aggregates.empty()) {
    throw UndefinedError(
        "no geographic unit at level " + std::string(geo_level_name(level)) +
        " has 3+ centers with RR2004 and E1998 tallies and a defined r_1998");
  }
  return result;
}

struct SubsetSizeHelp {
  static constexpr const char* text =
      "Monte Carlo subset size; 0 draws the audited-group size "
      "(the canonical hot-audit draw is 26 of 192)";
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{
      "recount - forensic statistics for center-level election data:\n"
      "signature/vote ratio metrics, stratified and windowed correlations,\n"
      "audit-sample representativeness tests, and a synthetic-election\n"
      "generator for detector validation."};
  app.require_subcommand(1);

  // ingest ------------------------------------------------------------------
  struct IngestOpts {
    std::string in, out = "out";
    std::vector<std::string> events;
  };
  auto ingest_opts = std::make_shared<IngestOpts>();
  CLI::App* ingest = app.add_subcommand("ingest", "Validate and normalize a center CSV");
  ingest->add_option("--in", ingest_opts->in, "center CSV (- for stdin)")->required();
  ingest->add_option("--out", ingest_opts->out, "output directory")
      ->capture_default_str();
  ingest->add_option("--events", ingest_opts->events,
                     "required event blocks, e.g. RR2004,E1998 (default: accept "
                     "whatever the header declares)")
      ->delimiter(',');
  ingest->callback([ingest_opts, &out]() {
    ReportEnvelope envelope;
    envelope.command = "ingest";
    std::optional<std::set<EventId>> schema;
    if (!ingest_opts->events.empty()) {
      schema.emplace();
      for (const std::string& name : ingest_opts->events) {
        schema->insert(event_or_throw(name));
      }
    }
    Dataset ds = load_centers(ingest_opts->in, envelope.inputs, schema);
    std::set<EventId> emit_schema = schema ? *schema : events_present(ds);

    fs::path dir = prepare_out_dir(ingest_opts->out);
    write_centers(ds, emit_schema, dir / "ingest.csv");

    std::size_t n_manual = 0;
    for (const CenterRecord& c : ds.centers) {
      if (c.channel == Channel::manual) ++n_manual;
    }
    json events = json::array();
    for (EventId e : emit_schema) events.push_back(std::string(event_name(e)));
    envelope.parameters = {{"events", ingest_opts->events.empty()
                                          ? json("auto")
                                          : json(ingest_opts->events)}};
    envelope.results = {{"n_centers", ds.size()},
                        {"n_manual", n_manual},
                        {"n_computerized", ds.size() - n_manual},
                        {"events", events}};
    envelope.write(dir / "ingest.report.json");
    out << "ingest: " << ds.size() << " centers -> " << (dir / "ingest.csv").string()
        << "\n";
  });

  // metrics -----------------------------------------------------------------
  struct MetricsOpts {
    std::string in, out = "out";
  };
  auto metrics_opts = std::make_shared<MetricsOpts>();
  CLI::App* metrics_cmd =
      app.add_subcommand("metrics", "Per-center k, s, k_max, percentages, delta");
  metrics_cmd->add_option("--in", metrics_opts->in, "center CSV (- for stdin)")
      ->required();
  metrics_cmd->add_option("--out", metrics_opts->out, "output directory")
      ->capture_default_str();
  metrics_cmd->callback([metrics_opts, &out]() {
    ReportEnvelope envelope;
    envelope.command = "metrics";
    Dataset ds = load_centers(metrics_opts->in, envelope.inputs);
    MetricsTable table = metrics_table(ds);
    fs::path dir = prepare_out_dir(metrics_opts->out);
    write_metrics_csv(table, dir / "metrics.csv");
    envelope.results = {{"n_rows", table.rows.size()},
                        {"n_exclusions", table.exclusions.size()},
                        {"exclusions", exclusions_json(table.exclusions)}};
    envelope.write(dir / "metrics.report.json");
    out << "metrics: " << table.rows.size() << " rows -> "
        << (dir / "metrics.csv").string() << "\n";
  });

  // table1 ------------------------------------------------------------------
  struct Table1Opts {
    std::string in, out = "out";
    double split = 0.5;
  };
  auto table1_opts = std::make_shared<Table1Opts>();
  CLI::App* table1_cmd = app.add_subcommand(
      "table1", "Correlation of si votes vs signatures by channel and s stratum");
  table1_cmd->add_option("--in", table1_opts->in, "center CSV (- for stdin)")
      ->required();
  table1_cmd->add_option("--out", table1_opts->out, "output directory")
      ->capture_default_str();
  table1_cmd->add_option("--split", table1_opts->split, "s split point")
      ->capture_default_str();
  table1_cmd->callback([table1_opts, &out]() {
    ReportEnvelope envelope;
    envelope.command = "table1";
    Dataset ds = load_centers(table1_opts->in, envelope.inputs);
    Table1 grid = table1(ds, table1_opts->split);
    envelope.parameters = {{"split", table1_opts->split}};
    envelope.results = {{"grid", table1_json(grid)},
                        {"excluded_undefined_s", grid.excluded_undefined_s}};
    fs::path dir = prepare_out_dir(table1_opts->out);
    envelope.write(dir / "table1.report.json");
    out << "table1 -> " << (dir / "table1.report.json").string() << "\n";
  });

  // windowed ----------------------------------------------------------------
  struct WindowedOpts {
    std::string in, out = "out";
    std::size_t window = 150;
    std::string scale = "linear";
  };
  auto windowed_opts = std::make_shared<WindowedOpts>();
  CLI::App* windowed_cmd = app.add_subcommand(
      "windowed", "Moving-window correlation series over s-sorted centers");
  windowed_cmd->add_option("--in", windowed_opts->in, "center CSV (- for stdin)")
      ->required();
  windowed_cmd->add_option("--out", windowed_opts->out, "output directory")
      ->capture_default_str();
  windowed_cmd->add_option("--window", windowed_opts->window, "window size")
      ->capture_default_str();
  windowed_cmd->add_option("--scale", windowed_opts->scale, "linear or log")
      ->check(CLI::IsMember({"linear", "log"}))
      ->capture_default_str();
  windowed_cmd->callback([windowed_opts, &out]() {
    ReportEnvelope envelope;
    envelope.command = "windowed";
    Dataset ds = load_centers(windowed_opts->in, envelope.inputs);
    Scale scale = windowed_opts->scale == "log" ? Scale::log : Scale::linear;
    WindowedResult result = windowed_correlation(ds, windowed_opts->window, scale);
    if (!result.undefined_channels.empty()) {
      std::string msg = "windowed correlation undefined:";
      for (const auto& [channel, n] : result.undefined_channels) {
        msg += " channel " + std::string(channel_name(channel)) + " has " +
               std::to_string(n) + " usable centers (< window " +
               std::to_string(windowed_opts->window) + ");";
      }
      throw UndefinedError(msg);
    }
    std::string plot = "channel,start_index,mean_s,r\n";
    json channels = json::object();
    for (const auto& [channel, series] : result.series) {
      channels[std::string(channel_name(channel))] = window_series_json(series);
      for (const WindowPoint& p : series.points) {
        plot += csv::format_line({std::string(channel_name(channel)),
                                  std::to_string(p.start_index),
                                  csv::format_double(p.mean_s),
                                  csv::format_double(p.r)}) +
                "\n";
      }
    }
    envelope.parameters = {{"window", windowed_opts->window},
                           {"scale", windowed_opts->scale}};
    envelope.results = {{"channels", channels}};
    fs::path dir = prepare_out_dir(windowed_opts->out);
    write_text(dir / "windowed.plot.csv", plot);
    envelope.write(dir / "windowed.report.json");
    out << "windowed -> " << (dir / "windowed.plot.csv").string() << "\n";
  });

  // geo ---------------------------------------------------------------------
  struct GeoOpts {
    std::string in, out = "out";
    std::string level = "township";
    std::string channel = "all";
  };
  auto geo_opts = std::make_shared<GeoOpts>();
  CLI::App* geo_cmd = app.add_subcommand(
      "geo", "Per-unit aggregates (r_1998, r_si, delta) and the r* coupling");
  geo_cmd->add_option("--in", geo_opts->in, "center CSV (- for stdin)")->required();
  geo_cmd->add_option("--out", geo_opts->out, "output directory")
      ->capture_default_str();
  geo_cmd->add_option("--level", geo_opts->level, "aggregation level")
      ->check(CLI::IsMember({"state", "county", "township"}))
      ->capture_default_str();
  geo_cmd->add_option("--channel", geo_opts->channel, "C, M or all")
      ->check(CLI::IsMember({"C", "M", "all"}))
      ->capture_default_str();
  geo_cmd->callback([geo_opts, &out]() {
    ReportEnvelope envelope;
    envelope.command = "geo";
    Dataset ds = load_centers(geo_opts->in, envelope.inputs);
    GeoLevel level = *parse_geo_level(geo_opts->level);
    GeoAggregatesResult result =
        aggregates_or_throw(ds, level, parse_channel_filter(geo_opts->channel));

    json rstar = nullptr;
    try {
      rstar = r_star(result.aggregates);
    } catch (const UndefinedError& e) {
      envelope.warnings.push_back(std::string("r_star undefined: ") + e.what());
    }
    json skipped = json::array();
    for (const SkippedUnit& unit : result.skipped) {
      skipped.push_back({{"state", unit.geo.state},
                         {"county", unit.geo.county},
                         {"township", unit.geo.township},
                         {"n_centers", unit.n_centers},
                         {"reason", unit.reason}});
    }
    std::string plot = "state,county,township,n_centers,mean_s,delta_pct,r_1998,r_si\n";
    for (const GeoAggregate& a : result.aggregates) {
      plot += csv::format_line(
                  {a.geo.state, a.geo.county, a.geo.township,
                   std::to_string(a.n_centers), csv::format_double(a.mean_s),
                   csv::format_double(a.delta_pct),
                   a.r_1998 ? csv::format_double(*a.r_1998) : "",
                   a.r_si ? csv::format_double(*a.r_si) : ""}) +
              "\n";
    }
    envelope.parameters = {{"level", geo_opts->level},
                           {"channel", geo_opts->channel}};
    envelope.results = {{"n_aggregates", result.aggregates.size()},
                        {"n_skipped", result.skipped.size()},
                        {"r_star", rstar},
                        {"skipped", skipped}};
    fs::path dir = prepare_out_dir(geo_opts->out);
    write_text(dir / "geo.plot.csv", plot);
    envelope.write(dir / "geo.report.json");
    out << "geo: " << result.aggregates.size() << " aggregates -> "
        << (dir / "geo.plot.csv").string() << "\n";
  });

  // splitcorr -----------------------------------------------------------------
  struct SplitOpts {
    std::string in, out = "out";
    std::string event = "RR2004";
  };
  auto split_opts = std::make_shared<SplitOpts>();
  CLI::App* split_cmd = app.add_subcommand(
      "splitcorr", "Correlation of %opposition with s above/below the median s");
  split_cmd->add_option("--in", split_opts->in, "center CSV (- for stdin)")
      ->required();
  split_cmd->add_option("--out", split_opts->out, "output directory")
      ->capture_default_str();
  split_cmd->add_option("--event", split_opts->event, "electoral event")
      ->check(CLI::IsMember({"E1998", "E2000", "RR2004", "EXITPOLL2004", "GOV2004"}))
      ->capture_default_str();
  split_cmd->callback([split_opts, &out]() {
    ReportEnvelope envelope;
    envelope.command = "splitcorr";
    Dataset ds = load_centers(split_opts->in, envelope.inputs);
    MedianSplit split = median_split_rs(ds, event_or_throw(split_opts->event));
    envelope.parameters = {{"event", split_opts->event}};
    envelope.results = {{"s_median", split.split.split_point},
                        {"r_low", split.r_low},
                        {"r_high", split.r_high},
                        {"diff", split.diff},
                        {"n_low", split.n_low},
                        {"n_high", split.n_high}};
    fs::path dir = prepare_out_dir(split_opts->out);
    envelope.write(dir / "splitcorr.report.json");
    out << "splitcorr: diff = " << split.diff << " -> "
        << (dir / "splitcorr.report.json").string() << "\n";
  });

  // ks -------------------------------------------------------------------------
  struct KsOpts {
    std::string in, in2, out = "out";
  };
  auto ks_opts = std::make_shared<KsOpts>();
  CLI::App* ks_cmd =
      app.add_subcommand("ks", "Two-sample Kolmogorov-Smirnov test");
  ks_cmd->add_option("--in", ks_opts->in, "first sample, one value per line")
      ->required();
  ks_cmd->add_option("--in2", ks_opts->in2, "second sample, one value per line")
      ->required();
  ks_cmd->add_option("--out", ks_opts->out, "output directory")
      ->capture_default_str();
  ks_cmd->callback([ks_opts, &out]() {
    ReportEnvelope envelope;
    envelope.command = "ks";
    std::vector<double> xs = read_value_file(ks_opts->in, envelope.inputs);
    std::vector<double> ys = read_value_file(ks_opts->in2, envelope.inputs);
    TestResult result = ks_two_sample(xs, ys);
    envelope.results = test_result_json(result);
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    std::string plot = "value,ecdf1,ecdf2\n";
    {
      std::vector<double> merged(xs);
      merged.insert(merged.end(), ys.begin(), ys.end());
      std::sort(merged.begin(), merged.end());
      merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
      for (double v : merged) {
        auto f = [v](const std::vector<double>& sample) {
          return static_cast<double>(std::upper_bound(sample.begin(), sample.end(), v) -
                                     sample.begin()) /
                 static_cast<double>(sample.size());
        };
        plot += csv::format_line({csv::format_double(v), csv::format_double(f(xs)),
                                  csv::format_double(f(ys))}) +
                "\n";
      }
    }
    fs::path dir = prepare_out_dir(ks_opts->out);
    write_text(dir / "ks.plot.csv", plot);
    envelope.write(dir / "ks.report.json");
    out << "ks: D = " << result.statistic << ", p = " << result.p_value << "\n";
  });

  // permtest ---------------------------------------------------------------------
  struct PermOpts {
    std::string in, out = "out";
    std::string level = "township";
    std::string channel = "all";
    std::size_t replicates = 100000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
  };
  auto perm_opts = std::make_shared<PermOpts>();
  CLI::App* perm_cmd = app.add_subcommand(
      "permtest", "Permutation significance of r* over geographic aggregates");
  perm_cmd->add_option("--in", perm_opts->in, "center CSV (- for stdin)")->required();
  perm_cmd->add_option("--out", perm_opts->out, "output directory")
      ->capture_default_str();
  perm_cmd->add_option("--level", perm_opts->level, "aggregation level")
      ->check(CLI::IsMember({"state", "county", "township"}))
      ->capture_default_str();
  perm_cmd->add_option("--channel", perm_opts->channel, "C, M or all")
      ->check(CLI::IsMember({"C", "M", "all"}))
      ->capture_default_str();
  perm_cmd->add_option("--replicates", perm_opts->replicates, "shuffle count")
      ->capture_default_str();
  perm_cmd->add_option("--seed", perm_opts->seed, "RNG seed (required)")->required();
  perm_cmd->add_option("--threads", perm_opts->threads,
                       "worker threads (0 = hardware)")
      ->capture_default_str();
  perm_cmd->callback([perm_opts, &out]() {
    ReportEnvelope envelope;
    envelope.command = "permtest";
    Dataset ds = load_centers(perm_opts->in, envelope.inputs);
    GeoLevel level = *parse_geo_level(perm_opts->level);
    GeoAggregatesResult aggs =
        aggregates_or_throw(ds, level, parse_channel_filter(perm_opts->channel));
    std::vector<double> stats;
    TestResult result =
        perm_test_rstar(aggs.aggregates, perm_opts->replicates,
                        RngSpec{perm_opts->seed, 0}, perm_opts->threads, &stats);
    envelope.parameters = {{"level", perm_opts->level},
                           {"channel", perm_opts->channel},
                           {"replicates", perm_opts->replicates},
                           {"seed", perm_opts->seed}};
    envelope.results = test_result_json(result);
    fs::path dir = prepare_out_dir(perm_opts->out);
    write_text(dir / "permtest.plot.csv",
               replicate_histogram_csv(stats, result.null_fit));
    envelope.write(dir / "permtest.report.json");
    out << "permtest: r* = " << result.statistic << ", p = " << result.p_value
        << "\n";
  });

  // hotaudit -----------------------------------------------------------------------
  struct HotOpts {
    std::string in, out = "out";
    std::size_t replicates = 100000;
    std::uint64_t seed = 0;
    std::size_t subset_size = 0;
  };
  auto hot_opts = std::make_shared<HotOpts>();
  CLI::App* hot_cmd = app.add_subcommand(
      "hotaudit", "Representativeness of the audited centers within the selection");
  hot_cmd->add_option("--in", hot_opts->in, "center CSV (- for stdin)")->required();
  hot_cmd->add_option("--out", hot_opts->out, "output directory")
      ->capture_default_str();
  hot_cmd->add_option("--replicates", hot_opts->replicates, "Monte Carlo draws")
      ->capture_default_str();
  hot_cmd->add_option("--seed", hot_opts->seed, "RNG seed (required)")->required();
  hot_cmd->add_option("--subset-size", hot_opts->subset_size, SubsetSizeHelp::text)
      ->capture_default_str();
  hot_cmd->callback([hot_opts, &out]() {
    ReportEnvelope envelope;
    envelope.command = "hotaudit";
    Dataset ds = load_centers(hot_opts->in, envelope.inputs);
    std::optional<std::size_t> subset;
    if (hot_opts->subset_size != 0) subset = hot_opts->subset_size;
    AuditSummary summary = hot_audit_report(ds, hot_opts->replicates,
                                            RngSpec{hot_opts->seed, 0}, subset);
    envelope.parameters = {{"replicates", hot_opts->replicates},
                           {"seed", hot_opts->seed},
                           {"subset_size", hot_opts->subset_size}};
    envelope.results = {{"n_selected", summary.n_selected},
                        {"n_audited", summary.n_audited},
                        {"mean_s_selected", summary.mean_s_selected},
                        {"mean_s_audited", summary.mean_s_audited},
                        {"skew_selected", opt_json(summary.skew_selected)},
                        {"skew_audited", opt_json(summary.skew_audited)},
                        {"mc", test_result_json(summary.mc)},
                        {"audited_pct_si", summary.audited_pct_si},
                        {"audited_delta_pct", opt_json(summary.audited_delta_pct)}};
    fs::path dir = prepare_out_dir(hot_opts->out);
    envelope.write(dir / "hotaudit.report.json");
    out << "hotaudit: mean_s selected = " << summary.mean_s_selected
        << ", audited = " << summary.mean_s_audited
        << ", mc p = " << summary.mc.p_value << "\n";
  });

  // coldaudit ----------------------------------------------------------------------
  struct ColdOpts {
    std::string in, out = "out";
  };
  auto cold_opts = std::make_shared<ColdOpts>();
  CLI::App* cold_cmd = app.add_subcommand(
      "coldaudit", "Universe-vs-sample correlation for the cold audit");
  cold_cmd->add_option("--in", cold_opts->in, "center CSV (- for stdin)")->required();
  cold_cmd->add_option("--out", cold_opts->out, "output directory")
      ->capture_default_str();
  cold_cmd->callback([cold_opts, &out]() {
    ReportEnvelope envelope;
    envelope.command = "coldaudit";
    Dataset ds = load_centers(cold_opts->in, envelope.inputs);
    ColdAuditResult result = cold_audit_compare(ds);
    envelope.results = {{"r_universe", result.r_universe},
                        {"r_sample", result.r_sample},
                        {"n_universe", result.n_universe},
                        {"n_sample", result.n_sample},
                        {"n_common_with_hot", result.n_common_with_hot}};
    fs::path dir = prepare_out_dir(cold_opts->out);
    envelope.write(dir / "coldaudit.report.json");
    out << "coldaudit: universe r = " << result.r_universe
        << ", sample r = " << result.r_sample << "\n";
  });

  // county20 -----------------------------------------------------------------------
  struct County20Opts {
    std::string in, out = "out";
    std::string event = "RR2004";
    std::string variable = "k";
  };
  auto county_opts = std::make_shared<County20Opts>();
  CLI::App* county_cmd = app.add_subcommand(
      "county20", "In/out comparison for the 20 counties of the hot-audit draw");
  county_cmd->add_option("--in", county_opts->in, "center CSV (- for stdin)")
      ->required();
  county_cmd->add_option("--out", county_opts->out, "output directory")
      ->capture_default_str();
  county_cmd->add_option("--event", county_opts->event, "electoral event")
      ->check(CLI::IsMember({"E1998", "E2000", "RR2004", "EXITPOLL2004", "GOV2004"}))
      ->capture_default_str();
  county_cmd->add_option("--variable", county_opts->variable, "k or s")
      ->check(CLI::IsMember({"k", "s"}))
      ->capture_default_str();
  county_cmd->callback([county_opts, &out]() {
    ReportEnvelope envelope;
    envelope.command = "county20";
    Dataset ds = load_centers(county_opts->in, envelope.inputs);
    AuditVariable variable =
        county_opts->variable == "k" ? AuditVariable::k : AuditVariable::s;
    County20Result result =
        county20_comparison(ds, event_or_throw(county_opts->event), variable);

    const DistComparison& cmp = result.comparison;
    std::string plot = "bin_lo,bin_hi,density_in20,density_out\n";
    for (std::size_t b = 0; b < cmp.histogram_in.counts.size(); ++b) {
      double lo = cmp.histogram_in.lo + cmp.histogram_in.width * static_cast<double>(b);
      plot += csv::format_line({csv::format_double(lo),
                                csv::format_double(lo + cmp.histogram_in.width),
                                csv::format_double(cmp.histogram_in.densities[b]),
                                csv::format_double(cmp.histogram_out.densities[b])}) +
              "\n";
    }
    std::string ecdf = "value,ecdf_in20,ecdf_out\n";
    {
      std::vector<double> merged(cmp.ecdf_in);
      merged.insert(merged.end(), cmp.ecdf_out.begin(), cmp.ecdf_out.end());
      std::sort(merged.begin(), merged.end());
      merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
      auto f = [](const std::vector<double>& sorted, double v) {
        return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), v) -
                                   sorted.begin()) /
               static_cast<double>(sorted.size());
      };
      for (double v : merged) {
        ecdf += csv::format_line({csv::format_double(v),
                                  csv::format_double(f(cmp.ecdf_in, v)),
                                  csv::format_double(f(cmp.ecdf_out, v))}) +
                "\n";
      }
    }
    auto group_json = [](const GroupStats& g) {
      return json{{"mean_k", g.mean_k}, {"mean_s", g.mean_s}, {"n", g.n}};
    };
    envelope.parameters = {{"event", county_opts->event},
                           {"variable", county_opts->variable}};
    envelope.results = {{"means",
                         {{"in20", group_json(result.means.in20)},
                          {"out", group_json(result.means.out)}}},
                        {"ks", test_result_json(cmp.ks)}};
    fs::path dir = prepare_out_dir(county_opts->out);
    write_text(dir / "county20.plot.csv", plot);
    write_text(dir / "county20.ecdf.csv", ecdf);
    envelope.write(dir / "county20.report.json");
    out << "county20: D = " << cmp.ks.statistic << ", p = " << cmp.ks.p_value
        << "\n";
  });

  // repvar -------------------------------------------------------------------------
  struct RepOpts {
    std::string in, out = "out";
    std::string channel = "C";
    std::string group = "all";
    std::vector<double> rect;
  };
  auto rep_opts = std::make_shared<RepOpts>();
  CLI::App* rep_cmd = app.add_subcommand(
      "repvar", "Registry growth vs opposition change, with least-squares line");
  rep_cmd->add_option("--in", rep_opts->in, "center CSV (- for stdin)")->required();
  rep_cmd->add_option("--out", rep_opts->out, "output directory")
      ->capture_default_str();
  rep_cmd->add_option("--channel", rep_opts->channel, "C, M or all")
      ->check(CLI::IsMember({"C", "M", "all"}))
      ->capture_default_str();
  rep_cmd->add_option("--group", rep_opts->group, "all, in20 or out20")
      ->check(CLI::IsMember({"all", "in20", "out20"}))
      ->capture_default_str();
  rep_cmd->add_option("--rect", rep_opts->rect,
                      "query box: delta_lo delta_hi growth_lo growth_hi")
      ->expected(4);
  rep_cmd->callback([rep_opts, &out]() {
    ReportEnvelope envelope;
    envelope.command = "repvar";
    Dataset ds = load_centers(rep_opts->in, envelope.inputs);
    GroupFilter group = rep_opts->group == "in20"    ? GroupFilter::in20
                        : rep_opts->group == "out20" ? GroupFilter::out20
                                                     : GroupFilter::all;
    std::optional<Rect> rect;
    if (!rep_opts->rect.empty()) {
      rect = Rect{rep_opts->rect[0], rep_opts->rect[1], rep_opts->rect[2],
                  rep_opts->rect[3]};
    }
    RepVariationResult result =
        rep_variation(ds, parse_channel_filter(rep_opts->channel), group, rect);
    std::string plot = "code,delta_pct,rep_growth,selected_192\n";
    for (const RepPoint& p : result.points) {
      plot += csv::format_line({p.code, csv::format_double(p.delta_pct),
                                csv::format_double(p.rep_growth),
                                p.selected_192 ? "1" : "0"}) +
              "\n";
    }
    json rect_json = nullptr;
    if (result.rect) {
      rect_json = {{"x_min", result.rect->rect.x_min},
                   {"x_max", result.rect->rect.x_max},
                   {"y_min", result.rect->rect.y_min},
                   {"y_max", result.rect->rect.y_max},
                   {"inside", result.rect->inside_codes.size()},
                   {"inside_codes", result.rect->inside_codes},
                   {"any_selected_192", result.rect->any_selected_192}};
    }
    envelope.parameters = {{"channel", rep_opts->channel},
                           {"group", rep_opts->group}};
    envelope.results = {{"slope", result.slope},
                        {"intercept", result.intercept},
                        {"n_points", result.points.size()},
                        {"n_excluded", result.excluded.size()},
                        {"excluded", exclusions_json(result.excluded)},
                        {"rect", rect_json}};
    fs::path dir = prepare_out_dir(rep_opts->out);
    write_text(dir / "repvar.plot.csv", plot);
    envelope.write(dir / "repvar.report.json");
    out << "repvar: slope = " << result.slope << ", intercept = "
        << result.intercept << "\n";
  });

  // stemleaf -----------------------------------------------------------------------
  struct StemOpts {
    std::string in, in2, out = "out";
    std::string mode = "audit";
  };
  auto stem_opts = std::make_shared<StemOpts>();
  CLI::App* stem_cmd =
      app.add_subcommand("stemleaf", "Stem-and-leaf rendering of s values");
  stem_cmd->add_option("--in", stem_opts->in,
                       "center CSV (audit mode) or value file (values mode)")
      ->required();
  stem_cmd->add_option("--in2", stem_opts->in2,
                       "values mode: second sample for the back-to-back panel");
  stem_cmd->add_option("--out", stem_opts->out, "output directory")
      ->capture_default_str();
  stem_cmd->add_option("--mode", stem_opts->mode,
                       "audit: selected-vs-audited s values from a center CSV; "
                       "values: plain value files")
      ->check(CLI::IsMember({"audit", "values"}))
      ->capture_default_str();
  stem_cmd->callback([stem_opts, &out]() {
    ReportEnvelope envelope;
    envelope.command = "stemleaf";
    std::string text;
    std::size_t n_right = 0, n_left = 0;
    if (stem_opts->mode == "audit") {
      Dataset ds = load_centers(stem_opts->in, envelope.inputs);
      std::vector<double> selected, audited;
      for (const CenterRecord& c : ds.centers) {
        if (!c.selected_192) continue;
        std::optional<double> s = compute_s(c);
        if (!s) continue;
        selected.push_back(*s);
        if (c.audited_26) audited.push_back(*s);
      }
      if (selected.empty()) {
        throw ValidationError("stemleaf: no selected_192 centers with defined s");
      }
      text = stem_and_leaf(selected, audited);
      n_right = selected.size();
      n_left = audited.size();
    } else {
      std::vector<double> right = read_value_file(stem_opts->in, envelope.inputs);
      std::vector<double> left;
      if (!stem_opts->in2.empty()) {
        left = read_value_file(stem_opts->in2, envelope.inputs);
      }
      text = stem_and_leaf(right, left);
      n_right = right.size();
      n_left = left.size();
    }
    envelope.parameters = {{"mode", stem_opts->mode}};
    envelope.results = {{"text", text},
                        {"n_right", n_right},
                        {"n_left", n_left}};
    fs::path dir = prepare_out_dir(stem_opts->out);
    write_text(dir / "stemleaf.txt", text);
    envelope.write(dir / "stemleaf.report.json");
    out << text;
  });

  // synth --------------------------------------------------------------------------
  struct SynthOpts {
    std::string out = "out";
    std::string model = "honest";
    std::uint64_t seed = 0;
    std::size_t n = 600;
    double lambda = 1.0;
    double noise_sigma = 8.0;
    double manual_fraction = 0.0;
  };
  auto synth_opts = std::make_shared<SynthOpts>();
  CLI::App* synth_cmd = app.add_subcommand(
      "synth", "Generate a synthetic center dataset (honest or forced-linear)");
  synth_cmd->add_option("--out", synth_opts->out, "output directory (- for stdout)")
      ->capture_default_str();
  synth_cmd->add_option("--model", synth_opts->model, "generative model")
      ->check(CLI::IsMember({"honest", "forced_linear"}))
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth_opts->seed, "RNG seed (required)")->required();
  synth_cmd->add_option("--n", synth_opts->n, "number of centers")
      ->capture_default_str();
  synth_cmd->add_option("--lambda", synth_opts->lambda, "forced-linear slope")
      ->capture_default_str();
  synth_cmd->add_option("--noise-sigma", synth_opts->noise_sigma,
                        "forced-linear noise, in votes")
      ->capture_default_str();
  synth_cmd->add_option("--manual-fraction", synth_opts->manual_fraction,
                        "fraction of manual centers")
      ->capture_default_str();
  synth_cmd->callback([synth_opts, &out]() {
    SynthConfig cfg;
    cfg.model = synth_opts->model == "forced_linear" ? SynthModel::forced_linear
                                                     : SynthModel::honest;
    cfg.seed = synth_opts->seed;
    cfg.n_centers = synth_opts->n;
    cfg.lambda = synth_opts->lambda;
    cfg.noise_sigma = synth_opts->noise_sigma;
    cfg.manual_fraction = synth_opts->manual_fraction;
    SynthResult result = generate(cfg);
    const std::set<EventId> schema = {EventId::e1998, EventId::rr2004};
    if (synth_opts->out == "-") {
      out << emit_centers(result.dataset, schema);
      return;
    }
    fs::path dir = prepare_out_dir(synth_opts->out);
    write_centers(result.dataset, schema, dir / "synth.csv");
    ReportEnvelope envelope;
    envelope.command = "synth";
    envelope.parameters = {{"model", synth_opts->model},
                           {"seed", synth_opts->seed},
                           {"n", synth_opts->n},
                           {"lambda", synth_opts->lambda},
                           {"noise_sigma", synth_opts->noise_sigma},
                           {"manual_fraction", synth_opts->manual_fraction}};
    envelope.results = {{"n_centers", result.dataset.size()},
                        {"clamped_si", result.report.clamped_si},
                        {"clamp_rate", result.report.clamp_rate}};
    envelope.write(dir / "synth.report.json");
    out << "synth: " << result.dataset.size() << " centers -> "
        << (dir / "synth.csv").string() << "\n";
  });

  // power --------------------------------------------------------------------------
  struct PowerOpts {
    std::string out = "out";
    std::vector<std::string> models = {"honest", "forced_linear"};
    std::vector<double> noise_sigmas;
    std::vector<std::string> detectors = {"windowed_flatness", "median_split_diff",
                                          "rstar_perm"};
    std::size_t replicates_per_cell = 100;
    std::size_t perm_replicates = 100000;
    std::size_t n = 600;
    std::uint64_t seed = 0;
  };
  auto power_opts = std::make_shared<PowerOpts>();
  CLI::App* power_cmd = app.add_subcommand(
      "power", "Detector flag rates over a grid of synthetic configurations");
  power_cmd->add_option("--out", power_opts->out, "output directory")
      ->capture_default_str();
  power_cmd->add_option("--models", power_opts->models, "models to sweep")
      ->delimiter(',')
      ->capture_default_str();
  power_cmd->add_option("--noise-sigmas", power_opts->noise_sigmas,
                        "forced-linear noise values to sweep (default: 8)")
      ->delimiter(',');
  power_cmd->add_option("--detectors", power_opts->detectors, "detectors to run")
      ->delimiter(',')
      ->capture_default_str();
  power_cmd->add_option("--replicates-per-cell", power_opts->replicates_per_cell,
                        "datasets per grid cell")
      ->capture_default_str();
  power_cmd->add_option("--perm-replicates", power_opts->perm_replicates,
                        "shuffles inside the r* permutation test")
      ->capture_default_str();
  power_cmd->add_option("--n", power_opts->n, "centers per dataset")
      ->capture_default_str();
  power_cmd->add_option("--seed", power_opts->seed, "RNG seed (required)")->required();
  power_cmd->callback([power_opts, &out]() {
    std::vector<Detector> detectors;
    for (const std::string& name : power_opts->detectors) {
      std::optional<Detector> d = parse_detector(name);
      if (!d) throw ValidationError("unknown detector " + name);
      detectors.push_back(*d);
    }
    std::vector<double> sigmas = power_opts->noise_sigmas;
    if (sigmas.empty()) sigmas.push_back(SynthConfig{}.noise_sigma);
    std::vector<SynthConfig> grid;
    for (const std::string& model : power_opts->models) {
      if (model != "honest" && model != "forced_linear") {
        throw ValidationError("unknown model " + model);
      }
      for (double sigma : sigmas) {
        SynthConfig cfg;
        cfg.model = model == "honest" ? SynthModel::honest
                                      : SynthModel::forced_linear;
        cfg.noise_sigma = sigma;
        cfg.n_centers = power_opts->n;
        grid.push_back(cfg);
        if (cfg.model == SynthModel::honest) break;  // noise only matters when forcing
      }
    }
    DetectorParams params;
    params.perm_replicates = power_opts->perm_replicates;
    std::vector<PowerCell> cells =
        detector_power(grid, detectors, power_opts->replicates_per_cell,
                       RngSpec{power_opts->seed, 0}, params);

    json cells_json = json::array();
    std::string plot = "model,noise_sigma,detector,power,evaluable,replicates\n";
    for (const PowerCell& cell : cells) {
      const char* model = cell.config.model == SynthModel::honest
                              ? "honest"
                              : "forced_linear";
      json powers = json::object();
      for (const auto& [d, p] : cell.power) {
        powers[std::string(detector_name(d))] = {
            {"power", p}, {"evaluable", cell.evaluable.at(d)}};
        plot += csv::format_line({model, csv::format_double(cell.config.noise_sigma),
                                  std::string(detector_name(d)),
                                  csv::format_double(p),
                                  std::to_string(cell.evaluable.at(d)),
                                  std::to_string(cell.replicates)}) +
                "\n";
      }
      cells_json.push_back({{"model", model},
                            {"noise_sigma", cell.config.noise_sigma},
                            {"n_centers", cell.config.n_centers},
                            {"replicates", cell.replicates},
                            {"detectors", powers}});
    }
    ReportEnvelope envelope;
    envelope.command = "power";
    envelope.parameters = {{"models", power_opts->models},
                           {"detectors", power_opts->detectors},
                           {"noise_sigmas", sigmas},
                           {"replicates_per_cell", power_opts->replicates_per_cell},
                           {"perm_replicates", power_opts->perm_replicates},
                           {"n", power_opts->n},
                           {"seed", power_opts->seed}};
    envelope.results = {{"cells", cells_json}};
    fs::path dir = prepare_out_dir(power_opts->out);
    write_text(dir / "power.plot.csv", plot);
    envelope.write(dir / "power.report.json");
    out << "power: " << cells.size() << " cells -> "
        << (dir / "power.plot.csv").string() << "\n";
  });

  // parse ---------------------------------------------------------------------------
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("recount");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const UndefinedError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace recount
