// gdaug command-line driver.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gdaug/augment.hpp"
#include "gdaug/contrastive.hpp"
#include "gdaug/error.hpp"
#include "gdaug/graph_io.hpp"
#include "gdaug/harness.hpp"
#include "gdaug/kernels.hpp"
#include "gdaug/version.hpp"
#include "gdaug/json_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gdaug;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitPartial = 4;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  bool out_given = false;
  std::size_t jobs = 1;
};

void write_json(const fs::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

json require_config(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config", "this command needs a config file");
  return read_json_config(g.config);
}

json stats_json(const Graph& g) {
  const DatasetStats s = dataset_stats(g);
  return json{{"nodes", s.nodes}, {"edges", s.edges}, {"features", s.features}, {"classes", s.classes}};
}

std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '-';
  return out;
}

void warn_all(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

struct AugmentArgs {
  std::string in;
  std::string spec;
};

int cmd_augment(const Globals& glob, const AugmentArgs& args) {
  DatasetSpec ds;
  AugmenterSpec aug = AugmenterSpec::identity();
  std::string fmt = "graph-json";
  if (!args.in.empty()) {
    if (!glob.config.empty()) throw ConfigError("--config", "give either --config or --in/--spec, not both");
    ds.path = args.in;
    ds.name = fs::path(args.in).stem().string();
    if (!args.spec.empty()) aug = augmenter_from_json(read_json_config(args.spec), "spec");
  } else {
    if (!args.spec.empty()) throw ConfigError("--spec", "--spec needs --in");
    const json cfg = require_config(glob);
    detail::StrictObject o(cfg, "");
    if (!o.has("dataset")) throw ConfigError("dataset", "missing required key");
    ds = dataset_spec_from_json(o.raw("dataset"), "dataset");
    if (o.has("augmentation")) aug = augmenter_from_json(o.raw("augmentation"), "augmentation");
    o.read("format", fmt);
    o.finish();
  }
  GraphFormat format;
  try {
    format = parse_graph_format(fmt);
  } catch (const Error& e) {
    throw ConfigError("format", e.what());
  }
  if (glob.seed) aug.seed = *glob.seed;

  const LoadedDataset data = load_dataset(ds);
  warn_all(data.warnings);
  const Graph out_graph = apply(aug, data.graph);
  // With --in, an --out ending in .json names the output graph itself.
  fs::path out_dir = glob.out;
  fs::path graph_path = out_dir / (format == GraphFormat::GraphJson ? "augmented.json" : "augmented");
  if (!args.in.empty() && fs::path(glob.out).extension() == ".json") {
    graph_path = glob.out;
    out_dir = graph_path.has_parent_path() ? graph_path.parent_path() : fs::path(".");
  }
  fs::create_directories(out_dir / "reports");
  save_graph(out_graph, graph_path, format);
  write_json(out_dir / "reports" / "augment.json",
             json{{"augmentation", to_json(aug)},
                  {"dataset", to_json(ds)},
                  {"input", stats_json(data.graph)},
                  {"output", stats_json(out_graph)},
                  {"graph", graph_path.filename().string()}});
  std::printf("%s: %lld -> %lld edges, written to %s\n", aug.label().c_str(),
              static_cast<long long>(data.graph.num_edges()), static_cast<long long>(out_graph.num_edges()),
              graph_path.string().c_str());
  return kExitOk;
}

int cmd_train(const Globals& glob) {
  ExperimentConfig cfg = experiment_config_from_json(require_config(glob));
  if (glob.seed) cfg.base_seed = *glob.seed;
  const fs::path out_dir = glob.out_given ? glob.out : cfg.output;
  const LoadedDataset data = load_dataset(cfg.dataset);
  warn_all(data.warnings);

  std::vector<SeedArtifacts> artifacts;
  const ExperimentReport report = run_experiment_with_artifacts(cfg, data.graph, glob.jobs, &artifacts);
  fs::create_directories(out_dir / "reports");
  fs::create_directories(out_dir / "traces");
  fs::create_directories(out_dir / "checkpoints");
  for (const auto& a : artifacts) {
    const std::string stem = "seed_" + std::to_string(a.seed);
    write_text_file(out_dir / "traces" / (stem + ".csv"), a.trace_csv);
    write_json(out_dir / "checkpoints" / (stem + ".json"), a.checkpoint);
  }
  const std::string name = slug(report.dataset) + "_" + slug(report.model) + "_" + slug(report.method);
  write_json(out_dir / "reports" / (name + ".json"), to_json(report));
  emit_table({report}, TableFormat::Markdown, out_dir / "table.md");
  emit_table({report}, TableFormat::Csv, out_dir / "table.csv");
  std::cout << render_table({report}, TableFormat::Markdown);
  for (const auto& s : report.seeds)
    if (!s.ok) std::fprintf(stderr, "seed %llu failed: %s\n", static_cast<unsigned long long>(s.seed), s.error.c_str());
  return report.partial ? kExitPartial : kExitOk;
}

GraphBatch contrastive_dataset(const json& j, const std::string& path) {
  detail::StrictObject o(j, path);
  const bool has_dir = o.has("dir"), has_synth = o.has("synthetic");
  if (has_dir == has_synth) throw ConfigError(path, "give exactly one of 'dir' or 'synthetic'");
  GraphBatch data;
  if (has_dir) {
    std::string dir;
    o.read("dir", dir);
    o.finish();
    data = load_graph_directory(dir);
  } else {
    const SyntheticGraphSetParams p = synthetic_graph_set_from_json(o.raw("synthetic"), o.key_path("synthetic"));
    o.finish();
    data = synthetic_graph_set(p);
  }
  return data;
}

int cmd_contrastive(const Globals& glob) {
  const json cfg_json = require_config(glob);
  detail::StrictObject o(cfg_json, "");
  if (!o.has("dataset")) throw ConfigError("dataset", "missing required key");
  const json& ds_json = o.raw("dataset");
  ContrastiveConfig cfg;
  if (o.has("contrastive")) cfg = contrastive_config_from_json(o.raw("contrastive"), "contrastive");
  o.finish();
  if (glob.seed) cfg.seed = *glob.seed;
  const GraphBatch data = contrastive_dataset(ds_json, "dataset");

  const ContrastiveResult result = train_contrastive(data, cfg);
  double f1 = 0.0;
  if (data.labels.size() == data.size()) f1 = linear_eval_f1(result.encoder, data, cfg.seed);

  const fs::path out_dir = glob.out;
  fs::create_directories(out_dir / "reports");
  std::string trace = "epoch,loss\n";
  char buf[64];
  for (std::size_t e = 0; e < result.loss_trace.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e + 1, result.loss_trace[e]);
    trace += buf;
  }
  write_text_file(out_dir / "loss_trace.csv", trace);
  const std::string first = to_string(cfg.pool.front().kind);
  const std::string second = to_string(cfg.pool.size() > 1 ? cfg.pool[1].kind : cfg.pool.front().kind);
  const json res{{"f1", f1}, {"pair", {first, second}}, {"seed", cfg.seed}};
  write_json(out_dir / "reports" / "contrastive.json", res);
  std::printf("loss %.4f -> %.4f over %zu epochs, linear-eval macro-F1 %.4f\n", result.loss_trace.front(),
              result.loss_trace.back(), result.loss_trace.size(), f1);
  return kExitOk;
}

int cmd_benchmark(const Globals& glob) {
  GridSpec grid = grid_spec_from_json(require_config(glob));
  if (glob.seed) grid.base_seed = *glob.seed;
  const std::vector<ExperimentReport> reports = benchmark_grid(grid, glob.jobs);
  const fs::path out_dir = glob.out;
  fs::create_directories(out_dir / "reports");
  bool partial = false;
  char idx[16];
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    partial = partial || r.partial;
    std::snprintf(idx, sizeof idx, "%03zu", i);
    write_json(out_dir / "reports" /
                   (std::string(idx) + "_" + slug(r.dataset) + "_" + slug(r.model) + "_" + slug(r.method) + ".json"),
               to_json(r));
  }
  for (auto f : {TableFormat::Markdown, TableFormat::Csv, TableFormat::Json})
    emit_table(reports, f, out_dir / ("table" + extension(f)));
  std::cout << render_table(reports, TableFormat::Markdown);
  return partial ? kExitPartial : kExitOk;
}

int cmd_gen_synthetic(const Globals& glob) {
  const json cfg = require_config(glob);
  detail::StrictObject o(cfg, "");
  std::string kind = "sbm";
  o.read("kind", kind);
  const fs::path out_dir = glob.out;
  fs::create_directories(out_dir / "reports");
  json report{{"kind", kind}};
  if (kind == "sbm") {
    SbmParams p;
    if (o.has("sbm")) {
      const DatasetSpec ds = dataset_spec_from_json(json{{"synthetic", o.raw("sbm")}}, "");
      p = ds.sbm;
    }
    std::string fmt = "graph-json";
    o.read("format", fmt);
    o.finish();
    GraphFormat format;
    try {
      format = parse_graph_format(fmt);
    } catch (const Error& e) {
      throw ConfigError("format", e.what());
    }
    if (glob.seed) p.seed = *glob.seed;
    const Graph g = synthetic_sbm(p);
    const fs::path path = out_dir / (format == GraphFormat::GraphJson ? "synthetic.json" : "synthetic");
    save_graph(g, path, format);
    report["stats"] = stats_json(g);
    report["graph"] = path.filename().string();
    report["params"] = to_json(DatasetSpec{"SBM", std::nullopt, GraphFormat::GraphJson, p, 0})["synthetic"];
  } else if (kind == "graph_set") {
    SyntheticGraphSetParams p;
    if (o.has("graph_set")) p = synthetic_graph_set_from_json(o.raw("graph_set"), "graph_set");
    o.finish();
    if (glob.seed) p.seed = *glob.seed;
    const GraphBatch data = synthetic_graph_set(p);
    const fs::path dir = out_dir / "graphs";
    fs::create_directories(dir);
    json labels = json::object();
    char name[32];
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::snprintf(name, sizeof name, "g%05zu.json", i);
      save_graph(data.graphs[i], dir / name, GraphFormat::GraphJson);
      labels[name] = data.labels[i];
    }
    write_json(dir / "labels.json", labels);
    report["num_graphs"] = data.size();
    report["params"] = to_json(p);
  } else {
    throw ConfigError("kind", "expected 'sbm' or 'graph_set'");
  }
  write_json(out_dir / "reports" / "gen-synthetic.json", report);
  std::printf("wrote %s\n", out_dir.string().c_str());
  return kExitOk;
}

int cmd_report(const Globals& glob, const std::string& input, const std::string& format_name) {
  const TableFormat format = parse_table_format(format_name);
  const fs::path dir = input.empty() ? fs::path(glob.out) / "reports" : fs::path(input);
  if (!fs::is_directory(dir)) throw IoError("no report directory at " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<ExperimentReport> reports;
  for (const auto& f : files) {
    json j;
    try {
      j = json::parse(read_text_file(f));
    } catch (const json::parse_error& e) {
      throw FormatError(f.string() + ": " + e.what());
    }
    if (j.is_object() && j.contains("method") && j.contains("samples")) reports.push_back(report_from_json(j));
  }
  if (reports.empty()) throw ValidationError("no experiment reports in " + dir.string());
  const std::string text = render_table(reports, format);
  write_text_file(fs::path(glob.out) / ("table" + extension(format)), text);
  std::cout << text;
  bool partial = false;
  for (const auto& r : reports) partial = partial || r.partial;
  return partial ? kExitPartial : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph data augmentation toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  Globals glob;
  app.add_option("--config", glob.config, "JSON config file");
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Seed override");
  auto* out_opt = app.add_option("--out", glob.out, "Output directory");
  app.add_option("--jobs", glob.jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* augment = app.add_subcommand("augment", "Apply one augmentation to a graph");
  AugmentArgs augment_args;
  augment->add_option("--in", augment_args.in, "Input graph-json file (instead of a config)");
  augment->add_option("--spec", augment_args.spec, "Augmentation spec JSON file, used with --in");
  auto* train = app.add_subcommand("train", "Multi-seed supervised training for one config");
  auto* contrastive = app.add_subcommand("contrastive", "Contrastive pretraining plus linear evaluation");
  auto* benchmark = app.add_subcommand("benchmark", "Models x augmentations x datasets grid");
  auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic SBM graph or graph set");
  auto* report = app.add_subcommand("report", "Render a table from saved reports");
  std::string report_input, report_format = "markdown";
  report->add_option("--input", report_input, "Report directory (default <out>/reports)");
  report->add_option("--format", report_format, "markdown, csv or json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (*seed_opt) glob.seed = seed;
  glob.out_given = static_cast<bool>(*out_opt);

  try {
    if (*augment) return cmd_augment(glob, augment_args);
    if (*train) return cmd_train(glob);
    if (*contrastive) return cmd_contrastive(glob);
    if (*benchmark) return cmd_benchmark(glob);
    if (*gen) return cmd_gen_synthetic(glob);
    if (*report) return cmd_report(glob, report_input, report_format);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const Error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kExitData;
  }
  return kExitOk;
}
