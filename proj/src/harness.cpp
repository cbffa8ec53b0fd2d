#include "gdaug/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <thread>

#include "gdaug/error.hpp"
#include "gdaug/kernels.hpp"
#include "gdaug/version.hpp"
#include "gdaug/json_util.hpp"

namespace gdaug {

using nlohmann::json;

bool operator==(const DatasetSpec& a, const DatasetSpec& b) {
  return a.name == b.name && a.path == b.path && a.format == b.format && a.sbm.n == b.sbm.n &&
         a.sbm.classes == b.sbm.classes && a.sbm.p_in == b.sbm.p_in && a.sbm.p_out == b.sbm.p_out &&
         a.sbm.feat_dim == b.sbm.feat_dim && a.sbm.noise == b.sbm.noise && a.sbm.seed == b.sbm.seed &&
         a.split_seed == b.split_seed;
}

namespace {

std::string format_name(GraphFormat f) { return f == GraphFormat::GraphJson ? "graph-json" : "edge-list+csv"; }

json sbm_to_json(const SbmParams& p) {
  return json{{"n", p.n},           {"classes", p.classes},   {"p_in", p.p_in}, {"p_out", p.p_out},
              {"feat_dim", p.feat_dim}, {"noise", p.noise}, {"seed", p.seed}};
}

SbmParams sbm_from_json(const json& j, const std::string& path) {
  detail::StrictObject o(j, path);
  SbmParams p;
  o.read("n", p.n);
  o.read("classes", p.classes);
  o.read("p_in", p.p_in);
  o.read("p_out", p.p_out);
  o.read("feat_dim", p.feat_dim);
  o.read("noise", p.noise);
  o.read("seed", p.seed);
  o.finish();
  return p;
}

}  // namespace

json to_json(const DatasetSpec& d) {
  json j{{"name", d.name}};
  if (d.path) {
    j["path"] = d.path->string();
    j["format"] = format_name(d.format);
    j["split_seed"] = d.split_seed;
  } else {
    j["synthetic"] = sbm_to_json(d.sbm);
  }
  return j;
}

DatasetSpec dataset_spec_from_json(const json& j, const std::string& path) {
  detail::StrictObject o(j, path);
  DatasetSpec d;
  const bool has_path = o.has("path"), has_synth = o.has("synthetic");
  if (has_path == has_synth) throw ConfigError(path, "give exactly one of 'path' or 'synthetic'");
  if (has_path) {
    std::string p;
    o.read("path", p);
    d.path = p;
    d.name = std::filesystem::path(p).stem().string();
    std::string fmt = "graph-json";
    o.read("format", fmt);
    try {
      d.format = parse_graph_format(fmt);
    } catch (const Error& e) {
      throw ConfigError(o.key_path("format"), e.what());
    }
    o.read("split_seed", d.split_seed);
  } else {
    d.sbm = sbm_from_json(o.raw("synthetic"), o.key_path("synthetic"));
  }
  o.read("name", d.name);
  o.finish();
  return d;
}

LoadedDataset load_dataset(const DatasetSpec& spec) {
  LoadedDataset out;
  if (!spec.path) {
    out.graph = synthetic_sbm(spec.sbm);
    return out;
  }
  LoadReport report;
  Graph g = load_graph(*spec.path, spec.format, &report);
  out.warnings = report.warnings;
  if (!g.masks() && g.labels()) {
    g = g.with_masks(stratified_split(*g.labels(), spec.split_seed));
    out.warnings.push_back("no split masks in file; using a stratified 60/20/20 split");
  }
  if (const auto ref = reference_stats(spec.name)) {
    for (auto& w : compare_stats(dataset_stats(g), *ref)) out.warnings.push_back(std::move(w));
  }
  out.graph = std::move(g);
  return out;
}

json to_json(const ExperimentConfig& cfg) {
  return json{{"dataset", to_json(cfg.dataset)},
              {"model", to_json(cfg.model)},
              {"augmentation", to_json(cfg.augmentation)},
              {"train", to_json(cfg.train)},
              {"num_seeds", cfg.num_seeds},
              {"base_seed", cfg.base_seed},
              {"output", cfg.output}};
}

ExperimentConfig experiment_config_from_json(const json& j) {
  detail::StrictObject o(j, "");
  ExperimentConfig c;
  if (!o.has("dataset")) throw ConfigError("dataset", "missing required key");
  c.dataset = dataset_spec_from_json(o.raw("dataset"), "dataset");
  if (o.has("model")) c.model = model_config_from_json(o.raw("model"), "model");
  if (o.has("augmentation")) c.augmentation = augmenter_from_json(o.raw("augmentation"), "augmentation");
  if (o.has("train")) c.train = train_config_from_json(o.raw("train"), "train");
  o.read("num_seeds", c.num_seeds);
  o.read("base_seed", c.base_seed);
  o.read("output", c.output);
  o.finish();
  if (c.num_seeds < 1) throw ConfigError("num_seeds", "must be >= 1");
  if (c.dataset.path && !std::filesystem::exists(*c.dataset.path) && c.dataset.format == GraphFormat::GraphJson)
    throw ConfigError("dataset.path", "file not found: " + c.dataset.path->string());
  return c;
}

json read_json_config(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", path.string() + ": invalid JSON: " + e.what());
  }
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  return experiment_config_from_json(read_json_config(path));
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) throw ValidationError("mean_std: no samples");
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  if (xs.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json to_json(const ExperimentReport& r) {
  json seeds = json::array();
  for (const auto& s : r.seeds) {
    json e{{"seed", s.seed}, {"ok", s.ok}};
    if (s.ok) {
      e["test_accuracy"] = s.test_accuracy;
      e["test_macro_f1"] = s.test_macro_f1;
      e["best_epoch"] = s.best_epoch;
      e["epochs_run"] = s.epochs_run;
    } else {
      e["error"] = s.error;
    }
    seeds.push_back(e);
  }
  return json{{"dataset", r.dataset},
              {"model", r.model},
              {"method", r.method},
              {"metric", "test_accuracy_percent"},
              {"samples", r.samples},
              {"mean", r.mean},
              {"std", r.std},
              {"cell", r.samples.empty() ? "n/a" : format_cell(r.mean, r.std)},
              {"partial", r.partial},
              {"seeds", seeds},
              {"config", r.config},
              {"metadata",
               {{"estimator", "sample standard deviation (n-1)"},
                {"augmentation_protocol", r.augmentation_protocol},
                {"config_hash", r.config_hash},
                {"version", kVersion},
                {kWallTimeField, r.wall_time_s}}}};
}

ExperimentReport report_from_json(const json& j) {
  try {
    ExperimentReport r;
    r.dataset = j.at("dataset").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.samples = j.at("samples").get<std::vector<double>>();
    r.mean = j.at("mean").get<double>();
    r.std = j.at("std").get<double>();
    r.partial = j.at("partial").get<bool>();
    r.config = j.value("config", json::object());
    for (const auto& e : j.at("seeds")) {
      SeedResult s;
      s.seed = e.at("seed").get<std::uint64_t>();
      s.ok = e.at("ok").get<bool>();
      if (s.ok) {
        s.test_accuracy = e.at("test_accuracy").get<double>();
        s.test_macro_f1 = e.at("test_macro_f1").get<double>();
        s.best_epoch = e.at("best_epoch").get<std::size_t>();
        s.epochs_run = e.at("epochs_run").get<std::size_t>();
      } else {
        s.error = e.at("error").get<std::string>();
      }
      r.seeds.push_back(s);
    }
    const json& meta = j.at("metadata");
    r.augmentation_protocol = meta.at("augmentation_protocol").get<std::string>();
    r.config_hash = meta.at("config_hash").get<std::string>();
    r.wall_time_s = meta.at(kWallTimeField).get<double>();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
}

namespace {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

ExperimentReport skeleton(const ExperimentConfig& cfg) {
  ExperimentReport r;
  r.dataset = cfg.dataset.name;
  r.model = to_string(cfg.model.arch);
  r.method = cfg.augmentation.label();
  r.config = to_json(cfg);
  r.config.erase("output");
  r.config_hash = fnv1a_hex(r.config.dump());
  r.augmentation_protocol = cfg.augmentation.is_stochastic() ? "per-epoch" : "once";
  return r;
}

void aggregate(ExperimentReport& r) {
  r.samples.clear();
  r.partial = false;
  for (const auto& s : r.seeds) {
    if (s.ok)
      r.samples.push_back(s.test_accuracy);
    else
      r.partial = true;
  }
  if (r.samples.empty()) {
    r.mean = r.std = 0.0;
    return;
  }
  std::tie(r.mean, r.std) = mean_std(r.samples);
}

}  // namespace

ExperimentReport run_experiment_with_artifacts(const ExperimentConfig& cfg, const Graph& g, std::size_t jobs,
                                               std::vector<SeedArtifacts>* artifacts) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport r = skeleton(cfg);
  r.seeds.resize(cfg.num_seeds);
  std::vector<SeedArtifacts> arts(cfg.num_seeds);
  parallel_for(cfg.num_seeds, jobs, [&](std::size_t i) {
    SeedResult& s = r.seeds[i];
    s.seed = cfg.base_seed + i;
    try {
      const TrainedModel m = train_supervised(g, cfg.model, cfg.train, cfg.augmentation, s.seed);
      s.ok = true;
      s.test_accuracy = 100.0 * m.test.accuracy;
      s.test_macro_f1 = 100.0 * m.test.macro_f1;
      s.best_epoch = m.best_epoch;
      s.epochs_run = m.trace.size();
      if (artifacts) {
        arts[i].seed = s.seed;
        arts[i].trace_csv = trace_to_csv(m.trace);
        arts[i].checkpoint = checkpoint_to_json(m.config, m.params);
      }
    } catch (const std::exception& e) {
      s.ok = false;
      s.error = e.what();
    }
  });
  aggregate(r);
  if (artifacts) {
    artifacts->clear();
    for (std::size_t i = 0; i < arts.size(); ++i)
      if (r.seeds[i].ok) artifacts->push_back(std::move(arts[i]));
  }
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const Graph& g, std::size_t jobs) {
  return run_experiment_with_artifacts(cfg, g, jobs, nullptr);
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, std::size_t jobs) {
  const LoadedDataset data = load_dataset(cfg.dataset);
  return run_experiment(cfg, data.graph, jobs);
}

TableFormat parse_table_format(const std::string& name) {
  if (name == "csv") return TableFormat::Csv;
  if (name == "markdown" || name == "md") return TableFormat::Markdown;
  if (name == "json") return TableFormat::Json;
  throw ValidationError("unknown table format '" + name + "'");
}

std::string extension(TableFormat f) {
  switch (f) {
    case TableFormat::Csv: return ".csv";
    case TableFormat::Markdown: return ".md";
    case TableFormat::Json: return ".json";
  }
  return "";
}

std::string format_cell(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f±%.2f", mean, std);
  return buf;
}

namespace {

struct TableLayout {
  std::vector<std::string> columns;
  std::vector<std::pair<std::string, std::string>> rows;
  std::map<std::pair<std::size_t, std::size_t>, const ExperimentReport*> cells;  // (row, col)
  std::vector<std::vector<std::string>> top2;                                    // per row
};

TableLayout layout(const std::vector<ExperimentReport>& reports) {
  if (reports.empty()) throw ValidationError("render_table: no reports");
  TableLayout t;
  auto index_of = [](auto& vec, const auto& key) {
    const auto it = std::find(vec.begin(), vec.end(), key);
    if (it != vec.end()) return static_cast<std::size_t>(it - vec.begin());
    vec.push_back(key);
    return vec.size() - 1;
  };
  for (const auto& r : reports) {
    const std::size_t row = index_of(t.rows, std::make_pair(r.model, r.method));
    const std::size_t col = index_of(t.columns, r.dataset);
    t.cells[{row, col}] = &r;
  }
  t.top2.resize(t.rows.size());
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t row = 0; row < t.rows.size(); ++row) {
      const auto it = t.cells.find({row, c});
      if (it != t.cells.end() && !it->second->samples.empty()) ranked.push_back({it->second->mean, row});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; k < ranked.size() && k < 2; ++k) t.top2[ranked[k].second].push_back(t.columns[c]);
  }
  return t;
}

std::string join(const std::vector<std::string>& xs, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + xs[i];
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

std::string render_table(const std::vector<ExperimentReport>& reports, TableFormat format) {
  const TableLayout t = layout(reports);
  auto cell_text = [&](std::size_t row, std::size_t col) -> std::string {
    const auto it = t.cells.find({row, col});
    if (it == t.cells.end()) return "";
    const ExperimentReport& r = *it->second;
    if (r.samples.empty()) return "n/a";
    return format_cell(r.mean, r.std) + (r.partial ? "*" : "");
  };

  if (format == TableFormat::Json) {
    json rows = json::array();
    for (std::size_t row = 0; row < t.rows.size(); ++row) {
      json cells = json::object();
      for (std::size_t c = 0; c < t.columns.size(); ++c) {
        const auto it = t.cells.find({row, c});
        if (it == t.cells.end()) continue;
        const ExperimentReport& r = *it->second;
        cells[t.columns[c]] = {{"cell", cell_text(row, c)}, {"mean", r.mean},       {"std", r.std},
                               {"samples", r.samples},      {"partial", r.partial}};
      }
      rows.push_back({{"model", t.rows[row].first},
                      {"method", t.rows[row].second},
                      {"cells", cells},
                      {"top2", t.top2[row]}});
    }
    return json{{"columns", t.columns}, {"rows", rows}, {"estimator", "sample standard deviation (n-1)"}}.dump(2) +
           "\n";
  }

  std::string out;
  if (format == TableFormat::Csv) {
    out = "model,method";
    for (const auto& c : t.columns) out += "," + csv_field(c);
    out += ",top2\n";
    for (std::size_t row = 0; row < t.rows.size(); ++row) {
      out += csv_field(t.rows[row].first) + "," + csv_field(t.rows[row].second);
      for (std::size_t c = 0; c < t.columns.size(); ++c) out += "," + csv_field(cell_text(row, c));
      out += "," + csv_field(join(t.top2[row], ";")) + "\n";
    }
    return out;
  }

  out = "| Model | Method |";
  for (const auto& c : t.columns) out += " " + c + " |";
  out += " Top-2 |\n|---|---|";
  for (std::size_t c = 0; c < t.columns.size(); ++c) out += "---|";
  out += "---|\n";
  for (std::size_t row = 0; row < t.rows.size(); ++row) {
    out += "| " + t.rows[row].first + " | " + t.rows[row].second + " |";
    for (std::size_t c = 0; c < t.columns.size(); ++c) out += " " + cell_text(row, c) + " |";
    out += " " + join(t.top2[row], ", ") + " |\n";
  }
  return out;
}

void emit_table(const std::vector<ExperimentReport>& reports, TableFormat format,
                const std::filesystem::path& path) {
  write_text_file(path, render_table(reports, format));
}

json to_json(const GridSpec& g) {
  json datasets = json::array(), models = json::array(), augs = json::array();
  for (const auto& d : g.datasets) datasets.push_back(to_json(d));
  for (const auto& m : g.models) models.push_back(to_json(m));
  for (const auto& a : g.augmentations) augs.push_back(to_json(a));
  return json{{"datasets", datasets},   {"models", models},          {"augmentations", augs},
              {"train", to_json(g.train)}, {"num_seeds", g.num_seeds}, {"base_seed", g.base_seed}};
}

std::vector<AugmenterSpec> default_grid_augmentations() {
  return {AugmenterSpec::identity(),  AugmenterSpec::edge_remove(), AugmenterSpec::feature_mask(),
          AugmenterSpec::node_drop(), AugmenterSpec::random_walk(), AugmenterSpec::fdm(),
          AugmenterSpec::fana()};
}

GridSpec grid_spec_from_json(const json& j) {
  detail::StrictObject o(j, "");
  GridSpec g;
  auto array_of = [&](const std::string& key) -> const json& {
    if (!o.has(key)) throw ConfigError(key, "missing required key");
    const json& a = o.raw(key);
    if (!a.is_array() || a.empty()) throw ConfigError(key, "expected a nonempty array");
    return a;
  };
  const json& ds = array_of("datasets");
  for (std::size_t i = 0; i < ds.size(); ++i)
    g.datasets.push_back(dataset_spec_from_json(ds[i], "datasets[" + std::to_string(i) + "]"));
  const json& ms = array_of("models");
  for (std::size_t i = 0; i < ms.size(); ++i)
    g.models.push_back(model_config_from_json(ms[i], "models[" + std::to_string(i) + "]"));
  if (o.has("augmentations")) {
    const json& as = array_of("augmentations");
    g.augmentations.clear();
    for (std::size_t i = 0; i < as.size(); ++i)
      g.augmentations.push_back(augmenter_from_json(as[i], "augmentations[" + std::to_string(i) + "]"));
  }
  if (o.has("train")) g.train = train_config_from_json(o.raw("train"), "train");
  o.read("num_seeds", g.num_seeds);
  o.read("base_seed", g.base_seed);
  o.finish();
  if (g.num_seeds < 1) throw ConfigError("num_seeds", "must be >= 1");
  return g;
}

std::vector<ExperimentReport> benchmark_grid(const GridSpec& grid, std::size_t jobs) {
  if (grid.datasets.empty() || grid.models.empty() || grid.augmentations.empty())
    throw ValidationError("benchmark_grid: empty grid");
  std::vector<ExperimentReport> out;
  for (const auto& ds : grid.datasets) {
    std::optional<LoadedDataset> data;
    std::string load_error;
    try {
      data = load_dataset(ds);
    } catch (const std::exception& e) {
      load_error = e.what();
    }
    for (const auto& model : grid.models) {
      for (const auto& aug : grid.augmentations) {
        ExperimentConfig cfg;
        cfg.dataset = ds;
        cfg.model = model;
        cfg.augmentation = aug;
        cfg.train = grid.train;
        cfg.num_seeds = grid.num_seeds;
        cfg.base_seed = grid.base_seed;
        if (data) {
          out.push_back(run_experiment(cfg, data->graph, jobs));
        } else {
          ExperimentReport r = skeleton(cfg);
          for (std::size_t i = 0; i < cfg.num_seeds; ++i) r.seeds.push_back({cfg.base_seed + i, false, 0, 0, 0, 0, load_error});
          aggregate(r);
          out.push_back(std::move(r));
        }
      }
    }
  }
  return out;
}

}  // namespace gdaug
