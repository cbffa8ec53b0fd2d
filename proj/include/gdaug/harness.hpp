#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdaug/augment.hpp"
#include "gdaug/graph.hpp"
#include "gdaug/graph_io.hpp"
#include "gdaug/models.hpp"

namespace gdaug {

/// A graph file on disk or a synthetic SBM.
struct DatasetSpec {
  std::string name = "SBM";
  std::optional<std::filesystem::path> path;
  GraphFormat format = GraphFormat::GraphJson;
  SbmParams sbm;
  /// Split seed for files that carry labels but no masks.
  std::uint64_t split_seed = 0;

  friend bool operator==(const DatasetSpec& a, const DatasetSpec& b);
};

nlohmann::json to_json(const DatasetSpec& d);
DatasetSpec dataset_spec_from_json(const nlohmann::json& j, const std::string& path = "dataset");

struct LoadedDataset {
  Graph graph;
  std::vector<std::string> warnings;
};

/// Throws IoError, FormatError or ValidationError.
LoadedDataset load_dataset(const DatasetSpec& spec);

struct ExperimentConfig {
  DatasetSpec dataset;
  ModelConfig model;
  AugmenterSpec augmentation;
  TrainConfig train;
  std::size_t num_seeds = 10;
  std::uint64_t base_seed = 0;
  std::string output = "out";

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Effective config with every default spelled out.
nlohmann::json to_json(const ExperimentConfig& cfg);
/// Strict parse. Only "dataset" is required; "model" defaults to a 2-layer GCN.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
/// Reads and parses a JSON file. Throws IoError when unreadable, ConfigError otherwise.
ExperimentConfig parse_config(const std::filesystem::path& path);
/// Parses a JSON document, mapping syntax errors to ConfigError.
nlohmann::json read_json_config(const std::filesystem::path& path);

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  double test_accuracy = 0.0;  // percent
  double test_macro_f1 = 0.0;  // percent
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  std::string error;

  friend bool operator==(const SeedResult&, const SeedResult&) = default;
};

struct ExperimentReport {
  std::string dataset;
  std::string model;
  std::string method;
  nlohmann::json config;            // effective config
  std::vector<SeedResult> seeds;    // in seed order
  std::vector<double> samples;      // test accuracy (%) of successful seeds
  double mean = 0.0;
  double std = 0.0;                 // sample standard deviation (n - 1)
  bool partial = false;
  std::string augmentation_protocol;
  std::string config_hash;
  double wall_time_s = 0.0;
};

/// Mean and sample standard deviation; std is 0 for a single sample.
/// Throws ValidationError for an empty input.
std::pair<double, double> mean_std(const std::vector<double>& xs);

/// Metadata field names that vary between identical runs.
inline constexpr const char* kWallTimeField = "wall_time_s";

nlohmann::json to_json(const ExperimentReport& r);
ExperimentReport report_from_json(const nlohmann::json& j);

/// Training per seed base_seed .. base_seed + num_seeds - 1 on up to `jobs`
/// threads. Results are folded in seed order, so the report does not depend
/// on scheduling. A failing seed marks the report partial.
ExperimentReport run_experiment(const ExperimentConfig& cfg, std::size_t jobs = 1);
ExperimentReport run_experiment(const ExperimentConfig& cfg, const Graph& g, std::size_t jobs = 1);

/// Per-seed artifacts produced alongside a report.
struct SeedArtifacts {
  std::uint64_t seed = 0;
  std::string trace_csv;
  nlohmann::json checkpoint;
};

/// run_experiment that also returns traces and checkpoints of successful seeds.
ExperimentReport run_experiment_with_artifacts(const ExperimentConfig& cfg, const Graph& g, std::size_t jobs,
                                               std::vector<SeedArtifacts>* artifacts);

enum class TableFormat { Csv, Markdown, Json };

TableFormat parse_table_format(const std::string& name);
std::string extension(TableFormat f);

/// "MM.MM±S.SS".
std::string format_cell(double mean, double std);

/// Rows are (model, method) in first-appearance order, columns are datasets.
/// The "top2" side column lists the datasets where the row's mean is among
/// the two best. Throws ValidationError for an empty list.
std::string render_table(const std::vector<ExperimentReport>& reports, TableFormat format);
/// render_table written to `path`. Throws IoError.
void emit_table(const std::vector<ExperimentReport>& reports, TableFormat format, const std::filesystem::path& path);

/// I, ER, FM, ND, RWS, FDM, FANA with default parameters.
std::vector<AugmenterSpec> default_grid_augmentations();

struct GridSpec {
  std::vector<DatasetSpec> datasets;
  std::vector<ModelConfig> models;
  std::vector<AugmenterSpec> augmentations = default_grid_augmentations();
  TrainConfig train;
  std::size_t num_seeds = 10;
  std::uint64_t base_seed = 0;
};

nlohmann::json to_json(const GridSpec& g);
GridSpec grid_spec_from_json(const nlohmann::json& j);

/// Cartesian product datasets x models x augmentations, all sharing base_seed.
/// A dataset that fails to load yields partial reports for its cells.
std::vector<ExperimentReport> benchmark_grid(const GridSpec& grid, std::size_t jobs = 1);

/// 64-bit FNV-1a of the text, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace gdaug
