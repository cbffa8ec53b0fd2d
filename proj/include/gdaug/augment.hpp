#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdaug/graph.hpp"

namespace gdaug {

enum class AugKind { Identity, EdgeRemove, FeatureMask, NodeDrop, RandomWalkSample, Fdm, Fana };
enum class FanaMode { Stochastic, Expected };

/// Tagged description of one augmentation. Only the fields relevant to `kind`
/// are meaningful; the factories fill per-kind defaults.
struct AugmenterSpec {
  AugKind kind = AugKind::Identity;
  /// Degree-multiplier steepness for FDM.
  double alpha = 1.0;
  /// FANA aggregation probability, or the drop/mask probability for ER/FM/ND.
  double p = 0.0;
  /// Fraction of nodes the random walk must visit (RWS).
  double keep_ratio = 0.8;
  FanaMode mode = FanaMode::Stochastic;
  std::uint64_t seed = 0;
  /// FeatureMask: mask individual entries instead of whole columns.
  bool per_entry = false;
  /// NodeDrop: never drop nodes that belong to a train/val/test split.
  bool protect_splits = true;

  static AugmenterSpec identity();
  static AugmenterSpec edge_remove(double p = 0.2, std::uint64_t seed = 0);
  static AugmenterSpec feature_mask(double p = 0.2, std::uint64_t seed = 0);
  static AugmenterSpec node_drop(double p = 0.2, std::uint64_t seed = 0);
  static AugmenterSpec random_walk(double keep_ratio = 0.8, std::uint64_t seed = 0);
  static AugmenterSpec fdm(double alpha = 1.0);
  static AugmenterSpec fana(double p = 0.5, FanaMode mode = FanaMode::Stochastic,
                            std::uint64_t seed = 0);

  /// Throws ValidationError when a hyperparameter is out of range.
  void validate() const;
  /// True when the output depends on the seed.
  bool is_stochastic() const;
  /// Short display name: I, ER, FM, ND, RWS, FDM, FANA.
  std::string label() const;

  friend bool operator==(const AugmenterSpec&, const AugmenterSpec&) = default;
};

std::string to_string(AugKind kind);
AugKind parse_aug_kind(const std::string& name);
std::string to_string(FanaMode mode);

/// Canonical JSON, e.g. {"kind":"fana","mode":"stochastic","p":0.5,"seed":7}.
nlohmann::json to_json(const AugmenterSpec& spec);
/// Strict parse: unknown or kind-irrelevant fields throw ValidationError.
AugmenterSpec augmenter_from_json(const nlohmann::json& j);
/// As above but throws ConfigError whose key path is `path` plus the offending field.
AugmenterSpec augmenter_from_json(const nlohmann::json& j, const std::string& path);

struct FdmMultipliers {
  std::vector<double> degrees;
  std::vector<double> multipliers;
};

/// Raw (self-loop free) degrees d_i and sigmoid multipliers 1 / (1 + e^{-alpha d_i}).
FdmMultipliers fdm_multipliers(const Graph& g, double alpha);

/// Degree multiplication: x'_ij = x_ij * d_i * m_i. Only features change.
Graph fdm(const Graph& g, double alpha);

/// Normalized-adjacency feature aggregation. Stochastic mode replaces row i
/// by (A~X)_i when a uniform draw r in (0, 1] satisfies r <= p; expected mode
/// returns p * A~X + (1 - p) * X.
Graph fana(const Graph& g, double p, FanaMode mode, std::uint64_t seed);

Graph edge_remove(const Graph& g, double p, std::uint64_t seed);
Graph feature_mask(const Graph& g, double p, std::uint64_t seed, bool per_entry = false);
/// Dropped nodes keep their index; their rows are zeroed and incident edges removed.
Graph node_drop(const Graph& g, double p, std::uint64_t seed, bool protect_splits = true);
/// Nodes not reached by a seeded random walk are dropped as in node_drop.
Graph random_walk_sample(const Graph& g, double keep_ratio, std::uint64_t seed);
/// Visited set of the walk used by random_walk_sample.
std::vector<bool> random_walk_visit(const Graph& g, double keep_ratio, std::uint64_t seed);

/// Zeroes the rows of nodes with keep[i] == false and removes their edges.
Graph drop_nodes(const Graph& g, const std::vector<bool>& keep);

Graph apply(const AugmenterSpec& spec, const Graph& g);
/// apply() with the spec's seed replaced.
Graph apply(const AugmenterSpec& spec, const Graph& g, std::uint64_t seed);

struct ViewPair {
  Graph first;
  Graph second;
  std::size_t first_index = 0;
  std::size_t second_index = 0;
};

/// Draws two pool entries uniformly with replacement and applies each with a
/// sub-seed derived from `seed`. Throws ValidationError for an empty pool.
ViewPair sample_pair_from_pool(const std::vector<AugmenterSpec>& pool, const Graph& g,
                               std::uint64_t seed);

/// Seed for re-sampling a stochastic augmentation at a given training epoch.
std::uint64_t epoch_seed(std::uint64_t run_seed, std::uint64_t epoch);

}  // namespace gdaug
