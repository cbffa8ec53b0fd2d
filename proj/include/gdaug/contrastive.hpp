#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdaug/augment.hpp"
#include "gdaug/graph.hpp"
#include "gdaug/tensor.hpp"

namespace gdaug {

/// Labeled collection of graphs for graph-level tasks.
struct GraphBatch {
  std::vector<Graph> graphs;
  std::vector<int> labels;  // one per graph, may be empty when unlabeled

  std::size_t size() const noexcept { return graphs.size(); }
  /// Throws ValidationError for mismatched labels or feature widths.
  void validate() const;
};

/// Disjoint union of several graphs as dense block matrices.
struct BatchedGraphs {
  DenseMatrix features;                 // concatenated node rows
  DenseMatrix gin_op;                   // block-diagonal A + (1 + eps) I
  std::vector<std::size_t> assignment;  // node -> graph index
  std::size_t num_graphs = 0;
};

BatchedGraphs batch_graphs(const std::vector<const Graph*>& graphs, double gin_eps);

enum class Readout { Mean, Sum };

std::string to_string(Readout r);
Readout parse_readout(const std::string& name);

/// Per-graph mean or sum of the node rows assigned to it. num_graphs = 0
/// means max(assignment) + 1. A graph with no nodes throws ValidationError.
Variable readout_pool(const Variable& node_embs, const std::vector<std::size_t>& assignment,
                      Readout kind = Readout::Mean, std::size_t num_graphs = 0);

/// NT-Xent over 2B cosine-normalized embeddings; each anchor's positive is
/// its partner view and the other 2B - 2 rows are negatives. Mean over anchors.
/// Throws ValidationError for B < 2 or tau <= 0.
Variable nt_xent_loss(const Variable& z_i, const Variable& z_j, double tau);

struct ContrastiveConfig {
  std::vector<AugmenterSpec> pool{AugmenterSpec::edge_remove(0.2), AugmenterSpec::feature_mask(0.2)};
  double temperature = 0.5;
  std::size_t encoder_layers = 3;
  std::size_t hidden = 32;
  double gin_eps = 0.0;
  /// Projection head widths: hidden -> proj_hidden -> proj_dim.
  std::size_t proj_hidden = 32;
  std::size_t proj_dim = 32;
  Readout readout = Readout::Mean;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double lr = 0.001;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;

  /// Throws ValidationError.
  void validate() const;
};

nlohmann::json to_json(const ContrastiveConfig& cfg);
/// Strict parse; throws ConfigError naming the offending key.
ContrastiveConfig contrastive_config_from_json(const nlohmann::json& j, const std::string& path = "contrastive");

/// GIN stack: relu between layers, linear output.
struct GinEncoder {
  std::vector<ParamPtr> w1;
  std::vector<ParamPtr> w2;
  double eps = 0.0;
  Readout readout = Readout::Mean;

  std::vector<ParamPtr> params() const;
};

GinEncoder init_encoder(std::size_t in_dim, const ContrastiveConfig& cfg, std::uint64_t seed);

/// Graph embeddings (num_graphs x hidden) for a batched input.
Variable encode(Tape& tape, const GinEncoder& enc, const BatchedGraphs& batch);

/// relu(h W1 + b1) W2 + b2.
struct ProjectionHead {
  ParamPtr w1, b1, w2, b2;
  std::vector<ParamPtr> params() const;
};

ProjectionHead init_projection(std::size_t in_dim, const ContrastiveConfig& cfg, std::uint64_t seed);
Variable project(Tape& tape, const ProjectionHead& head, const Variable& h);

/// Loss of one batch of view pairs; both views use the same encoder binding.
Variable contrastive_batch_loss(Tape& tape, const GinEncoder& enc, const ProjectionHead& head,
                                const BatchedGraphs& view_a, const BatchedGraphs& view_b, double tau);

struct ContrastiveResult {
  GinEncoder encoder;
  std::vector<double> loss_trace;  // mean batch loss per epoch
};

/// Deterministic per cfg.seed. The projection head is discarded.
ContrastiveResult train_contrastive(const GraphBatch& data, const ContrastiveConfig& cfg);

/// Frozen embeddings, one row per graph.
DenseMatrix embed_graphs(const GinEncoder& enc, const GraphBatch& data);

/// Stratified 80/20 split used by linear_eval_f1.
SplitMasks linear_eval_split(const std::vector<int>& labels, std::uint64_t seed);

/// Multinomial logistic regression (Adam, 100 epochs) on standardized
/// embeddings of the train split; returns test macro-F1. Throws
/// ValidationError when a class has no training example.
double linear_eval_f1(const DenseMatrix& embeddings, const std::vector<int>& labels, std::uint64_t seed);
double linear_eval_f1(const GinEncoder& enc, const GraphBatch& data, std::uint64_t seed);

struct SyntheticGraphSetParams {
  std::size_t num_graphs = 200;
  std::size_t min_nodes = 12;
  std::size_t max_nodes = 24;
  /// Edge probability per class; class c uses p_edge[c].
  std::vector<double> p_edge{0.15, 0.4};
  std::size_t feat_dim = 8;
  double noise = 1.0;
  std::uint64_t seed = 0;
};

/// Random graphs whose features are a constant column of ones followed by
/// feat_dim - 1 columns of N(0, noise). Labels alternate, so classes are balanced.
GraphBatch synthetic_graph_set(const SyntheticGraphSetParams& params);

nlohmann::json to_json(const SyntheticGraphSetParams& p);
SyntheticGraphSetParams synthetic_graph_set_from_json(const nlohmann::json& j, const std::string& path);

/// Loads every *.json graph in a directory, sorted by file name. Graph labels
/// come from labels.json ({"file name": label}) when present.
GraphBatch load_graph_directory(const std::filesystem::path& dir);

}  // namespace gdaug
