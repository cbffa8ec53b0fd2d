#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gdaug/matrix.hpp"

namespace gdaug {

using NodeId = std::uint32_t;

/// Undirected edge stored canonically with u <= v. u == v is a self-loop.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  static Edge make(NodeId a, NodeId b) { return a <= b ? Edge{a, b} : Edge{b, a}; }
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct SplitMasks {
  std::vector<bool> train;
  std::vector<bool> val;
  std::vector<bool> test;

  friend bool operator==(const SplitMasks&, const SplitMasks&) = default;
};

/// Undirected simple graph with node features and optional labels/splits.
/// Immutable once built; transformations return new graphs.
class Graph {
 public:
  Graph() = default;
  /// Canonicalizes and deduplicates edges. Throws ValidationError when an
  /// endpoint is out of range, the feature row count differs from num_nodes,
  /// labels are negative or mis-sized, or masks overlap.
  Graph(std::size_t num_nodes, std::vector<Edge> edges, DenseMatrix features,
        std::optional<std::vector<int>> labels = std::nullopt,
        std::optional<SplitMasks> masks = std::nullopt);

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  std::size_t num_features() const noexcept { return features_.cols(); }
  /// max(label) + 1, or 0 when unlabeled.
  std::size_t num_classes() const noexcept;

  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const DenseMatrix& features() const noexcept { return features_; }
  const std::optional<std::vector<int>>& labels() const noexcept { return labels_; }
  const std::optional<SplitMasks>& masks() const noexcept { return masks_; }

  /// Sorted neighbor list of v. Throws IndexError for v out of range.
  const std::vector<NodeId>& neighbors(NodeId v) const;
  std::size_t degree(NodeId v) const { return neighbors(v).size(); }

  Graph with_features(DenseMatrix features) const;
  Graph with_edges(std::vector<Edge> edges) const;
  Graph with_masks(std::optional<SplitMasks> masks) const;

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.num_nodes_ == b.num_nodes_ && a.edges_ == b.edges_ && a.features_ == b.features_ &&
           a.labels_ == b.labels_ && a.masks_ == b.masks_;
  }

 private:
  std::size_t num_nodes_ = 0;
  std::vector<Edge> edges_;
  DenseMatrix features_;
  std::optional<std::vector<int>> labels_;
  std::optional<SplitMasks> masks_;
  std::vector<std::vector<NodeId>> adjacency_;
};

struct DatasetStats {
  std::int64_t nodes = 0;
  std::int64_t edges = 0;
  std::int64_t features = 0;
  std::int64_t classes = 0;
  std::string category;

  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

DatasetStats dataset_stats(const Graph& g);

/// Published statistics for the named benchmark (CORA, CITESEER, PPI,
/// BLOGCATALOG, FLICKER), if known.
std::optional<DatasetStats> reference_stats(const std::string& name);

/// Human-readable mismatch lines between the loaded and reference statistics.
std::vector<std::string> compare_stats(const DatasetStats& actual, const DatasetStats& expected);

/// Symmetric 0/1 adjacency. With self_loops the diagonal is all ones.
DenseMatrix adjacency_matrix(const Graph& g, bool self_loops);

/// Diagonal matrix of row sums. Throws ShapeError for non-square input.
DenseMatrix degree_matrix(const DenseMatrix& a);

/// D^{-1/2} A D^{-1/2}, computed per entry as A_ij / sqrt(d_i d_j).
/// Rows and columns with zero degree map to zero. Throws ValidationError
/// for a negative degree and ShapeError for incompatible shapes.
DenseMatrix sym_normalize(const DenseMatrix& a, const DenseMatrix& d);

/// sym_normalize(A + I, deg(A + I)), the propagation matrix shared by GCN and FANA.
DenseMatrix normalized_adjacency(const Graph& g);

const std::vector<NodeId>& neighbors(const Graph& g, NodeId v);

struct SbmParams {
  std::size_t n = 200;
  std::size_t classes = 2;
  double p_in = 0.1;
  double p_out = 0.01;
  std::size_t feat_dim = 2;
  double noise = 0.5;
  std::uint64_t seed = 0;
};

/// Stochastic block model with class-indicator features plus Gaussian noise
/// and a 60/20/20 split stratified by class. Block b holds a contiguous range
/// of n / classes nodes, the first n % classes blocks taking one extra.
Graph synthetic_sbm(const SbmParams& params);

/// Stratified 60/20/20 train/val/test split of a labeled node set.
SplitMasks stratified_split(const std::vector<int>& labels, std::uint64_t seed,
                            double train_frac = 0.6, double val_frac = 0.2);

}  // namespace gdaug
