#pragma once

#include <cstdint>
#include <vector>

#include "gdaug/graph.hpp"
#include "gdaug/tensor.hpp"

namespace gdaug {

using NeighborSamples = std::vector<std::vector<NodeId>>;

/// act(A_hat * (H * W)). A_hat is expected to be normalized_adjacency(g).
Variable gcn_layer_forward(const Variable& h, const Variable& a_hat, const Variable& w,
                           const Activation& act);
Variable gcn_layer_forward(const Variable& h, const DenseMatrix& a_hat, const Variable& w,
                           const Activation& act);

/// Exactly k neighbors of v: distinct when deg(v) >= k, drawn with
/// replacement otherwise. An isolated node yields k copies of itself.
std::vector<NodeId> sage_sample_neighbors(const Graph& g, NodeId v, std::size_t k,
                                          std::uint64_t seed);

/// Samples for every node, node v using derive_seed(seed, v).
NeighborSamples sage_sample_all(const Graph& g, std::size_t k, std::uint64_t seed);

/// Eval-mode neighborhoods: all of N(v) when deg(v) <= k, otherwise k
/// distinct neighbors drawn as in sage_sample_all. Isolated nodes get {v}.
NeighborSamples sage_eval_neighbors(const Graph& g, std::size_t k, std::uint64_t seed);

enum class SageAggregator { Mean, MaxPool };

/// act([h_v | agg_v] * W) with agg_v the mean of the sampled neighbor rows
/// (Mean) or the elementwise max of relu(h_u * W_pool) over the samples
/// (MaxPool). W has 2 * F_in rows. w_pool is required for MaxPool only.
Variable sage_layer_forward(const Variable& h, const NeighborSamples& samples, const Variable& w,
                            SageAggregator aggregator, const Activation& act,
                            const Variable* w_pool = nullptr);

/// Neighborhood N(v) u {v} for every v, as a softmax entry mask (row v, column u).
EntryMask attention_mask(const Graph& g);

/// Attention matrix alpha with alpha(v, u) = softmax over u in N(v) u {v} of
/// leaky_relu(a^T [W h_v | W h_u]); zero outside the neighborhood. `a` is a
/// (2 * F_out) x 1 column.
Variable gat_attention_coeffs(const Variable& h, const Variable& w, const Variable& a,
                              const EntryMask& mask, double slope);
Variable gat_attention_coeffs(const Variable& h, const Variable& w, const Variable& a,
                              const Graph& g, double slope);

struct GatHead {
  Variable w;
  Variable a;
};

enum class HeadMerge { Concat, Mean };

/// act(sum_u alpha(v, u) W h_u) per head, heads concatenated or averaged.
Variable gat_layer_forward(const Variable& h, const std::vector<GatHead>& heads,
                           const EntryMask& mask, double slope, const Activation& act,
                           HeadMerge merge);

/// A + (1 + eps) I, the GIN sum-aggregation operator.
DenseMatrix gin_operator(const Graph& g, double eps);

/// MLP((1 + eps) h_v + sum_{u in N(v)} h_u) with MLP(x) = relu(x W1) W2.
Variable gin_layer_forward(const Variable& h, const Variable& gin_op, const Variable& w1,
                           const Variable& w2);

}  // namespace gdaug
