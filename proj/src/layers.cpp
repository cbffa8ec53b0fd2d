#include "gdaug/layers.hpp"

#include <numeric>

#include "gdaug/error.hpp"
#include "gdaug/rng.hpp"

namespace gdaug {

Variable gcn_layer_forward(const Variable& h, const Variable& a_hat, const Variable& w,
                           const Activation& act) {
  if (a_hat.rows() != a_hat.cols() || a_hat.cols() != h.rows())
    throw ShapeError("gcn_layer_forward: A_hat must be NxN with N = rows(H)");
  return activation(matmul(a_hat, matmul(h, w)), act);
}

Variable gcn_layer_forward(const Variable& h, const DenseMatrix& a_hat, const Variable& w,
                           const Activation& act) {
  return gcn_layer_forward(h, h.tape()->constant(a_hat), w, act);
}

std::vector<NodeId> sage_sample_neighbors(const Graph& g, NodeId v, std::size_t k,
                                          std::uint64_t seed) {
  if (k == 0) throw ValidationError("sage_sample_neighbors: k must be positive");
  const auto& nbrs = g.neighbors(v);
  if (nbrs.empty()) return std::vector<NodeId>(k, v);
  Rng rng(seed);
  std::vector<NodeId> out;
  out.reserve(k);
  if (nbrs.size() >= k) {
    std::vector<NodeId> pool(nbrs);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + rng.below(pool.size() - i);
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
  } else {
    for (std::size_t i = 0; i < k; ++i) out.push_back(nbrs[rng.below(nbrs.size())]);
  }
  return out;
}

NeighborSamples sage_sample_all(const Graph& g, std::size_t k, std::uint64_t seed) {
  NeighborSamples s(g.num_nodes());
  for (std::size_t v = 0; v < g.num_nodes(); ++v)
    s[v] = sage_sample_neighbors(g, static_cast<NodeId>(v), k, derive_seed(seed, v));
  return s;
}

NeighborSamples sage_eval_neighbors(const Graph& g, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw ValidationError("sage_eval_neighbors: k must be positive");
  NeighborSamples s(g.num_nodes());
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    const auto& nbrs = g.neighbors(static_cast<NodeId>(v));
    if (nbrs.empty())
      s[v] = {static_cast<NodeId>(v)};
    else if (nbrs.size() <= k)
      s[v] = nbrs;
    else
      s[v] = sage_sample_neighbors(g, static_cast<NodeId>(v), k, derive_seed(seed, v));
  }
  return s;
}

Variable sage_layer_forward(const Variable& h, const NeighborSamples& samples, const Variable& w,
                            SageAggregator aggregator, const Activation& act,
                            const Variable* w_pool) {
  const std::size_t n = h.rows();
  if (samples.size() != n)
    throw ShapeError("sage_layer_forward: need one sample set per node");
  Tape& tape = *h.tape();
  Variable agg;
  if (aggregator == SageAggregator::Mean) {
    DenseMatrix m(n, n);
    for (std::size_t v = 0; v < n; ++v) {
      if (samples[v].empty()) throw ValidationError("sage_layer_forward: empty sample set");
      const double inv = 1.0 / static_cast<double>(samples[v].size());
      for (NodeId u : samples[v]) {
        if (u >= n) throw IndexError("sage_layer_forward: sampled node out of range");
        m(v, u) += inv;
      }
    }
    agg = matmul(tape.constant(std::move(m)), h);
  } else {
    if (!w_pool) throw ValidationError("sage_layer_forward: maxpool aggregator needs W_pool");
    if (w_pool->rows() != h.cols())
      throw ShapeError("sage_layer_forward: W_pool rows must equal F_in");
    agg = gather_max(activation(matmul(h, *w_pool), Activation::relu()), samples);
  }
  const Variable joined = concat_cols(h, agg);
  if (w.rows() != joined.cols())
    throw ShapeError("sage_layer_forward: W must have " + std::to_string(joined.cols()) + " rows");
  return activation(matmul(joined, w), act);
}

EntryMask attention_mask(const Graph& g) {
  const std::size_t n = g.num_nodes();
  EntryMask m(n, n);
  for (std::size_t v = 0; v < n; ++v) {
    m.set(v, v, true);
    for (NodeId u : g.neighbors(static_cast<NodeId>(v))) m.set(v, u, true);
  }
  return m;
}

Variable gat_attention_coeffs(const Variable& h, const Variable& w, const Variable& a,
                              const EntryMask& mask, double slope) {
  if (h.cols() != w.rows()) throw ShapeError("gat_attention_coeffs: H and W are incompatible");
  const std::size_t out = w.cols();
  if (a.rows() != 2 * out || a.cols() != 1)
    throw ShapeError("gat_attention_coeffs: a must be (2 * F_out) x 1");
  Tape& tape = *h.tape();
  DenseMatrix top(out, 2 * out), bottom(out, 2 * out);
  for (std::size_t i = 0; i < out; ++i) {
    top(i, i) = 1.0;
    bottom(i, out + i) = 1.0;
  }
  const Variable wh = matmul(h, w);
  const Variable a_self = matmul(tape.constant(std::move(top)), a);
  const Variable a_nbr = matmul(tape.constant(std::move(bottom)), a);
  // scores(v, u) = a_self . Wh_v + a_nbr . Wh_u
  const Variable scores = broadcast_add(matmul(wh, a_self), transpose(matmul(wh, a_nbr)));
  return softmax_rows(activation(scores, Activation::leaky_relu(slope)), &mask);
}

Variable gat_attention_coeffs(const Variable& h, const Variable& w, const Variable& a,
                              const Graph& g, double slope) {
  return gat_attention_coeffs(h, w, a, attention_mask(g), slope);
}

Variable gat_layer_forward(const Variable& h, const std::vector<GatHead>& heads,
                           const EntryMask& mask, double slope, const Activation& act,
                           HeadMerge merge) {
  if (heads.empty()) throw ValidationError("gat_layer_forward: need at least one head");
  Variable merged;
  for (std::size_t i = 0; i < heads.size(); ++i) {
    const Variable alpha = gat_attention_coeffs(h, heads[i].w, heads[i].a, mask, slope);
    const Variable out = matmul(alpha, matmul(h, heads[i].w));
    if (i == 0)
      merged = out;
    else if (merge == HeadMerge::Concat)
      merged = concat_cols(merged, out);
    else
      merged = add(merged, out);
  }
  if (merge == HeadMerge::Mean && heads.size() > 1)
    merged = scale(merged, 1.0 / static_cast<double>(heads.size()));
  return activation(merged, act);
}

DenseMatrix gin_operator(const Graph& g, double eps) {
  DenseMatrix a = adjacency_matrix(g, false);
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += 1.0 + eps;
  return a;
}

Variable gin_layer_forward(const Variable& h, const Variable& gin_op, const Variable& w1,
                           const Variable& w2) {
  if (gin_op.rows() != h.rows() || gin_op.cols() != h.rows())
    throw ShapeError("gin_layer_forward: aggregation operator must be NxN");
  return matmul(activation(matmul(matmul(gin_op, h), w1), Activation::relu()), w2);
}

}  // namespace gdaug
