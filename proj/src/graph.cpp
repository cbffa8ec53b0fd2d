#include "gdaug/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "gdaug/error.hpp"
#include "gdaug/rng.hpp"

namespace gdaug {

Graph::Graph(std::size_t num_nodes, std::vector<Edge> edges, DenseMatrix features,
             std::optional<std::vector<int>> labels, std::optional<SplitMasks> masks)
    : num_nodes_(num_nodes),
      edges_(std::move(edges)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      masks_(std::move(masks)) {
  if (features_.rows() != num_nodes_)
    throw ValidationError("graph: feature matrix has " + std::to_string(features_.rows()) +
                          " rows but num_nodes is " + std::to_string(num_nodes_));
  for (Edge& e : edges_) {
    if (e.u >= num_nodes_ || e.v >= num_nodes_)
      throw ValidationError("graph: edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                            ") references a node outside [0, " + std::to_string(num_nodes_) + ")");
    e = Edge::make(e.u, e.v);
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  if (labels_) {
    if (labels_->size() != num_nodes_)
      throw ValidationError("graph: label vector length " + std::to_string(labels_->size()) +
                            " != num_nodes " + std::to_string(num_nodes_));
    for (int l : *labels_)
      if (l < 0) throw ValidationError("graph: negative label " + std::to_string(l));
  }
  if (masks_) {
    const auto& m = *masks_;
    if (m.train.size() != num_nodes_ || m.val.size() != num_nodes_ || m.test.size() != num_nodes_)
      throw ValidationError("graph: mask length differs from num_nodes");
    for (std::size_t i = 0; i < num_nodes_; ++i)
      if (int(m.train[i]) + int(m.val[i]) + int(m.test[i]) > 1)
        throw ValidationError("graph: node " + std::to_string(i) + " is in more than one split");
  }

  adjacency_.assign(num_nodes_, {});
  for (const Edge& e : edges_) {
    adjacency_[e.u].push_back(e.v);
    if (e.u != e.v) adjacency_[e.v].push_back(e.u);
  }
  for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
}

std::size_t Graph::num_classes() const noexcept {
  if (!labels_ || labels_->empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(labels_->begin(), labels_->end())) + 1;
}

const std::vector<NodeId>& Graph::neighbors(NodeId v) const {
  if (v >= num_nodes_)
    throw IndexError("neighbors: node " + std::to_string(v) + " out of range [0, " +
                     std::to_string(num_nodes_) + ")");
  return adjacency_[v];
}

Graph Graph::with_features(DenseMatrix features) const {
  Graph g = *this;
  if (features.rows() != num_nodes_)
    throw ValidationError("with_features: row count " + std::to_string(features.rows()) +
                          " != num_nodes " + std::to_string(num_nodes_));
  g.features_ = std::move(features);
  return g;
}

Graph Graph::with_edges(std::vector<Edge> edges) const {
  return Graph(num_nodes_, std::move(edges), features_, labels_, masks_);
}

Graph Graph::with_masks(std::optional<SplitMasks> masks) const {
  return Graph(num_nodes_, edges_, features_, labels_, std::move(masks));
}

const std::vector<NodeId>& neighbors(const Graph& g, NodeId v) { return g.neighbors(v); }

DatasetStats dataset_stats(const Graph& g) {
  DatasetStats s;
  s.nodes = static_cast<std::int64_t>(g.num_nodes());
  s.edges = static_cast<std::int64_t>(g.num_edges());
  s.features = static_cast<std::int64_t>(g.num_features());
  s.classes = static_cast<std::int64_t>(g.num_classes());
  return s;
}

std::optional<DatasetStats> reference_stats(const std::string& name) {
  static const std::map<std::string, DatasetStats> table{
      {"CORA", {2078, 5278, 1433, 7, "Literature references"}},
      {"CITESEER", {3327, 4522, 3703, 6, "Literature references"}},
      {"PPI", {10076, 157213, 50, 121, "Bioinformatics"}},
      {"BLOGCATALOG", {5196, 171743, 8189, 6, "Social network"}},
      {"FLICKER", {575, 239738, 12047, 9, "Social network"}},
  };
  std::string key = name;
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::toupper(c); });
  if (key == "CITSEER") key = "CITESEER";
  if (key == "FLICKR") key = "FLICKER";
  auto it = table.find(key);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> compare_stats(const DatasetStats& actual, const DatasetStats& expected) {
  std::vector<std::string> out;
  auto check = [&](const char* what, std::int64_t a, std::int64_t e) {
    if (a != e)
      out.push_back(std::string(what) + ": file has " + std::to_string(a) + ", reference lists " +
                    std::to_string(e));
  };
  check("nodes", actual.nodes, expected.nodes);
  check("edges", actual.edges, expected.edges);
  check("features", actual.features, expected.features);
  check("classes", actual.classes, expected.classes);
  return out;
}

DenseMatrix adjacency_matrix(const Graph& g, bool self_loops) {
  const std::size_t n = g.num_nodes();
  DenseMatrix a(n, n);
  for (const Edge& e : g.edges()) {
    a(e.u, e.v) = 1.0;
    a(e.v, e.u) = 1.0;
  }
  if (self_loops)
    for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
  return a;
}

DenseMatrix degree_matrix(const DenseMatrix& a) {
  if (a.rows() != a.cols())
    throw ShapeError("degree_matrix: expected a square matrix, got " + std::to_string(a.rows()) +
                     "x" + std::to_string(a.cols()));
  DenseMatrix d(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (double x : a.row(i)) s += x;
    d(i, i) = s;
  }
  return d;
}

DenseMatrix sym_normalize(const DenseMatrix& a, const DenseMatrix& d) {
  const std::size_t n = a.rows();
  if (a.cols() != n || d.rows() != n || d.cols() != n)
    throw ShapeError("sym_normalize: A and D must be square and of equal size");
  std::vector<double> deg(n);
  for (std::size_t i = 0; i < n; ++i) {
    deg[i] = d(i, i);
    if (deg[i] < 0.0)
      throw ValidationError("sym_normalize: negative degree at node " + std::to_string(i));
  }
  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (deg[i] == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const double aij = a(i, j);
      if (aij == 0.0 || deg[j] == 0.0) continue;
      out(i, j) = aij / std::sqrt(deg[i] * deg[j]);
    }
  }
  return out;
}

DenseMatrix normalized_adjacency(const Graph& g) {
  DenseMatrix a = adjacency_matrix(g, true);
  return sym_normalize(a, degree_matrix(a));
}

SplitMasks stratified_split(const std::vector<int>& labels, std::uint64_t seed, double train_frac,
                            double val_frac) {
  const std::size_t n = labels.size();
  SplitMasks m{std::vector<bool>(n), std::vector<bool>(n), std::vector<bool>(n)};
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);
  Rng rng(seed);
  for (auto& [cls, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng.engine());
    const auto count = static_cast<double>(members.size());
    const auto n_train = std::min(members.size(), static_cast<std::size_t>(std::lround(train_frac * count)));
    const auto n_val =
        std::min(members.size() - n_train, static_cast<std::size_t>(std::lround(val_frac * count)));
    for (std::size_t k = 0; k < members.size(); ++k) {
      if (k < n_train)
        m.train[members[k]] = true;
      else if (k < n_train + n_val)
        m.val[members[k]] = true;
      else
        m.test[members[k]] = true;
    }
  }
  return m;
}

Graph synthetic_sbm(const SbmParams& p) {
  if (p.classes == 0) throw ValidationError("synthetic_sbm: classes must be positive");
  if (p.classes > p.n)
    throw ValidationError("synthetic_sbm: classes (" + std::to_string(p.classes) +
                          ") exceeds node count (" + std::to_string(p.n) + ")");
  if (!(0.0 <= p.p_out && p.p_out <= p.p_in && p.p_in <= 1.0))
    throw ValidationError("synthetic_sbm: require 0 <= p_out <= p_in <= 1");
  if (p.feat_dim == 0) throw ValidationError("synthetic_sbm: feat_dim must be positive");
  if (!(p.noise >= 0.0) || !std::isfinite(p.noise))
    throw ValidationError("synthetic_sbm: noise must be finite and nonnegative");

  std::vector<int> labels(p.n);
  {
    const std::size_t base = p.n / p.classes;
    const std::size_t extra = p.n % p.classes;
    std::size_t i = 0;
    for (std::size_t b = 0; b < p.classes; ++b) {
      const std::size_t size = base + (b < extra ? 1 : 0);
      for (std::size_t k = 0; k < size; ++k) labels[i++] = static_cast<int>(b);
    }
  }

  Rng rng(p.seed);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < p.n; ++i) {
    for (std::size_t j = i + 1; j < p.n; ++j) {
      const double prob = labels[i] == labels[j] ? p.p_in : p.p_out;
      if (rng.uniform() < prob) edges.push_back(Edge{NodeId(i), NodeId(j)});
    }
  }

  DenseMatrix x(p.n, p.feat_dim);
  for (std::size_t i = 0; i < p.n; ++i) {
    for (std::size_t f = 0; f < p.feat_dim; ++f) {
      const double indicator = static_cast<std::size_t>(labels[i]) % p.feat_dim == f ? 1.0 : 0.0;
      x(i, f) = indicator + (p.noise > 0.0 ? rng.normal(0.0, p.noise) : 0.0);
    }
  }

  SplitMasks masks = stratified_split(labels, derive_seed(p.seed, 0x5b11));
  return Graph(p.n, std::move(edges), std::move(x), std::move(labels), std::move(masks));
}

}  // namespace gdaug
