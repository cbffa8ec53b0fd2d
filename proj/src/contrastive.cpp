#include "gdaug/contrastive.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "gdaug/error.hpp"
#include "gdaug/graph_io.hpp"
#include "gdaug/models.hpp"
#include "gdaug/rng.hpp"
#include "gdaug/json_util.hpp"

namespace gdaug {

using nlohmann::json;

void GraphBatch::validate() const {
  if (!labels.empty() && labels.size() != graphs.size())
    throw ValidationError("GraphBatch: " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(graphs.size()) + " graphs");
  for (int l : labels)
    if (l < 0) throw ValidationError("GraphBatch: negative label");
  for (std::size_t i = 1; i < graphs.size(); ++i)
    if (graphs[i].num_features() != graphs[0].num_features())
      throw ValidationError("GraphBatch: graph " + std::to_string(i) + " has a different feature width");
}

BatchedGraphs batch_graphs(const std::vector<const Graph*>& graphs, double gin_eps) {
  if (graphs.empty()) throw ValidationError("batch_graphs: empty batch");
  std::size_t total = 0;
  const std::size_t f = graphs.front()->num_features();
  for (const Graph* g : graphs) {
    if (g->num_features() != f) throw ShapeError("batch_graphs: feature widths differ");
    total += g->num_nodes();
  }
  BatchedGraphs b;
  b.num_graphs = graphs.size();
  b.features = DenseMatrix(total, f);
  b.gin_op = DenseMatrix(total, total);
  b.assignment.reserve(total);
  std::size_t off = 0;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const Graph& g = *graphs[gi];
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
      std::copy(g.features().row(v).begin(), g.features().row(v).end(), b.features.row(off + v).begin());
      b.gin_op(off + v, off + v) += 1.0 + gin_eps;
      b.assignment.push_back(gi);
    }
    for (const Edge& e : g.edges()) {
      if (e.u == e.v) {
        b.gin_op(off + e.u, off + e.u) += 1.0;
        continue;
      }
      b.gin_op(off + e.u, off + e.v) += 1.0;
      b.gin_op(off + e.v, off + e.u) += 1.0;
    }
    off += g.num_nodes();
  }
  return b;
}

std::string to_string(Readout r) { return r == Readout::Mean ? "mean" : "sum"; }

Readout parse_readout(const std::string& name) {
  if (name == "mean") return Readout::Mean;
  if (name == "sum") return Readout::Sum;
  throw ValidationError("unknown readout '" + name + "'");
}

Variable readout_pool(const Variable& node_embs, const std::vector<std::size_t>& assignment, Readout kind,
                      std::size_t num_graphs) {
  if (assignment.size() != node_embs.rows())
    throw ShapeError("readout_pool: assignment length differs from node count");
  if (num_graphs == 0 && !assignment.empty())
    num_graphs = *std::max_element(assignment.begin(), assignment.end()) + 1;
  if (num_graphs == 0) throw ValidationError("readout_pool: no graphs");
  std::vector<std::size_t> counts(num_graphs, 0);
  for (std::size_t g : assignment) {
    if (g >= num_graphs) throw IndexError("readout_pool: assignment out of range");
    ++counts[g];
  }
  for (std::size_t g = 0; g < num_graphs; ++g)
    if (counts[g] == 0) throw ValidationError("readout_pool: graph " + std::to_string(g) + " has no nodes");
  DenseMatrix pool(num_graphs, assignment.size());
  for (std::size_t v = 0; v < assignment.size(); ++v) {
    const std::size_t g = assignment[v];
    pool(g, v) = kind == Readout::Mean ? 1.0 / static_cast<double>(counts[g]) : 1.0;
  }
  return matmul(node_embs.tape()->constant(std::move(pool)), node_embs);
}

Variable nt_xent_loss(const Variable& z_i, const Variable& z_j, double tau) {
  if (!(tau > 0.0)) throw ValidationError("nt_xent_loss: temperature must be positive");
  if (z_i.rows() != z_j.rows() || z_i.cols() != z_j.cols())
    throw ShapeError("nt_xent_loss: views must have equal shapes");
  const std::size_t b = z_i.rows();
  if (b < 2) throw ValidationError("nt_xent_loss: batch of " + std::to_string(b) + " has no negatives");
  const Variable z = concat_rows(l2_normalize_rows(z_i), l2_normalize_rows(z_j));
  const Variable sim = scale(matmul(z, transpose(z)), 1.0 / tau);
  EntryMask mask(2 * b, 2 * b, true);
  std::vector<int> targets(2 * b);
  for (std::size_t r = 0; r < 2 * b; ++r) {
    mask.set(r, r, false);
    targets[r] = static_cast<int>(r < b ? r + b : r - b);
  }
  return cross_entropy_rows(sim, targets, &mask);
}

void ContrastiveConfig::validate() const {
  if (pool.empty()) throw ValidationError("contrastive: augmentation pool is empty");
  for (const auto& a : pool) a.validate();
  if (!(temperature > 0.0)) throw ValidationError("contrastive: temperature must be positive");
  if (batch_size < 2) throw ValidationError("contrastive: batch_size must be >= 2");
  if (encoder_layers < 1 || hidden < 1 || proj_hidden < 1 || proj_dim < 1)
    throw ValidationError("contrastive: layer counts and widths must be positive");
  if (!(lr > 0.0)) throw ValidationError("contrastive: lr must be positive");
  if (!(weight_decay >= 0.0)) throw ValidationError("contrastive: weight_decay must be >= 0");
}

json to_json(const ContrastiveConfig& cfg) {
  json pool = json::array();
  for (const auto& a : cfg.pool) pool.push_back(to_json(a));
  return json{{"pool", pool},
              {"temperature", cfg.temperature},
              {"encoder_layers", cfg.encoder_layers},
              {"hidden", cfg.hidden},
              {"gin_eps", cfg.gin_eps},
              {"proj_hidden", cfg.proj_hidden},
              {"proj_dim", cfg.proj_dim},
              {"readout", to_string(cfg.readout)},
              {"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"lr", cfg.lr},
              {"weight_decay", cfg.weight_decay},
              {"seed", cfg.seed}};
}

ContrastiveConfig contrastive_config_from_json(const json& j, const std::string& path) {
  detail::StrictObject o(j, path);
  ContrastiveConfig c;
  if (o.has("pool")) {
    const json& pool = o.raw("pool");
    if (!pool.is_array()) throw ConfigError(o.key_path("pool"), "expected an array");
    c.pool.clear();
    for (std::size_t i = 0; i < pool.size(); ++i) {
      c.pool.push_back(augmenter_from_json(pool[i], o.key_path("pool") + "[" + std::to_string(i) + "]"));
    }
  }
  o.read("temperature", c.temperature);
  o.read("encoder_layers", c.encoder_layers);
  o.read("hidden", c.hidden);
  o.read("gin_eps", c.gin_eps);
  o.read("proj_hidden", c.proj_hidden);
  o.read("proj_dim", c.proj_dim);
  std::string readout = "mean";
  o.read("readout", readout);
  try {
    c.readout = parse_readout(readout);
  } catch (const ValidationError& e) {
    throw ConfigError(o.key_path("readout"), e.what());
  }
  o.read("epochs", c.epochs);
  o.read("batch_size", c.batch_size);
  o.read("lr", c.lr);
  o.read("weight_decay", c.weight_decay);
  o.read("seed", c.seed);
  o.finish();
  try {
    c.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(path, e.what());
  }
  return c;
}

std::vector<ParamPtr> GinEncoder::params() const {
  std::vector<ParamPtr> out;
  for (std::size_t l = 0; l < w1.size(); ++l) {
    out.push_back(w1[l]);
    out.push_back(w2[l]);
  }
  return out;
}

GinEncoder init_encoder(std::size_t in_dim, const ContrastiveConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  GinEncoder enc;
  enc.eps = cfg.gin_eps;
  enc.readout = cfg.readout;
  std::size_t in = in_dim;
  for (std::size_t l = 0; l < cfg.encoder_layers; ++l) {
    const std::string prefix = "encoder" + std::to_string(l) + ".";
    enc.w1.push_back(make_glorot(prefix + "w1", in, cfg.hidden, rng));
    enc.w2.push_back(make_glorot(prefix + "w2", cfg.hidden, cfg.hidden, rng));
    in = cfg.hidden;
  }
  return enc;
}

namespace {

struct BoundEncoder {
  std::vector<Variable> w1, w2;
};

BoundEncoder bind(Tape& tape, const GinEncoder& enc) {
  if (enc.w1.empty() || enc.w1.size() != enc.w2.size())
    throw ValidationError("encoder: malformed layer list");
  BoundEncoder b;
  for (std::size_t l = 0; l < enc.w1.size(); ++l) {
    b.w1.push_back(tape.param(enc.w1[l]));
    b.w2.push_back(tape.param(enc.w2[l]));
  }
  return b;
}

Variable encode_bound(Tape& tape, const BoundEncoder& b, const GinEncoder& enc, const BatchedGraphs& batch) {
  Variable h = tape.constant(batch.features);
  const Variable op = tape.constant(batch.gin_op);
  for (std::size_t l = 0; l < b.w1.size(); ++l) {
    h = gin_layer_forward(h, op, b.w1[l], b.w2[l]);
    if (l + 1 < b.w1.size()) h = activation(h, Activation::relu());
  }
  return readout_pool(h, batch.assignment, enc.readout, batch.num_graphs);
}

Variable add_bias(Tape& tape, const Variable& x, const Variable& b) {
  return add(x, broadcast_add(tape.constant(DenseMatrix(x.rows(), 1)), b));
}

struct BoundHead {
  Variable w1, b1, w2, b2;
};

Variable project_bound(Tape& tape, const BoundHead& h, const Variable& x) {
  const Variable hidden = activation(add_bias(tape, matmul(x, h.w1), h.b1), Activation::relu());
  return add_bias(tape, matmul(hidden, h.w2), h.b2);
}

BoundHead bind(Tape& tape, const ProjectionHead& head) {
  return {tape.param(head.w1), tape.param(head.b1), tape.param(head.w2), tape.param(head.b2)};
}

}  // namespace

Variable encode(Tape& tape, const GinEncoder& enc, const BatchedGraphs& batch) {
  return encode_bound(tape, bind(tape, enc), enc, batch);
}

std::vector<ParamPtr> ProjectionHead::params() const { return {w1, b1, w2, b2}; }

ProjectionHead init_projection(std::size_t in_dim, const ContrastiveConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  ProjectionHead h;
  h.w1 = make_glorot("proj.w1", in_dim, cfg.proj_hidden, rng);
  // Small positive hidden bias keeps z nonzero even for an all-zero input graph.
  h.b1 = std::make_shared<Parameter>("proj.b1", DenseMatrix(1, cfg.proj_hidden, 0.01));
  h.w2 = make_glorot("proj.w2", cfg.proj_hidden, cfg.proj_dim, rng);
  h.b2 = std::make_shared<Parameter>("proj.b2", DenseMatrix(1, cfg.proj_dim));
  return h;
}

Variable project(Tape& tape, const ProjectionHead& head, const Variable& h) {
  return project_bound(tape, bind(tape, head), h);
}

Variable contrastive_batch_loss(Tape& tape, const GinEncoder& enc, const ProjectionHead& head,
                                const BatchedGraphs& view_a, const BatchedGraphs& view_b, double tau) {
  const BoundEncoder be = bind(tape, enc);
  const BoundHead bh = bind(tape, head);
  const Variable z_a = project_bound(tape, bh, encode_bound(tape, be, enc, view_a));
  const Variable z_b = project_bound(tape, bh, encode_bound(tape, be, enc, view_b));
  return nt_xent_loss(z_a, z_b, tau);
}

ContrastiveResult train_contrastive(const GraphBatch& data, const ContrastiveConfig& cfg) {
  cfg.validate();
  data.validate();
  if (data.size() < 2) throw ValidationError("train_contrastive: need at least 2 graphs");
  const std::size_t in_dim = data.graphs.front().num_features();
  ContrastiveResult result;
  result.encoder = init_encoder(in_dim, cfg, derive_seed(cfg.seed, 2));
  const ProjectionHead head = init_projection(cfg.hidden, cfg, derive_seed(cfg.seed, 3));
  std::vector<ParamPtr> params = result.encoder.params();
  for (const auto& p : head.params()) params.push_back(p);

  AdamConfig opt_cfg;
  opt_cfg.lr = cfg.lr;
  opt_cfg.weight_decay = cfg.weight_decay;
  AdamState opt(opt_cfg);

  const std::uint64_t view_seed = derive_seed(cfg.seed, 4);
  std::vector<std::size_t> order(data.size());
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(derive_seed(cfg.seed, 5), epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    const std::uint64_t epoch_views = epoch_seed(view_seed, epoch);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();) {
      std::size_t end = std::min(order.size(), start + cfg.batch_size);
      if (order.size() - end == 1) ++end;  // never leave a single-graph tail
      std::vector<Graph> views_a, views_b;
      views_a.reserve(end - start);
      views_b.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t gi = order[k];
        ViewPair pair = sample_pair_from_pool(cfg.pool, data.graphs[gi], derive_seed(epoch_views, gi));
        views_a.push_back(std::move(pair.first));
        views_b.push_back(std::move(pair.second));
      }
      std::vector<const Graph*> pa, pb;
      for (std::size_t k = 0; k < views_a.size(); ++k) {
        pa.push_back(&views_a[k]);
        pb.push_back(&views_b[k]);
      }
      Tape tape;
      const Variable loss = contrastive_batch_loss(tape, result.encoder, head, batch_graphs(pa, cfg.gin_eps),
                                                   batch_graphs(pb, cfg.gin_eps), cfg.temperature);
      loss_sum += loss.value()(0, 0);
      ++batches;
      tape.backward(loss);
      adam_step(params, opt);
      start = end;
    }
    result.loss_trace.push_back(loss_sum / static_cast<double>(batches));
  }
  return result;
}

DenseMatrix embed_graphs(const GinEncoder& enc, const GraphBatch& data) {
  data.validate();
  if (data.graphs.empty()) throw ValidationError("embed_graphs: empty dataset");
  std::vector<const Graph*> ptrs;
  for (const auto& g : data.graphs) ptrs.push_back(&g);
  Tape tape;
  return encode(tape, enc, batch_graphs(ptrs, enc.eps)).value();
}

SplitMasks linear_eval_split(const std::vector<int>& labels, std::uint64_t seed) {
  return stratified_split(labels, seed, 0.8, 0.0);
}

double linear_eval_f1(const DenseMatrix& embeddings, const std::vector<int>& labels, std::uint64_t seed) {
  if (labels.size() != embeddings.rows())
    throw ShapeError("linear_eval_f1: one label per embedding row required");
  if (labels.empty()) throw ValidationError("linear_eval_f1: no samples");
  const SplitMasks split = linear_eval_split(labels, seed);
  const int classes = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<bool> seen(static_cast<std::size_t>(classes), false);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0) throw ValidationError("linear_eval_f1: negative label");
    else if (split.train[i]) seen[static_cast<std::size_t>(labels[i])] = true;
  for (int c = 0; c < classes; ++c)
    if (!seen[static_cast<std::size_t>(c)])
      throw ValidationError("linear_eval_f1: class " + std::to_string(c) + " absent from the train split");

  // Standardize with train statistics; constant columns become zero.
  const std::size_t n = embeddings.rows(), d = embeddings.cols();
  DenseMatrix x(n, d + 1);
  std::size_t n_train = 0;
  for (bool b : split.train) n_train += b ? 1 : 0;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (split.train[i]) mean += embeddings(i, j);
    mean /= static_cast<double>(n_train);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (split.train[i]) var += (embeddings(i, j) - mean) * (embeddings(i, j) - mean);
    const double sd = std::sqrt(var / static_cast<double>(n_train));
    for (std::size_t i = 0; i < n; ++i) x(i, j) = sd > 0.0 ? (embeddings(i, j) - mean) / sd : 0.0;
  }
  for (std::size_t i = 0; i < n; ++i) x(i, d) = 1.0;

  auto w = std::make_shared<Parameter>("linear.w", DenseMatrix(d + 1, static_cast<std::size_t>(classes)));
  AdamConfig opt_cfg;
  opt_cfg.lr = 0.05;
  opt_cfg.weight_decay = 0.0;
  AdamState opt(opt_cfg);
  for (int epoch = 0; epoch < 100; ++epoch) {
    Tape tape;
    const Variable loss = cross_entropy_masked(matmul(tape.constant(x), tape.param(w)), labels, split.train);
    tape.backward(loss);
    adam_step({w}, opt);
  }
  const DenseMatrix logits = matmul(x, w->value);
  return classification_metrics(logits, labels, split.test).macro_f1;
}

double linear_eval_f1(const GinEncoder& enc, const GraphBatch& data, std::uint64_t seed) {
  if (data.labels.size() != data.size()) throw ValidationError("linear_eval_f1: dataset is unlabeled");
  return linear_eval_f1(embed_graphs(enc, data), data.labels, seed);
}

GraphBatch synthetic_graph_set(const SyntheticGraphSetParams& p) {
  if (p.num_graphs < 1) throw ValidationError("synthetic_graph_set: num_graphs must be >= 1");
  if (p.min_nodes < 1 || p.max_nodes < p.min_nodes)
    throw ValidationError("synthetic_graph_set: need 1 <= min_nodes <= max_nodes");
  if (p.p_edge.empty()) throw ValidationError("synthetic_graph_set: p_edge is empty");
  for (double q : p.p_edge)
    if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("synthetic_graph_set: edge probability outside [0, 1]");
  if (p.feat_dim < 1) throw ValidationError("synthetic_graph_set: feat_dim must be >= 1");
  if (!(p.noise >= 0.0)) throw ValidationError("synthetic_graph_set: noise must be >= 0");
  GraphBatch out;
  const std::size_t classes = p.p_edge.size();
  for (std::size_t i = 0; i < p.num_graphs; ++i) {
    Rng rng(derive_seed(p.seed, i));
    const int label = static_cast<int>(i % classes);
    const std::size_t n = p.min_nodes + rng.below(p.max_nodes - p.min_nodes + 1);
    std::vector<Edge> edges;
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = u + 1; v < n; ++v)
        if (rng.uniform() < p.p_edge[static_cast<std::size_t>(label)])
          edges.push_back(Edge::make(static_cast<NodeId>(u), static_cast<NodeId>(v)));
    DenseMatrix x(n, p.feat_dim);
    for (std::size_t v = 0; v < n; ++v) {
      x(v, 0) = 1.0;
      for (std::size_t c = 1; c < p.feat_dim; ++c) x(v, c) = p.noise > 0.0 ? rng.normal(0.0, p.noise) : 0.0;
    }
    out.graphs.emplace_back(n, std::move(edges), std::move(x));
    out.labels.push_back(label);
  }
  return out;
}

json to_json(const SyntheticGraphSetParams& p) {
  return json{{"num_graphs", p.num_graphs}, {"min_nodes", p.min_nodes}, {"max_nodes", p.max_nodes},
              {"p_edge", p.p_edge},         {"feat_dim", p.feat_dim},   {"noise", p.noise},
              {"seed", p.seed}};
}

SyntheticGraphSetParams synthetic_graph_set_from_json(const json& j, const std::string& path) {
  detail::StrictObject o(j, path);
  SyntheticGraphSetParams p;
  o.read("num_graphs", p.num_graphs);
  o.read("min_nodes", p.min_nodes);
  o.read("max_nodes", p.max_nodes);
  o.read("p_edge", p.p_edge);
  o.read("feat_dim", p.feat_dim);
  o.read("noise", p.noise);
  o.read("seed", p.seed);
  o.finish();
  return p;
}

GraphBatch load_graph_directory(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json" && entry.path().filename() != "labels.json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("no graph files in " + dir.string());
  GraphBatch out;
  for (const auto& f : files) out.graphs.push_back(load_graph(f, GraphFormat::GraphJson, nullptr));
  const fs::path label_file = dir / "labels.json";
  if (fs::exists(label_file)) {
    json j;
    try {
      j = json::parse(read_text_file(label_file));
    } catch (const json::parse_error& e) {
      throw FormatError(label_file.string() + ": " + e.what());
    }
    if (!j.is_object()) throw FormatError(label_file.string() + ": expected an object");
    for (const auto& f : files) {
      const std::string name = f.filename().string();
      if (!j.contains(name) || !j[name].is_number_integer())
        throw FormatError(label_file.string() + ": missing integer label for " + name);
      out.labels.push_back(j[name].get<int>());
    }
  }
  out.validate();
  return out;
}

}  // namespace gdaug
