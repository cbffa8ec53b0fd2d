#include "gdaug/models.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <map>

#include "gdaug/error.hpp"
#include "gdaug/rng.hpp"
#include "gdaug/json_util.hpp"

namespace gdaug {

using nlohmann::json;

std::string to_string(Arch arch) {
  switch (arch) {
    case Arch::GCN: return "GCN";
    case Arch::GraphSAGE: return "GraphSAGE";
    case Arch::GAT: return "GAT";
    case Arch::GIN: return "GIN";
  }
  return "?";
}

Arch parse_arch(const std::string& name) {
  std::string k = name;
  std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return std::tolower(c); });
  if (k == "gcn") return Arch::GCN;
  if (k == "graphsage" || k == "sage" || k == "gsage") return Arch::GraphSAGE;
  if (k == "gat") return Arch::GAT;
  if (k == "gin") return Arch::GIN;
  throw ValidationError("unknown architecture '" + name + "'");
}

ModelConfig ModelConfig::defaults(Arch arch, std::size_t in_dim, std::size_t classes) {
  ModelConfig c;
  c.arch = arch;
  const std::size_t hidden = arch == Arch::GAT ? 8 : 16;
  c.layer_dims = {in_dim, hidden, classes};
  return c;
}

ModelConfig ModelConfig::resolved(std::size_t in_dim, std::size_t classes) const {
  ModelConfig c = *this;
  if (c.layer_dims.empty()) c.layer_dims = defaults(arch, in_dim, classes).layer_dims;
  if (c.layer_dims.front() == 0) c.layer_dims.front() = in_dim;
  if (c.layer_dims.size() >= 2 && c.layer_dims.back() == 0) c.layer_dims.back() = classes;
  return c;
}

Activation ModelConfig::activation_for(std::size_t layer) const {
  if (!activations.empty()) return activations.at(layer);
  if (layer + 1 == num_layers()) return Activation::identity();
  return arch == Arch::GAT ? Activation::elu() : Activation::relu();
}

void ModelConfig::validate() const {
  if (layer_dims.size() < 2) throw ValidationError("model: layer_dims needs at least 2 entries");
  for (std::size_t d : layer_dims)
    if (d == 0) throw ValidationError("model: layer widths must be positive");
  if (sage_k < 1) throw ValidationError("model: sage_k must be >= 1");
  if (gat_heads < 1 || gat_output_heads < 1) throw ValidationError("model: gat heads must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("model: dropout must lie in [0, 1)");
  if (!activations.empty() && activations.size() != num_layers())
    throw ValidationError("model: need one activation per layer");
}

json to_json(const ModelConfig& cfg) {
  json j;
  j["arch"] = to_string(cfg.arch);
  j["layer_dims"] = cfg.layer_dims;
  j["sage_k"] = cfg.sage_k;
  j["sage_aggregator"] = cfg.sage_aggregator == SageAggregator::Mean ? "mean" : "maxpool";
  j["gat_heads"] = cfg.gat_heads;
  j["gat_output_heads"] = cfg.gat_output_heads;
  j["gat_slope"] = cfg.gat_slope;
  j["gin_eps"] = cfg.gin_eps;
  j["dropout"] = cfg.dropout;
  json acts = json::array();
  for (const auto& a : cfg.activations) acts.push_back(to_string(a));
  j["activations"] = acts;
  return j;
}

ModelConfig model_config_from_json(const json& j, const std::string& path) {
  detail::StrictObject o(j, path);
  ModelConfig c;
  std::string arch = "GCN";
  o.read("arch", arch);
  try {
    c.arch = parse_arch(arch);
  } catch (const ValidationError& e) {
    throw ConfigError(o.key_path("arch"), e.what());
  }
  o.read("layer_dims", c.layer_dims);
  if (o.has("hidden")) {
    if (o.has("layer_dims")) throw ConfigError(o.key_path("hidden"), "give either hidden or layer_dims");
    std::vector<std::size_t> hidden;
    o.read("hidden", hidden);
    c.layer_dims = {0};
    c.layer_dims.insert(c.layer_dims.end(), hidden.begin(), hidden.end());
    c.layer_dims.push_back(0);
  }
  o.read("sage_k", c.sage_k);
  std::string agg = "mean";
  o.read("sage_aggregator", agg);
  if (agg == "mean")
    c.sage_aggregator = SageAggregator::Mean;
  else if (agg == "maxpool")
    c.sage_aggregator = SageAggregator::MaxPool;
  else
    throw ConfigError(o.key_path("sage_aggregator"), "expected 'mean' or 'maxpool'");
  o.read("gat_heads", c.gat_heads);
  o.read("gat_output_heads", c.gat_output_heads);
  o.read("gat_slope", c.gat_slope);
  o.read("gin_eps", c.gin_eps);
  o.read("dropout", c.dropout);
  std::vector<std::string> acts;
  o.read("activations", acts);
  for (const auto& a : acts) {
    try {
      c.activations.push_back(parse_activation(a));
      if (c.activations.back().kind == ActivationKind::LeakyRelu) c.activations.back().slope = c.gat_slope;
    } catch (const ValidationError& e) {
      throw ConfigError(o.key_path("activations"), e.what());
    }
  }
  o.finish();
  if (c.sage_k < 1) throw ConfigError(o.key_path("sage_k"), "must be >= 1");
  if (c.gat_heads < 1) throw ConfigError(o.key_path("gat_heads"), "must be >= 1");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) throw ConfigError(o.key_path("dropout"), "must lie in [0, 1)");
  return c;
}

std::vector<ParamPtr> ModelParams::all() const {
  std::vector<ParamPtr> out;
  for (const auto& l : layers) {
    if (l.w) out.push_back(l.w);
    if (l.w_pool) out.push_back(l.w_pool);
    if (l.w2) out.push_back(l.w2);
    for (const auto& h : l.heads) {
      out.push_back(h.w);
      out.push_back(h.a);
    }
  }
  return out;
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(derive_seed(seed, 0x1417));
  ModelParams p;
  const std::size_t layers = cfg.num_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    std::size_t in = cfg.layer_dims[l];
    const std::size_t out = cfg.layer_dims[l + 1];
    LayerParams lp;
    switch (cfg.arch) {
      case Arch::GCN:
        lp.w = make_glorot(prefix + "w", in, out, rng);
        break;
      case Arch::GraphSAGE:
        if (cfg.sage_aggregator == SageAggregator::MaxPool)
          lp.w_pool = make_glorot(prefix + "w_pool", in, in, rng);
        lp.w = make_glorot(prefix + "w", 2 * in, out, rng);
        break;
      case Arch::GAT: {
        if (l > 0) in *= cfg.gat_heads;
        const std::size_t heads = l + 1 == layers ? cfg.gat_output_heads : cfg.gat_heads;
        for (std::size_t h = 0; h < heads; ++h) {
          const std::string hp = prefix + "head" + std::to_string(h) + ".";
          GatHeadParams head;
          head.w = make_glorot(hp + "w", in, out, rng);
          head.a = make_glorot(hp + "a", 2 * out, 1, rng);
          lp.heads.push_back(std::move(head));
        }
        break;
      }
      case Arch::GIN:
        lp.w = make_glorot(prefix + "w1", in, out, rng);
        lp.w2 = make_glorot(prefix + "w2", out, out, rng);
        break;
    }
    p.layers.push_back(std::move(lp));
  }
  return p;
}

GraphContext::GraphContext(const Graph& g, const ModelConfig& cfg) : graph(&g) {
  switch (cfg.arch) {
    case Arch::GCN: a_hat = normalized_adjacency(g); break;
    case Arch::GIN: gin_op = gin_operator(g, cfg.gin_eps); break;
    case Arch::GAT: attn_mask = attention_mask(g); break;
    case Arch::GraphSAGE: eval_samples = sage_eval_neighbors(g, cfg.sage_k, kSageEvalSeed); break;
  }
}

namespace {

Variable dropout(Tape& tape, const Variable& x, double p, std::uint64_t seed) {
  Rng rng(seed);
  const double keep_scale = 1.0 / (1.0 - p);
  DenseMatrix mask(x.rows(), x.cols());
  for (std::size_t i = 0; i < mask.size(); ++i) mask.data()[i] = rng.bernoulli(p) ? 0.0 : keep_scale;
  return hadamard(x, tape.constant(std::move(mask)));
}

}  // namespace

Variable model_forward(Tape& tape, const ModelConfig& cfg, const ModelParams& params,
                       const GraphContext& ctx, Mode mode, std::uint64_t seed) {
  cfg.validate();
  const Graph& g = *ctx.graph;
  const std::size_t layers = cfg.num_layers();
  if (params.layers.size() != layers)
    throw ValidationError("model_forward: parameter set has " + std::to_string(params.layers.size()) +
                          " layers, config has " + std::to_string(layers));
  if (g.num_features() != cfg.layer_dims.front())
    throw ValidationError("model_forward: graph has " + std::to_string(g.num_features()) +
                          " features, model expects " + std::to_string(cfg.layer_dims.front()));

  Variable h = tape.constant(g.features());
  Variable propagate;
  if (cfg.arch == Arch::GCN) propagate = tape.constant(ctx.a_hat);
  if (cfg.arch == Arch::GIN) propagate = tape.constant(ctx.gin_op);

  for (std::size_t l = 0; l < layers; ++l) {
    const LayerParams& lp = params.layers[l];
    const Activation act = cfg.activation_for(l);
    Variable x = h;
    if (mode == Mode::Train && cfg.dropout > 0.0)
      x = dropout(tape, x, cfg.dropout, derive_seed(seed, 0xd000 + l));
    switch (cfg.arch) {
      case Arch::GCN:
        if (!lp.w) throw ValidationError("model_forward: GCN layer missing weight");
        h = gcn_layer_forward(x, propagate, tape.param(lp.w), act);
        break;
      case Arch::GraphSAGE: {
        if (!lp.w) throw ValidationError("model_forward: GraphSAGE layer missing weight");
        NeighborSamples fresh;
        if (mode == Mode::Train) fresh = sage_sample_all(g, cfg.sage_k, derive_seed(seed, 0x5000 + l));
        const NeighborSamples& samples = mode == Mode::Train ? fresh : ctx.eval_samples;
        Variable pool;
        if (cfg.sage_aggregator == SageAggregator::MaxPool) {
          if (!lp.w_pool) throw ValidationError("model_forward: maxpool layer missing W_pool");
          pool = tape.param(lp.w_pool);
        }
        h = sage_layer_forward(x, samples, tape.param(lp.w), cfg.sage_aggregator, act,
                               cfg.sage_aggregator == SageAggregator::MaxPool ? &pool : nullptr);
        break;
      }
      case Arch::GAT: {
        if (lp.heads.empty()) throw ValidationError("model_forward: GAT layer has no heads");
        std::vector<GatHead> heads;
        for (const auto& hp : lp.heads) heads.push_back({tape.param(hp.w), tape.param(hp.a)});
        h = gat_layer_forward(x, heads, ctx.attn_mask, cfg.gat_slope, act,
                              l + 1 == layers ? HeadMerge::Mean : HeadMerge::Concat);
        break;
      }
      case Arch::GIN:
        if (!lp.w || !lp.w2) throw ValidationError("model_forward: GIN layer missing MLP weights");
        h = activation(gin_layer_forward(x, propagate, tape.param(lp.w), tape.param(lp.w2)), act);
        break;
    }
  }
  return h;
}

Variable model_forward(Tape& tape, const ModelConfig& cfg, const ModelParams& params,
                       const Graph& g, Mode mode, std::uint64_t seed) {
  const GraphContext ctx(g, cfg);
  return model_forward(tape, cfg, params, ctx, mode, seed);
}

ClassificationMetrics classification_metrics(const DenseMatrix& logits, const std::vector<int>& labels,
                                             const std::vector<bool>& mask) {
  if (labels.size() != logits.rows() || mask.size() != logits.rows())
    throw ShapeError("classification_metrics: labels/mask length differs from logits rows");
  std::map<int, std::array<std::size_t, 3>> counts;  // tp, fp, fn
  std::size_t total = 0, correct = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    if (!mask[i]) continue;
    const auto row = logits.row(i);
    const auto pred = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    const int truth = labels[i];
    ++total;
    if (pred == truth) {
      ++correct;
      ++counts[truth][0];
    } else {
      ++counts[pred][1];
      ++counts[truth][2];
    }
  }
  if (total == 0) throw ValidationError("evaluate: mask selects no nodes");
  double f1_sum = 0.0;
  for (const auto& [cls, c] : counts) {
    const double denom = static_cast<double>(2 * c[0] + c[1] + c[2]);
    f1_sum += denom > 0.0 ? 2.0 * static_cast<double>(c[0]) / denom : 0.0;
  }
  return {static_cast<double>(correct) / static_cast<double>(total),
          f1_sum / static_cast<double>(counts.size())};
}

ClassificationMetrics evaluate(const ModelConfig& cfg, const ModelParams& params, const Graph& g,
                               const std::vector<bool>& mask) {
  if (!g.labels()) throw ValidationError("evaluate: graph has no labels");
  Tape tape;
  const Variable logits = model_forward(tape, cfg, params, g, Mode::Eval, 0);
  return classification_metrics(logits.value(), *g.labels(), mask);
}

json checkpoint_to_json(const ModelConfig& cfg, const ModelParams& params) {
  json j = params_to_json(params.all());
  j["config"] = to_json(cfg);
  return j;
}

std::pair<ModelConfig, ModelParams> checkpoint_from_json(const json& j) {
  if (!j.is_object() || !j.contains("config")) throw ValidationError("checkpoint: missing 'config'");
  ModelConfig cfg = model_config_from_json(j.at("config"), "config");
  ModelParams params = init_params(cfg, 0);
  params_from_json(j, params.all());
  return {cfg, params};
}

std::string trace_to_csv(const std::vector<EpochMetrics>& trace) {
  std::string out = "epoch,train_loss,val_acc\n";
  char buf[96];
  for (const auto& e : trace) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", e.epoch, e.train_loss, e.val_acc);
    out += buf;
  }
  return out;
}

}  // namespace gdaug
