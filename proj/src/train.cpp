#include <memory>
#include <optional>

#include "gdaug/error.hpp"
#include "gdaug/models.hpp"
#include "gdaug/rng.hpp"
#include "gdaug/json_util.hpp"

namespace gdaug {

using nlohmann::json;

json to_json(const TrainConfig& cfg) {
  json j;
  j["max_epochs"] = cfg.max_epochs;
  j["patience"] = cfg.patience;
  j["optimizer"] = cfg.optimizer.kind == OptimizerKind::Adam ? "adam" : "sgd";
  j["lr"] = cfg.optimizer.lr;
  j["beta1"] = cfg.optimizer.beta1;
  j["beta2"] = cfg.optimizer.beta2;
  j["eps"] = cfg.optimizer.eps;
  j["weight_decay"] = cfg.optimizer.weight_decay;
  return j;
}

TrainConfig train_config_from_json(const json& j, const std::string& path) {
  detail::StrictObject o(j, path);
  TrainConfig c;
  o.read("max_epochs", c.max_epochs);
  o.read("patience", c.patience);
  std::string opt = "adam";
  o.read("optimizer", opt);
  if (opt == "adam")
    c.optimizer.kind = OptimizerKind::Adam;
  else if (opt == "sgd")
    c.optimizer.kind = OptimizerKind::Sgd;
  else
    throw ConfigError(o.key_path("optimizer"), "expected 'adam' or 'sgd'");
  o.read("lr", c.optimizer.lr);
  o.read("beta1", c.optimizer.beta1);
  o.read("beta2", c.optimizer.beta2);
  o.read("eps", c.optimizer.eps);
  o.read("weight_decay", c.optimizer.weight_decay);
  o.finish();
  if (c.max_epochs < 1) throw ConfigError(o.key_path("max_epochs"), "must be >= 1");
  if (!(c.optimizer.lr > 0.0)) throw ConfigError(o.key_path("lr"), "must be positive");
  if (!(c.optimizer.beta1 >= 0.0 && c.optimizer.beta1 < 1.0))
    throw ConfigError(o.key_path("beta1"), "must lie in [0, 1)");
  if (!(c.optimizer.beta2 >= 0.0 && c.optimizer.beta2 < 1.0))
    throw ConfigError(o.key_path("beta2"), "must lie in [0, 1)");
  if (!(c.optimizer.eps > 0.0)) throw ConfigError(o.key_path("eps"), "must be positive");
  if (!(c.optimizer.weight_decay >= 0.0)) throw ConfigError(o.key_path("weight_decay"), "must be >= 0");
  return c;
}

Graph evaluation_graph(const Graph& g, const AugmenterSpec& aug) {
  if (aug.is_stochastic()) return g;
  return apply(aug, g);
}

namespace {

ModelParams clone_params(const ModelParams& src) {
  ModelParams out = src;
  auto copy = [](ParamPtr& p) {
    if (p) p = std::make_shared<Parameter>(p->name, p->value);
  };
  for (auto& l : out.layers) {
    copy(l.w);
    copy(l.w_pool);
    copy(l.w2);
    for (auto& h : l.heads) {
      copy(h.w);
      copy(h.a);
    }
  }
  return out;
}

double masked_accuracy(const DenseMatrix& logits, const std::vector<int>& labels, const std::vector<bool>& mask) {
  for (bool b : mask)
    if (b) return classification_metrics(logits, labels, mask).accuracy;
  return 0.0;
}

}  // namespace

TrainedModel train_supervised(const Graph& g, const ModelConfig& cfg_in, const TrainConfig& train_cfg,
                              const AugmenterSpec& aug, std::uint64_t seed) {
  if (!g.labels()) throw ValidationError("train_supervised: graph has no labels");
  if (!g.masks()) throw ValidationError("train_supervised: graph has no train/val/test masks");
  aug.validate();
  const ModelConfig cfg = cfg_in.resolved(g.num_features(), g.num_classes());
  cfg.validate();
  const auto& labels = *g.labels();
  const auto& masks = *g.masks();

  TrainedModel result;
  result.config = cfg;
  result.augmentation_protocol = aug.is_stochastic() ? "per-epoch" : "once";

  ModelParams params = init_params(cfg, derive_seed(seed, 1));
  AdamState opt(train_cfg.optimizer);

  const Graph eval_graph = evaluation_graph(g, aug);
  const GraphContext eval_ctx(eval_graph, cfg);
  const std::uint64_t aug_seed = derive_seed(seed, aug.seed);

  std::optional<Graph> train_graph;
  std::optional<GraphContext> train_ctx;
  if (!aug.is_stochastic()) {
    train_graph.emplace(eval_graph);
    train_ctx.emplace(*train_graph, cfg);
  }

  ModelParams best = clone_params(params);
  double best_val = -1.0;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= train_cfg.max_epochs; ++epoch) {
    if (aug.is_stochastic()) {
      train_ctx.reset();
      train_graph.emplace(apply(aug, g, epoch_seed(aug_seed, epoch)));
      train_ctx.emplace(*train_graph, cfg);
    }
    EpochMetrics m;
    m.epoch = epoch;
    {
      Tape tape;
      const Variable logits =
          model_forward(tape, cfg, params, *train_ctx, Mode::Train, derive_seed(seed, 0x1000 + epoch));
      const Variable loss = cross_entropy_masked(logits, labels, masks.train);
      m.train_loss = loss.value()(0, 0);
      tape.backward(loss);
      for (const auto& p : params.all())
        if (!p->has_grad) {
          p->grad = DenseMatrix(p->value.rows(), p->value.cols());
          p->has_grad = true;
        }
      adam_step(params.all(), opt);
    }
    {
      Tape tape;
      const Variable logits = model_forward(tape, cfg, params, eval_ctx, Mode::Eval, 0);
      m.train_acc = masked_accuracy(logits.value(), labels, masks.train);
      m.val_acc = masked_accuracy(logits.value(), labels, masks.val);
    }
    result.trace.push_back(m);
    // Ties move the checkpoint forward but do not reset patience.
    const bool improved = m.val_acc > best_val;
    if (m.val_acc >= best_val) {
      best_val = m.val_acc;
      best = clone_params(params);
      result.best_epoch = epoch;
    }
    if (improved)
      since_best = 0;
    else if (++since_best >= train_cfg.patience && train_cfg.patience > 0)
      break;
  }

  result.params = std::move(best);
  result.best_val_acc = best_val;
  Tape tape;
  const Variable logits = model_forward(tape, cfg, result.params, eval_ctx, Mode::Eval, 0);
  result.train = classification_metrics(logits.value(), labels, masks.train);
  bool any_test = false;
  for (bool b : masks.test) any_test = any_test || b;
  if (any_test) result.test = classification_metrics(logits.value(), labels, masks.test);
  return result;
}

}  // namespace gdaug
