#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdaug/augment.hpp"
#include "gdaug/graph.hpp"
#include "gdaug/layers.hpp"
#include "gdaug/tensor.hpp"

namespace gdaug {

enum class Arch { GCN, GraphSAGE, GAT, GIN };

std::string to_string(Arch arch);
Arch parse_arch(const std::string& name);

struct ModelConfig {
  Arch arch = Arch::GCN;
  /// Input width, hidden widths, classes. For GAT hidden entries are per-head widths.
  std::vector<std::size_t> layer_dims;
  std::size_t sage_k = 10;
  SageAggregator sage_aggregator = SageAggregator::Mean;
  std::size_t gat_heads = 8;
  std::size_t gat_output_heads = 1;
  double gat_slope = 0.2;
  double gin_eps = 0.0;
  double dropout = 0.5;
  /// One per layer. Empty means the architecture default: relu (elu for GAT)
  /// on hidden layers and identity on the output layer.
  std::vector<Activation> activations;

  /// Two-layer defaults: hidden 16 (GCN, GraphSAGE, GIN) or 8 x 8 heads (GAT).
  static ModelConfig defaults(Arch arch, std::size_t in_dim, std::size_t classes);

  /// Copy with the input width and class count filled in. Zero entries at
  /// either end of layer_dims mean "take from the dataset".
  ModelConfig resolved(std::size_t in_dim, std::size_t classes) const;

  std::size_t num_layers() const { return layer_dims.size() - 1; }
  Activation activation_for(std::size_t layer) const;
  /// Throws ValidationError.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::json to_json(const ModelConfig& cfg);
/// Strict parse: unknown keys throw ConfigError naming the key path.
ModelConfig model_config_from_json(const nlohmann::json& j, const std::string& path = "model");

struct GatHeadParams {
  ParamPtr w;
  ParamPtr a;
};

struct LayerParams {
  ParamPtr w;                        // GCN, GraphSAGE, GIN first linear
  ParamPtr w_pool;                   // GraphSAGE maxpool
  ParamPtr w2;                       // GIN second linear
  std::vector<GatHeadParams> heads;  // GAT
};

struct ModelParams {
  std::vector<LayerParams> layers;

  /// Every parameter in a fixed order.
  std::vector<ParamPtr> all() const;
};

/// Glorot-initialized, bias-free parameters.
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

enum class Mode { Train, Eval };

/// Per-graph constants the layers need (propagation matrix, neighborhoods).
struct GraphContext {
  explicit GraphContext(const Graph& g, const ModelConfig& cfg);
  const Graph* graph;
  DenseMatrix a_hat;        // GCN
  DenseMatrix gin_op;       // GIN
  EntryMask attn_mask;      // GAT
  NeighborSamples eval_samples;  // GraphSAGE, fixed-seed
};

/// Fixed sampling seed used by GraphSAGE in eval mode.
inline constexpr std::uint64_t kSageEvalSeed = 0x5a6e;

/// Stacks the layers of cfg.arch. Train mode applies input dropout per layer
/// and re-samples GraphSAGE neighbors from `seed`; eval mode is deterministic.
Variable model_forward(Tape& tape, const ModelConfig& cfg, const ModelParams& params,
                       const GraphContext& ctx, Mode mode, std::uint64_t seed);
Variable model_forward(Tape& tape, const ModelConfig& cfg, const ModelParams& params,
                       const Graph& g, Mode mode, std::uint64_t seed);

struct ClassificationMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

/// Argmax (ties to the lowest class) over masked rows. Macro-F1 averages
/// per-class F1 over classes appearing in the masked labels or predictions.
/// Throws ValidationError for an empty mask.
ClassificationMetrics classification_metrics(const DenseMatrix& logits, const std::vector<int>& labels,
                                             const std::vector<bool>& mask);
ClassificationMetrics evaluate(const ModelConfig& cfg, const ModelParams& params, const Graph& g,
                               const std::vector<bool>& mask);

struct TrainConfig {
  std::size_t max_epochs = 200;
  std::size_t patience = 30;
  AdamConfig optimizer;

  friend bool operator==(const TrainConfig& a, const TrainConfig& b) {
    return a.max_epochs == b.max_epochs && a.patience == b.patience &&
           a.optimizer.kind == b.optimizer.kind && a.optimizer.lr == b.optimizer.lr &&
           a.optimizer.beta1 == b.optimizer.beta1 && a.optimizer.beta2 == b.optimizer.beta2 &&
           a.optimizer.eps == b.optimizer.eps && a.optimizer.weight_decay == b.optimizer.weight_decay;
  }
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j, const std::string& path = "train");

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

struct TrainedModel {
  ModelConfig config;
  ModelParams params;        // best-validation parameters
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
  ClassificationMetrics test;  // on the evaluation graph at the best epoch
  ClassificationMetrics train;
  std::vector<EpochMetrics> trace;
  /// "per-epoch" when the augmentation is re-sampled each epoch, else "once".
  std::string augmentation_protocol;
};

/// Full-graph supervised training with Adam on the train mask, best-val
/// checkpointing and early stopping. Stochastic augmentations are re-drawn
/// every epoch from epoch_seed(); deterministic ones are applied once and
/// also define the evaluation graph.
TrainedModel train_supervised(const Graph& g, const ModelConfig& cfg, const TrainConfig& train_cfg,
                              const AugmenterSpec& aug, std::uint64_t seed);

/// Graph the trained model is evaluated on for a given augmentation.
Graph evaluation_graph(const Graph& g, const AugmenterSpec& aug);

/// Checkpoint: {"config": ModelConfig, "params": [...]}.
nlohmann::json checkpoint_to_json(const ModelConfig& cfg, const ModelParams& params);
std::pair<ModelConfig, ModelParams> checkpoint_from_json(const nlohmann::json& j);

/// "epoch,train_loss,val_acc" CSV with full-precision values.
std::string trace_to_csv(const std::vector<EpochMetrics>& trace);

}  // namespace gdaug
