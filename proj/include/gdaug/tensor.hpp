#pragma once

// Reverse-mode differentiation over dense matrices.
//
// A Tape records one forward pass. Variables are handles into it. Trainable
// weights live in Parameters, which outlive tapes; Tape::param() binds one
// into the current pass and backward() accumulates into Parameter::grad.
// Tapes are single use: a second backward() throws.

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdaug/matrix.hpp"

namespace gdaug {

class Rng;

struct Parameter {
  Parameter(std::string name, DenseMatrix value);

  std::string name;
  DenseMatrix value;
  DenseMatrix grad;
  /// Set by backward(); cleared by the optimizer step.
  bool has_grad = false;

  void zero_grad();
};

using ParamPtr = std::shared_ptr<Parameter>;

/// Glorot/Xavier uniform initialization, U(-l, l) with l = sqrt(6 / (rows + cols)).
ParamPtr make_glorot(std::string name, std::size_t rows, std::size_t cols, Rng& rng);

class Tape;

class Variable {
 public:
  Variable() = default;

  const DenseMatrix& value() const;
  /// Gradient after backward(); nullptr when the variable does not require one.
  const DenseMatrix* grad() const;
  bool requires_grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Variable(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  /// Receives the gradient of the recorded output; pushes parent gradients
  /// through Tape::accumulate.
  using BackwardFn = std::function<void(Tape& tape, const DenseMatrix& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Variable constant(DenseMatrix value);
  /// Differentiable input whose gradient stays on the tape.
  Variable leaf(DenseMatrix value);
  /// Binds a Parameter; its gradient is accumulated into the Parameter.
  Variable param(const ParamPtr& p);

  /// Records an op output. Validates finiteness of `value`.
  Variable record(const char* op, DenseMatrix value, std::vector<Variable> parents, BackwardFn fn);

  void accumulate(const Variable& v, const DenseMatrix& delta);

  /// Reverse sweep from a 1x1 loss. Throws ShapeError for a non-scalar loss
  /// and ValidationError when the tape was already consumed.
  void backward(const Variable& loss);

  bool consumed() const noexcept { return consumed_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Parameters bound on this tape, in first-use order, without duplicates.
  std::vector<ParamPtr> bound_params() const;

 private:
  friend class Variable;
  struct Node {
    DenseMatrix value;
    DenseMatrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
    ParamPtr param;
  };
  // deque keeps value references stable while new nodes are recorded.
  std::deque<Node> nodes_;
  bool consumed_ = false;
};

void backward(const Variable& loss);

enum class ActivationKind { Identity, Relu, LeakyRelu, Sigmoid, Elu };

struct Activation {
  ActivationKind kind = ActivationKind::Identity;
  double slope = 0.2;  // leaky_relu negative slope

  static Activation identity() { return {ActivationKind::Identity, 0.2}; }
  static Activation relu() { return {ActivationKind::Relu, 0.2}; }
  static Activation leaky_relu(double slope = 0.2) { return {ActivationKind::LeakyRelu, slope}; }
  static Activation sigmoid() { return {ActivationKind::Sigmoid, 0.2}; }
  static Activation elu() { return {ActivationKind::Elu, 0.2}; }

  friend bool operator==(const Activation&, const Activation&) = default;
};

std::string to_string(const Activation& a);
Activation parse_activation(const std::string& name);

/// Boolean matrix used to restrict softmax rows.
struct EntryMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> on;

  EntryMask() = default;
  EntryMask(std::size_t r, std::size_t c, bool value = false)
      : rows(r), cols(c), on(r * c, value ? 1 : 0) {}
  bool operator()(std::size_t r, std::size_t c) const { return on[r * cols + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v) { on[r * cols + c] = v ? 1 : 0; }
};

Variable matmul(const Variable& a, const Variable& b);
Variable add(const Variable& a, const Variable& b);
Variable sub(const Variable& a, const Variable& b);
Variable hadamard(const Variable& a, const Variable& b);
Variable scale(const Variable& a, double s);
Variable transpose(const Variable& a);
Variable activation(const Variable& x, const Activation& act);
/// Row softmax over unmasked entries; masked entries are exactly 0. A row
/// with no unmasked entry throws DegenerateRowError.
Variable softmax_rows(const Variable& x, const EntryMask* mask = nullptr);
Variable concat_cols(const Variable& a, const Variable& b);
Variable concat_rows(const Variable& a, const Variable& b);
/// Sum of all entries as a 1x1 variable.
Variable sum_all(const Variable& x);
/// out(i, j) = col(i, 0) + row(0, j).
Variable broadcast_add(const Variable& col, const Variable& row);
/// Divides every row by its L2 norm. A zero row throws ValidationError.
Variable l2_normalize_rows(const Variable& x);
/// out(v) = elementwise max over x rows listed in groups[v]. Ties route the
/// gradient to the first maximal row.
Variable gather_max(const Variable& x, const std::vector<std::vector<std::uint32_t>>& groups);

/// Mean over masked rows of -log softmax(logits)[i][labels[i]], computed
/// with log-sum-exp. Throws ValidationError for an empty mask or bad label.
Variable cross_entropy_masked(const Variable& logits, const std::vector<int>& labels,
                              const std::vector<bool>& mask);

/// Cross entropy for every row with per-row target column, where the
/// log-sum-exp runs only over entries enabled in `entry_mask` (if given).
Variable cross_entropy_rows(const Variable& logits, const std::vector<int>& targets,
                            const EntryMask* entry_mask = nullptr);

enum class OptimizerKind { Adam, Sgd };

struct AdamConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-4;
};

class AdamState {
 public:
  explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}
  const AdamConfig& config() const noexcept { return cfg_; }
  std::uint64_t step() const noexcept { return step_; }

 private:
  friend void adam_step(const std::vector<ParamPtr>& params, AdamState& state);
  struct Moments {
    DenseMatrix m;
    DenseMatrix v;
  };
  AdamConfig cfg_;
  std::uint64_t step_ = 0;
  std::vector<std::pair<const Parameter*, Moments>> moments_;
  Moments& moments_for(const Parameter& p);
};

/// One optimizer update over every parameter, then grads are zeroed.
/// Throws ValidationError if any parameter has no gradient.
void adam_step(const std::vector<ParamPtr>& params, AdamState& state);

/// {"params": [{"name", "rows", "cols", "data"}]} at full precision.
nlohmann::json params_to_json(const std::vector<ParamPtr>& params);
/// Loads values by name; shapes must match. Throws ValidationError.
void params_from_json(const nlohmann::json& j, const std::vector<ParamPtr>& params);

}  // namespace gdaug
