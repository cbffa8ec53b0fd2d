#include "gdaug/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "gdaug/error.hpp"
#include "gdaug/kernels.hpp"
#include "gdaug/rng.hpp"

namespace gdaug {

using nlohmann::json;

Parameter::Parameter(std::string n, DenseMatrix v)
    : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

void Parameter::zero_grad() {
  grad = DenseMatrix(value.rows(), value.cols());
  has_grad = false;
}

ParamPtr make_glorot(std::string name, std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  DenseMatrix w(rows, cols);
  for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = (2.0 * rng.uniform() - 1.0) * limit;
  return std::make_shared<Parameter>(std::move(name), std::move(w));
}

// ---------------------------------------------------------------- Variable

const DenseMatrix& Variable::value() const {
  if (!tape_) throw ValidationError("variable is not bound to a tape");
  return tape_->nodes_[id_].value;
}

const DenseMatrix* Variable::grad() const {
  if (!tape_) throw ValidationError("variable is not bound to a tape");
  const auto& n = tape_->nodes_[id_];
  if (!n.requires_grad || !n.has_grad) return nullptr;
  return &n.grad;
}

bool Variable::requires_grad() const { return tape_ && tape_->nodes_[id_].requires_grad; }

// ---------------------------------------------------------------- Tape

Variable Tape::constant(DenseMatrix value) {
  if (!value.all_finite()) throw ValidationError("Tape::constant: non-finite value");
  nodes_.push_back(Node{std::move(value), {}, false, false, nullptr, nullptr});
  return Variable(this, nodes_.size() - 1);
}

Variable Tape::leaf(DenseMatrix value) {
  if (!value.all_finite()) throw ValidationError("Tape::leaf: non-finite value");
  nodes_.push_back(Node{std::move(value), {}, true, false, nullptr, nullptr});
  return Variable(this, nodes_.size() - 1);
}

Variable Tape::param(const ParamPtr& p) {
  if (!p) throw ValidationError("Tape::param: null parameter");
  if (!p->value.all_finite()) throw ValidationError("Tape::param: '" + p->name + "' is non-finite");
  nodes_.push_back(Node{p->value, {}, true, false, nullptr, p});
  return Variable(this, nodes_.size() - 1);
}

Variable Tape::record(const char* op, DenseMatrix value, std::vector<Variable> parents,
                      BackwardFn fn) {
  if (consumed_) throw ValidationError(std::string(op) + ": tape already consumed by backward()");
  if (!value.all_finite())
    throw ValidationError(std::string(op) + ": produced a non-finite value");
  bool req = false;
  for (const Variable& p : parents) {
    if (p.tape_ != this) throw ValidationError(std::string(op) + ": operands live on different tapes");
    req = req || nodes_[p.id_].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, req, false, req ? std::move(fn) : nullptr, nullptr});
  return Variable(this, nodes_.size() - 1);
}

void Tape::accumulate(const Variable& v, const DenseMatrix& delta) {
  Node& n = nodes_[v.id_];
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = delta;
    n.has_grad = true;
  } else {
    axpy_inplace(n.grad, 1.0, delta);
  }
}

void Tape::backward(const Variable& loss) {
  if (loss.tape_ != this) throw ValidationError("backward: loss is not on this tape");
  if (consumed_) throw ValidationError("backward: tape already consumed (single-use tapes)");
  const Node& ln = nodes_[loss.id_];
  if (ln.value.rows() != 1 || ln.value.cols() != 1)
    throw ShapeError("backward: loss must be 1x1, got " + std::to_string(ln.value.rows()) + "x" +
                     std::to_string(ln.value.cols()));
  consumed_ = true;
  if (ln.requires_grad) accumulate(loss, DenseMatrix(1, 1, 1.0));

  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.has_grad || !n.backward) continue;
    n.backward(*this, n.grad);
  }

  for (Node& n : nodes_) {
    if (!n.requires_grad) continue;
    if (!n.has_grad) {
      n.grad = DenseMatrix(n.value.rows(), n.value.cols());
      n.has_grad = true;
    }
    if (n.param) {
      if (!n.param->has_grad) {
        n.param->grad = n.grad;
        n.param->has_grad = true;
      } else {
        axpy_inplace(n.param->grad, 1.0, n.grad);
      }
    }
  }
}

std::vector<ParamPtr> Tape::bound_params() const {
  std::vector<ParamPtr> out;
  std::unordered_set<const Parameter*> seen;
  for (const Node& n : nodes_)
    if (n.param && seen.insert(n.param.get()).second) out.push_back(n.param);
  return out;
}

void backward(const Variable& loss) {
  if (!loss.tape()) throw ValidationError("backward: unbound variable");
  loss.tape()->backward(loss);
}

// ---------------------------------------------------------------- ops

namespace {

std::string shape(const DenseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Tape& tape_of(const Variable& v) {
  if (!v.tape()) throw ValidationError("operation on an unbound variable");
  return *v.tape();
}

}  // namespace

Variable matmul(const Variable& a, const Variable& b) {
  const DenseMatrix& av = a.value();
  const DenseMatrix& bv = b.value();
  if (av.cols() != bv.rows()) throw ShapeError("matmul: " + shape(av) + " * " + shape(bv));
  return tape_of(a).record("matmul", gdaug::matmul(av, bv), {a, b},
                           [a, b](Tape& t, const DenseMatrix& g) {
                             if (a.requires_grad()) t.accumulate(a, matmul_nt(g, b.value()));
                             if (b.requires_grad()) t.accumulate(b, matmul_tn(a.value(), g));
                           });
}

Variable add(const Variable& a, const Variable& b) {
  if (!a.value().same_shape(b.value()))
    throw ShapeError("add: " + shape(a.value()) + " + " + shape(b.value()));
  return tape_of(a).record("add", gdaug::add(a.value(), b.value()), {a, b},
                           [a, b](Tape& t, const DenseMatrix& g) {
                             t.accumulate(a, g);
                             t.accumulate(b, g);
                           });
}

Variable sub(const Variable& a, const Variable& b) {
  if (!a.value().same_shape(b.value()))
    throw ShapeError("sub: " + shape(a.value()) + " - " + shape(b.value()));
  DenseMatrix out = a.value();
  axpy_inplace(out, -1.0, b.value());
  return tape_of(a).record("sub", std::move(out), {a, b}, [a, b](Tape& t, const DenseMatrix& g) {
    t.accumulate(a, g);
    if (b.requires_grad()) t.accumulate(b, scaled(g, -1.0));
  });
}

Variable hadamard(const Variable& a, const Variable& b) {
  if (!a.value().same_shape(b.value()))
    throw ShapeError("hadamard: " + shape(a.value()) + " .* " + shape(b.value()));
  return tape_of(a).record("hadamard", gdaug::hadamard(a.value(), b.value()), {a, b},
                           [a, b](Tape& t, const DenseMatrix& g) {
                             if (a.requires_grad()) t.accumulate(a, gdaug::hadamard(g, b.value()));
                             if (b.requires_grad()) t.accumulate(b, gdaug::hadamard(g, a.value()));
                           });
}

Variable scale(const Variable& a, double s) {
  return tape_of(a).record("scale", scaled(a.value(), s), {a},
                           [a, s](Tape& t, const DenseMatrix& g) { t.accumulate(a, scaled(g, s)); });
}

Variable transpose(const Variable& a) {
  return tape_of(a).record("transpose", a.value().transpose(), {a},
                           [a](Tape& t, const DenseMatrix& g) { t.accumulate(a, g.transpose()); });
}

std::string to_string(const Activation& a) {
  switch (a.kind) {
    case ActivationKind::Identity: return "identity";
    case ActivationKind::Relu: return "relu";
    case ActivationKind::LeakyRelu: return "leaky_relu";
    case ActivationKind::Sigmoid: return "sigmoid";
    case ActivationKind::Elu: return "elu";
  }
  return "?";
}

Activation parse_activation(const std::string& name) {
  if (name == "identity" || name == "linear") return Activation::identity();
  if (name == "relu") return Activation::relu();
  if (name == "leaky_relu") return Activation::leaky_relu();
  if (name == "sigmoid") return Activation::sigmoid();
  if (name == "elu") return Activation::elu();
  throw ValidationError("unknown activation '" + name + "'");
}

namespace {

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Variable activation(const Variable& x, const Activation& act) {
  const DenseMatrix& xv = x.value();
  const std::size_t n = xv.size();
  DenseMatrix y(xv.rows(), xv.cols());
  const double* in = xv.data();
  double* out = y.data();
  switch (act.kind) {
    case ActivationKind::Identity:
      std::copy(in, in + n, out);
      break;
    case ActivationKind::Relu:
      kernels::active().relu(n, in, out);
      break;
    case ActivationKind::LeakyRelu:
      for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : act.slope * in[i];
      break;
    case ActivationKind::Sigmoid:
      for (std::size_t i = 0; i < n; ++i) out[i] = sigmoid_scalar(in[i]);
      break;
    case ActivationKind::Elu:
      for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : std::expm1(in[i]);
      break;
  }
  if (act.kind == ActivationKind::Identity)
    return tape_of(x).record("identity", std::move(y), {x},
                             [x](Tape& t, const DenseMatrix& g) { t.accumulate(x, g); });

  DenseMatrix yv = y;
  return tape_of(x).record(
      "activation", std::move(y), {x}, [x, act, yv = std::move(yv)](Tape& t, const DenseMatrix& g) {
        const DenseMatrix& xin = x.value();
        DenseMatrix d(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double xi = xin.data()[i];
          double deriv = 1.0;
          switch (act.kind) {
            case ActivationKind::Relu: deriv = xi > 0.0 ? 1.0 : 0.0; break;
            case ActivationKind::LeakyRelu: deriv = xi > 0.0 ? 1.0 : act.slope; break;
            case ActivationKind::Sigmoid: deriv = yv.data()[i] * (1.0 - yv.data()[i]); break;
            case ActivationKind::Elu: deriv = xi > 0.0 ? 1.0 : yv.data()[i] + 1.0; break;
            case ActivationKind::Identity: break;
          }
          d.data()[i] = g.data()[i] * deriv;
        }
        t.accumulate(x, d);
      });
}

Variable softmax_rows(const Variable& x, const EntryMask* mask) {
  const DenseMatrix& xv = x.value();
  if (mask && (mask->rows != xv.rows() || mask->cols != xv.cols()))
    throw ShapeError("softmax_rows: mask shape differs from input " + shape(xv));
  DenseMatrix y(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < xv.cols(); ++c)
      if (!mask || (*mask)(r, c)) mx = std::max(mx, xv(r, c));
    if (mx == -std::numeric_limits<double>::infinity())
      throw DegenerateRowError("softmax_rows: row " + std::to_string(r) + " is fully masked");
    double sum = 0.0;
    for (std::size_t c = 0; c < xv.cols(); ++c) {
      if (mask && !(*mask)(r, c)) continue;
      const double e = std::exp(xv(r, c) - mx);
      y(r, c) = e;
      sum += e;
    }
    for (std::size_t c = 0; c < xv.cols(); ++c) y(r, c) /= sum;
  }
  DenseMatrix yv = y;
  return tape_of(x).record("softmax_rows", std::move(y), {x},
                           [x, yv = std::move(yv)](Tape& t, const DenseMatrix& g) {
                             DenseMatrix d(g.rows(), g.cols());
                             for (std::size_t r = 0; r < g.rows(); ++r) {
                               double dot = 0.0;
                               for (std::size_t c = 0; c < g.cols(); ++c) dot += g(r, c) * yv(r, c);
                               for (std::size_t c = 0; c < g.cols(); ++c)
                                 d(r, c) = yv(r, c) * (g(r, c) - dot);
                             }
                             t.accumulate(x, d);
                           });
}

Variable concat_cols(const Variable& a, const Variable& b) {
  const DenseMatrix& av = a.value();
  const DenseMatrix& bv = b.value();
  if (av.rows() != bv.rows()) throw ShapeError("concat_cols: " + shape(av) + " | " + shape(bv));
  const std::size_t ca = av.cols(), cb = bv.cols();
  DenseMatrix out(av.rows(), ca + cb);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    std::copy(av.row(r).begin(), av.row(r).end(), out.row(r).begin());
    std::copy(bv.row(r).begin(), bv.row(r).end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(ca));
  }
  return tape_of(a).record("concat_cols", std::move(out), {a, b},
                           [a, b, ca, cb](Tape& t, const DenseMatrix& g) {
                             DenseMatrix ga(g.rows(), ca), gb(g.rows(), cb);
                             for (std::size_t r = 0; r < g.rows(); ++r) {
                               auto gr = g.row(r);
                               std::copy(gr.begin(), gr.begin() + static_cast<std::ptrdiff_t>(ca),
                                         ga.row(r).begin());
                               std::copy(gr.begin() + static_cast<std::ptrdiff_t>(ca), gr.end(),
                                         gb.row(r).begin());
                             }
                             t.accumulate(a, ga);
                             t.accumulate(b, gb);
                           });
}

Variable concat_rows(const Variable& a, const Variable& b) {
  const DenseMatrix& av = a.value();
  const DenseMatrix& bv = b.value();
  if (av.cols() != bv.cols()) throw ShapeError("concat_rows: " + shape(av) + " / " + shape(bv));
  std::vector<double> data(av.values());
  data.insert(data.end(), bv.values().begin(), bv.values().end());
  const std::size_t ra = av.rows(), rb = bv.rows(), c = av.cols();
  return tape_of(a).record(
      "concat_rows", DenseMatrix(ra + rb, c, std::move(data)), {a, b},
      [a, b, ra, rb, c](Tape& t, const DenseMatrix& g) {
        const auto split = g.values().begin() + static_cast<std::ptrdiff_t>(ra * c);
        t.accumulate(a, DenseMatrix(ra, c, std::vector<double>(g.values().begin(), split)));
        t.accumulate(b, DenseMatrix(rb, c, std::vector<double>(split, g.values().end())));
      });
}

Variable sum_all(const Variable& x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  const std::size_t r = x.rows(), c = x.cols();
  return tape_of(x).record("sum_all", DenseMatrix(1, 1, s), {x},
                           [x, r, c](Tape& t, const DenseMatrix& g) {
                             t.accumulate(x, DenseMatrix(r, c, g(0, 0)));
                           });
}

Variable broadcast_add(const Variable& col, const Variable& row) {
  const DenseMatrix& cv = col.value();
  const DenseMatrix& rv = row.value();
  if (cv.cols() != 1 || rv.rows() != 1)
    throw ShapeError("broadcast_add: expected Nx1 and 1xM, got " + shape(cv) + " and " + shape(rv));
  DenseMatrix out(cv.rows(), rv.cols());
  for (std::size_t i = 0; i < cv.rows(); ++i)
    for (std::size_t j = 0; j < rv.cols(); ++j) out(i, j) = cv(i, 0) + rv(0, j);
  return tape_of(col).record("broadcast_add", std::move(out), {col, row},
                             [col, row](Tape& t, const DenseMatrix& g) {
                               DenseMatrix gc(g.rows(), 1), gr(1, g.cols());
                               for (std::size_t i = 0; i < g.rows(); ++i)
                                 for (std::size_t j = 0; j < g.cols(); ++j) {
                                   gc(i, 0) += g(i, j);
                                   gr(0, j) += g(i, j);
                                 }
                               t.accumulate(col, gc);
                               t.accumulate(row, gr);
                             });
}

Variable l2_normalize_rows(const Variable& x) {
  const DenseMatrix& xv = x.value();
  std::vector<double> norms(xv.rows());
  DenseMatrix y(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double ss = 0.0;
    for (double v : xv.row(r)) ss += v * v;
    if (ss == 0.0)
      throw ValidationError("l2_normalize_rows: row " + std::to_string(r) + " has zero norm");
    norms[r] = std::sqrt(ss);
    for (std::size_t c = 0; c < xv.cols(); ++c) y(r, c) = xv(r, c) / norms[r];
  }
  DenseMatrix yv = y;
  return tape_of(x).record(
      "l2_normalize_rows", std::move(y), {x},
      [x, yv = std::move(yv), norms = std::move(norms)](Tape& t, const DenseMatrix& g) {
        // d/dx (x/|x|) = (g - y (y.g)) / |x|
        DenseMatrix d(g.rows(), g.cols());
        for (std::size_t r = 0; r < g.rows(); ++r) {
          double dot = 0.0;
          for (std::size_t c = 0; c < g.cols(); ++c) dot += yv(r, c) * g(r, c);
          for (std::size_t c = 0; c < g.cols(); ++c) d(r, c) = (g(r, c) - yv(r, c) * dot) / norms[r];
        }
        t.accumulate(x, d);
      });
}

Variable gather_max(const Variable& x, const std::vector<std::vector<std::uint32_t>>& groups) {
  const DenseMatrix& xv = x.value();
  const std::size_t cols = xv.cols();
  DenseMatrix out(groups.size(), cols);
  std::vector<std::uint32_t> argmax(groups.size() * cols);
  for (std::size_t v = 0; v < groups.size(); ++v) {
    if (groups[v].empty())
      throw ValidationError("gather_max: group " + std::to_string(v) + " is empty");
    for (std::uint32_t src : groups[v])
      if (src >= xv.rows()) throw IndexError("gather_max: row index out of range");
    for (std::size_t c = 0; c < cols; ++c) {
      std::uint32_t best = groups[v][0];
      for (std::uint32_t src : groups[v])
        if (xv(src, c) > xv(best, c)) best = src;
      out(v, c) = xv(best, c);
      argmax[v * cols + c] = best;
    }
  }
  const std::size_t in_rows = xv.rows();
  return tape_of(x).record("gather_max", std::move(out), {x},
                           [x, argmax = std::move(argmax), in_rows, cols](Tape& t, const DenseMatrix& g) {
                             DenseMatrix d(in_rows, cols);
                             for (std::size_t v = 0; v < g.rows(); ++v)
                               for (std::size_t c = 0; c < cols; ++c)
                                 d(argmax[v * cols + c], c) += g(v, c);
                             t.accumulate(x, d);
                           });
}

namespace {

// Shared core of the cross-entropy losses: rows with weight 0 are skipped;
// the loss is sum_i w_i * (lse_i - x_i,target_i).
Variable weighted_nll(const Variable& logits, const std::vector<int>& targets,
                      const std::vector<double>& weights, const EntryMask* entry_mask,
                      const char* op) {
  const DenseMatrix& x = logits.value();
  if (targets.size() != x.rows() || weights.size() != x.rows())
    throw ShapeError(std::string(op) + ": target vector length differs from logits rows");
  if (entry_mask && (entry_mask->rows != x.rows() || entry_mask->cols != x.cols()))
    throw ShapeError(std::string(op) + ": entry mask shape differs from logits");
  DenseMatrix probs(x.rows(), x.cols());
  double loss = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (weights[r] == 0.0) continue;
    const int tgt = targets[r];
    if (tgt < 0 || static_cast<std::size_t>(tgt) >= x.cols())
      throw ValidationError(std::string(op) + ": target " + std::to_string(tgt) + " at row " +
                            std::to_string(r) + " outside [0, " + std::to_string(x.cols()) + ")");
    if (entry_mask && !(*entry_mask)(r, static_cast<std::size_t>(tgt)))
      throw ValidationError(std::string(op) + ": target entry is masked out at row " +
                            std::to_string(r));
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < x.cols(); ++c)
      if (!entry_mask || (*entry_mask)(r, c)) mx = std::max(mx, x(r, c));
    double sum = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c)
      if (!entry_mask || (*entry_mask)(r, c)) sum += std::exp(x(r, c) - mx);
    const double lse = mx + std::log(sum);
    loss += weights[r] * (lse - x(r, static_cast<std::size_t>(tgt)));
    for (std::size_t c = 0; c < x.cols(); ++c)
      if (!entry_mask || (*entry_mask)(r, c)) probs(r, c) = std::exp(x(r, c) - lse);
  }
  return tape_of(logits).record(
      op, DenseMatrix(1, 1, loss), {logits},
      [logits, targets, weights, probs = std::move(probs)](Tape& t, const DenseMatrix& g) {
        DenseMatrix d(probs.rows(), probs.cols());
        const double go = g(0, 0);
        for (std::size_t r = 0; r < probs.rows(); ++r) {
          if (weights[r] == 0.0) continue;
          const double w = weights[r] * go;
          for (std::size_t c = 0; c < probs.cols(); ++c) d(r, c) = w * probs(r, c);
          d(r, static_cast<std::size_t>(targets[r])) -= w;
        }
        t.accumulate(logits, d);
      });
}

}  // namespace

Variable cross_entropy_masked(const Variable& logits, const std::vector<int>& labels,
                              const std::vector<bool>& mask) {
  const std::size_t n = logits.rows();
  if (labels.size() != n || mask.size() != n)
    throw ShapeError("cross_entropy_masked: labels/mask length differs from logits rows");
  const auto count = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  if (count == 0) throw ValidationError("cross_entropy_masked: mask selects no nodes");
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (mask[i]) w[i] = 1.0 / static_cast<double>(count);
  return weighted_nll(logits, labels, w, nullptr, "cross_entropy_masked");
}

Variable cross_entropy_rows(const Variable& logits, const std::vector<int>& targets,
                            const EntryMask* entry_mask) {
  const std::size_t n = logits.rows();
  if (n == 0) throw ValidationError("cross_entropy_rows: no rows");
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  return weighted_nll(logits, targets, w, entry_mask, "cross_entropy_rows");
}

// ---------------------------------------------------------------- optimizer

AdamState::Moments& AdamState::moments_for(const Parameter& p) {
  for (auto& [key, mom] : moments_)
    if (key == &p) return mom;
  moments_.push_back({&p, Moments{DenseMatrix(p.value.rows(), p.value.cols()),
                                  DenseMatrix(p.value.rows(), p.value.cols())}});
  return moments_.back().second;
}

void adam_step(const std::vector<ParamPtr>& params, AdamState& state) {
  for (const auto& p : params) {
    if (!p) throw ValidationError("adam_step: null parameter");
    if (!p->has_grad)
      throw ValidationError("adam_step: parameter '" + p->name + "' has no gradient");
    if (!p->grad.same_shape(p->value))
      throw ShapeError("adam_step: gradient shape differs for '" + p->name + "'");
  }
  const AdamConfig& cfg = state.cfg_;
  ++state.step_;
  const auto t = static_cast<double>(state.step_);
  const kernels::AdamCoeffs coeffs{cfg.lr,           cfg.beta1,
                                   cfg.beta2,        cfg.eps,
                                   cfg.weight_decay, 1.0 - std::pow(cfg.beta1, t),
                                   1.0 - std::pow(cfg.beta2, t)};
  const auto& k = kernels::active();
  for (const auto& p : params) {
    if (cfg.kind == OptimizerKind::Sgd) {
      DenseMatrix g = p->grad;
      axpy_inplace(g, cfg.weight_decay, p->value);
      axpy_inplace(p->value, -cfg.lr, g);
    } else {
      auto& mom = state.moments_for(*p);
      k.adam_update(p->value.size(), p->value.data(), p->grad.data(), mom.m.data(), mom.v.data(),
                    coeffs);
    }
    p->zero_grad();
  }
}

json params_to_json(const std::vector<ParamPtr>& params) {
  json arr = json::array();
  for (const auto& p : params)
    arr.push_back({{"name", p->name},
                   {"rows", p->value.rows()},
                   {"cols", p->value.cols()},
                   {"data", p->value.values()}});
  return json{{"params", arr}};
}

void params_from_json(const json& j, const std::vector<ParamPtr>& params) {
  if (!j.is_object() || !j.contains("params") || !j.at("params").is_array())
    throw ValidationError("checkpoint: expected {\"params\": [...]}");
  for (const auto& p : params) {
    const json* found = nullptr;
    for (const auto& e : j.at("params"))
      if (e.value("name", std::string()) == p->name) found = &e;
    if (!found) throw ValidationError("checkpoint: missing parameter '" + p->name + "'");
    const auto rows = found->at("rows").get<std::size_t>();
    const auto cols = found->at("cols").get<std::size_t>();
    if (rows != p->value.rows() || cols != p->value.cols())
      throw ValidationError("checkpoint: shape mismatch for '" + p->name + "'");
    auto data = found->at("data").get<std::vector<double>>();
    p->value = DenseMatrix(rows, cols, std::move(data));
    p->zero_grad();
  }
}

}  // namespace gdaug
