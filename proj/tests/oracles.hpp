#pragma once

// Reference computations for the tests. Each one works from raw inputs
// (edge lists, plain loops) and shares no code with the library beyond the
// DenseMatrix container.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "gdaug/graph.hpp"
#include "gdaug/tensor.hpp"

namespace oracle {

using gdaug::DenseMatrix;

using EdgeList = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

/// Random simple graph given as an edge list (no self-loops, no duplicates).
inline EdgeList random_edges(std::size_t n, double p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EdgeList e;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j)
      if (u(rng) < p) e.push_back({i, j});
  return e;
}

inline DenseMatrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0,
                                 double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  DenseMatrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

inline gdaug::Graph to_graph(std::size_t n, const EdgeList& e, DenseMatrix x) {
  std::vector<gdaug::Edge> edges;
  for (auto [a, b] : e) edges.push_back(gdaug::Edge::make(a, b));
  return gdaug::Graph(n, std::move(edges), std::move(x));
}

inline std::vector<double> degrees(std::size_t n, const EdgeList& e) {
  std::vector<double> d(n, 0.0);
  for (auto [a, b] : e) {
    d[a] += 1.0;
    d[b] += 1.0;
  }
  return d;
}

/// x'_ij = x_ij * d_i * sigmoid(alpha * d_i), entry by entry.
inline DenseMatrix fdm(std::size_t n, const EdgeList& e, const DenseMatrix& x, double alpha) {
  const auto d = degrees(n, e);
  DenseMatrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double m = 1.0 / (1.0 + std::exp(-alpha * d[i]));
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(i, j) * d[i] * m;
  }
  return out;
}

inline DenseMatrix naive_matmul(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

/// D^{-1/2} (A + I) D^{-1/2} as an explicit triple matrix product.
inline DenseMatrix normalized_adjacency(std::size_t n, const EdgeList& e) {
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
  for (auto [u, v] : e) {
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  DenseMatrix dinv(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += a(i, j);
    dinv(i, i) = 1.0 / std::sqrt(s);
  }
  return naive_matmul(naive_matmul(dinv, a), dinv);
}

/// p * A~X + (1 - p) * X.
inline DenseMatrix fana_expected(std::size_t n, const EdgeList& e, const DenseMatrix& x, double p) {
  const DenseMatrix ax = naive_matmul(normalized_adjacency(n, e), x);
  DenseMatrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = p * ax.data()[i] + (1.0 - p) * x.data()[i];
  return out;
}

/// |analytic - numeric| / max(1, |analytic|).
inline double grad_rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
}

/// Builds a scalar from differentiable leaves. Called once per evaluation on a fresh tape.
using ScalarFn = std::function<gdaug::Variable(gdaug::Tape&, const std::vector<gdaug::Variable>&)>;

/// Worst grad_rel_err over every input entry, comparing tape gradients with
/// central differences of step eps.
inline double max_grad_error(const ScalarFn& f, std::vector<DenseMatrix> inputs, double eps = 1e-5) {
  std::vector<DenseMatrix> analytic;
  {
    gdaug::Tape tape;
    std::vector<gdaug::Variable> leaves;
    for (const auto& x : inputs) leaves.push_back(tape.leaf(x));
    const gdaug::Variable out = f(tape, leaves);
    tape.backward(out);
    for (const auto& l : leaves) analytic.push_back(*l.grad());
  }
  auto eval = [&](const std::vector<DenseMatrix>& xs) {
    gdaug::Tape tape;
    std::vector<gdaug::Variable> leaves;
    for (const auto& x : xs) leaves.push_back(tape.leaf(x));
    return f(tape, leaves).value()(0, 0);
  };
  double worst = 0.0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    for (std::size_t k = 0; k < inputs[t].size(); ++k) {
      const double orig = inputs[t].data()[k];
      inputs[t].data()[k] = orig + eps;
      const double up = eval(inputs);
      inputs[t].data()[k] = orig - eps;
      const double down = eval(inputs);
      inputs[t].data()[k] = orig;
      worst = std::max(worst, grad_rel_err(analytic[t].data()[k], (up - down) / (2.0 * eps)));
    }
  }
  return worst;
}

/// Random scalar projection sum(W .* X) so that every output entry matters.
inline gdaug::Variable project_to_scalar(gdaug::Tape& tape, const gdaug::Variable& x, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return gdaug::sum_all(gdaug::hadamard(x, tape.constant(random_matrix(x.rows(), x.cols(), rng))));
}

inline std::pair<double, double> two_pass_mean_std(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

/// Macro-F1 from a confusion matrix over classes present in truth or prediction.
inline double macro_f1(const std::vector<int>& truth, const std::vector<int>& pred) {
  std::map<std::pair<int, int>, int> confusion;
  std::set<int> classes;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++confusion[{truth[i], pred[i]}];
    classes.insert(truth[i]);
    classes.insert(pred[i]);
  }
  double total = 0.0;
  for (int c : classes) {
    double tp = confusion[{c, c}], fp = 0, fn = 0;
    for (int o : classes) {
      if (o == c) continue;
      fp += confusion[{o, c}];
      fn += confusion[{c, o}];
    }
    total += (2 * tp + fp + fn) > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
  }
  return total / static_cast<double>(classes.size());
}

/// Argmax with ties to the lowest index.
inline std::vector<int> argmax_rows(const DenseMatrix& m) {
  std::vector<int> out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    int best = 0;
    for (std::size_t j = 1; j < m.cols(); ++j)
      if (m(i, j) > m(i, static_cast<std::size_t>(best))) best = static_cast<int>(j);
    out.push_back(best);
  }
  return out;
}

/// Test macro-F1 of predicting the most frequent training class (ties to the lowest).
inline double majority_baseline_f1(const std::vector<int>& labels, const std::vector<bool>& train,
                                   const std::vector<bool>& test) {
  std::map<int, int> counts;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (train[i]) ++counts[labels[i]];
  int majority = counts.begin()->first, best = -1;
  for (auto [c, k] : counts)
    if (k > best) {
      best = k;
      majority = c;
    }
  std::vector<int> truth, pred;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (test[i]) {
      truth.push_back(labels[i]);
      pred.push_back(majority);
    }
  return macro_f1(truth, pred);
}

/// NT-Xent by direct summation over anchors.
inline double nt_xent(const DenseMatrix& zi, const DenseMatrix& zj, double tau) {
  const std::size_t b = zi.rows(), d = zi.cols();
  std::vector<std::vector<double>> z;
  for (const DenseMatrix* m : {&zi, &zj})
    for (std::size_t r = 0; r < b; ++r) {
      double norm = 0.0;
      for (std::size_t c = 0; c < d; ++c) norm += (*m)(r, c) * (*m)(r, c);
      norm = std::sqrt(norm);
      std::vector<double> row(d);
      for (std::size_t c = 0; c < d; ++c) row[c] = (*m)(r, c) / norm;
      z.push_back(row);
    }
  auto sim = [&](std::size_t a, std::size_t c) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += z[a][k] * z[c][k];
    return s / tau;
  };
  double loss = 0.0;
  for (std::size_t a = 0; a < 2 * b; ++a) {
    const std::size_t pos = a < b ? a + b : a - b;
    double denom = 0.0;
    for (std::size_t c = 0; c < 2 * b; ++c)
      if (c != a) denom += std::exp(sim(a, c));
    loss += -(sim(a, pos) - std::log(denom));
  }
  return loss / static_cast<double>(2 * b);
}

/// Per-group mean or sum of rows.
inline DenseMatrix groupby(const DenseMatrix& x, const std::vector<std::size_t>& group, std::size_t groups,
                           bool mean) {
  DenseMatrix out(groups, x.cols());
  std::vector<double> count(groups, 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    count[group[i]] += 1.0;
    for (std::size_t j = 0; j < x.cols(); ++j) out(group[i], j) += x(i, j);
  }
  if (mean)
    for (std::size_t g = 0; g < groups; ++g)
      for (std::size_t j = 0; j < x.cols(); ++j) out(g, j) /= count[g];
  return out;
}

}  // namespace oracle
