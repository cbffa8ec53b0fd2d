#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "gdaug/contrastive.hpp"
#include "gdaug/error.hpp"
#include "gdaug/graph_io.hpp"
#include "gdaug/layers.hpp"
#include "oracles.hpp"

using namespace gdaug;

namespace {

double loss_of(const DenseMatrix& zi, const DenseMatrix& zj, double tau) {
  Tape t;
  return nt_xent_loss(t.constant(zi), t.constant(zj), tau).value()(0, 0);
}

GraphBatch small_set(std::size_t n, std::uint64_t seed) {
  SyntheticGraphSetParams p;
  p.num_graphs = n;
  p.min_nodes = 5;
  p.max_nodes = 9;
  p.seed = seed;
  return synthetic_graph_set(p);
}

DenseMatrix unit_rows(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  DenseMatrix m = oracle::random_matrix(r, c, rng);
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += m(i, j) * m(i, j);
    for (std::size_t j = 0; j < c; ++j) m(i, j) /= std::sqrt(s);
  }
  return m;
}

}  // namespace

TEST_SUITE("contrastive") {
  TEST_CASE("readout examples") {
    Tape t;
    const DenseMatrix x{{1, 2}, {3, 4}, {5, 9}};
    CHECK(readout_pool(t.constant(x), {0, 0, 0}).value() == DenseMatrix{{3, 5}});
    CHECK(readout_pool(t.constant(x), {0, 0, 0}, Readout::Sum).value() == DenseMatrix{{9, 15}});
    const DenseMatrix two{{1, 2}, {3, 4}};
    CHECK(readout_pool(t.constant(two), {0, 1}).value() == two);
    CHECK_THROWS_AS(readout_pool(t.constant(two), {0, 2}), ValidationError);
    CHECK_THROWS_AS(readout_pool(t.constant(two), {0, 0}, Readout::Mean, 2), ValidationError);
    CHECK(parse_readout(to_string(Readout::Sum)) == Readout::Sum);
  }

  TEST_CASE("readout matches groupby") {
    std::mt19937_64 rng(61);
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t groups = 1 + rep % 5, n = groups + rep;
      std::vector<std::size_t> a(n);
      for (std::size_t i = 0; i < n; ++i) a[i] = i < groups ? i : rng() % groups;
      const DenseMatrix x = oracle::random_matrix(n, 3, rng);
      Tape t;
      for (bool mean : {true, false}) {
        const DenseMatrix got = readout_pool(t.constant(x), a, mean ? Readout::Mean : Readout::Sum).value();
        CHECK(max_abs_diff(got, oracle::groupby(x, a, groups, mean)) <= 1e-12);
      }
    }
  }

  TEST_CASE("nt-xent closed form") {
    const DenseMatrix z{{1, 0, 0, 0}, {0, 1, 0, 0}};
    const double expect = -std::log(std::exp(2.0) / (std::exp(2.0) + 2.0));
    CHECK(std::abs(loss_of(z, z, 0.5) - expect) <= 1e-12);
  }

  TEST_CASE("nt-xent matches direct summation and is invariant") {
    std::mt19937_64 rng(62);
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t b = 2 + rep % 6, d = 1 + rep % 7;
      const DenseMatrix zi = oracle::random_matrix(b, d, rng), zj = oracle::random_matrix(b, d, rng);
      const double base = loss_of(zi, zj, 0.5);
      CHECK(std::abs(base - oracle::nt_xent(zi, zj, 0.5)) <= 1e-10);
      CHECK(std::abs(loss_of(scaled(zi, 10.0), scaled(zj, 10.0), 0.5) - base) <= 1e-10);
      std::vector<std::size_t> perm(b);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      DenseMatrix pi(b, d), pj(b, d);
      for (std::size_t r = 0; r < b; ++r)
        for (std::size_t c = 0; c < d; ++c) {
          pi(r, c) = zi(perm[r], c);
          pj(r, c) = zj(perm[r], c);
        }
      CHECK(std::abs(loss_of(pi, pj, 0.5) - base) <= 1e-10);
    }
  }

  TEST_CASE("nt-xent flat limit") {
    std::mt19937_64 rng(63);
    for (std::size_t b : {2, 5, 16}) {
      const double got = loss_of(unit_rows(b, 6, rng), unit_rows(b, 6, rng), 1e6);
      CHECK(std::abs(got - std::log(2.0 * static_cast<double>(b) - 1.0)) <= 1e-6);
    }
  }

  TEST_CASE("nt-xent decreases as a positive pair aligns") {
    // Only sim(z_i[0], z_j[0]) = cos(theta) changes with theta.
    auto at = [](double theta) {
      const DenseMatrix zi{{std::cos(theta), 0, 0, std::sin(theta)}, {0, 1, 0, 0}};
      const DenseMatrix zj{{1, 0, 0, 0}, {0, 0, 1, 0}};
      return loss_of(zi, zj, 0.5);
    };
    CHECK(at(0.2) < at(0.5));
    CHECK(at(0.5) < at(1.0));
    CHECK(at(1.0) < at(1.5));
  }

  TEST_CASE("nt-xent errors") {
    Tape t;
    CHECK_THROWS_AS(nt_xent_loss(t.constant(DenseMatrix{{1, 0}}), t.constant(DenseMatrix{{0, 1}}), 0.5),
                    ValidationError);
    CHECK_THROWS_AS(nt_xent_loss(t.constant(DenseMatrix{{1, 0}, {0, 1}}), t.constant(DenseMatrix{{1, 0}, {0, 1}}), 0.0),
                    ValidationError);
    CHECK_THROWS_AS(nt_xent_loss(t.constant(DenseMatrix{{1, 0}, {0, 0}}), t.constant(DenseMatrix{{1, 0}, {0, 1}}), 0.5),
                    ValidationError);
  }

  TEST_CASE("batching builds block operators") {
    const Graph a(2, {{0, 1}}, DenseMatrix{{1}, {2}});
    const Graph b(1, {}, DenseMatrix{{3}});
    const BatchedGraphs bg = batch_graphs({&a, &b}, 0.5);
    CHECK(bg.features == DenseMatrix{{1}, {2}, {3}});
    CHECK(bg.gin_op == DenseMatrix{{1.5, 1, 0}, {1, 1.5, 0}, {0, 0, 1.5}});
    CHECK(bg.assignment == std::vector<std::size_t>{0, 0, 1});
    CHECK(bg.num_graphs == 2);
  }

  TEST_CASE("both views bind the same encoder parameters") {
    const GraphBatch data = small_set(4, 1);
    ContrastiveConfig cfg;
    const GinEncoder enc = init_encoder(data.graphs[0].num_features(), cfg, 1);
    const ProjectionHead head = init_projection(cfg.hidden, cfg, 2);
    std::vector<const Graph*> ptrs;
    for (const auto& g : data.graphs) ptrs.push_back(&g);
    const BatchedGraphs va = batch_graphs(ptrs, 0.0);
    std::vector<Graph> dropped;
    for (const auto& g : data.graphs) dropped.push_back(edge_remove(g, 0.5, 3));
    std::vector<const Graph*> dptrs;
    for (const auto& g : dropped) dptrs.push_back(&g);
    const BatchedGraphs vb = batch_graphs(dptrs, 0.0);
    Tape t;
    contrastive_batch_loss(t, enc, head, va, vb, 0.5);
    const auto bound = t.bound_params();
    auto expected = enc.params();
    for (const auto& p : head.params()) expected.push_back(p);
    REQUIRE(bound.size() == expected.size());
    for (std::size_t i = 0; i < bound.size(); ++i) CHECK(bound[i].get() == expected[i].get());
  }

  TEST_CASE("end-to-end gradient through gin, readout, projection and nt-xent") {
    std::mt19937_64 rng(64);
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t na = 2 + rep % 4, nb = 3 + rep % 3, f = 2, h = 3;
      const Graph ga = oracle::to_graph(na, oracle::random_edges(na, 0.6, rng), DenseMatrix(na, f));
      const Graph gb = oracle::to_graph(nb, oracle::random_edges(nb, 0.6, rng), DenseMatrix(nb, f));
      const BatchedGraphs batch = batch_graphs({&ga, &gb}, 0.0);
      const BatchedGraphs other = batch_graphs({&gb, &ga}, 0.0);
      const std::size_t n = batch.features.rows();
      auto f_loss = [&](Tape& t, const std::vector<Variable>& v) {
        auto view = [&](const BatchedGraphs& bg, const Variable& x) {
          const Variable node = gin_layer_forward(x, t.constant(bg.gin_op), v[2], v[3]);
          const Variable g = readout_pool(node, bg.assignment);
          const Variable ones = t.constant(DenseMatrix(g.rows(), 1, 1.0));
          const Variable hid = activation(add(matmul(g, v[4]), matmul(ones, v[5])), Activation::relu());
          return add(matmul(hid, v[6]), matmul(ones, v[7]));
        };
        return nt_xent_loss(view(batch, v[0]), view(other, v[1]), 0.5);
      };
      const double err = oracle::max_grad_error(
          f_loss, {oracle::random_matrix(n, f, rng), oracle::random_matrix(n, f, rng), oracle::random_matrix(f, h, rng),
                   oracle::random_matrix(h, h, rng), oracle::random_matrix(h, h, rng),
                   oracle::random_matrix(1, h, rng, 0.1, 0.5), oracle::random_matrix(h, h, rng),
                   oracle::random_matrix(1, h, rng)});
      CHECK(err <= 1e-4);
    }
  }

  TEST_CASE("training is deterministic per seed") {
    const GraphBatch data = small_set(24, 2);
    ContrastiveConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    cfg.seed = 4;
    const auto a = train_contrastive(data, cfg), b = train_contrastive(data, cfg);
    CHECK(a.loss_trace == b.loss_trace);
    CHECK(a.loss_trace.size() == 3);
    CHECK(embed_graphs(a.encoder, data) == embed_graphs(b.encoder, data));
  }

  TEST_CASE("identity pool loss decreases over the first epochs") {
    const GraphBatch data = small_set(64, 3);
    ContrastiveConfig cfg;
    cfg.pool = {AugmenterSpec::identity(), AugmenterSpec::identity()};
    cfg.epochs = 10;
    cfg.seed = 1;
    const auto r = train_contrastive(data, cfg);
    int increases = 0;
    for (std::size_t e = 1; e < r.loss_trace.size(); ++e) increases += r.loss_trace[e] > r.loss_trace[e - 1] ? 1 : 0;
    CHECK(increases <= 2);
    CHECK(r.loss_trace.back() < r.loss_trace.front());
  }

  TEST_CASE("config validation and json") {
    ContrastiveConfig cfg;
    cfg.pool.clear();
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = ContrastiveConfig{};
    cfg.batch_size = 1;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = ContrastiveConfig{};
    cfg.temperature = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = ContrastiveConfig{};
    cfg.epochs = 7;
    cfg.pool = {AugmenterSpec::node_drop(0.1), AugmenterSpec::fana(0.3)};
    const ContrastiveConfig back = contrastive_config_from_json(to_json(cfg));
    CHECK(back.epochs == 7);
    CHECK(back.pool == cfg.pool);
    try {
      contrastive_config_from_json(nlohmann::json::parse(R"({"pool":[{"kind":"er","q":1}]})"));
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.key_path() == "contrastive.pool[0].q");
    }
  }

  TEST_CASE("linear evaluation examples") {
    std::vector<int> labels;
    for (int i = 0; i < 50; ++i) labels.push_back(i % 5 == 0 ? 1 : (i % 3 == 0 ? 2 : 0));
    DenseMatrix onehot(50, 3);
    for (std::size_t i = 0; i < 50; ++i) onehot(i, static_cast<std::size_t>(labels[i])) = 1.0;
    CHECK(linear_eval_f1(onehot, labels, 3) == 1.0);

    const DenseMatrix flat(50, 4, 0.7);
    const SplitMasks split = linear_eval_split(labels, 3);
    CHECK(linear_eval_f1(flat, labels, 3) ==
          doctest::Approx(oracle::majority_baseline_f1(labels, split.train, split.test)).epsilon(1e-12));

    std::mt19937_64 rng(65);
    const DenseMatrix noise = oracle::random_matrix(50, 4, rng);
    CHECK(linear_eval_f1(noise, labels, 8) == linear_eval_f1(noise, labels, 8));

    const std::vector<int> gap{0, 2, 0, 2, 0, 2};
    CHECK_THROWS_AS(linear_eval_f1(DenseMatrix(6, 2), gap, 0), ValidationError);
  }

  TEST_CASE("linear evaluation split is stratified 80/20") {
    std::vector<int> labels;
    for (int i = 0; i < 100; ++i) labels.push_back(i % 2);
    const SplitMasks s = linear_eval_split(labels, 0);
    int tr = 0, te = 0;
    for (std::size_t i = 0; i < 100; ++i) {
      tr += s.train[i] ? 1 : 0;
      te += s.test[i] ? 1 : 0;
      CHECK(!s.val[i]);
    }
    CHECK(tr == 80);
    CHECK(te == 20);
  }

  TEST_CASE("synthetic graph sets") {
    const GraphBatch d = small_set(10, 5);
    CHECK(d.size() == 10);
    CHECK(d.labels == std::vector<int>{0, 1, 0, 1, 0, 1, 0, 1, 0, 1});
    for (const auto& g : d.graphs) {
      CHECK(g.num_nodes() >= 5);
      CHECK(g.num_nodes() <= 9);
      for (std::size_t i = 0; i < g.num_nodes(); ++i) CHECK(g.features()(i, 0) == 1.0);
    }
    const GraphBatch again = small_set(10, 5);
    for (std::size_t i = 0; i < 10; ++i) CHECK(d.graphs[i] == again.graphs[i]);
    SyntheticGraphSetParams p;
    p.min_nodes = 10;
    p.max_nodes = 5;
    CHECK_THROWS_AS(synthetic_graph_set(p), ValidationError);
  }

  TEST_CASE("graph directories") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "gdaug_test_graphdir";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const GraphBatch d = small_set(3, 6);
    for (std::size_t i = 0; i < 3; ++i) save_graph(d.graphs[i], dir / ("g" + std::to_string(i) + ".json"), GraphFormat::GraphJson);
    std::ofstream(dir / "labels.json") << R"({"g0.json": 0, "g1.json": 1, "g2.json": 0})";
    const GraphBatch back = load_graph_directory(dir);
    REQUIRE(back.size() == 3);
    CHECK(back.labels == std::vector<int>{0, 1, 0});
    for (std::size_t i = 0; i < 3; ++i) CHECK(back.graphs[i] == d.graphs[i]);
    CHECK_THROWS_AS(load_graph_directory(dir / "missing"), IoError);
  }
}
