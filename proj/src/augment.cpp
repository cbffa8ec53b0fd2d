#include "gdaug/augment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "gdaug/error.hpp"
#include "gdaug/kernels.hpp"
#include "gdaug/rng.hpp"

namespace gdaug {

using nlohmann::json;

AugmenterSpec AugmenterSpec::identity() { return AugmenterSpec{}; }

AugmenterSpec AugmenterSpec::edge_remove(double p, std::uint64_t seed) {
  AugmenterSpec s;
  s.kind = AugKind::EdgeRemove;
  s.p = p;
  s.seed = seed;
  return s;
}

AugmenterSpec AugmenterSpec::feature_mask(double p, std::uint64_t seed) {
  AugmenterSpec s;
  s.kind = AugKind::FeatureMask;
  s.p = p;
  s.seed = seed;
  return s;
}

AugmenterSpec AugmenterSpec::node_drop(double p, std::uint64_t seed) {
  AugmenterSpec s;
  s.kind = AugKind::NodeDrop;
  s.p = p;
  s.seed = seed;
  return s;
}

AugmenterSpec AugmenterSpec::random_walk(double keep_ratio, std::uint64_t seed) {
  AugmenterSpec s;
  s.kind = AugKind::RandomWalkSample;
  s.keep_ratio = keep_ratio;
  s.seed = seed;
  return s;
}

AugmenterSpec AugmenterSpec::fdm(double alpha) {
  AugmenterSpec s;
  s.kind = AugKind::Fdm;
  s.alpha = alpha;
  return s;
}

AugmenterSpec AugmenterSpec::fana(double p, FanaMode mode, std::uint64_t seed) {
  AugmenterSpec s;
  s.kind = AugKind::Fana;
  s.p = p;
  s.mode = mode;
  s.seed = seed;
  return s;
}

void AugmenterSpec::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("augmenter: p must lie in [0, 1]");
  if (!(keep_ratio > 0.0 && keep_ratio <= 1.0))
    throw ValidationError("augmenter: keep_ratio must lie in (0, 1]");
  if (!std::isfinite(alpha)) throw ValidationError("augmenter: alpha must be finite");
}

bool AugmenterSpec::is_stochastic() const {
  switch (kind) {
    case AugKind::Identity:
    case AugKind::Fdm:
      return false;
    case AugKind::Fana:
      return mode == FanaMode::Stochastic;
    default:
      return true;
  }
}

std::string AugmenterSpec::label() const {
  switch (kind) {
    case AugKind::Identity: return "I";
    case AugKind::EdgeRemove: return "ER";
    case AugKind::FeatureMask: return "FM";
    case AugKind::NodeDrop: return "ND";
    case AugKind::RandomWalkSample: return "RWS";
    case AugKind::Fdm: return "FDM";
    case AugKind::Fana: return "FANA";
  }
  return "?";
}

std::string to_string(AugKind kind) {
  switch (kind) {
    case AugKind::Identity: return "identity";
    case AugKind::EdgeRemove: return "edge_remove";
    case AugKind::FeatureMask: return "feature_mask";
    case AugKind::NodeDrop: return "node_drop";
    case AugKind::RandomWalkSample: return "random_walk_sample";
    case AugKind::Fdm: return "fdm";
    case AugKind::Fana: return "fana";
  }
  return "?";
}

AugKind parse_aug_kind(const std::string& name) {
  std::string k = name;
  std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return std::tolower(c); });
  if (k == "identity" || k == "i") return AugKind::Identity;
  if (k == "edge_remove" || k == "er") return AugKind::EdgeRemove;
  if (k == "feature_mask" || k == "fm") return AugKind::FeatureMask;
  if (k == "node_drop" || k == "nd") return AugKind::NodeDrop;
  if (k == "random_walk_sample" || k == "rws") return AugKind::RandomWalkSample;
  if (k == "fdm") return AugKind::Fdm;
  if (k == "fana") return AugKind::Fana;
  throw ValidationError("unknown augmentation kind '" + name + "'");
}

std::string to_string(FanaMode mode) {
  return mode == FanaMode::Stochastic ? "stochastic" : "expected";
}

json to_json(const AugmenterSpec& s) {
  json j;
  j["kind"] = to_string(s.kind);
  switch (s.kind) {
    case AugKind::Identity:
      break;
    case AugKind::EdgeRemove:
      j["p"] = s.p;
      j["seed"] = s.seed;
      break;
    case AugKind::FeatureMask:
      j["p"] = s.p;
      j["per_entry"] = s.per_entry;
      j["seed"] = s.seed;
      break;
    case AugKind::NodeDrop:
      j["p"] = s.p;
      j["protect_splits"] = s.protect_splits;
      j["seed"] = s.seed;
      break;
    case AugKind::RandomWalkSample:
      j["keep_ratio"] = s.keep_ratio;
      j["seed"] = s.seed;
      break;
    case AugKind::Fdm:
      j["alpha"] = s.alpha;
      break;
    case AugKind::Fana:
      j["p"] = s.p;
      j["mode"] = to_string(s.mode);
      j["seed"] = s.seed;
      break;
  }
  return j;
}

namespace {

AugmenterSpec parse_augmenter(const json& j, std::string& bad_key) {
  if (!j.is_object()) throw ValidationError("augmenter: expected a JSON object");
  bad_key = "kind";
  if (!j.contains("kind") || !j.at("kind").is_string())
    throw ValidationError("augmenter: missing string field 'kind'");
  const AugKind kind = parse_aug_kind(j.at("kind").get<std::string>());

  std::set<std::string> allowed{"kind", "seed"};
  AugmenterSpec s;
  switch (kind) {
    case AugKind::Identity:
      s = AugmenterSpec::identity();
      break;
    case AugKind::EdgeRemove:
      s = AugmenterSpec::edge_remove();
      allowed.insert("p");
      break;
    case AugKind::FeatureMask:
      s = AugmenterSpec::feature_mask();
      allowed.insert({"p", "per_entry"});
      break;
    case AugKind::NodeDrop:
      s = AugmenterSpec::node_drop();
      allowed.insert({"p", "protect_splits"});
      break;
    case AugKind::RandomWalkSample:
      s = AugmenterSpec::random_walk();
      allowed.insert("keep_ratio");
      break;
    case AugKind::Fdm:
      s = AugmenterSpec::fdm();
      allowed = {"kind", "alpha"};
      break;
    case AugKind::Fana:
      s = AugmenterSpec::fana();
      allowed.insert({"p", "mode"});
      break;
  }
  for (const auto& [key, value] : j.items()) {
    bad_key = key;
    if (!allowed.count(key))
      throw ValidationError("augmenter: field '" + key + "' is not valid for kind '" +
                            to_string(kind) + "'");
    if (key == "kind") continue;
    if (key == "seed") {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 0)
        throw ValidationError("augmenter: 'seed' must be a nonnegative integer");
      s.seed = value.get<std::uint64_t>();
    } else if (key == "mode") {
      if (!value.is_string()) throw ValidationError("augmenter: 'mode' must be a string");
      const auto m = value.get<std::string>();
      if (m == "stochastic")
        s.mode = FanaMode::Stochastic;
      else if (m == "expected")
        s.mode = FanaMode::Expected;
      else
        throw ValidationError("augmenter: mode must be 'stochastic' or 'expected'");
    } else if (key == "per_entry" || key == "protect_splits") {
      if (!value.is_boolean()) throw ValidationError("augmenter: '" + key + "' must be a boolean");
      (key == "per_entry" ? s.per_entry : s.protect_splits) = value.get<bool>();
    } else {
      if (!value.is_number()) throw ValidationError("augmenter: '" + key + "' must be a number");
      const double x = value.get<double>();
      if (key == "p") s.p = x;
      if (key == "alpha") s.alpha = x;
      if (key == "keep_ratio") s.keep_ratio = x;
    }
  }
  bad_key.clear();
  s.validate();
  return s;
}

}  // namespace

AugmenterSpec augmenter_from_json(const json& j) {
  std::string bad_key;
  return parse_augmenter(j, bad_key);
}

AugmenterSpec augmenter_from_json(const json& j, const std::string& path) {
  std::string bad_key;
  try {
    return parse_augmenter(j, bad_key);
  } catch (const ValidationError& e) {
    throw ConfigError(bad_key.empty() ? path : path + "." + bad_key, e.what());
  }
}

FdmMultipliers fdm_multipliers(const Graph& g, double alpha) {
  FdmMultipliers out;
  out.degrees.resize(g.num_nodes());
  out.multipliers.resize(g.num_nodes());
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const double d = static_cast<double>(g.degree(static_cast<NodeId>(i)));
    out.degrees[i] = d;
    out.multipliers[i] = 1.0 / (1.0 + std::exp(-alpha * d));
  }
  return out;
}

Graph fdm(const Graph& g, double alpha) {
  if (!std::isfinite(alpha)) throw ValidationError("fdm: alpha must be finite");
  const FdmMultipliers fm = fdm_multipliers(g, alpha);
  const auto& k = kernels::active();
  DenseMatrix x = g.features();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    const double factor = fm.degrees[i] * fm.multipliers[i];
    k.scale(row.size(), factor, row.data(), row.data());
  }
  return g.with_features(std::move(x));
}

Graph fana(const Graph& g, double p, FanaMode mode, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("fana: p must lie in [0, 1]");
  if (p == 0.0) return g;
  const DenseMatrix& x = g.features();
  DenseMatrix ax = matmul(normalized_adjacency(g), x);
  if (p == 1.0) return g.with_features(std::move(ax));

  if (mode == FanaMode::Expected) {
    DenseMatrix out = scaled(x, 1.0 - p);
    axpy_inplace(out, p, ax);
    return g.with_features(std::move(out));
  }

  Rng rng(seed);
  DenseMatrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double r = rng.uniform_open_closed();
    if (r <= p) std::copy(ax.row(i).begin(), ax.row(i).end(), out.row(i).begin());
  }
  return g.with_features(std::move(out));
}

Graph edge_remove(const Graph& g, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("edge_remove: p must lie in [0, 1]");
  Rng rng(seed);
  std::vector<Edge> kept;
  kept.reserve(g.num_edges());
  for (const Edge& e : g.edges())
    if (!rng.bernoulli(p)) kept.push_back(e);
  return g.with_edges(std::move(kept));
}

Graph feature_mask(const Graph& g, double p, std::uint64_t seed, bool per_entry) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("feature_mask: p must lie in [0, 1]");
  Rng rng(seed);
  DenseMatrix x = g.features();
  if (per_entry) {
    for (std::size_t i = 0; i < x.size(); ++i)
      if (rng.bernoulli(p)) x.data()[i] = 0.0;
  } else {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (!rng.bernoulli(p)) continue;
      for (std::size_t r = 0; r < x.rows(); ++r) x(r, c) = 0.0;
    }
  }
  return g.with_features(std::move(x));
}

Graph drop_nodes(const Graph& g, const std::vector<bool>& keep) {
  if (keep.size() != g.num_nodes()) throw ValidationError("drop_nodes: keep vector length mismatch");
  DenseMatrix x = g.features();
  for (std::size_t i = 0; i < g.num_nodes(); ++i)
    if (!keep[i]) std::fill(x.row(i).begin(), x.row(i).end(), 0.0);
  std::vector<Edge> edges;
  for (const Edge& e : g.edges())
    if (keep[e.u] && keep[e.v]) edges.push_back(e);
  return Graph(g.num_nodes(), std::move(edges), std::move(x), g.labels(), g.masks());
}

Graph node_drop(const Graph& g, double p, std::uint64_t seed, bool protect_splits) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("node_drop: p must lie in [0, 1]");
  Rng rng(seed);
  std::vector<bool> keep(g.num_nodes(), true);
  const auto& masks = g.masks();
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const bool drop = rng.bernoulli(p);
    const bool protected_node =
        protect_splits && masks && (masks->train[i] || masks->val[i] || masks->test[i]);
    if (drop && !protected_node) keep[i] = false;
  }
  return drop_nodes(g, keep);
}

std::vector<bool> random_walk_visit(const Graph& g, double keep_ratio, std::uint64_t seed) {
  if (!(keep_ratio > 0.0 && keep_ratio <= 1.0))
    throw ValidationError("random_walk_sample: keep_ratio must lie in (0, 1]");
  if (g.num_edges() == 0)
    throw ValidationError("random_walk_sample: graph must have at least one edge");
  const std::size_t n = g.num_nodes();
  // Guard against 0.8 * 5 landing a hair above an integer.
  const auto target = static_cast<std::size_t>(std::ceil(keep_ratio * static_cast<double>(n) - 1e-9));
  const std::size_t max_steps = 10 * n;

  Rng rng(seed);
  std::vector<bool> visited(n, false);
  auto cur = static_cast<NodeId>(rng.below(n));
  visited[cur] = true;
  std::size_t count = 1;
  for (std::size_t step = 0; count < target && step < max_steps; ++step) {
    const auto& nbrs = g.neighbors(cur);
    if (nbrs.empty())
      cur = static_cast<NodeId>(rng.below(n));
    else
      cur = nbrs[rng.below(nbrs.size())];
    if (!visited[cur]) {
      visited[cur] = true;
      ++count;
    }
  }
  return visited;
}

Graph random_walk_sample(const Graph& g, double keep_ratio, std::uint64_t seed) {
  return drop_nodes(g, random_walk_visit(g, keep_ratio, seed));
}

Graph apply(const AugmenterSpec& spec, const Graph& g) { return apply(spec, g, spec.seed); }

Graph apply(const AugmenterSpec& spec, const Graph& g, std::uint64_t seed) {
  spec.validate();
  switch (spec.kind) {
    case AugKind::Identity: return g;
    case AugKind::EdgeRemove: return edge_remove(g, spec.p, seed);
    case AugKind::FeatureMask: return feature_mask(g, spec.p, seed, spec.per_entry);
    case AugKind::NodeDrop: return node_drop(g, spec.p, seed, spec.protect_splits);
    case AugKind::RandomWalkSample: return random_walk_sample(g, spec.keep_ratio, seed);
    case AugKind::Fdm: return fdm(g, spec.alpha);
    case AugKind::Fana: return fana(g, spec.p, spec.mode, seed);
  }
  throw ValidationError("apply: unhandled augmentation kind");
}

ViewPair sample_pair_from_pool(const std::vector<AugmenterSpec>& pool, const Graph& g,
                               std::uint64_t seed) {
  if (pool.empty()) throw ValidationError("sample_pair_from_pool: augmentation pool is empty");
  Rng rng(seed);
  const std::size_t a = rng.below(pool.size());
  const std::size_t b = rng.below(pool.size());
  const std::uint64_t seed_a = derive_seed(derive_seed(seed, 1), pool[a].seed);
  const std::uint64_t seed_b = derive_seed(derive_seed(seed, 2), pool[b].seed);
  return ViewPair{apply(pool[a], g, seed_a), apply(pool[b], g, seed_b), a, b};
}

std::uint64_t epoch_seed(std::uint64_t run_seed, std::uint64_t epoch) {
  return derive_seed(run_seed, 0xe90c0000ULL + epoch);
}

}  // namespace gdaug
