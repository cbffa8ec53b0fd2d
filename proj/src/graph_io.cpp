#include "gdaug/graph_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "gdaug/error.hpp"

namespace gdaug {

using nlohmann::json;

namespace {

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::int64_t as_int(const json& j, const std::string& field) {
  if (!j.is_number_integer())
    throw FormatError(field + ": expected an integer, got " + std::string(j.type_name()));
  return j.get<std::int64_t>();
}

double as_double(const json& j, const std::string& field) {
  if (!j.is_number()) throw FormatError(field + ": expected a number, got " + std::string(j.type_name()));
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw FormatError(field + ": non-finite value");
  return x;
}

std::optional<std::vector<bool>> read_mask(const json& obj, const char* key, std::size_t n) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  const json& arr = obj.at(key);
  if (!arr.is_array()) throw FormatError(std::string(key) + ": expected an array or null");
  if (arr.size() != n)
    throw ValidationError(std::string(key) + ": length " + std::to_string(arr.size()) +
                          " != num_nodes " + std::to_string(n));
  std::vector<bool> m(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!arr[i].is_boolean())
      throw FormatError(std::string(key) + "[" + std::to_string(i) + "]: expected a boolean");
    m[i] = arr[i].get<bool>();
  }
  return m;
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double_field(const std::string& tok, const std::string& context) {
  const std::string t = trim(tok);
  if (t.empty()) throw FormatError(context + ": empty field");
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(x))
    throw FormatError(context + ": cannot parse '" + t + "' as a finite number");
  return x;
}

Graph load_edge_list_csv(const std::filesystem::path& base, std::vector<std::string>& warnings) {
  std::filesystem::path edge_path = base, csv_path = base;
  edge_path += ".edges";
  csv_path += ".csv";

  const std::string csv_text = read_text_file(csv_path);
  std::istringstream csv(csv_text);
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(csv, line)) throw FormatError(csv_path.string() + ": missing header row");
  ++lineno;
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);
  const bool has_label = !header.empty() && header.back() == "label";
  const std::size_t n_feat = header.size() - (has_label ? 1 : 0);

  std::vector<double> feats;
  std::vector<int> labels;
  std::size_t n = 0;
  while (std::getline(csv, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    const std::string ctx = csv_path.string() + " line " + std::to_string(lineno);
    if (fields.size() != header.size())
      throw FormatError(ctx + ": expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    for (std::size_t f = 0; f < n_feat; ++f)
      feats.push_back(parse_double_field(fields[f], ctx + " field '" + header[f] + "'"));
    if (has_label) {
      const double l = parse_double_field(fields.back(), ctx + " field 'label'");
      if (l != std::floor(l) || l < 0)
        throw FormatError(ctx + ": label must be a nonnegative integer");
      labels.push_back(static_cast<int>(l));
    }
    ++n;
  }

  const std::string edge_text = read_text_file(edge_path);
  std::istringstream es(edge_text);
  std::vector<Edge> edges;
  std::set<std::pair<NodeId, NodeId>> seen;
  std::size_t reversed = 0;
  lineno = 0;
  while (std::getline(es, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream ls(t);
    long long u = -1, v = -1;
    std::string extra;
    if (!(ls >> u >> v) || (ls >> extra))
      throw FormatError(edge_path.string() + " line " + std::to_string(lineno) +
                        ": expected two integer node ids");
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n)
      throw ValidationError(edge_path.string() + " line " + std::to_string(lineno) + ": edge (" +
                            std::to_string(u) + ", " + std::to_string(v) +
                            ") references a node outside [0, " + std::to_string(n) + ")");
    const auto a = static_cast<NodeId>(u), b = static_cast<NodeId>(v);
    if (seen.count({b, a}) && a != b) ++reversed;
    seen.insert({a, b});
    edges.push_back(Edge{a, b});
  }
  if (reversed > 0)
    warnings.push_back("symmetrized " + std::to_string(reversed) +
                       " directed edge pairs into undirected edges");

  std::optional<std::vector<int>> lab;
  if (has_label) lab = std::move(labels);
  return Graph(n, std::move(edges), DenseMatrix(n, n_feat, std::move(feats)), std::move(lab));
}

}  // namespace

GraphFormat parse_graph_format(const std::string& name) {
  if (name == "graph-json" || name == "json") return GraphFormat::GraphJson;
  if (name == "edge-list+csv" || name == "edgelist") return GraphFormat::EdgeListCsv;
  throw ValidationError("unknown graph format '" + name + "' (expected graph-json or edge-list+csv)");
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

json graph_to_json(const Graph& g) {
  json j;
  j["num_nodes"] = g.num_nodes();
  json edges = json::array();
  for (const Edge& e : g.edges()) edges.push_back({e.u, e.v});
  j["edges"] = std::move(edges);
  json feats = json::array();
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    json row = json::array();
    for (double x : g.features().row(i)) row.push_back(x);
    feats.push_back(std::move(row));
  }
  j["features"] = std::move(feats);
  j["labels"] = g.labels() ? json(*g.labels()) : json(nullptr);
  if (g.masks()) {
    j["train_mask"] = g.masks()->train;
    j["val_mask"] = g.masks()->val;
    j["test_mask"] = g.masks()->test;
  } else {
    j["train_mask"] = nullptr;
    j["val_mask"] = nullptr;
    j["test_mask"] = nullptr;
  }
  return j;
}

Graph graph_from_json(const json& j, std::vector<std::string>* warnings) {
  if (!j.is_object()) throw FormatError("graph-json: top level must be an object");
  static const std::set<std::string> known{"num_nodes", "edges",    "features", "labels",
                                           "train_mask", "val_mask", "test_mask"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw FormatError("graph-json: unknown field '" + key + "'");
  if (!j.contains("num_nodes")) throw FormatError("graph-json: missing field 'num_nodes'");
  const std::int64_t n_signed = as_int(j.at("num_nodes"), "num_nodes");
  if (n_signed < 0) throw ValidationError("num_nodes: must be nonnegative");
  const auto n = static_cast<std::size_t>(n_signed);

  std::vector<Edge> edges;
  std::size_t reversed = 0;
  if (j.contains("edges")) {
    const json& arr = j.at("edges");
    if (!arr.is_array()) throw FormatError("edges: expected an array");
    std::set<std::pair<std::int64_t, std::int64_t>> seen;
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const std::string ctx = "edges[" + std::to_string(k) + "]";
      if (!arr[k].is_array() || arr[k].size() != 2) throw FormatError(ctx + ": expected [u, v]");
      const std::int64_t u = as_int(arr[k][0], ctx + "[0]");
      const std::int64_t v = as_int(arr[k][1], ctx + "[1]");
      if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n)
        throw ValidationError(ctx + ": edge (" + std::to_string(u) + ", " + std::to_string(v) +
                              ") references a node outside [0, " + std::to_string(n) + ")");
      if (u != v && seen.count({v, u})) ++reversed;
      seen.insert({u, v});
      edges.push_back(Edge{static_cast<NodeId>(u), static_cast<NodeId>(v)});
    }
  }
  if (reversed > 0 && warnings)
    warnings->push_back("symmetrized " + std::to_string(reversed) +
                        " directed edge pairs into undirected edges");

  if (!j.contains("features")) throw FormatError("graph-json: missing field 'features'");
  const json& fj = j.at("features");
  if (!fj.is_array()) throw FormatError("features: expected an array of rows");
  const std::size_t rows = fj.size();
  const std::size_t cols = rows == 0 ? 0 : (fj[0].is_array() ? fj[0].size() : 0);
  std::vector<double> data;
  data.reserve(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const std::string ctx = "features[" + std::to_string(i) + "]";
    if (!fj[i].is_array()) throw FormatError(ctx + ": expected an array");
    if (fj[i].size() != cols)
      throw FormatError(ctx + ": row has " + std::to_string(fj[i].size()) + " entries, expected " +
                        std::to_string(cols));
    for (std::size_t c = 0; c < cols; ++c)
      data.push_back(as_double(fj[i][c], ctx + "[" + std::to_string(c) + "]"));
  }
  if (rows != n)
    throw ValidationError("features: " + std::to_string(rows) + " rows but num_nodes is " +
                          std::to_string(n));
  DenseMatrix x(rows, cols, std::move(data));

  std::optional<std::vector<int>> labels;
  if (j.contains("labels") && !j.at("labels").is_null()) {
    const json& lj = j.at("labels");
    if (!lj.is_array()) throw FormatError("labels: expected an array or null");
    std::vector<int> l;
    for (std::size_t i = 0; i < lj.size(); ++i)
      l.push_back(static_cast<int>(as_int(lj[i], "labels[" + std::to_string(i) + "]")));
    labels = std::move(l);
  }

  auto train = read_mask(j, "train_mask", n);
  auto val = read_mask(j, "val_mask", n);
  auto test = read_mask(j, "test_mask", n);
  std::optional<SplitMasks> masks;
  if (train || val || test) {
    if (!(train && val && test))
      throw ValidationError("graph-json: train_mask, val_mask and test_mask must be given together");
    masks = SplitMasks{std::move(*train), std::move(*val), std::move(*test)};
  }
  return Graph(n, std::move(edges), std::move(x), std::move(labels), std::move(masks));
}

Graph load_graph(const std::filesystem::path& path, GraphFormat format, LoadReport* report) {
  std::vector<std::string> warnings;
  Graph g;
  if (format == GraphFormat::GraphJson) {
    const std::string text = read_text_file(path);
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw FormatError(path.string() + ": " + line_col(text, e.byte == 0 ? 0 : e.byte - 1) + ": " +
                        e.what());
    }
    g = graph_from_json(j, &warnings);
  } else {
    g = load_edge_list_csv(path, warnings);
  }
  if (report) {
    report->stats = dataset_stats(g);
    report->warnings = std::move(warnings);
  }
  return g;
}

void save_graph(const Graph& g, const std::filesystem::path& path, GraphFormat format) {
  if (format == GraphFormat::GraphJson) {
    write_text_file(path, graph_to_json(g).dump() + "\n");
    return;
  }
  std::filesystem::path edge_path = path, csv_path = path;
  edge_path += ".edges";
  csv_path += ".csv";
  std::string edges;
  for (const Edge& e : g.edges()) edges += std::to_string(e.u) + " " + std::to_string(e.v) + "\n";
  write_text_file(edge_path, edges);

  std::string csv;
  for (std::size_t f = 0; f < g.num_features(); ++f) {
    if (f) csv += ",";
    csv += "f" + std::to_string(f);
  }
  if (g.labels()) csv += g.num_features() ? ",label" : "label";
  csv += "\n";
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const auto row = g.features().row(i);
    for (std::size_t f = 0; f < row.size(); ++f) {
      if (f) csv += ",";
      csv += format_double(row[f]);
    }
    if (g.labels()) csv += (row.empty() ? "" : ",") + std::to_string((*g.labels())[i]);
    csv += "\n";
  }
  write_text_file(csv_path, csv);
}

}  // namespace gdaug
