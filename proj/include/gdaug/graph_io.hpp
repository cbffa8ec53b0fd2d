#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gdaug/graph.hpp"

namespace gdaug {

enum class GraphFormat {
  /// Single JSON object: num_nodes, edges, features, labels, *_mask.
  GraphJson,
  /// `<base>.edges` (whitespace-separated "u v" per line, '#' comments) plus
  /// `<base>.csv` (header row, one feature row per node, optional final
  /// "label" column). The path argument is `<base>`.
  EdgeListCsv,
};

GraphFormat parse_graph_format(const std::string& name);

struct LoadReport {
  DatasetStats stats;
  std::vector<std::string> warnings;
};

/// Throws FormatError (with line or field context) on malformed input and
/// ValidationError when the parsed graph violates Graph invariants.
Graph load_graph(const std::filesystem::path& path, GraphFormat format,
                 LoadReport* report = nullptr);

/// Writes with '\n' line endings and round-trip float precision. Throws IoError.
void save_graph(const Graph& g, const std::filesystem::path& path, GraphFormat format);

nlohmann::json graph_to_json(const Graph& g);
/// `warnings` receives notices such as collapsed reverse-direction edges.
Graph graph_from_json(const nlohmann::json& j, std::vector<std::string>* warnings = nullptr);

/// Reads a whole file; throws IoError.
std::string read_text_file(const std::filesystem::path& path);
/// Writes a whole file in binary mode; throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace gdaug
