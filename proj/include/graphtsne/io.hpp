#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "graphtsne/graph.hpp"
#include "graphtsne/matrix.hpp"

namespace gtsne {

// Whitespace-separated integer pairs, one edge per line, '#' starts a comment.
Graph load_edge_list(const std::filesystem::path& path, std::size_t num_nodes);

// Headerless numeric CSV; dimensions inferred from the file.
FeatureMatrix load_features_csv(const std::filesystem::path& path);

// Headerless CSV with one integer class id per line.
std::vector<int> load_labels_csv(const std::filesystem::path& path);

// "node_id,x,y" with a header line, node ids ascending.
void write_layout_csv(const std::filesystem::path& path, const Embedding& y);

// Reads a layout written by write_layout_csv (header optional, rows in any
// order). Every node id in [0, num_nodes) must appear exactly once.
Embedding read_layout_csv(const std::filesystem::path& path, std::size_t num_nodes);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace gtsne
