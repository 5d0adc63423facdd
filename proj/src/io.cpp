#include "graphtsne/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include "graphtsne/error.hpp"

namespace gtsne {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

Graph load_edge_list(const std::filesystem::path& path, std::size_t num_nodes) {
  auto in = open_input(path);
  const std::string source = path.string();
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    std::istringstream fields{std::string(body)};
    std::string a_text, b_text, extra;
    if (!(fields >> a_text)) continue;  // blank or comment-only line
    if (!(fields >> b_text) || (fields >> extra))
      throw MalformedInput(source, line_no, "expected exactly two node ids");
    long long a = 0, b = 0;
    if (!parse_number(a_text, a) || !parse_number(b_text, b))
      throw MalformedInput(source, line_no, "node ids must be integers");
    if (a < 0 || b < 0 || static_cast<unsigned long long>(a) >= num_nodes ||
        static_cast<unsigned long long>(b) >= num_nodes)
      throw MalformedInput(source, line_no,
                           "node id out of range [0, " + std::to_string(num_nodes) + ")");
    edges.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
  }
  if (in.bad()) throw IoError("read error on " + source);
  Graph g(num_nodes, edges);
  if (g.self_loops_dropped() > 0 || g.duplicates_dropped() > 0)
    std::fprintf(stderr, "warning: %s: dropped %zu self-loop(s) and %zu duplicate edge(s)\n",
                 source.c_str(), g.self_loops_dropped(), g.duplicates_dropped());
  return g;
}

FeatureMatrix load_features_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  const std::string source = path.string();
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (rows == 0) cols = cells.size();
    if (cells.size() != cols)
      throw MalformedInput(source, line_no,
                           "row " + std::to_string(rows) + " has " + std::to_string(cells.size()) +
                               " columns, expected " + std::to_string(cols));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      if (!parse_number(cells[c], v) || !std::isfinite(v))
        throw MalformedInput(source, line_no,
                             "row " + std::to_string(rows) + ", column " + std::to_string(c) +
                                 ": not a finite number: '" + std::string(cells[c]) + "'");
      values.push_back(v);
    }
    ++rows;
  }
  if (in.bad()) throw IoError("read error on " + source);
  if (rows == 0) throw MalformedInput(source, 0, "no feature rows");
  FeatureMatrix x(rows, cols);
  std::copy(values.begin(), values.end(), x.data());
  return x;
}

std::vector<int> load_labels_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  const std::string source = path.string();
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    int v = 0;
    if (!parse_number(body, v) || v < 0)
      throw MalformedInput(source, line_no, "expected a nonnegative integer class id");
    labels.push_back(v);
  }
  return labels;
}

void write_layout_csv(const std::filesystem::path& path, const Embedding& y) {
  if (y.cols() != 2) throw ArgumentError("layout must have two columns");
  std::string out = "node_id,x,y\n";
  char buf[96];
  for (std::size_t i = 0; i < y.rows(); ++i) {
    const int len = std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, y(i, 0), y(i, 1));
    out.append(buf, static_cast<std::size_t>(len));
  }
  write_file_atomic(path, out);
}

Embedding read_layout_csv(const std::filesystem::path& path, std::size_t num_nodes) {
  auto in = open_input(path);
  const std::string source = path.string();
  Embedding y(num_nodes, 2);
  std::vector<bool> seen(num_nodes, false);
  std::size_t count = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (line_no == 1 && !cells.empty() && cells[0] == "node_id") continue;
    if (cells.size() != 3)
      throw MalformedInput(source, line_no, "expected 3 columns (node_id,x,y), got " +
                                                std::to_string(cells.size()));
    long long id = 0;
    double px = 0.0, py = 0.0;
    if (!parse_number(cells[0], id) || !parse_number(cells[1], px) || !parse_number(cells[2], py))
      throw MalformedInput(source, line_no, "non-numeric layout row");
    if (id < 0 || static_cast<unsigned long long>(id) >= num_nodes)
      throw MalformedInput(source, line_no, "node id " + std::to_string(id) + " out of range");
    if (seen[id]) throw MalformedInput(source, line_no, "duplicate node id " + std::to_string(id));
    seen[id] = true;
    y(id, 0) = px;
    y(id, 1) = py;
    ++count;
  }
  if (count != num_nodes)
    throw MalformedInput(source, line_no, "layout has " + std::to_string(count) +
                                              " rows, expected " + std::to_string(num_nodes));
  return y;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace gtsne
