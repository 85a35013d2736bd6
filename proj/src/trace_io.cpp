#include "mabsta/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mabsta/error.hpp"

namespace mabsta {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw Error(ErrorCode::kIoError, "malformed number '" + text + "'");
  }
  return v;
}

std::string table_csv_header(const TaskGraph& graph, int n_devices) {
  std::string h = "t";
  for (int i = 0; i < graph.n_tasks(); ++i)
    for (int j = 0; j < n_devices; ++j)
      h += ",node:" + std::to_string(i + 1) + ":" + std::to_string(j + 1);
  for (const Edge& e : graph.edges())
    for (int j = 0; j < n_devices; ++j)
      for (int k = 0; k < n_devices; ++k)
        h += ",edge:" + std::to_string(e.from + 1) + "-" + std::to_string(e.to + 1) + ":" +
             std::to_string(j + 1) + "-" + std::to_string(k + 1);
  return h;
}

void write_tables_csv(std::ostream& out, const TaskGraph& graph, int n_devices,
                      const std::vector<NodeEdgeTable>& rows, int first_t) {
  out << table_csv_header(graph, n_devices) << '\n';
  int t = first_t;
  for (const auto& row : rows) {
    if (row.n_tasks() != graph.n_tasks() || row.n_edges() != graph.n_edges() ||
        row.n_devices() != n_devices) {
      throw Error(ErrorCode::kDimensionMismatch, "table does not match graph/devices");
    }
    std::string line = std::to_string(t++);
    for (double v : row.node_values()) (line += ',') += format_double(v);
    for (double v : row.edge_values()) (line += ',') += format_double(v);
    out << line << '\n';
  }
}

void write_tables_csv(const std::string& path, const TaskGraph& graph, int n_devices,
                      const std::vector<NodeEdgeTable>& rows, int first_t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open '" + path + "' for writing");
  write_tables_csv(out, graph, n_devices, rows, first_t);
  if (!out) throw Error(ErrorCode::kIoError, "write failed for '" + path + "'");
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) parts.push_back(cur);
  if (!line.empty() && line.back() == sep) parts.emplace_back();
  return parts;
}

int parse_int(const std::string& s, int min_value) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || v < min_value) {
    throw Error(ErrorCode::kIoError, "bad integer field '" + s + "'");
  }
  return v;
}

int parse_index(const std::string& s) { return parse_int(s, 1); }

}  // namespace

TableFile read_tables_csv(std::istream& in) {
  TableFile file;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kIoError, "empty table file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto cols = split(line, ',');
  if (cols.empty() || cols[0] != "t") throw Error(ErrorCode::kIoError, "header must start with t");

  for (std::size_t c = 1; c < cols.size(); ++c) {
    const auto parts = split(cols[c], ':');
    if (parts.size() != 3) throw Error(ErrorCode::kIoError, "bad column '" + cols[c] + "'");
    if (parts[0] == "node") {
      file.n_tasks = std::max(file.n_tasks, parse_index(parts[1]));
      file.n_devices = std::max(file.n_devices, parse_index(parts[2]));
    } else if (parts[0] == "edge") {
      const auto ends = split(parts[1], '-');
      const auto devs = split(parts[2], '-');
      if (ends.size() != 2 || devs.size() != 2) {
        throw Error(ErrorCode::kIoError, "bad edge column '" + cols[c] + "'");
      }
      const std::pair<int, int> e{parse_index(ends[0]), parse_index(ends[1])};
      if (file.edges.empty() || file.edges.back() != e) file.edges.push_back(e);
    } else {
      throw Error(ErrorCode::kIoError, "unknown column kind '" + parts[0] + "'");
    }
  }

  const std::size_t m = static_cast<std::size_t>(file.n_devices);
  const std::size_t expected = 1 + file.n_tasks * m + file.edges.size() * m * m;
  if (cols.size() != expected) throw Error(ErrorCode::kIoError, "header column count mismatch");

  // Header text must match the canonical layout exactly.
  {
    std::string h = "t";
    for (int i = 1; i <= file.n_tasks; ++i)
      for (int j = 1; j <= file.n_devices; ++j)
        h += ",node:" + std::to_string(i) + ":" + std::to_string(j);
    for (const auto& [a, b] : file.edges)
      for (int j = 1; j <= file.n_devices; ++j)
        for (int k = 1; k <= file.n_devices; ++k)
          h += ",edge:" + std::to_string(a) + "-" + std::to_string(b) + ":" + std::to_string(j) +
               "-" + std::to_string(k);
    if (h != line) throw Error(ErrorCode::kIoError, "header columns out of canonical order");
  }

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != expected) throw Error(ErrorCode::kIoError, "row has wrong field count");
    file.t.push_back(parse_int(fields[0], 0));
    NodeEdgeTable row(file.n_tasks, file.edges.size(), file.n_devices);
    std::size_t f = 1;
    for (double& v : row.node_values()) v = parse_double(fields[f++]);
    for (double& v : row.edge_values()) v = parse_double(fields[f++]);
    file.rows.push_back(std::move(row));
  }
  return file;
}

TableFile read_tables_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  return read_tables_csv(in);
}

std::vector<FrameRewards> read_trace(const std::string& path, const TaskGraph& graph,
                                     int* n_devices) {
  TableFile file = read_tables_csv(path);
  if (file.n_tasks != graph.n_tasks() || file.edges.size() != graph.n_edges()) {
    throw Error(ErrorCode::kDimensionMismatch, "trace does not match the task graph");
  }
  for (std::size_t e = 0; e < graph.n_edges(); ++e) {
    const Edge& edge = graph.edges()[e];
    if (file.edges[e] != std::pair<int, int>{edge.from + 1, edge.to + 1}) {
      throw Error(ErrorCode::kDimensionMismatch, "trace edge order differs from the graph");
    }
  }
  for (std::size_t r = 0; r < file.rows.size(); ++r) {
    if (file.t[r] != static_cast<int>(r) + 1) {
      throw Error(ErrorCode::kIoError, "trace frames must be numbered 1, 2, ...");
    }
    for (double v : file.rows[r].node_values())
      if (v < 0.0 || v > 1.0) throw Error(ErrorCode::kRewardOutOfRange, "trace reward outside [0,1]");
    for (double v : file.rows[r].edge_values())
      if (v < 0.0 || v > 1.0) throw Error(ErrorCode::kRewardOutOfRange, "trace reward outside [0,1]");
  }
  if (n_devices) *n_devices = file.n_devices;
  return std::move(file.rows);
}

}  // namespace mabsta
