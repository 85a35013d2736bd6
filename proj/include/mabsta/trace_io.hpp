#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mabsta/graph.hpp"
#include "mabsta/types.hpp"

namespace mabsta {

// CSV layout shared by trace files and estimate snapshots:
//
//   t,node:<i>:<j>,...,edge:<m>-<n>:<j>-<k>,...
//
// Indices are 1-based. Node columns run task-major then device; edge
// columns follow the graph's edge order, then source device, then target
// device. Values are written in shortest round-trip form, so reading a file
// back reproduces the doubles bit for bit.

std::string table_csv_header(const TaskGraph& graph, int n_devices);

// Shortest decimal that parses back to exactly `v`.
std::string format_double(double v);
double parse_double(const std::string& text);

struct TableFile {
  int n_tasks = 0;
  int n_devices = 0;
  std::vector<std::pair<int, int>> edges;  // 1-based, in column order
  std::vector<int> t;
  std::vector<NodeEdgeTable> rows;
};

void write_tables_csv(std::ostream& out, const TaskGraph& graph, int n_devices,
                      const std::vector<NodeEdgeTable>& rows, int first_t = 1);
void write_tables_csv(const std::string& path, const TaskGraph& graph, int n_devices,
                      const std::vector<NodeEdgeTable>& rows, int first_t = 1);

// Throws IoError on unreadable files or malformed content.
TableFile read_tables_csv(std::istream& in);
TableFile read_tables_csv(const std::string& path);

// Reads a trace and checks it against `graph`; returns the frames in order.
std::vector<FrameRewards> read_trace(const std::string& path, const TaskGraph& graph,
                                     int* n_devices = nullptr);

}  // namespace mabsta
