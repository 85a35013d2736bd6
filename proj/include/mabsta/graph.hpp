#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace mabsta {

using TaskId = int;  // 0-based inside the library; 1-based in files and CLI.

struct Edge {
  TaskId from;
  TaskId to;
  friend bool operator==(const Edge&, const Edge&) = default;
};

enum class StructureKind { kTree, kSerialTrees, kParallelChainsOfTrees, kGeneralDag };

std::string to_string(StructureKind kind);

// One tree of a serial chain. `order` lists the block's tasks children-first
// and ends with `root` (unless the root is the graph root, see Chain).
struct TreeBlock {
  TaskId root = 0;
  std::vector<TaskId> order;
};

// Blocks ordered upstream to downstream. The root of block k feeds only into
// block k + 1; the last block's root is the graph root. The graph root itself
// never appears in any `order`: it is shared by all chains and resolved once,
// after the chains are combined.
struct Chain {
  std::vector<TreeBlock> blocks;
};

struct StructureClass {
  StructureKind kind = StructureKind::kGeneralDag;
  std::vector<Chain> chains;  // empty for kGeneralDag

  // Roots of the serial trees, upstream first; one list per chain.
  std::vector<std::vector<TaskId>> chain_roots() const;
};

// Directed acyclic task graph. Edges point from producer to consumer, so
// children of v are the tasks with an edge into v and the root is the sink.
class TaskGraph {
 public:
  // Validates on construction; throws Error (BadIndex, CyclicGraph,
  // DisconnectedFromRoot).
  TaskGraph(int n_tasks, std::vector<Edge> edges, TaskId root);

  // 1-based variant used by parsers.
  static TaskGraph from_one_based(int n_tasks, const std::vector<std::pair<int, int>>& edges,
                                  int root);

  static TaskGraph chain(int n_tasks);

  int n_tasks() const { return n_tasks_; }
  std::size_t n_edges() const { return edges_.size(); }
  TaskId root() const { return root_; }
  const std::vector<Edge>& edges() const { return edges_; }

  // Edge indices into / out of a task, in edge-list order.
  const std::vector<int>& in_edges(TaskId v) const { return in_[v]; }
  const std::vector<int>& out_edges(TaskId v) const { return out_[v]; }

  // Index of edge (from, to), or -1.
  int edge_index(TaskId from, TaskId to) const;

  const StructureClass& structure() const { return structure_; }

 private:
  int n_tasks_;
  std::vector<Edge> edges_;
  TaskId root_;
  std::vector<std::vector<int>> in_;
  std::vector<std::vector<int>> out_;
  StructureClass structure_;
};

// Most specific class satisfied by the graph.
StructureClass validate_and_classify(const TaskGraph& graph);

// Children-first order of a tree-shaped graph (reverse BFS from the root);
// throws NotATree otherwise.
std::vector<TaskId> child_resolution_order(const TaskGraph& graph);

}  // namespace mabsta
