#include "mabsta/graph.hpp"

#include <algorithm>
#include <queue>
#include <set>

#include "mabsta/error.hpp"

namespace mabsta {

std::string to_string(StructureKind kind) {
  switch (kind) {
    case StructureKind::kTree: return "Tree";
    case StructureKind::kSerialTrees: return "SerialTrees";
    case StructureKind::kParallelChainsOfTrees: return "ParallelChainsOfTrees";
    case StructureKind::kGeneralDag: return "GeneralDag";
  }
  return "Unknown";
}

std::vector<std::vector<TaskId>> StructureClass::chain_roots() const {
  std::vector<std::vector<TaskId>> out;
  out.reserve(chains.size());
  for (const auto& chain : chains) {
    auto& roots = out.emplace_back();
    for (const auto& block : chain.blocks) roots.push_back(block.root);
  }
  return out;
}

namespace {

// Peels one chain of serial trees ending at `root`, restricted to the tasks
// flagged in `member` (which must include the root). Returns false if the
// tasks do not form such a chain.
bool peel_chain(const TaskGraph& g, std::vector<char> member, Chain& out) {
  const TaskId graph_root = g.root();
  std::vector<TreeBlock> downstream_first;
  TaskId current = graph_root;

  while (true) {
    std::vector<char> in_block(g.n_tasks(), 0);
    std::vector<TaskId> visited{current};
    std::set<TaskId> separators;
    in_block[current] = 1;

    for (std::size_t head = 0; head < visited.size(); ++head) {
      const TaskId v = visited[head];
      std::vector<TaskId> children;
      for (int e : g.in_edges(v)) children.push_back(g.edges()[e].from);
      // Descending here yields ascending ties once the queue is reversed.
      std::sort(children.rbegin(), children.rend());
      for (TaskId u : children) {
        if (!member[u] || in_block[u]) continue;
        if (g.out_edges(u).size() == 1) {
          in_block[u] = 1;
          visited.push_back(u);
        } else {
          separators.insert(u);
        }
      }
    }

    TreeBlock block;
    block.root = current;
    for (auto it = visited.rbegin(); it != visited.rend(); ++it) {
      if (*it != graph_root) block.order.push_back(*it);
    }
    downstream_first.push_back(std::move(block));
    for (TaskId v : visited) member[v] = 0;

    if (separators.empty()) {
      if (std::find(member.begin(), member.end(), 1) != member.end()) return false;
      break;
    }
    if (separators.size() > 1) return false;
    const TaskId sep = *separators.begin();
    for (int e : g.out_edges(sep)) {
      if (!in_block[g.edges()[e].to]) return false;
    }
    current = sep;
  }

  out.blocks.assign(downstream_first.rbegin(), downstream_first.rend());
  return true;
}

}  // namespace

TaskGraph::TaskGraph(int n_tasks, std::vector<Edge> edges, TaskId root)
    : n_tasks_(n_tasks), edges_(std::move(edges)), root_(root) {
  if (n_tasks_ <= 0) throw Error(ErrorCode::kBadIndex, "n_tasks must be positive");
  if (root_ < 0 || root_ >= n_tasks_) throw Error(ErrorCode::kBadIndex, "root out of range");
  in_.assign(n_tasks_, {});
  out_.assign(n_tasks_, {});
  std::set<std::pair<TaskId, TaskId>> seen;
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto [m, n] = edges_[k];
    if (m < 0 || m >= n_tasks_ || n < 0 || n >= n_tasks_) {
      throw Error(ErrorCode::kBadIndex, "edge endpoint out of range");
    }
    if (m == n) throw Error(ErrorCode::kCyclicGraph, "self-loop on task " + std::to_string(m + 1));
    if (!seen.emplace(m, n).second) {
      throw Error(ErrorCode::kBadIndex, "duplicate edge (" + std::to_string(m + 1) + "," +
                                            std::to_string(n + 1) + ")");
    }
    out_[m].push_back(static_cast<int>(k));
    in_[n].push_back(static_cast<int>(k));
  }

  // Kahn's algorithm.
  std::vector<int> indegree(n_tasks_);
  for (int v = 0; v < n_tasks_; ++v) indegree[v] = static_cast<int>(in_[v].size());
  std::queue<TaskId> ready;
  for (int v = 0; v < n_tasks_; ++v)
    if (indegree[v] == 0) ready.push(v);
  int processed = 0;
  while (!ready.empty()) {
    const TaskId v = ready.front();
    ready.pop();
    ++processed;
    for (int e : out_[v])
      if (--indegree[edges_[e].to] == 0) ready.push(edges_[e].to);
  }
  if (processed != n_tasks_) throw Error(ErrorCode::kCyclicGraph, "task graph has a cycle");

  std::vector<char> reaches(n_tasks_, 0);
  std::vector<TaskId> stack{root_};
  reaches[root_] = 1;
  while (!stack.empty()) {
    const TaskId v = stack.back();
    stack.pop_back();
    for (int e : in_[v]) {
      const TaskId u = edges_[e].from;
      if (!reaches[u]) {
        reaches[u] = 1;
        stack.push_back(u);
      }
    }
  }
  for (int v = 0; v < n_tasks_; ++v) {
    if (!reaches[v]) {
      throw Error(ErrorCode::kDisconnectedFromRoot,
                  "task " + std::to_string(v + 1) + " has no path to the root");
    }
  }

  structure_ = validate_and_classify(*this);
}

TaskGraph TaskGraph::from_one_based(int n_tasks, const std::vector<std::pair<int, int>>& edges,
                                    int root) {
  std::vector<Edge> converted;
  converted.reserve(edges.size());
  for (const auto& [m, n] : edges) converted.push_back({m - 1, n - 1});
  return TaskGraph(n_tasks, std::move(converted), root - 1);
}

TaskGraph TaskGraph::chain(int n_tasks) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n_tasks; ++i) edges.push_back({i, i + 1});
  return TaskGraph(n_tasks, std::move(edges), n_tasks - 1);
}

int TaskGraph::edge_index(TaskId from, TaskId to) const {
  for (int e : out_[from])
    if (edges_[e].to == to) return e;
  return -1;
}

StructureClass validate_and_classify(const TaskGraph& graph) {
  StructureClass result;
  const int n = graph.n_tasks();
  const TaskId root = graph.root();

  Chain whole;
  if (peel_chain(graph, std::vector<char>(n, 1), whole)) {
    result.kind = whole.blocks.size() == 1 ? StructureKind::kTree : StructureKind::kSerialTrees;
    result.chains.push_back(std::move(whole));
    return result;
  }

  // Undirected components of the graph with the root removed; each must be a
  // chain of serial trees feeding the root.
  std::vector<int> component(n, -1);
  int n_components = 0;
  for (TaskId start = 0; start < n; ++start) {
    if (start == root || component[start] >= 0) continue;
    std::vector<TaskId> stack{start};
    component[start] = n_components;
    while (!stack.empty()) {
      const TaskId v = stack.back();
      stack.pop_back();
      auto visit = [&](TaskId u) {
        if (u != root && component[u] < 0) {
          component[u] = n_components;
          stack.push_back(u);
        }
      };
      for (int e : graph.in_edges(v)) visit(graph.edges()[e].from);
      for (int e : graph.out_edges(v)) visit(graph.edges()[e].to);
    }
    ++n_components;
  }
  if (n_components < 2) return result;

  for (int c = 0; c < n_components; ++c) {
    std::vector<char> member(n, 0);
    for (TaskId v = 0; v < n; ++v) member[v] = (v == root || component[v] == c);
    Chain chain;
    if (!peel_chain(graph, std::move(member), chain)) {
      result.chains.clear();
      return result;
    }
    result.chains.push_back(std::move(chain));
  }
  result.kind = StructureKind::kParallelChainsOfTrees;
  return result;
}

std::vector<TaskId> child_resolution_order(const TaskGraph& graph) {
  const auto& s = graph.structure();
  if (s.kind != StructureKind::kTree) {
    throw Error(ErrorCode::kNotATree, "graph is " + to_string(s.kind));
  }
  std::vector<TaskId> order = s.chains.front().blocks.front().order;
  order.push_back(graph.root());
  return order;
}

}  // namespace mabsta
