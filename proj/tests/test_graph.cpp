#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "mabsta/error.hpp"
#include "mabsta/graph.hpp"
#include "mabsta/rng.hpp"

using namespace mabsta;

namespace {

TaskGraph fig2() {
  return TaskGraph::from_one_based(6, {{1, 4}, {2, 4}, {3, 5}, {4, 6}, {5, 6}}, 6);
}

// Six-task tree, then a second tree whose two leaves both read from task 6.
TaskGraph two_serial_trees() {
  return TaskGraph::from_one_based(
      9, {{1, 4}, {2, 4}, {3, 5}, {4, 6}, {5, 6}, {6, 7}, {6, 8}, {7, 9}, {8, 9}}, 9);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kIoError;
}

std::vector<int> positions(const std::vector<TaskId>& order, int n) {
  std::vector<int> pos(n, -1);
  for (std::size_t k = 0; k < order.size(); ++k) pos[order[k]] = static_cast<int>(k);
  return pos;
}

}  // namespace

TEST_CASE("chain is a tree") {
  const TaskGraph g = TaskGraph::chain(3);
  CHECK(g.structure().kind == StructureKind::kTree);
  CHECK(child_resolution_order(g) == std::vector<TaskId>{0, 1, 2});
}

TEST_CASE("six-task tree classification and order") {
  const TaskGraph g = fig2();
  CHECK(g.structure().kind == StructureKind::kTree);
  const auto order = child_resolution_order(g);
  REQUIRE(order.size() == 6);
  CHECK(order.back() == 5);
  const auto pos = positions(order, 6);
  CHECK(pos[3] > pos[0]);
  CHECK(pos[3] > pos[1]);
  for (const Edge& e : g.edges()) CHECK(pos[e.from] < pos[e.to]);
}

TEST_CASE("single node") {
  const TaskGraph g(1, {}, 0);
  CHECK(g.structure().kind == StructureKind::kTree);
  CHECK(child_resolution_order(g) == std::vector<TaskId>{0});
}

TEST_CASE("serial trees") {
  const TaskGraph g = two_serial_trees();
  REQUIRE(g.structure().kind == StructureKind::kSerialTrees);
  const auto roots = g.structure().chain_roots();
  REQUIRE(roots.size() == 1);
  CHECK(roots[0] == std::vector<TaskId>{5, 8});
  CHECK(code_of([&] { child_resolution_order(g); }) == ErrorCode::kNotATree);
}

TEST_CASE("parallel chains share the root") {
  // Star: 1 -> 3, 2 -> 3 is a tree; two serial chains into one root are not.
  const TaskGraph star = TaskGraph::from_one_based(3, {{1, 3}, {2, 3}}, 3);
  CHECK(star.structure().kind == StructureKind::kTree);

  // Chain A: 1 -> {2, 3} -> 4 -> root 9; chain B: 5 -> {6, 7} -> 8 -> root 9.
  const TaskGraph g = TaskGraph::from_one_based(
      9, {{1, 2}, {1, 3}, {2, 4}, {3, 4}, {4, 9}, {5, 6}, {5, 7}, {6, 8}, {7, 8}, {8, 9}}, 9);
  REQUIRE(g.structure().kind == StructureKind::kParallelChainsOfTrees);
  CHECK(g.structure().chains.size() == 2);
}

TEST_CASE("separator may feed the next tree's root") {
  // 1 feeds 2, 3 and the root directly; given 1's device, {2, 3, 4} is a tree.
  const TaskGraph g =
      TaskGraph::from_one_based(4, {{1, 2}, {1, 3}, {2, 4}, {3, 4}, {1, 4}}, 4);
  CHECK(g.structure().kind == StructureKind::kSerialTrees);
}

TEST_CASE("general DAG") {
  // Two multi-output tasks feeding the same tree: no single separator.
  const TaskGraph g =
      TaskGraph::from_one_based(5, {{1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 5}, {4, 5}}, 5);
  CHECK(g.structure().kind == StructureKind::kGeneralDag);
}

TEST_CASE("validation errors") {
  CHECK(code_of([] { TaskGraph::from_one_based(2, {{1, 3}}, 2); }) == ErrorCode::kBadIndex);
  CHECK(code_of([] { TaskGraph::from_one_based(2, {{1, 1}}, 2); }) == ErrorCode::kCyclicGraph);
  CHECK(code_of([] { TaskGraph::from_one_based(3, {{1, 2}, {2, 3}, {3, 1}}, 3); }) ==
        ErrorCode::kCyclicGraph);
  CHECK(code_of([] { TaskGraph::from_one_based(3, {{1, 3}}, 3); }) ==
        ErrorCode::kDisconnectedFromRoot);
  CHECK(code_of([] { TaskGraph::from_one_based(2, {{1, 2}, {1, 2}}, 2); }) == ErrorCode::kBadIndex);
  CHECK(code_of([] { TaskGraph::from_one_based(2, {{1, 2}}, 5); }) == ErrorCode::kBadIndex);
}

TEST_CASE("random-parent trees always classify as Tree") {
  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 1 + static_cast<int>(rng.below(12));
    // Relabel so parents are not simply lower indices.
    std::vector<int> label(n);
    std::iota(label.begin(), label.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(label[i], label[rng.below(i + 1)]);
    std::vector<Edge> edges;
    for (int v = 1; v < n; ++v) edges.push_back({label[v], label[rng.below(v)]});
    const TaskGraph g(n, edges, label[0]);
    REQUIRE(g.structure().kind == StructureKind::kTree);
    const auto order = child_resolution_order(g);
    std::vector<TaskId> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    std::vector<TaskId> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    CHECK(sorted == ids);
    const auto pos = positions(order, n);
    for (const Edge& e : g.edges()) CHECK(pos[e.from] < pos[e.to]);
    CHECK(order.back() == g.root());
  }
}

TEST_CASE("edge lookup") {
  const TaskGraph g = fig2();
  CHECK(g.edge_index(0, 3) == 0);
  CHECK(g.edge_index(4, 5) == 4);
  CHECK(g.edge_index(3, 0) == -1);
  CHECK(g.in_edges(3) == std::vector<int>{0, 1});
  CHECK(g.out_edges(5).empty());
}
