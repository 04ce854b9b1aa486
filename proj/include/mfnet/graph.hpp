#pragma once

#include "mfnet/basis.hpp"

#include <map>
#include <set>
#include <stdexcept>
#include <vector>

namespace mfnet {

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NodeSpec {
  int id = 0;
  BasisSpec basis;
};

struct EdgeSpec {
  int from = 0;
  int to = 0;
  BasisSpec basis;
};

/// DAG of surrogate nodes. `target` names the node the CLI trains toward by
/// default; the likelihood itself sums over every node with data.
struct GraphSpec {
  std::vector<NodeSpec> nodes;
  std::vector<EdgeSpec> edges;
  int target = 0;
};

/// Precomputed traversal structure. Immutable once built; sweeps only read it.
struct TraversalIndex {
  std::vector<int> topo_order;  ///< parents before children, ties by ascending id
  std::map<int, std::set<int>> parents;
  std::map<int, std::set<int>> children;
  std::map<int, std::set<int>> ancestors;
  std::set<int> roots;
};

/// Checks ids, edges, acyclicity and target membership, then builds the
/// traversal index. Throws GraphError naming the offending cycle/edge/node.
TraversalIndex validate(const GraphSpec& spec);

/// True iff the undirected version of the graph is connected. Graphs with at
/// most one node count as connected.
bool is_weakly_connected(const GraphSpec& spec);

/// Number of nodes on the longest root-to-node directed path; a root gives 1.
int longest_chain(const TraversalIndex& index, int node);
int longest_chain(const GraphSpec& spec, int node);

/// Convenience builder: nodes 1..n_nodes with a shared node basis, edges with
/// a shared edge basis, target defaulting to the last node.
GraphSpec make_graph(int n_nodes, const std::vector<std::pair<int, int>>& edges,
                     const BasisSpec& node_basis, const BasisSpec& edge_basis,
                     int target = -1);

}  // namespace mfnet
