#include "mfnet/graph.hpp"

#include <algorithm>
#include <sstream>
#include <string>

namespace mfnet {

namespace {

std::string edge_name(int from, int to) {
  return std::to_string(from) + " -> " + std::to_string(to);
}

// walks parent pointers among the nodes left out of the topological order
// until a node repeats, then formats the enclosed cycle
std::string find_cycle(const std::set<int>& remaining,
                       const std::map<int, std::set<int>>& parents) {
  int start = *remaining.begin();
  std::vector<int> path;
  std::map<int, int> seen_at;
  int cur = start;
  while (seen_at.find(cur) == seen_at.end()) {
    seen_at[cur] = static_cast<int>(path.size());
    path.push_back(cur);
    for (int p : parents.at(cur)) {
      if (remaining.count(p)) {
        cur = p;
        break;
      }
    }
  }
  // the walk follows parent links, so the directed cycle reads in reverse
  // visit order: cur -> path[last] -> ... -> path[first occurrence + 1] -> cur
  std::ostringstream os;
  os << cur;
  for (int i = static_cast<int>(path.size()); i > seen_at[cur] + 1; --i) {
    os << " -> " << path[static_cast<std::size_t>(i - 1)];
  }
  os << " -> " << cur;
  return os.str();
}

}  // namespace

TraversalIndex validate(const GraphSpec& spec) {
  TraversalIndex index;
  std::set<int> ids;
  for (const NodeSpec& node : spec.nodes) {
    if (!ids.insert(node.id).second) {
      throw GraphError("duplicate node id " + std::to_string(node.id));
    }
    index.parents[node.id];
    index.children[node.id];
    index.ancestors[node.id];
  }
  std::set<std::pair<int, int>> seen_edges;
  for (const EdgeSpec& edge : spec.edges) {
    if (!ids.count(edge.from) || !ids.count(edge.to)) {
      throw GraphError("dangling edge " + edge_name(edge.from, edge.to) +
                       ": endpoint is not a node of the graph");
    }
    if (edge.from == edge.to) {
      throw GraphError("self loop " + edge_name(edge.from, edge.to));
    }
    if (!seen_edges.insert({edge.from, edge.to}).second) {
      throw GraphError("duplicate edge " + edge_name(edge.from, edge.to));
    }
    index.parents[edge.to].insert(edge.from);
    index.children[edge.from].insert(edge.to);
  }
  if (!ids.count(spec.target)) {
    throw GraphError("unknown target node " + std::to_string(spec.target));
  }

  // Kahn's algorithm; the ready set is ordered so ties break by ascending id,
  // which makes sweep order deterministic
  std::map<int, int> in_degree;
  std::set<int> ready;
  for (int id : ids) {
    in_degree[id] = static_cast<int>(index.parents[id].size());
    if (in_degree[id] == 0) {
      ready.insert(id);
      index.roots.insert(id);
    }
  }
  while (!ready.empty()) {
    int id = *ready.begin();
    ready.erase(ready.begin());
    index.topo_order.push_back(id);
    for (int child : index.children[id]) {
      if (--in_degree[child] == 0) ready.insert(child);
    }
  }
  if (index.topo_order.size() != ids.size()) {
    std::set<int> remaining = ids;
    for (int id : index.topo_order) remaining.erase(id);
    throw GraphError("cycle detected: " + find_cycle(remaining, index.parents));
  }

  // ancestors accumulate along the topological order
  for (int id : index.topo_order) {
    std::set<int>& an = index.ancestors[id];
    for (int p : index.parents[id]) {
      an.insert(p);
      const std::set<int>& pan = index.ancestors[p];
      an.insert(pan.begin(), pan.end());
    }
  }
  return index;
}

bool is_weakly_connected(const GraphSpec& spec) {
  if (spec.nodes.size() <= 1) return true;
  std::map<int, std::set<int>> adjacency;
  for (const NodeSpec& node : spec.nodes) adjacency[node.id];
  for (const EdgeSpec& edge : spec.edges) {
    adjacency[edge.from].insert(edge.to);
    adjacency[edge.to].insert(edge.from);
  }
  std::set<int> visited;
  std::vector<int> stack{spec.nodes.front().id};
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    if (!visited.insert(id).second) continue;
    for (int other : adjacency[id]) {
      if (!visited.count(other)) stack.push_back(other);
    }
  }
  return visited.size() == spec.nodes.size();
}

int longest_chain(const TraversalIndex& index, int node) {
  if (!index.parents.count(node)) {
    throw GraphError("unknown node " + std::to_string(node));
  }
  std::map<int, int> depth;
  for (int id : index.topo_order) {
    int best = 1;
    for (int p : index.parents.at(id)) best = std::max(best, depth[p] + 1);
    depth[id] = best;
  }
  return depth[node];
}

int longest_chain(const GraphSpec& spec, int node) {
  return longest_chain(validate(spec), node);
}

GraphSpec make_graph(int n_nodes, const std::vector<std::pair<int, int>>& edges,
                     const BasisSpec& node_basis, const BasisSpec& edge_basis,
                     int target) {
  GraphSpec spec;
  for (int id = 1; id <= n_nodes; ++id) spec.nodes.push_back({id, node_basis});
  for (const auto& [from, to] : edges) spec.edges.push_back({from, to, edge_basis});
  spec.target = target < 0 ? n_nodes : target;
  return spec;
}

}  // namespace mfnet
