#include "mfnet/network.hpp"

#include "mfnet/rng.hpp"

#include <deque>
#include <stdexcept>
#include <string>

namespace mfnet {

namespace {

std::string edge_name(int from, int to) {
  return std::to_string(from) + " -> " + std::to_string(to);
}

}  // namespace

ParamLayout::ParamLayout(const GraphSpec& spec) {
  std::map<int, std::size_t> node_card;
  for (const NodeSpec& node : spec.nodes) {
    node_card[node.id] = basis_cardinality(node.basis.degree, node.basis.dim);
  }
  std::map<std::pair<int, int>, std::size_t> edge_card;
  for (const EdgeSpec& edge : spec.edges) {
    edge_card[{edge.to, edge.from}] =
        basis_cardinality(edge.basis.degree, edge.basis.dim);
  }
  int offset = 0;
  for (const auto& [id, card] : node_card) {
    nodes_.push_back({id, Slice{offset, static_cast<int>(card)}});
    offset += static_cast<int>(card);
  }
  for (const auto& [key, card] : edge_card) {
    // key is (to, from)
    edges_.push_back({{key.second, key.first}, Slice{offset, static_cast<int>(card)}});
    offset += static_cast<int>(card);
  }
  size_ = offset;
}

Slice ParamLayout::node_slice(int id) const {
  for (const auto& [node, slice] : nodes_) {
    if (node == id) return slice;
  }
  throw GraphError("unknown node " + std::to_string(id));
}

Slice ParamLayout::edge_slice(int from, int to) const {
  for (const auto& [edge, slice] : edges_) {
    if (edge.first == from && edge.second == to) return slice;
  }
  throw GraphError("unknown edge " + edge_name(from, to));
}

Network::Network(GraphSpec spec)
    : spec_(std::move(spec)), index_(validate(spec_)), layout_(spec_) {
  for (const NodeSpec& node : spec_.nodes) {
    node_bases_.emplace(node.id, Basis(node.basis));
  }
  for (const EdgeSpec& edge : spec_.edges) {
    edge_bases_.emplace(std::make_pair(edge.from, edge.to), Basis(edge.basis));
  }
  input_dim_ = spec_.nodes.empty() ? 0 : spec_.nodes.front().basis.dim;
  for (const NodeSpec& node : spec_.nodes) {
    if (node.basis.dim != input_dim_) {
      throw std::invalid_argument("node " + std::to_string(node.id) +
                                  " basis dim differs from the rest of the graph");
    }
  }
  for (const EdgeSpec& edge : spec_.edges) {
    if (edge.basis.dim != input_dim_) {
      throw std::invalid_argument("edge " + edge_name(edge.from, edge.to) +
                                  " basis dim differs from the rest of the graph");
    }
  }
}

const Basis& Network::node_basis(int id) const {
  auto it = node_bases_.find(id);
  if (it == node_bases_.end()) throw GraphError("unknown node " + std::to_string(id));
  return it->second;
}

const Basis& Network::edge_basis(int from, int to) const {
  auto it = edge_bases_.find({from, to});
  if (it == edge_bases_.end()) throw GraphError("unknown edge " + edge_name(from, to));
  return it->second;
}

void Network::check_params(const Eigen::Ref<const Eigen::VectorXd>& params) const {
  if (params.size() != layout_.size()) {
    throw std::invalid_argument("layout mismatch: expected " +
                                std::to_string(layout_.size()) + " parameters, got " +
                                std::to_string(params.size()));
  }
}

Eigen::VectorXd Network::init_params(InitScheme scheme, std::uint64_t seed,
                                     double scale) const {
  Eigen::VectorXd values = Eigen::VectorXd::Zero(layout_.size());
  switch (scheme) {
    case InitScheme::zeros:
      break;
    case InitScheme::gaussian: {
      Rng rng(seed);
      for (Eigen::Index i = 0; i < values.size(); ++i) {
        values(i) = rng.gaussian(0.0, scale);
      }
      break;
    }
    case InitScheme::constant_edge_one:
      // child starts as the plain sum of its parents: constant coefficient 1
      // on every edge, all else zero
      for (const auto& [edge, slice] : layout_.edge_slices()) {
        values(slice.offset) = 1.0;
      }
      break;
  }
  return values;
}

SweepCache Network::forward_sweep(const Eigen::Ref<const Eigen::VectorXd>& params,
                                  int node,
                                  const Eigen::Ref<const Eigen::MatrixXd>& points) const {
  check_params(params);
  if (points.rows() == 0) throw std::invalid_argument("empty point set");
  auto scope_it = index_.ancestors.find(node);
  if (scope_it == index_.ancestors.end()) {
    throw GraphError("unknown node " + std::to_string(node));
  }

  SweepCache cache;
  cache.node = node;
  cache.n = points.rows();

  std::set<int> scope = scope_it->second;
  scope.insert(node);

  // bias term and its partial for every node in scope
  for (int id : scope) {
    const Slice slice = layout_.node_slice(id);
    Eigen::MatrixXd partial = node_basis(id).eval(points);
    cache.values[id] = partial * params.segment(slice.offset, slice.length);
    cache.bias_partials[id] = std::move(partial);
  }

  std::deque<int> queue;
  std::map<int, int> pending;
  for (int id : scope) {
    pending[id] = static_cast<int>(index_.parents.at(id).size());
    if (pending[id] == 0) queue.push_back(id);
  }

  while (!queue.empty()) {
    const int parent = queue.front();
    queue.pop_front();
    cache.scope.push_back(parent);
    for (int child : index_.children.at(parent)) {
      if (!scope.count(child)) continue;
      const Slice slice = layout_.edge_slice(parent, child);
      // column-wise scaling of W^T(x) by z_parent stands in for the Kronecker
      // product with the all-ones row
      Eigen::MatrixXd partial = edge_basis(parent, child).eval(points);
      Eigen::VectorXd weighting = partial * params.segment(slice.offset, slice.length);
      partial.array().colwise() *= cache.values[parent].array();
      cache.values[child].array() += weighting.array() * cache.values[parent].array();
      cache.edge_partials[{parent, child}] = std::move(partial);
      cache.edge_weights[{parent, child}] = std::move(weighting);
      if (--pending[child] == 0) queue.push_back(child);
    }
  }
  return cache;
}

Eigen::VectorXd Network::evaluate(const Eigen::Ref<const Eigen::VectorXd>& params,
                                  int node,
                                  const Eigen::Ref<const Eigen::MatrixXd>& points) const {
  return forward_sweep(params, node, points).values.at(node);
}

Eigen::VectorXd Network::backward_sweep(const SweepCache& cache,
                                        const Eigen::Ref<const Eigen::VectorXd>& residual,
                                        double sigma) const {
  if (residual.size() != cache.n) {
    throw std::invalid_argument("stale cache: residual has " +
                                std::to_string(residual.size()) +
                                " entries but the sweep evaluated " +
                                std::to_string(cache.n) + " points");
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");

  const int k = cache.node;
  const double weight = -1.0 / (sigma * sigma);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(layout_.size());

  // chain-rule carriers: p_l is the sensitivity of the quadratic misfit to z_l
  std::map<int, Eigen::VectorXd> carrier;
  for (int id : cache.scope) carrier[id] = Eigen::VectorXd::Zero(cache.n);
  carrier[k] = weight * residual;

  const Slice k_slice = layout_.node_slice(k);
  grad.segment(k_slice.offset, k_slice.length) =
      cache.bias_partials.at(k).transpose() * carrier[k];

  // a parent's carrier is complete once every child inside the sweep scope
  // has contributed
  std::map<int, int> pending;
  for (int id : cache.scope) {
    int in_scope_children = 0;
    for (int child : index_.children.at(id)) {
      if (cache.values.count(child)) ++in_scope_children;
    }
    pending[id] = in_scope_children;
  }

  std::deque<int> queue{k};
  while (!queue.empty()) {
    const int child = queue.front();
    queue.pop_front();
    const Eigen::VectorXd& p_child = carrier[child];
    for (int parent : index_.parents.at(child)) {
      carrier[parent].array() +=
          p_child.array() * cache.edge_weights.at({parent, child}).array();
      const Slice edge_slice = layout_.edge_slice(parent, child);
      grad.segment(edge_slice.offset, edge_slice.length) +=
          cache.edge_partials.at({parent, child}).transpose() * p_child;
      if (--pending[parent] == 0) {
        const Slice bias_slice = layout_.node_slice(parent);
        grad.segment(bias_slice.offset, bias_slice.length) +=
            cache.bias_partials.at(parent).transpose() * carrier[parent];
        queue.push_back(parent);
      }
    }
  }
  return grad;
}

Polynomial Network::expand_to_polynomial(const Eigen::Ref<const Eigen::VectorXd>& params,
                                         int node) const {
  check_params(params);
  auto scope_it = index_.ancestors.find(node);
  if (scope_it == index_.ancestors.end()) {
    throw GraphError("unknown node " + std::to_string(node));
  }
  std::set<int> scope = scope_it->second;
  scope.insert(node);

  auto subspace_poly = [&](const Basis& basis, const Slice& slice) {
    if (basis.spec().kind != BasisKind::monomial) {
      throw std::invalid_argument("expansion requires monomial bases");
    }
    Polynomial poly(basis.dim());
    const auto& terms = basis.terms();
    for (std::size_t j = 0; j < terms.size(); ++j) {
      poly.add_term(terms[j], params(slice.offset + static_cast<int>(j)));
    }
    return poly;
  };

  std::map<int, Polynomial> expanded;
  for (int id : index_.topo_order) {
    if (!scope.count(id)) continue;
    Polynomial poly = subspace_poly(node_basis(id), layout_.node_slice(id));
    for (int parent : index_.parents.at(id)) {
      Polynomial weighting =
          subspace_poly(edge_basis(parent, id), layout_.edge_slice(parent, id));
      poly += expanded.at(parent) * weighting;
    }
    expanded[id] = std::move(poly);
  }
  return expanded.at(node);
}

}  // namespace mfnet
