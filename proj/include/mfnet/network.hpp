#pragma once

#include "mfnet/basis.hpp"
#include "mfnet/graph.hpp"
#include "mfnet/polynomial.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace mfnet {

struct Slice {
  int offset = 0;
  int length = 0;
};

/// Flattened parameter layout over a graph: one contiguous slice of bias
/// coefficients per node (ascending node id), then one slice of weighting
/// coefficients per edge (ordered by (to, from)). The slices partition the
/// vector exactly; coefficient order inside a slice follows the basis
/// column-order contract.
class ParamLayout {
 public:
  ParamLayout() = default;
  explicit ParamLayout(const GraphSpec& spec);

  int size() const { return size_; }
  Slice node_slice(int id) const;
  Slice edge_slice(int from, int to) const;
  const std::vector<std::pair<int, Slice>>& node_slices() const { return nodes_; }
  const std::vector<std::pair<std::pair<int, int>, Slice>>& edge_slices() const {
    return edges_;
  }

 private:
  int size_ = 0;
  std::vector<std::pair<int, Slice>> nodes_;
  std::vector<std::pair<std::pair<int, int>, Slice>> edges_;
};

enum class InitScheme { zeros, gaussian, constant_edge_one };

/// Everything one forward sweep through a node's ancestry produces: per-node
/// evaluations, the bias partials V_l^T(x), per-edge partials
/// diag(z_l) W_lc^T(x), and the evaluated edge weightings rho_lc(x) that the
/// backward pass multiplies into the chain-rule carriers.
struct SweepCache {
  int node = 0;
  Eigen::Index n = 0;
  std::vector<int> scope;  ///< ancestors plus the swept node, visit order
  std::map<int, Eigen::VectorXd> values;
  std::map<int, Eigen::MatrixXd> bias_partials;
  std::map<std::pair<int, int>, Eigen::MatrixXd> edge_partials;
  std::map<std::pair<int, int>, Eigen::VectorXd> edge_weights;
};

/// A validated multifidelity surrogate network: graph structure, per-node and
/// per-edge bases, and the parameter layout. Immutable after construction;
/// all evaluation entry points are const and safe to call concurrently.
class Network {
 public:
  explicit Network(GraphSpec spec);

  const GraphSpec& spec() const { return spec_; }
  const TraversalIndex& index() const { return index_; }
  const ParamLayout& layout() const { return layout_; }
  const Basis& node_basis(int id) const;
  const Basis& edge_basis(int from, int to) const;
  int input_dim() const { return input_dim_; }

  Eigen::VectorXd init_params(InitScheme scheme, std::uint64_t seed,
                              double scale = 0.1) const;

  /// Breadth-first evaluation of `node` and its ancestors at `points`,
  /// caching the partials the backward sweep needs.
  SweepCache forward_sweep(const Eigen::Ref<const Eigen::VectorXd>& params, int node,
                           const Eigen::Ref<const Eigen::MatrixXd>& points) const;

  /// Prediction vector for `node`; identical to the forward sweep's z_node.
  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& params, int node,
                           const Eigen::Ref<const Eigen::MatrixXd>& points) const;

  /// Gradient of (1 / (2 sigma^2)) ||residual||^2 with respect to every
  /// parameter, where residual = y - z_node came from a forward sweep of the
  /// same node and points. Chain rule runs breadth-first toward the roots.
  Eigen::VectorXd backward_sweep(const SweepCache& cache,
                                 const Eigen::Ref<const Eigen::VectorXd>& residual,
                                 double sigma) const;

  /// Symbolic expansion of the network recursion at `node` into one global
  /// polynomial. Requires every in-scope basis to be monomial.
  Polynomial expand_to_polynomial(const Eigen::Ref<const Eigen::VectorXd>& params,
                                  int node) const;

 private:
  void check_params(const Eigen::Ref<const Eigen::VectorXd>& params) const;

  GraphSpec spec_;
  TraversalIndex index_;
  ParamLayout layout_;
  std::map<int, Basis> node_bases_;
  std::map<std::pair<int, int>, Basis> edge_bases_;
  int input_dim_ = 0;
};

}  // namespace mfnet
