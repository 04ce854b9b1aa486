#pragma once

#include "mfnet/network.hpp"

#include <Eigen/Core>

#include <map>
#include <utility>
#include <vector>

namespace mfnet {

/// Training observations for one node. `sigma` is the (known, user-supplied)
/// noise scale entering the likelihood; it is never estimated.
struct NodeData {
  int node = 0;
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  double sigma = 1.0;
};

enum class RegKind { none, gaussian, laplace };

/// Regularization weights. A missing per-item weight falls back to
/// default_lambda / 2 for nodes and edges alike, so one scalar configures the
/// whole penalty.
struct RegConfig {
  RegKind kind = RegKind::none;
  double default_lambda = 0.0;
  std::map<int, double> lambda_node;
  std::map<std::pair<int, int>, double> lambda_edge;

  double node_weight(int id) const;
  double edge_weight(int from, int to) const;
};

struct ObjectiveEval {
  double value = 0.0;
  Eigen::VectorXd grad;
};

/// Negative log-likelihood of one node's data:
///   (n/2) log 2pi + n log sigma + ||y - f_node(x)||^2 / (2 sigma^2).
double node_nll(const Network& network, const Eigen::Ref<const Eigen::VectorXd>& params,
                const NodeData& data);

/// Sum of node_nll over all datasets plus its gradient, accumulated one
/// backward sweep per data-bearing node in ascending node order. The constant
/// and log-sigma terms appear in the value but not the gradient.
ObjectiveEval total_nll(const Network& network,
                        const Eigen::Ref<const Eigen::VectorXd>& params,
                        const std::vector<NodeData>& datasets);

/// Gaussian-prior penalty: sum of lambda_i ||beta_i||_2^2 over nodes plus
/// lambda_ij ||alpha_ji||_2^2 over edges, with gradient 2 lambda theta.
ObjectiveEval l2_penalty(const Network& network,
                         const Eigen::Ref<const Eigen::VectorXd>& params,
                         const RegConfig& reg);

/// Laplace-prior penalty: weighted l1 norm over the same slices. Value only;
/// the sparse solver applies its own nonsmooth handling.
double l1_penalty(const Network& network,
                  const Eigen::Ref<const Eigen::VectorXd>& params,
                  const RegConfig& reg);

/// Full objective for the configured regularization. `value` includes the
/// penalty; `grad` covers the smooth part only (for laplace, the l1 term is
/// excluded from the gradient and left to the proximal solver).
ObjectiveEval regularized_objective(const Network& network,
                                    const Eigen::Ref<const Eigen::VectorXd>& params,
                                    const std::vector<NodeData>& datasets,
                                    const RegConfig& reg);

/// Per-coordinate l1 weights in layout order (lambda_i repeated over each
/// node slice, lambda_ij over each edge slice).
Eigen::VectorXd l1_weight_vector(const Network& network, const RegConfig& reg);

void check_datasets(const Network& network, const std::vector<NodeData>& datasets);

}  // namespace mfnet
