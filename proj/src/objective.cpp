#include "mfnet/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>

namespace mfnet {

namespace {

double resolved(const double* per_item, double default_lambda) {
  const double value = per_item ? *per_item : default_lambda / 2.0;
  if (value < 0.0) throw std::invalid_argument("negative regularization weight");
  return value;
}

}  // namespace

double RegConfig::node_weight(int id) const {
  auto it = lambda_node.find(id);
  return resolved(it == lambda_node.end() ? nullptr : &it->second, default_lambda);
}

double RegConfig::edge_weight(int from, int to) const {
  auto it = lambda_edge.find({from, to});
  return resolved(it == lambda_edge.end() ? nullptr : &it->second, default_lambda);
}

void check_datasets(const Network& network, const std::vector<NodeData>& datasets) {
  if (datasets.empty()) throw std::invalid_argument("no datasets supplied");
  std::set<int> seen;
  for (const NodeData& data : datasets) {
    if (!network.index().parents.count(data.node)) {
      throw GraphError("dataset references unknown node " + std::to_string(data.node));
    }
    if (!seen.insert(data.node).second) {
      throw std::invalid_argument("duplicate dataset for node " +
                                  std::to_string(data.node));
    }
    if (data.x.rows() < 1 || data.x.rows() != data.y.size()) {
      throw std::invalid_argument("dataset for node " + std::to_string(data.node) +
                                  " has mismatched sample counts");
    }
    if (!(data.sigma > 0.0)) {
      throw std::invalid_argument("dataset for node " + std::to_string(data.node) +
                                  " has non-positive sigma");
    }
  }
}

double node_nll(const Network& network, const Eigen::Ref<const Eigen::VectorXd>& params,
                const NodeData& data) {
  const Eigen::VectorXd prediction = network.evaluate(params, data.node, data.x);
  const double n = static_cast<double>(data.y.size());
  const double misfit = (data.y - prediction).squaredNorm();
  return 0.5 * n * std::log(2.0 * std::numbers::pi) + n * std::log(data.sigma) +
         misfit / (2.0 * data.sigma * data.sigma);
}

ObjectiveEval total_nll(const Network& network,
                        const Eigen::Ref<const Eigen::VectorXd>& params,
                        const std::vector<NodeData>& datasets) {
  check_datasets(network, datasets);
  // fixed node order keeps the floating-point reduction reproducible
  std::vector<const NodeData*> ordered;
  ordered.reserve(datasets.size());
  for (const NodeData& data : datasets) ordered.push_back(&data);
  std::sort(ordered.begin(), ordered.end(),
            [](const NodeData* a, const NodeData* b) { return a->node < b->node; });

  ObjectiveEval out;
  out.grad = Eigen::VectorXd::Zero(network.layout().size());
  for (const NodeData* data : ordered) {
    const SweepCache cache = network.forward_sweep(params, data->node, data->x);
    const Eigen::VectorXd residual = data->y - cache.values.at(data->node);
    const double n = static_cast<double>(data->y.size());
    out.value += 0.5 * n * std::log(2.0 * std::numbers::pi) +
                 n * std::log(data->sigma) +
                 residual.squaredNorm() / (2.0 * data->sigma * data->sigma);
    out.grad += network.backward_sweep(cache, residual, data->sigma);
  }
  return out;
}

ObjectiveEval l2_penalty(const Network& network,
                         const Eigen::Ref<const Eigen::VectorXd>& params,
                         const RegConfig& reg) {
  ObjectiveEval out;
  out.grad = Eigen::VectorXd::Zero(params.size());
  const ParamLayout& layout = network.layout();
  for (const auto& [id, slice] : layout.node_slices()) {
    const double lambda = reg.node_weight(id);
    const auto segment = params.segment(slice.offset, slice.length);
    out.value += lambda * segment.squaredNorm();
    out.grad.segment(slice.offset, slice.length) = 2.0 * lambda * segment;
  }
  for (const auto& [edge, slice] : layout.edge_slices()) {
    const double lambda = reg.edge_weight(edge.first, edge.second);
    const auto segment = params.segment(slice.offset, slice.length);
    out.value += lambda * segment.squaredNorm();
    out.grad.segment(slice.offset, slice.length) = 2.0 * lambda * segment;
  }
  return out;
}

double l1_penalty(const Network& network,
                  const Eigen::Ref<const Eigen::VectorXd>& params,
                  const RegConfig& reg) {
  double value = 0.0;
  const ParamLayout& layout = network.layout();
  for (const auto& [id, slice] : layout.node_slices()) {
    value += reg.node_weight(id) *
             params.segment(slice.offset, slice.length).lpNorm<1>();
  }
  for (const auto& [edge, slice] : layout.edge_slices()) {
    value += reg.edge_weight(edge.first, edge.second) *
             params.segment(slice.offset, slice.length).lpNorm<1>();
  }
  return value;
}

Eigen::VectorXd l1_weight_vector(const Network& network, const RegConfig& reg) {
  const ParamLayout& layout = network.layout();
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(layout.size());
  for (const auto& [id, slice] : layout.node_slices()) {
    weights.segment(slice.offset, slice.length).setConstant(reg.node_weight(id));
  }
  for (const auto& [edge, slice] : layout.edge_slices()) {
    weights.segment(slice.offset, slice.length)
        .setConstant(reg.edge_weight(edge.first, edge.second));
  }
  return weights;
}

ObjectiveEval regularized_objective(const Network& network,
                                    const Eigen::Ref<const Eigen::VectorXd>& params,
                                    const std::vector<NodeData>& datasets,
                                    const RegConfig& reg) {
  ObjectiveEval out = total_nll(network, params, datasets);
  switch (reg.kind) {
    case RegKind::none:
      break;
    case RegKind::gaussian: {
      const ObjectiveEval penalty = l2_penalty(network, params, reg);
      out.value += penalty.value;
      out.grad += penalty.grad;
      break;
    }
    case RegKind::laplace:
      out.value += l1_penalty(network, params, reg);
      break;
  }
  return out;
}

}  // namespace mfnet
