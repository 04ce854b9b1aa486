#include "doctest.h"
#include "mfnet/objective.hpp"
#include "mfnet/rng.hpp"

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>

using namespace mfnet;

namespace {

const BasisSpec kLinear{BasisKind::monomial, 1, 1, {}};

Network pair_network() {
  return Network(make_graph(2, {{1, 2}}, kLinear, kLinear));
}

std::vector<NodeData> pair_data(const Network& network,
                                const Eigen::Ref<const Eigen::VectorXd>& params,
                                Rng& rng, double sigma) {
  std::vector<NodeData> datasets;
  for (int node = 1; node <= 2; ++node) {
    NodeData data;
    data.node = node;
    data.x.resize(4, 1);
    for (int i = 0; i < 4; ++i) data.x(i, 0) = rng.uniform(-1.0, 1.0);
    data.y = network.evaluate(params, node, data.x);
    for (int i = 0; i < 4; ++i) data.y[i] += 0.1 * rng.gaussian();
    data.sigma = sigma;
    datasets.push_back(std::move(data));
  }
  return datasets;
}

}  // namespace

TEST_CASE("single-point likelihood matches the closed form") {
  Network network(make_graph(1, {}, kLinear, kLinear));
  Eigen::VectorXd params(2);
  params << 1.0, 0.0;  // constant prediction 1
  NodeData data;
  data.node = 1;
  data.x.resize(1, 1);
  data.x << 0.5;
  data.y.resize(1);
  data.y << 2.0;  // residual 1
  data.sigma = 2.0;
  const double expected =
      0.5 * std::log(2.0 * std::numbers::pi) + std::log(2.0) + 1.0 / 8.0;
  CHECK(node_nll(network, params, data) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("total likelihood sums per-node terms and is order independent") {
  Network network = pair_network();
  Rng rng(7);
  Eigen::VectorXd params = network.init_params(InitScheme::gaussian, 1, 1.0);
  std::vector<NodeData> datasets = pair_data(network, params, rng, 0.5);

  double direct = 0.0;
  for (const NodeData& data : datasets) direct += node_nll(network, params, data);
  const ObjectiveEval forward = total_nll(network, params, datasets);
  CHECK(forward.value == doctest::Approx(direct).epsilon(1e-13));

  std::swap(datasets[0], datasets[1]);
  const ObjectiveEval swapped = total_nll(network, params, datasets);
  CHECK(swapped.value == forward.value);
  CHECK(swapped.grad == forward.grad);
}

TEST_CASE("likelihood gradient matches central differences") {
  Network network = pair_network();
  Rng rng(19);
  Eigen::VectorXd params = network.init_params(InitScheme::gaussian, 2, 1.0);
  const std::vector<NodeData> datasets = pair_data(network, params, rng, 0.3);

  const ObjectiveEval eval = total_nll(network, params, datasets);
  const double h = 1e-6;
  for (Eigen::Index k = 0; k < params.size(); ++k) {
    Eigen::VectorXd lo = params, hi = params;
    lo[k] -= h;
    hi[k] += h;
    const double fd = (total_nll(network, hi, datasets).value -
                       total_nll(network, lo, datasets).value) /
                      (2.0 * h);
    CHECK(eval.grad[k] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("constant and log-sigma terms shift the value but not the gradient") {
  Network network = pair_network();
  Rng rng(4);
  Eigen::VectorXd params = network.init_params(InitScheme::gaussian, 3, 1.0);
  std::vector<NodeData> datasets = pair_data(network, params, rng, 1.0);

  const ObjectiveEval base = total_nll(network, params, datasets);
  // scaling both sigmas by c multiplies the misfit term by 1/c^2 and adds
  // n log c; the gradient scales exactly by 1/c^2
  for (NodeData& data : datasets) data.sigma = 2.0;
  const ObjectiveEval scaled = total_nll(network, params, datasets);
  CHECK(scaled.grad.isApprox(base.grad / 4.0, 1e-13));
  const double n_total = 8.0;
  CHECK(scaled.value - base.value ==
        doctest::Approx(n_total * std::log(2.0) -
                        0.75 * (base.value - n_total * 0.5 * std::log(2.0 * std::numbers::pi)))
            .epsilon(1e-10));
}

TEST_CASE("regularization weights fall back to half the default") {
  RegConfig reg;
  reg.kind = RegKind::gaussian;
  reg.default_lambda = 3.0;
  reg.lambda_node[2] = 0.25;
  reg.lambda_edge[{1, 2}] = 0.0;
  CHECK(reg.node_weight(1) == 1.5);
  CHECK(reg.node_weight(2) == 0.25);
  CHECK(reg.edge_weight(1, 2) == 0.0);
  CHECK(reg.edge_weight(7, 8) == 1.5);

  reg.lambda_node[3] = -1.0;
  CHECK_THROWS_AS(reg.node_weight(3), std::invalid_argument);
}

TEST_CASE("quadratic penalty value and gradient are explicit") {
  Network network = pair_network();
  Eigen::VectorXd params(6);
  params << 1.0, 2.0, -1.0, 0.5, 3.0, -2.0;
  RegConfig reg;
  reg.kind = RegKind::gaussian;
  reg.lambda_node[1] = 1.0;
  reg.lambda_node[2] = 0.5;
  reg.lambda_edge[{1, 2}] = 2.0;
  const ObjectiveEval penalty = l2_penalty(network, params, reg);
  // 1*(1+4) + 0.5*(1+0.25) + 2*(9+4)
  CHECK(penalty.value == doctest::Approx(5.0 + 0.625 + 26.0).epsilon(1e-14));
  Eigen::VectorXd expected_grad(6);
  expected_grad << 2.0, 4.0, -1.0, 0.5, 12.0, -8.0;
  CHECK(penalty.grad.isApprox(expected_grad, 1e-14));
}

TEST_CASE("absolute-value penalty weights each slice") {
  Network network = pair_network();
  Eigen::VectorXd params(6);
  params << 1.0, -2.0, 3.0, -4.0, 5.0, -6.0;
  RegConfig reg;
  reg.kind = RegKind::laplace;
  reg.lambda_node[1] = 0.0;
  reg.lambda_node[2] = 1.0;
  reg.lambda_edge[{1, 2}] = 2.0;
  CHECK(l1_penalty(network, params, reg) == doctest::Approx(7.0 + 22.0).epsilon(1e-14));

  const Eigen::VectorXd weights = l1_weight_vector(network, reg);
  Eigen::VectorXd expected(6);
  expected << 0.0, 0.0, 1.0, 1.0, 2.0, 2.0;
  CHECK(weights == expected);
}

TEST_CASE("combined objective adds the configured penalty to the likelihood") {
  Network network = pair_network();
  Rng rng(9);
  Eigen::VectorXd params = network.init_params(InitScheme::gaussian, 4, 1.0);
  const std::vector<NodeData> datasets = pair_data(network, params, rng, 1.0);
  RegConfig reg;
  reg.default_lambda = 0.8;

  reg.kind = RegKind::none;
  const ObjectiveEval plain = regularized_objective(network, params, datasets, reg);
  const ObjectiveEval nll = total_nll(network, params, datasets);
  CHECK(plain.value == nll.value);

  reg.kind = RegKind::gaussian;
  const ObjectiveEval ridge = regularized_objective(network, params, datasets, reg);
  CHECK(ridge.value ==
        doctest::Approx(nll.value + l2_penalty(network, params, reg).value));
  CHECK(ridge.value > plain.value);

  // the nonsmooth penalty enters the value only; the gradient stays smooth
  reg.kind = RegKind::laplace;
  const ObjectiveEval lasso = regularized_objective(network, params, datasets, reg);
  CHECK(lasso.value ==
        doctest::Approx(nll.value + l1_penalty(network, params, reg)));
  CHECK(lasso.grad == nll.grad);
}

TEST_CASE("dataset validation names the offending node") {
  Network network = pair_network();
  NodeData good;
  good.node = 1;
  good.x = Eigen::MatrixXd::Zero(2, 1);
  good.y = Eigen::VectorXd::Zero(2);

  CHECK_THROWS_AS(check_datasets(network, {}), std::invalid_argument);

  NodeData unknown = good;
  unknown.node = 5;
  CHECK_THROWS_WITH_AS(check_datasets(network, {unknown}),
                       "dataset references unknown node 5", GraphError);

  CHECK_THROWS_WITH_AS(check_datasets(network, {good, good}),
                       "duplicate dataset for node 1", std::invalid_argument);

  NodeData ragged = good;
  ragged.y = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_WITH_AS(check_datasets(network, {ragged}),
                       "dataset for node 1 has mismatched sample counts",
                       std::invalid_argument);

  NodeData bad_sigma = good;
  bad_sigma.sigma = 0.0;
  CHECK_THROWS_WITH_AS(check_datasets(network, {bad_sigma}),
                       "dataset for node 1 has non-positive sigma",
                       std::invalid_argument);
}
