#include "mfnet/data_io.hpp"
#include "mfnet/experiments.hpp"
#include "mfnet/network.hpp"
#include "mfnet/objective.hpp"
#include "mfnet/optimize.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace mfnet;

namespace {

GraphSpec build_graph(int n_nodes, const std::vector<std::pair<int, int>>& edges,
                      const BasisSpec& node_basis, const BasisSpec& edge_basis,
                      int target) {
  return make_graph(n_nodes, edges, node_basis, edge_basis, target);
}

}  // namespace

PYBIND11_MODULE(_mfnet, m) {
  m.doc() = "Multifidelity surrogate networks";
  m.attr("__version__") = MFNET_VERSION;

  py::enum_<BasisKind>(m, "BasisKind")
      .value("monomial", BasisKind::monomial)
      .value("legendre", BasisKind::legendre);

  py::class_<BasisSpec>(m, "BasisSpec")
      .def(py::init([](BasisKind kind, int degree, int dim) {
             return BasisSpec{kind, degree, dim, {}};
           }),
           py::arg("kind") = BasisKind::monomial, py::arg("degree") = 1,
           py::arg("dim") = 1)
      .def_readwrite("kind", &BasisSpec::kind)
      .def_readwrite("degree", &BasisSpec::degree)
      .def_readwrite("dim", &BasisSpec::dim);

  py::class_<Basis>(m, "Basis")
      .def(py::init<const BasisSpec&>())
      .def("eval", &Basis::eval, py::arg("points"))
      .def_property_readonly("cardinality", &Basis::cardinality);

  py::class_<GraphSpec>(m, "GraphSpec")
      .def_property_readonly("n_nodes",
                             [](const GraphSpec& g) { return g.nodes.size(); })
      .def_property_readonly("edges",
                             [](const GraphSpec& g) {
                               std::vector<std::pair<int, int>> out;
                               for (const auto& e : g.edges)
                                 out.emplace_back(e.from, e.to);
                               return out;
                             })
      .def_readwrite("target", &GraphSpec::target);

  m.def("make_graph", &build_graph, py::arg("n_nodes"), py::arg("edges"),
        py::arg("node_basis"), py::arg("edge_basis"), py::arg("target") = -1,
        "Nodes 1..n with shared bases per role");

  py::class_<NodeData>(m, "NodeData")
      .def(py::init([](int node, Eigen::MatrixXd x, Eigen::VectorXd y, double sigma) {
             NodeData d;
             d.node = node;
             d.x = std::move(x);
             d.y = std::move(y);
             d.sigma = sigma;
             return d;
           }),
           py::arg("node"), py::arg("x"), py::arg("y"), py::arg("sigma") = 1.0)
      .def_readwrite("node", &NodeData::node)
      .def_readwrite("x", &NodeData::x)
      .def_readwrite("y", &NodeData::y)
      .def_readwrite("sigma", &NodeData::sigma);

  py::enum_<InitScheme>(m, "InitScheme")
      .value("zeros", InitScheme::zeros)
      .value("gaussian", InitScheme::gaussian)
      .value("edge_one", InitScheme::constant_edge_one);

  py::enum_<RegKind>(m, "RegKind")
      .value("none", RegKind::none)
      .value("gaussian", RegKind::gaussian)
      .value("laplace", RegKind::laplace);

  py::class_<RegConfig>(m, "RegConfig")
      .def(py::init<>())
      .def_readwrite("kind", &RegConfig::kind)
      .def_readwrite("default_lambda", &RegConfig::default_lambda)
      .def_readwrite("lambda_node", &RegConfig::lambda_node)
      .def_readwrite("lambda_edge", &RegConfig::lambda_edge);

  py::class_<FitConfig>(m, "FitConfig")
      .def(py::init<>())
      .def_readwrite("max_iters", &FitConfig::max_iters)
      .def_readwrite("grad_tol", &FitConfig::grad_tol)
      .def_readwrite("step_tol", &FitConfig::step_tol)
      .def_readwrite("init", &FitConfig::init)
      .def_readwrite("init_scale", &FitConfig::init_scale)
      .def_readwrite("seed", &FitConfig::seed)
      .def_readwrite("restarts", &FitConfig::restarts)
      .def_readwrite("reg", &FitConfig::reg);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("params", &FitResult::params)
      .def_readonly("objective_trace", &FitResult::objective_trace)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("reason", &FitResult::reason)
      .def_readonly("grad_norm_final", &FitResult::grad_norm_final)
      .def_readonly("iterations", &FitResult::iterations);

  py::class_<Network>(m, "Network")
      .def(py::init<const GraphSpec&>())
      .def("n_params",
           [](const Network& net) { return net.layout().size(); })
      .def_property_readonly("input_dim", &Network::input_dim)
      .def("init_params", &Network::init_params, py::arg("scheme"), py::arg("seed"),
           py::arg("scale") = 0.1)
      .def("evaluate", &Network::evaluate, py::arg("params"), py::arg("node"),
           py::arg("points"))
      .def("expand_to_polynomial",
           [](const Network& net, const Eigen::VectorXd& params, int node) {
             const Polynomial poly = net.expand_to_polynomial(params, node);
             py::dict out;
             for (const auto& [index, coefficient] : poly.terms()) {
               py::tuple key(index.size());
               for (std::size_t k = 0; k < index.size(); ++k) key[k] = index[k];
               out[key] = coefficient;
             }
             return out;
           },
           py::arg("params"), py::arg("node"),
           "Multi-index to coefficient map of the node's global polynomial");

  m.def("total_nll",
        [](const Network& net, const Eigen::VectorXd& params,
           const std::vector<NodeData>& data) {
          const ObjectiveEval eval = total_nll(net, params, data);
          return py::make_tuple(eval.value, eval.grad);
        },
        py::arg("network"), py::arg("params"), py::arg("datasets"),
        "Negative log likelihood and its gradient");
  m.def("fit", &fit, py::arg("network"), py::arg("datasets"), py::arg("config"));
  m.def("fit_sparse", &fit_sparse, py::arg("network"), py::arg("datasets"),
        py::arg("config"));
  m.def("single_fidelity_fit", &single_fidelity_fit, py::arg("basis"), py::arg("x"),
        py::arg("y"), py::arg("ridge") = 0.0);
  m.def("gradient_check",
        [](const Network& net, const Eigen::VectorXd& params,
           const std::vector<NodeData>& data, double fd_step) {
          const GradCheckReport report = gradient_check(net, params, data, fd_step);
          return py::make_tuple(report.max_rel_discrepancy, report.worst_coordinate);
        },
        py::arg("network"), py::arg("params"), py::arg("datasets"),
        py::arg("fd_step") = 1e-6);
  m.def("kkt_residual", &kkt_residual, py::arg("network"), py::arg("params"),
        py::arg("datasets"), py::arg("reg"));

  py::class_<GeneratedProblem>(m, "GeneratedProblem")
      .def_readonly("graph", &GeneratedProblem::graph)
      .def_readonly("true_params", &GeneratedProblem::true_params)
      .def_readonly("datasets", &GeneratedProblem::datasets)
      .def_readonly("truth_x", &GeneratedProblem::truth_x)
      .def_readonly("truth_y", &GeneratedProblem::truth_y)
      .def_readonly("target", &GeneratedProblem::target);

  m.def("generate_three_model", &generate_three_model, py::arg("counts"),
        py::arg("nested"), py::arg("seed"));
  m.def("generate_analytical_noise", &generate_analytical_noise, py::arg("counts"),
        py::arg("seed"), py::arg("node_degree") = 2, py::arg("edge_degree") = 1);
  m.def("generate_family",
        [](const std::string& family, int dims, int node_degree, int edge_degree,
           const std::vector<int>& counts, double noise_sigma, std::uint64_t seed) {
          return generate_family(parse_family(family), dims, node_degree,
                                 edge_degree, counts, noise_sigma, seed);
        },
        py::arg("family"), py::arg("dims"), py::arg("node_degree"),
        py::arg("edge_degree"), py::arg("counts"), py::arg("noise_sigma"),
        py::arg("seed"));
}
