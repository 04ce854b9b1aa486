#include "doctest.h"
#include "mfnet/formats.hpp"

#include <unistd.h>

#include <Eigen/Core>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

using namespace mfnet;

namespace {

std::filesystem::path scratch_dir() {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("mfnet_formats_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("name mappings round-trip and reject unknown names") {
  CHECK(parse_init_scheme("zeros") == InitScheme::zeros);
  CHECK(parse_init_scheme("gaussian") == InitScheme::gaussian);
  CHECK(parse_init_scheme("edge-one") == InitScheme::constant_edge_one);
  for (const char* name : {"zeros", "gaussian", "edge-one"})
    CHECK(init_scheme_name(parse_init_scheme(name)) == name);
  CHECK_THROWS_AS(parse_init_scheme("ones"), std::invalid_argument);

  CHECK(parse_reg_kind("none") == RegKind::none);
  CHECK(parse_reg_kind("l2") == RegKind::gaussian);
  CHECK(parse_reg_kind("l1") == RegKind::laplace);
  for (const char* name : {"none", "l2", "l1"})
    CHECK(reg_kind_name(parse_reg_kind(name)) == name);
  CHECK_THROWS_AS(parse_reg_kind("ridge"), std::invalid_argument);
}

TEST_CASE("edge strings parse and print as 'from -> to'") {
  CHECK(parse_edge_string("1 -> 2") == std::pair{1, 2});
  CHECK(parse_edge_string("10->3") == std::pair{10, 3});
  CHECK(format_edge_string(4, 7) == "4 -> 7");
  CHECK(parse_edge_string(format_edge_string(12, 9)) == std::pair{12, 9});
  CHECK_THROWS_AS(parse_edge_string("1 - 2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_edge_string("a -> b"), std::invalid_argument);
}

TEST_CASE("graph files round-trip including legendre bounds") {
  const auto dir = scratch_dir();
  GraphSpec spec;
  spec.nodes.push_back({1, {BasisKind::legendre, 2, 2, {{-1.0, 1.0}, {0.0, 2.5}}}});
  spec.nodes.push_back({2, {BasisKind::monomial, 3, 2, {}}});
  spec.edges.push_back({1, 2, {BasisKind::monomial, 1, 2, {}}});
  spec.target = 2;

  const std::string path = (dir / "graph.json").string();
  save_graph(path, spec);
  const GraphSpec loaded = load_graph(path);

  REQUIRE(loaded.nodes.size() == 2);
  CHECK(loaded.nodes[0].id == 1);
  CHECK(loaded.nodes[0].basis.kind == BasisKind::legendre);
  CHECK(loaded.nodes[0].basis.degree == 2);
  REQUIRE(loaded.nodes[0].basis.bounds.size() == 2);
  CHECK(loaded.nodes[0].basis.bounds[1].lo == 0.0);
  CHECK(loaded.nodes[0].basis.bounds[1].hi == 2.5);
  CHECK(loaded.nodes[1].basis.kind == BasisKind::monomial);
  CHECK(loaded.nodes[1].basis.degree == 3);
  REQUIRE(loaded.edges.size() == 1);
  CHECK(loaded.edges[0].from == 1);
  CHECK(loaded.edges[0].to == 2);
  CHECK(loaded.target == 2);

  // saving the loaded spec again is byte-identical
  const std::string path2 = (dir / "graph2.json").string();
  save_graph(path2, loaded);
  CHECK(read_file(path) == read_file(path2));
  std::filesystem::remove_all(dir);
}

TEST_CASE("graph file errors carry the path") {
  const auto dir = scratch_dir();
  const std::string path = (dir / "graph.json").string();

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_graph(path), std::runtime_error);
  }
  SUBCASE("invalid json mentions the file") {
    write_file(path, "{nodes: oops");
    try {
      load_graph(path);
      FAIL("expected a parse failure");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find(path) != std::string::npos);
    }
  }
  SUBCASE("graph without nodes") {
    write_file(path, "{}");
    CHECK_THROWS_AS(load_graph(path), std::runtime_error);
  }
  SUBCASE("unknown basis kind") {
    write_file(path,
               R"({"nodes": [{"id": 1, "basis": {"kind": "hermite"}}]})");
    CHECK_THROWS_AS(load_graph(path), std::runtime_error);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("manifests resolve relative paths against their directory") {
  const auto dir = scratch_dir();
  std::filesystem::create_directories(dir / "sub");
  write_file(dir / "sub" / "graph.json", R"({
    "nodes": [{"id": 1, "basis": {"kind": "monomial", "degree": 1, "dim": 1}}],
    "edges": [],
    "target": 1
  })");
  write_file(dir / "sub" / "node1.csv", "x1,y\n0.5,1.0\n");
  write_file(dir / "sub" / "manifest.json", R"({
    "graph": "graph.json",
    "data": [{"node": 1, "path": "node1.csv", "sigma": 0.25}],
    "fit": {"max_iters": 42, "reg": "l2", "lambda": 0.5, "seed": 7,
            "init": "zeros", "restarts": 2,
            "lambda_nodes": {"1": 0.125},
            "lambda_edges": {"1 -> 2": 0.375}},
    "output_dir": "out",
    "truth": {"node": 1, "path": "truth.csv"}
  })");

  const Manifest manifest = load_manifest((dir / "sub" / "manifest.json").string());
  CHECK(manifest.graph.nodes.size() == 1);
  REQUIRE(manifest.data.size() == 1);
  CHECK(manifest.data[0].node == 1);
  CHECK(manifest.data[0].path == (dir / "sub" / "node1.csv").string());
  CHECK(manifest.data[0].sigma == 0.25);
  CHECK(manifest.fit.max_iters == 42);
  CHECK(manifest.fit.reg.kind == RegKind::gaussian);
  CHECK(manifest.fit.reg.default_lambda == 0.5);
  CHECK(manifest.fit.reg.lambda_node.at(1) == 0.125);
  CHECK(manifest.fit.reg.lambda_edge.at({1, 2}) == 0.375);
  CHECK(manifest.fit.seed == 7);
  CHECK(manifest.fit.init == InitScheme::zeros);
  CHECK(manifest.fit.restarts == 2);
  CHECK(manifest.output_dir == (dir / "sub" / "out").string());
  REQUIRE(manifest.truth.has_value());
  CHECK(manifest.truth->path == (dir / "sub" / "truth.csv").string());
  std::filesystem::remove_all(dir);
}

TEST_CASE("manifests accept an inline graph and default the fit block") {
  const auto dir = scratch_dir();
  write_file(dir / "manifest.json", R"({
    "graph": {
      "nodes": [{"id": 1, "basis": {"kind": "monomial", "degree": 2, "dim": 1}}],
      "edges": []
    },
    "data": []
  })");
  const Manifest manifest = load_manifest((dir / "manifest.json").string());
  CHECK(manifest.graph.nodes.size() == 1);
  CHECK(manifest.graph.target == 1);
  CHECK(manifest.fit.max_iters == FitConfig{}.max_iters);
  CHECK_FALSE(manifest.truth.has_value());

  write_file(dir / "empty.json", R"({"data": []})");
  CHECK_THROWS_AS(load_manifest((dir / "empty.json").string()), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("a saved manifest reloads with the same settings") {
  const auto dir = scratch_dir();
  GraphSpec graph = make_graph(2, {{1, 2}}, {BasisKind::monomial, 1, 1, {}},
                               {BasisKind::monomial, 0, 1, {}});
  save_graph((dir / "graph.json").string(), graph);

  Manifest manifest;
  manifest.graph = graph;
  manifest.data.push_back({1, "node1.csv", 0.5});
  manifest.data.push_back({2, "node2.csv", 0.1});
  manifest.fit.max_iters = 123;
  manifest.fit.reg.kind = RegKind::laplace;
  manifest.fit.reg.default_lambda = 0.01;
  manifest.output_dir = ".";
  save_manifest((dir / "manifest.json").string(), manifest, "graph.json");

  write_file(dir / "node1.csv", "x1,y\n0,0\n");
  write_file(dir / "node2.csv", "x1,y\n0,0\n");
  const Manifest loaded = load_manifest((dir / "manifest.json").string());
  CHECK(loaded.graph.edges.size() == 1);
  CHECK(loaded.data.size() == 2);
  CHECK(loaded.data[1].sigma == 0.1);
  CHECK(loaded.fit.max_iters == 123);
  CHECK(loaded.fit.reg.kind == RegKind::laplace);
  CHECK(loaded.fit.reg.default_lambda == 0.01);
  std::filesystem::remove_all(dir);
}

TEST_CASE("parameter files round-trip exactly and verify the layout") {
  const auto dir = scratch_dir();
  Network network(make_graph(3, {{1, 2}, {1, 3}, {2, 3}},
                             {BasisKind::monomial, 1, 1, {}},
                             {BasisKind::monomial, 1, 1, {}}));
  Eigen::VectorXd params(12);
  params << -0.399999, 0.61917357, 0.69834347, -1.25328053, 0.45912744, 1.31524971,
      -0.79113519, -0.34445981, -0.67351648, -0.32938732, -1.45728517, 0.59830806;

  const std::string path = (dir / "params.json").string();
  save_params(path, network, params);
  const Eigen::VectorXd loaded = load_params(path, network);
  CHECK(loaded == params);

  // a graph with a different layout refuses the file
  Network smaller(make_graph(2, {{1, 2}}, {BasisKind::monomial, 1, 1, {}},
                             {BasisKind::monomial, 1, 1, {}}));
  try {
    load_params(path, smaller);
    FAIL("expected a layout mismatch");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("layout mismatch") != std::string::npos);
  }

  // same size, different edge set
  Network rewired(make_graph(3, {{1, 2}, {1, 3}, {3, 2}},
                             {BasisKind::monomial, 1, 1, {}},
                             {BasisKind::monomial, 1, 1, {}}));
  try {
    load_params(path, rewired);
    FAIL("expected a layout mismatch");
  } catch (const std::runtime_error& e) {
    // the stored 1 -> 3 slice sits at a different offset in the rewired layout
    CHECK(std::string(e.what()).find("layout mismatch") != std::string::npos);
    CHECK(std::string(e.what()).find("1 -> 3") != std::string::npos);
  }

  CHECK_THROWS_AS(save_params(path, network, Eigen::VectorXd::Zero(3)),
                  std::invalid_argument);
  std::filesystem::remove_all(dir);
}

TEST_CASE("points files accept an optional response column") {
  const auto dir = scratch_dir();
  write_file(dir / "plain.csv", "x1,x2\n0.5,1.5\n-0.25,0.75\n");
  const Eigen::MatrixXd plain = load_points((dir / "plain.csv").string(), 2);
  REQUIRE(plain.rows() == 2);
  CHECK(plain(0, 0) == 0.5);
  CHECK(plain(1, 1) == 0.75);

  write_file(dir / "with_y.csv", "x1,x2,y\n0.5,1.5,9.0\n");
  const Eigen::MatrixXd with_y = load_points((dir / "with_y.csv").string(), 2);
  CHECK(with_y.rows() == 1);
  CHECK(with_y.cols() == 2);
  CHECK(with_y(0, 1) == 1.5);

  write_file(dir / "empty.csv", "x1,x2\n");
  const Eigen::MatrixXd empty = load_points((dir / "empty.csv").string(), 2);
  CHECK(empty.rows() == 0);
  CHECK(empty.cols() == 2);

  write_file(dir / "ragged.csv", "x1,x2\n0.5\n");
  CHECK_THROWS_AS(load_points((dir / "ragged.csv").string(), 2), std::runtime_error);
  write_file(dir / "bad.csv", "x1\nzzz\n");
  CHECK_THROWS_AS(load_points((dir / "bad.csv").string(), 1), std::runtime_error);
  std::filesystem::remove_all(dir);
}
