#include "mfnet/formats.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mfnet {

namespace {

using nlohmann::json;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& err) {
    throw std::runtime_error(path + ": " + err.what());
  }
}

void write_json_file(const std::string& path, const json& value) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << value.dump(2) << "\n";
  if (!out) throw std::runtime_error("short write on " + path);
}

json basis_to_json(const BasisSpec& spec) {
  json j{{"kind", spec.kind == BasisKind::monomial ? "monomial" : "legendre"},
         {"degree", spec.degree},
         {"dim", spec.dim}};
  if (!spec.bounds.empty()) {
    json bounds = json::array();
    for (const auto& interval : spec.bounds)
      bounds.push_back(json::array({interval.lo, interval.hi}));
    j["bounds"] = bounds;
  }
  return j;
}

BasisSpec basis_from_json(const json& j, const std::string& where) {
  BasisSpec spec;
  const std::string kind = j.value("kind", "monomial");
  if (kind == "monomial")
    spec.kind = BasisKind::monomial;
  else if (kind == "legendre")
    spec.kind = BasisKind::legendre;
  else
    throw std::runtime_error(where + ": unknown basis kind '" + kind + "'");
  spec.degree = j.value("degree", 1);
  spec.dim = j.value("dim", 1);
  if (j.contains("bounds")) {
    for (const auto& pair : j.at("bounds")) {
      if (!pair.is_array() || pair.size() != 2)
        throw std::runtime_error(where + ": each bound must be a [lo, hi] pair");
      spec.bounds.push_back({pair[0].get<double>(), pair[1].get<double>()});
    }
  }
  return spec;
}

GraphSpec graph_from_json(const json& j, const std::string& where) {
  GraphSpec spec;
  if (!j.contains("nodes"))
    throw std::runtime_error(where + ": graph needs a 'nodes' list");
  for (const auto& node : j.at("nodes")) {
    NodeSpec ns;
    ns.id = node.at("id").get<int>();
    if (node.contains("basis")) ns.basis = basis_from_json(node.at("basis"), where);
    spec.nodes.push_back(std::move(ns));
  }
  for (const auto& edge : j.value("edges", json::array())) {
    EdgeSpec es;
    const auto [from, to] = parse_edge_string(edge.at("edge").get<std::string>());
    es.from = from;
    es.to = to;
    if (edge.contains("basis")) es.basis = basis_from_json(edge.at("basis"), where);
    spec.edges.push_back(std::move(es));
  }
  spec.target = j.value("target", spec.nodes.empty() ? 0 : spec.nodes.back().id);
  return spec;
}

json graph_to_json(const GraphSpec& spec) {
  json nodes = json::array();
  for (const auto& node : spec.nodes)
    nodes.push_back({{"id", node.id}, {"basis", basis_to_json(node.basis)}});
  json edges = json::array();
  for (const auto& edge : spec.edges)
    edges.push_back({{"edge", format_edge_string(edge.from, edge.to)},
                     {"basis", basis_to_json(edge.basis)}});
  return json{{"nodes", nodes}, {"edges", edges}, {"target", spec.target}};
}

FitConfig fit_from_json(const json& j, const std::string& where) {
  FitConfig config;
  config.max_iters = j.value("max_iters", config.max_iters);
  config.grad_tol = j.value("grad_tol", config.grad_tol);
  config.step_tol = j.value("step_tol", config.step_tol);
  config.init = parse_init_scheme(j.value("init", "gaussian"));
  config.init_scale = j.value("init_scale", config.init_scale);
  config.seed = j.value("seed", config.seed);
  config.restarts = j.value("restarts", config.restarts);
  config.reg.kind = parse_reg_kind(j.value("reg", "none"));
  config.reg.default_lambda = j.value("lambda", config.reg.default_lambda);
  if (j.contains("lambda_nodes"))
    for (const auto& [key, value] : j.at("lambda_nodes").items())
      config.reg.lambda_node[std::stoi(key)] = value.get<double>();
  if (j.contains("lambda_edges"))
    for (const auto& [key, value] : j.at("lambda_edges").items())
      config.reg.lambda_edge[parse_edge_string(key)] = value.get<double>();
  (void)where;
  return config;
}

json fit_to_json(const FitConfig& config) {
  json j{{"max_iters", config.max_iters},
         {"grad_tol", config.grad_tol},
         {"step_tol", config.step_tol},
         {"init", init_scheme_name(config.init)},
         {"init_scale", config.init_scale},
         {"seed", config.seed},
         {"restarts", config.restarts},
         {"reg", reg_kind_name(config.reg.kind)},
         {"lambda", config.reg.default_lambda}};
  if (!config.reg.lambda_node.empty()) {
    json nodes = json::object();
    for (const auto& [id, value] : config.reg.lambda_node)
      nodes[std::to_string(id)] = value;
    j["lambda_nodes"] = nodes;
  }
  if (!config.reg.lambda_edge.empty()) {
    json edges = json::object();
    for (const auto& [key, value] : config.reg.lambda_edge)
      edges[format_edge_string(key.first, key.second)] = value;
    j["lambda_edges"] = edges;
  }
  return j;
}

std::string resolve(const std::filesystem::path& base, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute()) return p.string();
  return (base / p).string();
}

}  // namespace

InitScheme parse_init_scheme(const std::string& name) {
  if (name == "zeros") return InitScheme::zeros;
  if (name == "gaussian") return InitScheme::gaussian;
  if (name == "edge-one") return InitScheme::constant_edge_one;
  throw std::invalid_argument("unknown init scheme '" + name +
                              "'; valid: zeros, gaussian, edge-one");
}

std::string init_scheme_name(InitScheme scheme) {
  switch (scheme) {
    case InitScheme::zeros: return "zeros";
    case InitScheme::gaussian: return "gaussian";
    case InitScheme::constant_edge_one: return "edge-one";
  }
  throw std::invalid_argument("unknown init scheme value");
}

RegKind parse_reg_kind(const std::string& name) {
  if (name == "none") return RegKind::none;
  if (name == "l2") return RegKind::gaussian;
  if (name == "l1") return RegKind::laplace;
  throw std::invalid_argument("unknown regularization '" + name +
                              "'; valid: none, l2, l1");
}

std::string reg_kind_name(RegKind kind) {
  switch (kind) {
    case RegKind::none: return "none";
    case RegKind::gaussian: return "l2";
    case RegKind::laplace: return "l1";
  }
  throw std::invalid_argument("unknown regularization value");
}

std::pair<int, int> parse_edge_string(const std::string& text) {
  const auto arrow = text.find("->");
  if (arrow == std::string::npos)
    throw std::invalid_argument("edge '" + text + "' is not in 'from -> to' form");
  try {
    const int from = std::stoi(text.substr(0, arrow));
    const int to = std::stoi(text.substr(arrow + 2));
    return {from, to};
  } catch (const std::exception&) {
    throw std::invalid_argument("edge '" + text + "' is not in 'from -> to' form");
  }
}

std::string format_edge_string(int from, int to) {
  std::ostringstream out;
  out << from << " -> " << to;
  return out.str();
}

GraphSpec load_graph(const std::string& path) {
  return graph_from_json(read_json_file(path), path);
}

void save_graph(const std::string& path, const GraphSpec& spec) {
  write_json_file(path, graph_to_json(spec));
}

Manifest load_manifest(const std::string& path) {
  const json j = read_json_file(path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();

  Manifest manifest;
  if (!j.contains("graph"))
    throw std::runtime_error(path + ": manifest needs a 'graph' entry");
  const json& graph = j.at("graph");
  if (graph.is_string())
    manifest.graph = load_graph(resolve(base, graph.get<std::string>()));
  else
    manifest.graph = graph_from_json(graph, path);

  for (const auto& entry : j.value("data", json::array())) {
    DatasetFile file;
    file.node = entry.at("node").get<int>();
    file.path = resolve(base, entry.at("path").get<std::string>());
    file.sigma = entry.value("sigma", 1.0);
    manifest.data.push_back(std::move(file));
  }

  if (j.contains("fit")) manifest.fit = fit_from_json(j.at("fit"), path);
  manifest.output_dir = resolve(base, j.value("output_dir", "."));
  if (j.contains("truth")) {
    TruthRef truth;
    truth.node = j.at("truth").at("node").get<int>();
    truth.path = resolve(base, j.at("truth").at("path").get<std::string>());
    manifest.truth = truth;
  }
  return manifest;
}

void save_manifest(const std::string& path, const Manifest& manifest,
                   const std::string& graph_path) {
  json data = json::array();
  for (const auto& file : manifest.data)
    data.push_back({{"node", file.node}, {"path", file.path}, {"sigma", file.sigma}});
  json j{{"graph", graph_path},
         {"data", data},
         {"fit", fit_to_json(manifest.fit)},
         {"output_dir", manifest.output_dir}};
  if (manifest.truth)
    j["truth"] = {{"node", manifest.truth->node}, {"path", manifest.truth->path}};
  write_json_file(path, j);
}

void save_params(const std::string& path, const Network& network,
                 const Eigen::Ref<const Eigen::VectorXd>& params) {
  const ParamLayout& layout = network.layout();
  if (params.size() != static_cast<Eigen::Index>(layout.size()))
    throw std::invalid_argument("parameter vector does not match the network layout");

  json index_map = json::array();
  for (const auto& node : network.spec().nodes) {
    const Slice slice = layout.node_slice(node.id);
    index_map.push_back({{"slice", "node"},
                         {"id", node.id},
                         {"offset", slice.offset},
                         {"length", slice.length}});
  }
  for (const auto& edge : network.spec().edges) {
    const Slice slice = layout.edge_slice(edge.from, edge.to);
    index_map.push_back({{"slice", "edge"},
                         {"edge", format_edge_string(edge.from, edge.to)},
                         {"offset", slice.offset},
                         {"length", slice.length}});
  }

  json values = json::array();
  for (Eigen::Index i = 0; i < params.size(); ++i) values.push_back(params[i]);
  write_json_file(path,
                  json{{"size", params.size()}, {"index_map", index_map}, {"values", values}});
}

Eigen::VectorXd load_params(const std::string& path, const Network& network) {
  const json j = read_json_file(path);
  const ParamLayout& layout = network.layout();

  const auto size = j.at("size").get<Eigen::Index>();
  if (size != static_cast<Eigen::Index>(layout.size())) {
    std::ostringstream msg;
    msg << path << ": layout mismatch: file has " << size << " parameters, graph needs "
        << layout.size();
    throw std::runtime_error(msg.str());
  }

  for (const auto& entry : j.at("index_map")) {
    const std::string kind = entry.at("slice").get<std::string>();
    Slice expected{};
    std::string label;
    if (kind == "node") {
      const int id = entry.at("id").get<int>();
      label = "node " + std::to_string(id);
      try {
        expected = layout.node_slice(id);
      } catch (const GraphError&) {
        throw std::runtime_error(path + ": layout mismatch: graph has no " + label);
      }
    } else if (kind == "edge") {
      const auto [from, to] = parse_edge_string(entry.at("edge").get<std::string>());
      label = "edge " + format_edge_string(from, to);
      try {
        expected = layout.edge_slice(from, to);
      } catch (const GraphError&) {
        throw std::runtime_error(path + ": layout mismatch: graph has no " + label);
      }
    } else {
      throw std::runtime_error(path + ": index map entries must be node or edge slices");
    }
    if (entry.at("offset").get<int>() != expected.offset ||
        entry.at("length").get<int>() != expected.length)
      throw std::runtime_error(path + ": layout mismatch on " + label);
  }

  const json& values = j.at("values");
  if (static_cast<Eigen::Index>(values.size()) != size)
    throw std::runtime_error(path + ": values array does not match declared size");
  Eigen::VectorXd params(size);
  for (Eigen::Index i = 0; i < size; ++i)
    params[i] = values[static_cast<std::size_t>(i)].get<double>();
  return params;
}

Eigen::MatrixXd load_points(const std::string& path, int dims) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open points file " + path);

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ":1: missing header row");

  std::vector<double> values;
  int rows = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string trimmed = line;
    while (!trimmed.empty() &&
           (trimmed.back() == '\r' || trimmed.back() == ' ' || trimmed.back() == '\t'))
      trimmed.pop_back();
    if (trimmed.empty()) continue;

    std::istringstream stream(trimmed);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (static_cast<int>(fields.size()) != dims &&
        static_cast<int>(fields.size()) != dims + 1) {
      std::ostringstream msg;
      msg << path << ":" << line_no << ": expected " << dims << " coordinates, got "
          << fields.size() << " fields";
      throw std::runtime_error(msg.str());
    }
    for (int d = 0; d < dims; ++d) {
      try {
        values.push_back(std::stod(fields[static_cast<std::size_t>(d)]));
      } catch (const std::exception&) {
        std::ostringstream msg;
        msg << path << ":" << line_no << ": cannot parse '"
            << fields[static_cast<std::size_t>(d)] << "' as a real number";
        throw std::runtime_error(msg.str());
      }
    }
    ++rows;
  }

  Eigen::MatrixXd points(rows, dims);
  for (int r = 0; r < rows; ++r)
    for (int d = 0; d < dims; ++d)
      points(r, d) = values[static_cast<std::size_t>(r) * dims + d];
  return points;
}

}  // namespace mfnet
