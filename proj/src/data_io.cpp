#include "mfnet/data_io.hpp"

#include "mfnet/network.hpp"
#include "mfnet/rng.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mfnet {

namespace {

constexpr int kThreeModelNodes = 3;

Eigen::MatrixXd uniform_points(Rng& rng, int count, int dims) {
  Eigen::MatrixXd x(count, dims);
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < dims; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
  return x;
}

void check_counts(const std::vector<int>& counts, std::size_t expected) {
  if (counts.size() != expected) {
    std::ostringstream msg;
    msg << "expected " << expected << " per-node counts, got " << counts.size();
    throw std::invalid_argument(msg.str());
  }
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts[i] <= 0) {
      std::ostringstream msg;
      msg << "count for node " << (i + 1) << " must be positive";
      throw std::invalid_argument(msg.str());
    }
}

// Declared sigma for the nine-model family: the response scales the sample
// mean of N normals, so its noise magnitude is about rms(base) / sqrt(N)
// over the evaluation region.
double analytical_sigma(const AnalyticalModel& model) {
  const Eigen::MatrixXd grid = test_grid(2);
  double sum_sq = 0.0;
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    const double b = analytical_base(grid(i, 0), grid(i, 1), model.delta1, model.delta2);
    sum_sq += b * b;
  }
  return std::sqrt(sum_sq / static_cast<double>(grid.rows())) /
         std::sqrt(static_cast<double>(model.n_samples));
}

std::string trim(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_real(const std::string& text, const std::string& path, int line_no) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    std::ostringstream msg;
    msg << path << ":" << line_no << ": cannot parse '" << text << "' as a real number";
    throw std::runtime_error(msg.str());
  }
  return value;
}

}  // namespace

Family parse_family(const std::string& name) {
  if (name == "three_model") return Family::three_model;
  if (name == "analytical_noise") return Family::analytical_noise;
  if (name == "peer_truth") return Family::peer_truth;
  if (name == "chain_truth") return Family::chain_truth;
  throw std::invalid_argument(
      "unknown family '" + name +
      "'; valid: three_model, analytical_noise, peer_truth, chain_truth");
}

std::string family_name(Family family) {
  switch (family) {
    case Family::three_model: return "three_model";
    case Family::analytical_noise: return "analytical_noise";
    case Family::peer_truth: return "peer_truth";
    case Family::chain_truth: return "chain_truth";
  }
  throw std::invalid_argument("unknown family value");
}

GeneratedProblem generate_three_model(const std::vector<int>& counts, bool nested,
                                      std::uint64_t seed) {
  check_counts(counts, kThreeModelNodes);

  const BasisSpec linear{BasisKind::monomial, 1, 1, {}};
  GeneratedProblem out;
  out.graph = make_graph(kThreeModelNodes, {{1, 2}, {1, 3}, {2, 3}}, linear, linear);
  out.target = kThreeModelNodes;

  // Fixed truth: slices run beta_1, beta_2, beta_3, alpha_12, alpha_13,
  // alpha_23, each [offset, slope].
  out.true_params.resize(12);
  out.true_params << -0.399999, 0.61917357,    // beta_1
      0.69834347, -1.25328053,                 // beta_2
      0.45912744, 1.31524971,                  // beta_3
      -0.79113519, -0.34445981,                // alpha_12
      -0.67351648, -0.32938732,                // alpha_13
      -1.45728517, 0.59830806;                 // alpha_23

  const Network network(out.graph);
  Rng rng(seed);

  const int pool_size = *std::max_element(counts.begin(), counts.end());
  const Eigen::MatrixXd pool = uniform_points(rng, pool_size, 1);

  for (int node = 1; node <= kThreeModelNodes; ++node) {
    const int n = counts[static_cast<std::size_t>(node - 1)];
    NodeData data;
    data.node = node;
    data.x = nested ? pool.topRows(n).eval() : uniform_points(rng, n, 1);
    data.y = network.evaluate(out.true_params, node, data.x);
    data.sigma = 1.0;
    out.datasets.push_back(std::move(data));
  }

  out.truth_x = test_grid(1);
  out.truth_y = network.evaluate(out.true_params, out.target, out.truth_x);
  return out;
}

GeneratedProblem generate_analytical_noise(const std::vector<int>& counts,
                                           std::uint64_t seed, int node_degree,
                                           int edge_degree) {
  check_counts(counts, 9);

  const BasisSpec node_basis{BasisKind::monomial, node_degree, 2, {}};
  const BasisSpec edge_basis{BasisKind::monomial, edge_degree, 2, {}};
  GeneratedProblem out;
  out.graph = make_graph(
      9, {{1, 2}, {2, 3}, {3, 6}, {4, 5}, {5, 6}, {6, 9}, {7, 8}, {8, 9}},
      node_basis, edge_basis);
  out.target = 9;

  Rng rng(seed);
  for (int node = 1; node <= 9; ++node) {
    const AnalyticalModel model = analytical_model(node);
    const int n = counts[static_cast<std::size_t>(node - 1)];
    NodeData data;
    data.node = node;
    data.x = uniform_points(rng, n, 2);
    data.y.resize(n);
    for (int i = 0; i < n; ++i) {
      double mean = 0.0;
      for (int s = 0; s < model.n_samples; ++s) mean += rng.gaussian();
      mean /= static_cast<double>(model.n_samples);
      data.y[i] =
          analytical_base(data.x(i, 0), data.x(i, 1), model.delta1, model.delta2) *
          (1.0 + mean);
    }
    data.sigma = analytical_sigma(model);
    out.datasets.push_back(std::move(data));
  }

  out.truth_x = test_grid(2);
  out.truth_y.resize(out.truth_x.rows());
  for (Eigen::Index i = 0; i < out.truth_x.rows(); ++i)
    out.truth_y[i] = analytical_base(out.truth_x(i, 0), out.truth_x(i, 1), 1.0, 1.0);
  return out;
}

GeneratedProblem generate_family(Family family, int dims, int node_degree,
                                 int edge_degree, const std::vector<int>& counts,
                                 double noise_sigma, std::uint64_t seed) {
  if (family != Family::peer_truth && family != Family::chain_truth)
    throw std::invalid_argument("generate_family handles peer_truth and chain_truth");
  if (dims < 1) throw std::invalid_argument("dims must be at least 1");
  if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be nonnegative");

  const BasisSpec node_basis{BasisKind::monomial, node_degree, dims, {}};
  const BasisSpec edge_basis{BasisKind::monomial, edge_degree, dims, {}};

  GeneratedProblem out;
  if (family == Family::peer_truth) {
    check_counts(counts, 3);
    out.graph = make_graph(3, {{1, 3}, {2, 3}}, node_basis, edge_basis);
    out.target = 3;
  } else {
    if (counts.size() < 2)
      throw std::invalid_argument("chain_truth needs at least two node counts");
    check_counts(counts, counts.size());
    const int n_nodes = static_cast<int>(counts.size());
    std::vector<std::pair<int, int>> edges;
    for (int node = 1; node < n_nodes; ++node) edges.emplace_back(node, node + 1);
    out.graph = make_graph(n_nodes, edges, node_basis, edge_basis);
    out.target = n_nodes;
  }

  const Network network(out.graph);
  Rng rng(seed);

  out.true_params.resize(static_cast<Eigen::Index>(network.layout().size()));
  for (Eigen::Index i = 0; i < out.true_params.size(); ++i)
    out.true_params[i] = rng.gaussian();

  for (std::size_t i = 0; i < counts.size(); ++i) {
    const int node = static_cast<int>(i) + 1;
    NodeData data;
    data.node = node;
    data.x = uniform_points(rng, counts[i], dims);
    data.y = network.evaluate(out.true_params, node, data.x);
    if (noise_sigma > 0.0)
      for (Eigen::Index r = 0; r < data.y.size(); ++r)
        data.y[r] += noise_sigma * rng.gaussian();
    data.sigma = noise_sigma > 0.0 ? noise_sigma : 1.0;
    out.datasets.push_back(std::move(data));
  }

  out.truth_x = test_grid(dims);
  out.truth_y = network.evaluate(out.true_params, out.target, out.truth_x);
  return out;
}

GeneratedProblem generate(const GeneratorSpec& spec) {
  GeneratedProblem out;
  switch (spec.family) {
    case Family::three_model:
      out = generate_three_model(spec.counts, spec.nested, spec.seed);
      break;
    case Family::analytical_noise:
      out = generate_analytical_noise(spec.counts, spec.seed, spec.node_degree,
                                      spec.edge_degree);
      break;
    case Family::peer_truth:
    case Family::chain_truth:
      out = generate_family(spec.family, spec.dims, spec.node_degree,
                            spec.edge_degree, spec.counts, spec.noise_sigma,
                            spec.seed);
      break;
  }
  for (auto& data : out.datasets) {
    auto it = spec.noise_overrides.find(data.node);
    if (it != spec.noise_overrides.end()) {
      if (!(it->second > 0.0))
        throw std::invalid_argument("noise override must be positive");
      data.sigma = it->second;
    }
  }
  return out;
}

double analytical_base(double x1, double x2, double delta1, double delta2) {
  return 2.0 + (2.0 * std::pow(x1, 5) + 2.0 * std::pow(x2, 5)) * delta1 +
         3.0 * x1 * x2 + (x1 * x1 + x2 * x2 + 5.0 * x1 * x1 * x2 * x2) * delta2 +
         0.5 * x1 + 0.5 * x2;
}

AnalyticalModel analytical_model(int node) {
  if (node < 1 || node > 9)
    throw std::invalid_argument("analytical model ids run 1..9");
  static constexpr double kDelta1[9] = {0, 0, 0, 0, 0, 0, 1, 1, 1};
  static constexpr double kDelta2[9] = {0, 0, 0, 1, 1, 1, 1, 1, 1};
  static constexpr int kSamples[9] = {5, 10, 100, 5, 10, 100, 5, 10, 100};
  return {kDelta1[node - 1], kDelta2[node - 1], kSamples[node - 1]};
}

Eigen::MatrixXd test_grid(int dims) {
  if (dims < 1) throw std::invalid_argument("dims must be at least 1");
  int per_axis = 0;
  if (dims == 1)
    per_axis = 201;
  else if (dims == 2)
    per_axis = 41;
  else if (dims == 3)
    per_axis = 13;

  if (per_axis == 0) {
    Rng rng(0);  // fixed internal seed keeps high-dimensional grids stable
    return uniform_points(rng, 1024, dims);
  }

  Eigen::Index rows = 1;
  for (int d = 0; d < dims; ++d) rows *= per_axis;
  Eigen::MatrixXd grid(rows, dims);
  for (Eigen::Index r = 0; r < rows; ++r) {
    Eigen::Index rest = r;
    // Last axis varies fastest.
    for (int d = dims - 1; d >= 0; --d) {
      const auto idx = static_cast<int>(rest % per_axis);
      rest /= per_axis;
      grid(r, d) = -1.0 + 2.0 * static_cast<double>(idx) /
                              static_cast<double>(per_axis - 1);
    }
  }
  return grid;
}

NodeData load_dataset(const DatasetFile& file) {
  if (!(file.sigma > 0.0)) {
    std::ostringstream msg;
    msg << file.path << ": sigma for node " << file.node << " must be positive";
    throw std::runtime_error(msg.str());
  }
  std::ifstream in(file.path);
  if (!in) throw std::runtime_error("cannot open dataset file " + file.path);

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(file.path + ":1: missing header row");
  const std::vector<std::string> header = split_csv(line);
  if (header.size() < 2 || header.back() != "y") {
    std::ostringstream msg;
    msg << file.path << ":1: header must be x1,...,xd,y";
    throw std::runtime_error(msg.str());
  }
  const auto dims = static_cast<int>(header.size()) - 1;

  std::vector<double> xs;
  std::vector<double> ys;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv(line);
    if (static_cast<int>(fields.size()) != dims + 1) {
      std::ostringstream msg;
      msg << file.path << ":" << line_no << ": expected " << (dims + 1)
          << " fields, got " << fields.size();
      throw std::runtime_error(msg.str());
    }
    for (int d = 0; d < dims; ++d)
      xs.push_back(parse_real(fields[static_cast<std::size_t>(d)], file.path, line_no));
    ys.push_back(parse_real(fields.back(), file.path, line_no));
  }

  const auto n = static_cast<Eigen::Index>(ys.size());
  NodeData data;
  data.node = file.node;
  data.x.resize(n, dims);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int d = 0; d < dims; ++d)
      data.x(i, d) = xs[static_cast<std::size_t>(i) * dims + d];
  data.y = Eigen::Map<const Eigen::VectorXd>(ys.data(), n);
  data.sigma = file.sigma;
  return data;
}

std::vector<NodeData> load_datasets(const std::vector<DatasetFile>& files) {
  std::vector<NodeData> datasets;
  datasets.reserve(files.size());
  for (const auto& file : files) datasets.push_back(load_dataset(file));
  return datasets;
}

void save_dataset(const std::string& path, const NodeData& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file " + path);
  const auto dims = static_cast<int>(data.x.cols());
  for (int d = 1; d <= dims; ++d) out << "x" << d << ",";
  out << "y\n";
  char buf[40];
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    for (int d = 0; d < dims; ++d) {
      std::snprintf(buf, sizeof buf, "%.17g", data.x(i, d));
      out << buf << ",";
    }
    std::snprintf(buf, sizeof buf, "%.17g", data.y[i]);
    out << buf << "\n";
  }
  if (!out) throw std::runtime_error("short write on dataset file " + path);
}

ErrorEntry error_entry(const Eigen::Ref<const Eigen::VectorXd>& truth,
                       const Eigen::Ref<const Eigen::VectorXd>& pred) {
  if (truth.size() != pred.size())
    throw std::invalid_argument("truth and prediction lengths differ");
  const double truth_norm = truth.norm();
  if (truth_norm == 0.0)
    throw std::invalid_argument("truth vector has zero norm; relative error undefined");
  ErrorEntry entry;
  entry.rel_rmse = (truth - pred).norm() / truth_norm;
  entry.max_abs = (truth - pred).cwiseAbs().maxCoeff();
  entry.count = static_cast<int>(truth.size());
  return entry;
}

}  // namespace mfnet
