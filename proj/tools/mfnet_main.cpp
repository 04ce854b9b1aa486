#include "mfnet/data_io.hpp"
#include "mfnet/experiments.hpp"
#include "mfnet/formats.hpp"
#include "mfnet/network.hpp"
#include "mfnet/optimize.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using mfnet::FitConfig;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNoConvergence = 2;
constexpr int kExitGradCheck = 3;

std::vector<int> parse_counts(const std::string& text) {
  std::vector<int> counts;
  std::istringstream stream(text);
  std::string field;
  while (std::getline(stream, field, '/')) {
    try {
      counts.push_back(std::stoi(field));
    } catch (const std::exception&) {
      throw std::runtime_error("cannot parse counts entry '" + field +
                               "'; expected integers like 2/3/3");
    }
  }
  if (counts.empty()) throw std::runtime_error("counts must not be empty");
  return counts;
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> values;
  std::istringstream stream(text);
  std::string field;
  while (std::getline(stream, field, ',')) {
    try {
      values.push_back(std::stod(field));
    } catch (const std::exception&) {
      throw std::runtime_error("cannot parse '" + field + "' as a real number");
    }
  }
  if (values.empty()) throw std::runtime_error("list must not be empty");
  return values;
}

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << value.dump(2) << "\n";
}

// Shared fit/gradcheck flag block; only flags the user passed override the
// manifest's settings.
struct FitFlags {
  CLI::Option* reg = nullptr;
  CLI::Option* lambda = nullptr;
  CLI::Option* max_iters = nullptr;
  CLI::Option* grad_tol = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* restarts = nullptr;
  CLI::Option* init = nullptr;

  std::string reg_value = "none";
  double lambda_value = 0.0;
  int max_iters_value = 500;
  double grad_tol_value = 1e-8;
  std::uint64_t seed_value = 0;
  int restarts_value = 0;
  std::string init_value = "gaussian";

  void attach(CLI::App* cmd) {
    reg = cmd->add_option("--reg", reg_value, "Regularization: none, l2, or l1");
    lambda = cmd->add_option("--lambda", lambda_value, "Regularization weight");
    max_iters = cmd->add_option("--max-iters", max_iters_value, "Iteration cap");
    grad_tol = cmd->add_option("--grad-tol", grad_tol_value,
                               "Stationarity tolerance (infinity norm)");
    seed = cmd->add_option("--seed", seed_value, "Initialization seed");
    restarts = cmd->add_option("--restarts", restarts_value,
                               "Extra seeded starts; best objective wins");
    init = cmd->add_option("--init", init_value,
                           "Initialization: zeros, gaussian, or edge-one");
  }

  void apply(FitConfig& config) const {
    if (reg->count() > 0) config.reg.kind = mfnet::parse_reg_kind(reg_value);
    if (lambda->count() > 0) config.reg.default_lambda = lambda_value;
    if (max_iters->count() > 0) config.max_iters = max_iters_value;
    if (grad_tol->count() > 0) config.grad_tol = grad_tol_value;
    if (seed->count() > 0) config.seed = seed_value;
    if (restarts->count() > 0) config.restarts = restarts_value;
    if (init->count() > 0) config.init = mfnet::parse_init_scheme(init_value);
  }
};

int cmd_fit(const std::string& manifest_path, const FitFlags& flags,
            const std::string& output_override) {
  mfnet::Manifest manifest = mfnet::load_manifest(manifest_path);
  flags.apply(manifest.fit);

  const mfnet::Network network(manifest.graph);
  const std::vector<mfnet::NodeData> datasets = mfnet::load_datasets(manifest.data);

  const mfnet::FitResult result =
      manifest.fit.reg.kind == mfnet::RegKind::laplace
          ? mfnet::fit_sparse(network, datasets, manifest.fit)
          : mfnet::fit(network, datasets, manifest.fit);

  const std::filesystem::path out_dir =
      output_override.empty() ? manifest.output_dir : output_override;
  std::filesystem::create_directories(out_dir);

  mfnet::save_params((out_dir / "params.json").string(), network, result.params);
  {
    std::ofstream trace(out_dir / "trace.csv");
    if (!trace) throw std::runtime_error("cannot write " + (out_dir / "trace.csv").string());
    trace << "iter,objective\n";
    for (std::size_t i = 0; i < result.objective_trace.size(); ++i)
      trace << i << "," << format_real(result.objective_trace[i]) << "\n";
  }
  write_json(out_dir / "report.json",
             nlohmann::json{{"converged", result.converged},
                            {"reason", result.reason},
                            {"iterations", result.iterations},
                            {"grad_norm_final", result.grad_norm_final},
                            {"objective_final", result.objective_trace.back()},
                            {"n_params", result.params.size()}});

  if (manifest.truth) {
    const mfnet::NodeData truth = mfnet::load_dataset(
        {manifest.truth->node, manifest.truth->path, 1.0});
    const Eigen::VectorXd pred =
        network.evaluate(result.params, manifest.truth->node, truth.x);
    const mfnet::ErrorEntry entry = mfnet::error_entry(truth.y, pred);
    write_json(out_dir / "error_report.json",
               nlohmann::json{{"node", manifest.truth->node},
                              {"rel_rmse", entry.rel_rmse},
                              {"max_abs", entry.max_abs},
                              {"count", entry.count}});
  }

  std::cout << (result.converged ? "converged" : "not converged") << " ("
            << result.reason << ") after " << result.iterations
            << " iterations, objective " << format_real(result.objective_trace.back())
            << "\n";
  return result.converged ? kExitOk : kExitNoConvergence;
}

int cmd_predict(const std::string& graph_path, const std::string& params_path,
                int node, const std::string& points_path,
                const std::string& output_path) {
  const mfnet::GraphSpec graph = mfnet::load_graph(graph_path);
  const mfnet::Network network(graph);
  const Eigen::VectorXd params = mfnet::load_params(params_path, network);
  const Eigen::MatrixXd points =
      mfnet::load_points(points_path, network.input_dim());
  const Eigen::VectorXd pred =
      points.rows() == 0 ? Eigen::VectorXd()
                         : network.evaluate(params, node, points);

  mfnet::NodeData out;
  out.node = node;
  out.x = points;
  out.y = pred;
  mfnet::save_dataset(output_path, out);
  std::cout << "wrote " << pred.size() << " predictions to " << output_path << "\n";
  return kExitOk;
}

int cmd_gradcheck(const std::string& manifest_path, const FitFlags& flags,
                  double fd_step, double threshold,
                  const std::string& params_path) {
  mfnet::Manifest manifest = mfnet::load_manifest(manifest_path);
  flags.apply(manifest.fit);

  const mfnet::Network network(manifest.graph);
  const std::vector<mfnet::NodeData> datasets = mfnet::load_datasets(manifest.data);

  const Eigen::VectorXd params =
      params_path.empty()
          ? network.init_params(manifest.fit.init, manifest.fit.seed,
                                manifest.fit.init_scale)
          : mfnet::load_params(params_path, network);

  const mfnet::GradCheckReport report =
      mfnet::gradient_check(network, params, datasets, fd_step);
  std::cout << "max relative discrepancy " << format_real(report.max_rel_discrepancy)
            << " at coordinate " << report.worst_coordinate << "\n";
  return report.max_rel_discrepancy <= threshold ? kExitOk : kExitGradCheck;
}

int cmd_generate(const std::string& family_name, const std::string& counts_text,
                 std::uint64_t seed, bool nested, int dims, int node_degree,
                 int edge_degree, double noise, const std::string& output_dir) {
  mfnet::GeneratorSpec spec;
  spec.family = mfnet::parse_family(family_name);
  spec.nested = nested;
  spec.seed = seed;
  spec.dims = dims;
  spec.node_degree = node_degree;
  spec.edge_degree = edge_degree;
  spec.noise_sigma = noise;

  if (!counts_text.empty()) {
    spec.counts = parse_counts(counts_text);
  } else {
    switch (spec.family) {
      case mfnet::Family::three_model: spec.counts = {2, 3, 3}; break;
      case mfnet::Family::analytical_noise: spec.counts.assign(9, 50); break;
      case mfnet::Family::peer_truth: spec.counts = {20, 5, 2}; break;
      case mfnet::Family::chain_truth: spec.counts = {20, 5, 2}; break;
    }
  }

  const mfnet::GeneratedProblem problem = mfnet::generate(spec);

  const std::filesystem::path dir(output_dir);
  std::filesystem::create_directories(dir);

  mfnet::save_graph((dir / "graph.json").string(), problem.graph);

  mfnet::Manifest manifest;
  manifest.graph = problem.graph;
  for (const auto& data : problem.datasets) {
    const std::string name = "node" + std::to_string(data.node) + ".csv";
    mfnet::save_dataset((dir / name).string(), data);
    manifest.data.push_back({data.node, name, data.sigma});
  }

  if (problem.truth_y.size() > 0) {
    mfnet::NodeData truth;
    truth.node = problem.target;
    truth.x = problem.truth_x;
    truth.y = problem.truth_y;
    mfnet::save_dataset((dir / "truth.csv").string(), truth);
    manifest.truth = mfnet::TruthRef{problem.target, "truth.csv"};
  }

  manifest.fit.seed = seed;
  manifest.output_dir = ".";
  mfnet::save_manifest((dir / "manifest.json").string(), manifest, "graph.json");

  std::cout << "wrote " << problem.datasets.size() << " node files to " << output_dir
            << "\n";
  return kExitOk;
}

void print_summary(const mfnet::ExperimentResult& result) {
  std::cout << result.name << ": " << result.records.size() << " trials\n";
  for (const auto& [key, value] : result.summary)
    std::cout << "  " << key << " = " << format_real(value) << "\n";
  std::cerr << "runtime " << result.runtime_seconds << " s\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multifidelity surrogate networks: build, train, evaluate"};
  app.require_subcommand(1);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Train parameters from a manifest");
  std::string fit_manifest;
  std::string fit_output;
  fit_cmd->add_option("manifest", fit_manifest, "Manifest file")->required();
  fit_cmd->add_option("--output", fit_output, "Output directory override");
  FitFlags fit_flags;
  fit_flags.attach(fit_cmd);

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Evaluate a fitted network");
  std::string predict_graph;
  std::string predict_params;
  std::string predict_points;
  std::string predict_output = "predictions.csv";
  int predict_node = 0;
  predict_cmd->add_option("--graph", predict_graph, "Graph file")->required();
  predict_cmd->add_option("--params", predict_params, "Parameter file")->required();
  predict_cmd->add_option("--node", predict_node, "Node id to evaluate")->required();
  predict_cmd->add_option("--points", predict_points, "Points file (x columns)")
      ->required();
  predict_cmd->add_option("--output", predict_output, "Predictions file");

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck",
                                      "Audit sweep gradients against differences");
  std::string grad_manifest;
  std::string grad_params;
  double fd_step = 1e-6;
  double threshold = 1e-5;
  grad_cmd->add_option("manifest", grad_manifest, "Manifest file")->required();
  grad_cmd->add_option("--fd-step", fd_step, "Central-difference step");
  grad_cmd->add_option("--threshold", threshold, "Pass/fail cutoff");
  grad_cmd->add_option("--params", grad_params,
                       "Check at these parameters instead of the seeded start");
  FitFlags grad_flags;
  grad_flags.attach(grad_cmd);

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic problem to disk");
  std::string gen_family;
  std::string gen_counts;
  std::string gen_output = "generated";
  std::uint64_t gen_seed = 0;
  bool gen_nested = false;
  int gen_dims = 1;
  int gen_node_degree = 1;
  int gen_edge_degree = 1;
  double gen_noise = 0.0;
  gen_cmd->add_option("--family", gen_family,
                      "three_model, analytical_noise, peer_truth, or chain_truth")
      ->required();
  gen_cmd->add_option("--counts", gen_counts, "Per-node sample counts, e.g. 2/3/3");
  gen_cmd->add_option("--seed", gen_seed, "Generator seed");
  gen_cmd->add_flag("--nested", gen_nested, "Draw point sets as prefixes of one pool");
  gen_cmd->add_option("--dims", gen_dims, "Input dimension (peer/chain families)");
  gen_cmd->add_option("--node-degree", gen_node_degree, "Bias-function degree");
  gen_cmd->add_option("--edge-degree", gen_edge_degree, "Weighting-function degree");
  gen_cmd->add_option("--noise", gen_noise, "Additive data noise (peer/chain)");
  gen_cmd->add_option("--output", gen_output, "Output directory");

  // experiment
  auto* exp_cmd = app.add_subcommand("experiment", "Run a scripted study");
  exp_cmd->require_subcommand(1);

  auto* three_cmd = exp_cmd->add_subcommand("three-model",
                                            "True vs chain recovery study");
  mfnet::ThreeModelOptions three_options;
  std::string three_counts = "2/3/3";
  three_cmd->add_option("--trials,--seeds", three_options.trials, "Trial count");
  three_cmd->add_option("--seed", three_options.master_seed, "Master seed");
  three_cmd->add_option("--counts", three_counts, "Per-node counts a/b/c");
  three_cmd->add_flag("!--no-nested", three_options.nested, "Draw points independently");
  three_cmd->add_option("--restarts", three_options.restarts, "Starts per fit minus one");
  three_cmd->add_option("--max-iters", three_options.max_iters, "Iteration cap");
  three_cmd->add_option("--ridge", three_options.ridge,
                        "Quadratic penalty on every parameter block");
  three_cmd->add_option("--output", three_options.output_dir, "Output directory")
      ->required();

  auto* noise_cmd = exp_cmd->add_subcommand("noise-orderings",
                                            "Nine-model ordering comparison");
  mfnet::NoiseOrderingOptions noise_options;
  std::string noise_counts;
  noise_cmd->add_option("--trials,--seeds", noise_options.trials, "Trial count");
  noise_cmd->add_option("--seed", noise_options.master_seed, "Master seed");
  noise_cmd->add_option("--counts", noise_counts, "Nine per-node counts a/b/.../i");
  noise_cmd->add_option("--node-degree", noise_options.node_degree, "Bias degree");
  noise_cmd->add_option("--edge-degree", noise_options.edge_degree, "Weighting degree");
  noise_cmd->add_option("--restarts", noise_options.restarts, "Starts per fit minus one");
  noise_cmd->add_option("--max-iters", noise_options.max_iters, "Iteration cap");
  noise_cmd->add_option("--ridge", noise_options.ridge,
                        "Quadratic penalty on every parameter block");
  noise_cmd->add_option("--output", noise_options.output_dir, "Output directory")
      ->required();

  auto* topo_cmd = exp_cmd->add_subcommand("topology",
                                           "Subsampled pool ratio histograms");
  mfnet::TopologyOptions topo_options;
  std::string topo_counts = "20/5/2";
  std::string topo_pool_manifest;
  topo_cmd->add_option("--trials,--seeds", topo_options.trials, "Trial count");
  topo_cmd->add_option("--seed", topo_options.master_seed, "Master seed");
  topo_cmd->add_option("--counts", topo_counts, "Training counts a/b/c per trial");
  topo_cmd->add_option("--pool-size", topo_options.pool_per_node,
                       "Generated pool samples per node");
  topo_cmd->add_option("--truth-seed", topo_options.truth_seed, "Pool generation seed");
  topo_cmd->add_option("--noise", topo_options.noise_sigma, "Pool data noise");
  topo_cmd->add_option("--dims", topo_options.dims, "Input dimension");
  topo_cmd->add_option("--node-degree", topo_options.node_degree, "Bias degree");
  topo_cmd->add_option("--edge-degree", topo_options.edge_degree, "Weighting degree");
  topo_cmd->add_option("--restarts", topo_options.restarts, "Starts per fit minus one");
  topo_cmd->add_option("--max-iters", topo_options.max_iters, "Iteration cap");
  topo_cmd->add_option("--ridge", topo_options.ridge,
                       "Quadratic penalty on every parameter block");
  topo_cmd->add_option("--pool-manifest", topo_pool_manifest,
                       "Ingest the pool from this manifest's data section");
  topo_cmd->add_option("--output", topo_options.output_dir, "Output directory")
      ->required();

  auto* sparse_cmd = exp_cmd->add_subcommand("sparsity",
                                             "Edge pruning across a lambda grid");
  mfnet::SparsityOptions sparse_options;
  std::string sparse_lambda_grid = "0,1e-4,1e-3,1e-2";
  std::string sparse_high = "2,4,8";
  std::string sparse_low = "10/10";
  sparse_cmd->add_option("--trials,--seeds", sparse_options.trials, "Trial count");
  sparse_cmd->add_option("--seed", sparse_options.master_seed, "Master seed");
  sparse_cmd->add_option("--truth-seed", sparse_options.truth_seed, "Truth draw seed");
  sparse_cmd->add_option("--lambda-grid", sparse_lambda_grid,
                         "Comma-separated penalty weights");
  sparse_cmd->add_option("--high-counts", sparse_high,
                         "Comma-separated node-3 sample counts");
  sparse_cmd->add_option("--low-counts", sparse_low, "Node-1/node-2 counts a/b");
  sparse_cmd->add_option("--noise", sparse_options.noise_sigma, "Additive data noise");
  sparse_cmd->add_option("--dim", sparse_options.dim, "Input dimension (at least 2)");
  sparse_cmd->add_option("--node-degree", sparse_options.node_degree, "Bias degree");
  sparse_cmd->add_option("--high-fi-degree", sparse_options.high_fi_degree,
                         "Node-3 bias degree (below --node-degree)");
  sparse_cmd->add_option("--max-iters", sparse_options.max_iters, "Iteration cap");
  sparse_cmd->add_option("--output", sparse_options.output_dir, "Output directory")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit_manifest, fit_flags, fit_output);
    if (predict_cmd->parsed())
      return cmd_predict(predict_graph, predict_params, predict_node,
                         predict_points, predict_output);
    if (grad_cmd->parsed())
      return cmd_gradcheck(grad_manifest, grad_flags, fd_step, threshold, grad_params);
    if (gen_cmd->parsed())
      return cmd_generate(gen_family, gen_counts, gen_seed, gen_nested, gen_dims,
                          gen_node_degree, gen_edge_degree, gen_noise, gen_output);
    if (exp_cmd->parsed()) {
      if (three_cmd->parsed()) {
        three_options.counts = parse_counts(three_counts);
        print_summary(mfnet::run_three_model(three_options));
        return kExitOk;
      }
      if (noise_cmd->parsed()) {
        if (!noise_counts.empty()) noise_options.counts = parse_counts(noise_counts);
        print_summary(mfnet::run_noise_orderings(noise_options));
        return kExitOk;
      }
      if (topo_cmd->parsed()) {
        topo_options.counts = parse_counts(topo_counts);
        if (!topo_pool_manifest.empty())
          topo_options.pool =
              mfnet::load_datasets(mfnet::load_manifest(topo_pool_manifest).data);
        print_summary(mfnet::run_topology_histogram(topo_options));
        return kExitOk;
      }
      if (sparse_cmd->parsed()) {
        const std::vector<double> grid = parse_real_list(sparse_lambda_grid);
        sparse_options.lambda_grid = grid;
        sparse_options.high_fi_counts.clear();
        for (const double v : parse_real_list(sparse_high))
          sparse_options.high_fi_counts.push_back(static_cast<int>(v));
        sparse_options.low_fi_counts = parse_counts(sparse_low);
        print_summary(mfnet::run_sparsity_study(sparse_options));
        return kExitOk;
      }
    }
    std::cerr << "no command selected\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
