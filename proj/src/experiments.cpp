#include "mfnet/experiments.hpp"

#include "mfnet/network.hpp"
#include "mfnet/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#ifndef MFNET_VERSION
#define MFNET_VERSION "dev"
#endif

namespace mfnet {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<TrialOutcome> run_trials(int n,
                                     const std::function<TrialOutcome(int)>& trial) {
  std::vector<TrialOutcome> out(static_cast<std::size_t>(n));
  const int width = std::min(thread_budget(), n);
  if (width <= 1) {
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = trial(i);
    return out;
  }

  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        out[static_cast<std::size_t>(i)] = trial(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(width));
  for (int w = 0; w < width; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

void check_uniform_keys(const std::vector<TrialOutcome>& records) {
  if (records.empty()) return;
  for (const auto& record : records)
    if (record.metrics.size() != records.front().metrics.size() ||
        !std::equal(record.metrics.begin(), record.metrics.end(),
                    records.front().metrics.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; }))
      throw std::logic_error("trial records must share one metric key set");
}

std::map<std::string, double> summarize(const std::vector<TrialOutcome>& records,
                                        const std::vector<std::string>& ratio_keys) {
  check_uniform_keys(records);
  std::map<std::string, double> summary;
  if (records.empty()) return summary;
  for (const auto& [key, unused] : records.front().metrics) {
    (void)unused;
    std::vector<double> values;
    values.reserve(records.size());
    for (const auto& record : records) values.push_back(record.metrics.at(key));
    summary["median:" + key] = median(values);
  }
  for (const auto& key : ratio_keys) {
    int below = 0;
    for (const auto& record : records)
      if (record.metrics.at(key) < 1.0) ++below;
    summary["frac_lt_1:" + key] =
        static_cast<double>(below) / static_cast<double>(records.size());
  }
  return summary;
}

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string lambda_label(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", value);
  return buf;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

struct ScoredFit {
  Eigen::VectorXd params;
  double rel_rmse = 0.0;
  double mse = 0.0;
  Eigen::VectorXd pred;
};

ScoredFit fit_and_score(const Network& network, const std::vector<NodeData>& datasets,
                        const FitConfig& config,
                        const Eigen::Ref<const Eigen::MatrixXd>& truth_x,
                        const Eigen::Ref<const Eigen::VectorXd>& truth_y, int target) {
  const FitResult result = fit(network, datasets, config);
  ScoredFit scored;
  scored.params = result.params;
  scored.pred = network.evaluate(result.params, target, truth_x);
  scored.rel_rmse = error_entry(truth_y, scored.pred).rel_rmse;
  scored.mse = (truth_y - scored.pred).squaredNorm() /
               static_cast<double>(truth_y.size());
  return scored;
}

void apply_ridge(FitConfig& config, double ridge) {
  if (ridge > 0.0) {
    config.reg.kind = RegKind::gaussian;
    config.reg.default_lambda = ridge;
  }
}

GraphSpec chain_over(const std::vector<int>& order, const BasisSpec& node_basis,
                     const BasisSpec& edge_basis) {
  std::vector<std::pair<int, int>> edges;
  for (std::size_t i = 0; i + 1 < order.size(); ++i)
    edges.emplace_back(order[i], order[i + 1]);
  GraphSpec spec = make_graph(static_cast<int>(order.size()), edges, node_basis,
                              edge_basis, order.back());
  return spec;
}

}  // namespace

int thread_budget() {
  if (const char* env = std::getenv("MFNET_THREADS")) {
    const int value = std::atoi(env);
    if (value >= 1) return value;
    return 1;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

void write_experiment_files(const ExperimentResult& result,
                            const std::string& output_dir,
                            const std::map<std::string, std::string>& options_echo) {
  const std::filesystem::path dir(output_dir);
  std::filesystem::create_directories(dir);
  check_uniform_keys(result.records);

  {
    auto out = open_output(dir / "records.csv");
    out << "seed";
    if (!result.records.empty())
      for (const auto& [key, unused] : result.records.front().metrics) {
        (void)unused;
        out << "," << key;
      }
    out << "\n";
    for (const auto& record : result.records) {
      out << record.seed;
      for (const auto& [key, value] : record.metrics) {
        (void)key;
        out << "," << format_real(value);
      }
      out << "\n";
    }
  }

  {
    auto out = open_output(dir / "summary.csv");
    out << "key,value\n";
    for (const auto& [key, value] : result.summary)
      out << key << "," << format_real(value) << "\n";
  }

  {
    nlohmann::json options = nlohmann::json::object();
    for (const auto& [key, value] : options_echo) options[key] = value;
    const nlohmann::json manifest{{"experiment", result.name},
                                  {"version", MFNET_VERSION},
                                  {"trials", result.records.size()},
                                  {"options", options}};
    auto out = open_output(dir / "manifest.json");
    out << manifest.dump(2) << "\n";
  }
}

ExperimentResult run_three_model(const ThreeModelOptions& options) {
  if (options.trials < 1) throw std::invalid_argument("trials must be positive");
  const auto start = Clock::now();

  const BasisSpec linear{BasisKind::monomial, 1, 1, {}};
  const GraphSpec hier_graph = make_graph(3, {{1, 2}, {2, 3}}, linear, linear);

  const bool write_files = !options.output_dir.empty();
  if (write_files) std::filesystem::create_directories(options.output_dir);

  auto trial = [&](int index) {
    const auto trial_start = Clock::now();
    const std::uint64_t seed = options.master_seed + static_cast<std::uint64_t>(index);
    const GeneratedProblem problem =
        generate_three_model(options.counts, options.nested, seed);

    FitConfig config;
    config.max_iters = options.max_iters;
    config.restarts = options.restarts;
    apply_ridge(config, options.ridge);

    const Network true_net(problem.graph);
    config.seed = mix_seed(seed, 1);
    const ScoredFit true_fit = fit_and_score(true_net, problem.datasets, config,
                                             problem.truth_x, problem.truth_y, 3);

    const Network hier_net(hier_graph);
    config.seed = mix_seed(seed, 2);
    const ScoredFit hier_fit = fit_and_score(hier_net, problem.datasets, config,
                                             problem.truth_x, problem.truth_y, 3);

    const NodeData& high = problem.datasets.back();
    std::array<double, 3> sf_rmse{};
    std::array<Eigen::VectorXd, 3> sf_pred;
    for (int degree = 1; degree <= 3; ++degree) {
      const Basis basis(BasisSpec{BasisKind::monomial, degree, 1, {}});
      const Eigen::VectorXd theta = single_fidelity_fit(basis, high.x, high.y);
      sf_pred[degree - 1] = basis.eval(problem.truth_x) * theta;
      sf_rmse[degree - 1] =
          error_entry(problem.truth_y, sf_pred[degree - 1]).rel_rmse;
    }

    const Polynomial fitted_f2 = true_net.expand_to_polynomial(true_fit.params, 2);
    const Polynomial truth_f2 = true_net.expand_to_polynomial(problem.true_params, 2);
    const double f2_const = fitted_f2.coeff({0});
    const double f2_truth_const = truth_f2.coeff({0});

    TrialOutcome outcome;
    outcome.seed = seed;
    outcome.metrics["mse_true"] = true_fit.mse;
    outcome.metrics["mse_hier"] = hier_fit.mse;
    outcome.metrics["mse_ratio"] = true_fit.mse / hier_fit.mse;
    outcome.metrics["rel_rmse_true"] = true_fit.rel_rmse;
    outcome.metrics["rel_rmse_hier"] = hier_fit.rel_rmse;
    outcome.metrics["sf_rmse_deg1"] = sf_rmse[0];
    outcome.metrics["sf_rmse_deg2"] = sf_rmse[1];
    outcome.metrics["sf_rmse_deg3"] = sf_rmse[2];
    outcome.metrics["f2_const"] = f2_const;
    outcome.metrics["f2_linear"] = fitted_f2.coeff({1});
    outcome.metrics["f2_quad"] = fitted_f2.coeff({2});
    outcome.metrics["f2_const_rel_err"] =
        std::abs(f2_const - f2_truth_const) / std::abs(f2_truth_const);
    outcome.runtime_seconds = seconds_since(trial_start);

    if (write_files && index == 0) {
      auto out = open_output(std::filesystem::path(options.output_dir) / "curves.csv");
      out << "x,err_true,err_hier,err_sf_deg1,err_sf_deg2,err_sf_deg3\n";
      for (Eigen::Index i = 0; i < problem.truth_x.rows(); ++i)
        out << format_real(problem.truth_x(i, 0)) << ","
            << format_real(std::abs(true_fit.pred[i] - problem.truth_y[i])) << ","
            << format_real(std::abs(hier_fit.pred[i] - problem.truth_y[i])) << ","
            << format_real(std::abs(sf_pred[0][i] - problem.truth_y[i])) << ","
            << format_real(std::abs(sf_pred[1][i] - problem.truth_y[i])) << ","
            << format_real(std::abs(sf_pred[2][i] - problem.truth_y[i])) << "\n";
    }
    return outcome;
  };

  ExperimentResult result;
  result.name = "three-model";
  result.records = run_trials(options.trials, trial);
  result.summary = summarize(result.records, {"mse_ratio"});
  result.runtime_seconds = seconds_since(start);

  if (write_files) {
    std::ostringstream counts;
    for (std::size_t i = 0; i < options.counts.size(); ++i)
      counts << (i ? "/" : "") << options.counts[i];
    write_experiment_files(result, options.output_dir,
                           {{"master_seed", std::to_string(options.master_seed)},
                            {"counts", counts.str()},
                            {"nested", options.nested ? "true" : "false"},
                            {"restarts", std::to_string(options.restarts)},
                            {"max_iters", std::to_string(options.max_iters)},
                            {"ridge", lambda_label(options.ridge)}});
  }
  return result;
}

ExperimentResult run_noise_orderings(const NoiseOrderingOptions& options) {
  if (options.trials < 1) throw std::invalid_argument("trials must be positive");
  const auto start = Clock::now();

  const BasisSpec node_basis{BasisKind::monomial, options.node_degree, 2, {}};
  const BasisSpec edge_basis{BasisKind::monomial, options.edge_degree, 2, {}};
  const GraphSpec hier_delta =
      chain_over({1, 2, 3, 4, 5, 6, 7, 8, 9}, node_basis, edge_basis);
  const GraphSpec hier_n =
      chain_over({1, 4, 7, 2, 5, 8, 3, 6, 9}, node_basis, edge_basis);

  const bool write_files = !options.output_dir.empty();
  if (write_files) std::filesystem::create_directories(options.output_dir);

  auto trial = [&](int index) {
    const auto trial_start = Clock::now();
    const std::uint64_t seed = options.master_seed + static_cast<std::uint64_t>(index);
    const GeneratedProblem problem = generate_analytical_noise(
        options.counts, seed, options.node_degree, options.edge_degree);

    FitConfig config;
    config.max_iters = options.max_iters;
    config.restarts = options.restarts;
    apply_ridge(config, options.ridge);

    struct Candidate {
      const char* label;
      const GraphSpec* graph;
    };
    const Candidate candidates[] = {{"natural", &problem.graph},
                                    {"hier_delta", &hier_delta},
                                    {"hier_n", &hier_n}};

    TrialOutcome outcome;
    outcome.seed = seed;
    std::map<std::string, ScoredFit> fits;
    int which = 0;
    for (const auto& candidate : candidates) {
      const Network network(*candidate.graph);
      config.seed = mix_seed(seed, static_cast<std::uint64_t>(++which));
      fits[candidate.label] = fit_and_score(network, problem.datasets, config,
                                            problem.truth_x, problem.truth_y, 9);
      outcome.metrics[std::string("mse_") + candidate.label] =
          fits[candidate.label].mse;
      outcome.metrics[std::string("rel_rmse_") + candidate.label] =
          fits[candidate.label].rel_rmse;
    }
    outcome.metrics["ratio_delta"] =
        outcome.metrics["mse_natural"] / outcome.metrics["mse_hier_delta"];
    outcome.metrics["ratio_n"] =
        outcome.metrics["mse_natural"] / outcome.metrics["mse_hier_n"];
    outcome.runtime_seconds = seconds_since(trial_start);

    if (write_files && index == 0) {
      auto out = open_output(std::filesystem::path(options.output_dir) / "surface.csv");
      out << "x1,x2,err_natural,err_hier_delta,err_hier_n\n";
      for (Eigen::Index i = 0; i < problem.truth_x.rows(); ++i)
        out << format_real(problem.truth_x(i, 0)) << ","
            << format_real(problem.truth_x(i, 1)) << ","
            << format_real(std::abs(fits["natural"].pred[i] - problem.truth_y[i]))
            << ","
            << format_real(std::abs(fits["hier_delta"].pred[i] - problem.truth_y[i]))
            << ","
            << format_real(std::abs(fits["hier_n"].pred[i] - problem.truth_y[i]))
            << "\n";
    }
    return outcome;
  };

  ExperimentResult result;
  result.name = "noise-orderings";
  result.records = run_trials(options.trials, trial);
  result.summary = summarize(result.records, {"ratio_delta", "ratio_n"});
  result.runtime_seconds = seconds_since(start);

  if (write_files) {
    std::ostringstream counts;
    for (std::size_t i = 0; i < options.counts.size(); ++i)
      counts << (i ? "/" : "") << options.counts[i];
    write_experiment_files(result, options.output_dir,
                           {{"master_seed", std::to_string(options.master_seed)},
                            {"counts", counts.str()},
                            {"node_degree", std::to_string(options.node_degree)},
                            {"edge_degree", std::to_string(options.edge_degree)},
                            {"restarts", std::to_string(options.restarts)},
                            {"max_iters", std::to_string(options.max_iters)},
                            {"ridge", lambda_label(options.ridge)}});
  }
  return result;
}

ExperimentResult run_topology_histogram(const TopologyOptions& options) {
  if (options.trials < 1) throw std::invalid_argument("trials must be positive");
  if (options.counts.size() != 3)
    throw std::invalid_argument("topology study uses three per-node counts");
  const auto start = Clock::now();

  std::vector<NodeData> pool = options.pool;
  if (pool.empty()) {
    const std::vector<int> pool_counts(3, options.pool_per_node);
    pool = generate_family(Family::peer_truth, options.dims, options.node_degree,
                           options.edge_degree, pool_counts, options.noise_sigma,
                           options.truth_seed)
               .datasets;
  }
  if (pool.size() != 3) throw std::invalid_argument("pool must cover nodes 1..3");
  std::sort(pool.begin(), pool.end(),
            [](const NodeData& a, const NodeData& b) { return a.node < b.node; });
  for (int k = 0; k < 3; ++k) {
    if (pool[static_cast<std::size_t>(k)].node != k + 1)
      throw std::invalid_argument("pool must cover nodes 1..3");
    const auto have = pool[static_cast<std::size_t>(k)].y.size();
    const int need = options.counts[static_cast<std::size_t>(k)] + (k == 2 ? 1 : 0);
    if (have < need) {
      std::ostringstream msg;
      msg << "pool for node " << (k + 1) << " has " << have << " samples, needs "
          << need;
      throw std::invalid_argument(msg.str());
    }
  }

  const int pool_dims = static_cast<int>(pool.front().x.cols());
  const BasisSpec node_basis{BasisKind::monomial, options.node_degree, pool_dims, {}};
  const BasisSpec edge_basis{BasisKind::monomial, options.edge_degree, pool_dims, {}};
  const GraphSpec full_graph =
      make_graph(3, {{1, 2}, {1, 3}, {2, 3}}, node_basis, edge_basis);
  const GraphSpec peer_graph = make_graph(3, {{1, 3}, {2, 3}}, node_basis, edge_basis);
  const GraphSpec hier_graph = make_graph(3, {{1, 2}, {2, 3}}, node_basis, edge_basis);

  auto trial = [&](int index) {
    const auto trial_start = Clock::now();
    const std::uint64_t seed = options.master_seed + static_cast<std::uint64_t>(index);
    Rng rng(mix_seed(seed, 17));

    std::vector<NodeData> train;
    Eigen::MatrixXd held_x;
    Eigen::VectorXd held_y;
    for (int k = 0; k < 3; ++k) {
      const NodeData& source = pool[static_cast<std::size_t>(k)];
      const auto n = static_cast<int>(source.y.size());
      const int take = options.counts[static_cast<std::size_t>(k)];
      std::vector<int> order(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
      for (int i = 0; i < take; ++i) {
        const auto span = static_cast<std::uint64_t>(n - i);
        const int j = i + static_cast<int>(rng.next_u64() % span);
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
      }

      NodeData subset;
      subset.node = source.node;
      subset.sigma = source.sigma;
      subset.x.resize(take, source.x.cols());
      subset.y.resize(take);
      for (int i = 0; i < take; ++i) {
        subset.x.row(i) = source.x.row(order[static_cast<std::size_t>(i)]);
        subset.y[i] = source.y[order[static_cast<std::size_t>(i)]];
      }
      train.push_back(std::move(subset));

      if (k == 2) {
        held_x.resize(n - take, source.x.cols());
        held_y.resize(n - take);
        for (int i = take; i < n; ++i) {
          held_x.row(i - take) = source.x.row(order[static_cast<std::size_t>(i)]);
          held_y[i - take] = source.y[order[static_cast<std::size_t>(i)]];
        }
      }
    }

    FitConfig config;
    config.max_iters = options.max_iters;
    config.restarts = options.restarts;
    apply_ridge(config, options.ridge);

    TrialOutcome outcome;
    outcome.seed = seed;
    const struct {
      const char* label;
      const GraphSpec* graph;
    } candidates[] = {{"full", &full_graph}, {"peer", &peer_graph}, {"hier", &hier_graph}};
    int which = 0;
    for (const auto& candidate : candidates) {
      const Network network(*candidate.graph);
      config.seed = mix_seed(seed, static_cast<std::uint64_t>(100 + ++which));
      const FitResult fitted = fit(network, train, config);
      const Eigen::VectorXd pred = network.evaluate(fitted.params, 3, held_x);
      outcome.metrics[std::string("mse_") + candidate.label] =
          (held_y - pred).squaredNorm() / static_cast<double>(held_y.size());
    }
    outcome.metrics["r_full_hier"] =
        outcome.metrics["mse_full"] / outcome.metrics["mse_hier"];
    outcome.metrics["r_peer_hier"] =
        outcome.metrics["mse_peer"] / outcome.metrics["mse_hier"];
    outcome.metrics["r_full_peer"] =
        outcome.metrics["mse_full"] / outcome.metrics["mse_peer"];
    outcome.runtime_seconds = seconds_since(trial_start);
    return outcome;
  };

  ExperimentResult result;
  result.name = "topology";
  result.records = run_trials(options.trials, trial);
  result.summary =
      summarize(result.records, {"r_full_hier", "r_peer_hier", "r_full_peer"});
  result.runtime_seconds = seconds_since(start);

  if (!options.output_dir.empty()) {
    const std::filesystem::path dir(options.output_dir);
    std::filesystem::create_directories(dir);
    for (const char* key : {"r_full_hier", "r_peer_hier", "r_full_peer"}) {
      constexpr int kBins = 80;
      constexpr double kLo = -4.0;
      constexpr double kHi = 4.0;
      std::array<int, kBins> bins{};
      for (const auto& record : result.records) {
        const double log_ratio = std::log10(record.metrics.at(key));
        int bin = static_cast<int>(std::floor((log_ratio - kLo) / (kHi - kLo) * kBins));
        bin = std::clamp(bin, 0, kBins - 1);
        ++bins[static_cast<std::size_t>(bin)];
      }
      auto out = open_output(dir / (std::string("hist_") + key + ".csv"));
      out << "log10_lo,log10_hi,count\n";
      for (int b = 0; b < kBins; ++b)
        out << format_real(kLo + (kHi - kLo) * b / kBins) << ","
            << format_real(kLo + (kHi - kLo) * (b + 1) / kBins) << ","
            << bins[static_cast<std::size_t>(b)] << "\n";
    }
    std::ostringstream counts;
    for (std::size_t i = 0; i < options.counts.size(); ++i)
      counts << (i ? "/" : "") << options.counts[i];
    write_experiment_files(result, options.output_dir,
                           {{"master_seed", std::to_string(options.master_seed)},
                            {"counts", counts.str()},
                            {"pool_per_node", std::to_string(options.pool_per_node)},
                            {"truth_seed", std::to_string(options.truth_seed)},
                            {"noise_sigma", lambda_label(options.noise_sigma)},
                            {"restarts", std::to_string(options.restarts)},
                            {"max_iters", std::to_string(options.max_iters)},
                            {"ridge", lambda_label(options.ridge)}});
  }
  return result;
}

ExperimentResult run_sparsity_study(const SparsityOptions& options) {
  if (options.trials < 1) throw std::invalid_argument("trials must be positive");
  if (options.low_fi_counts.size() != 2)
    throw std::invalid_argument("sparsity study takes two low-fidelity counts");
  if (options.lambda_grid.empty())
    throw std::invalid_argument("lambda grid must not be empty");
  if (options.high_fi_counts.empty())
    throw std::invalid_argument("high-fidelity count list must not be empty");
  const auto start = Clock::now();

  // Fixed truth; trials vary only the sampled data. Constant weighting
  // functions keep one coefficient per edge.
  if (options.dim < 2)
    throw std::invalid_argument(
        "sparsity study needs dim >= 2; one-dimensional parents are collinear");
  const GeneratedProblem truth =
      generate_family(Family::peer_truth, options.dim, options.node_degree, 0,
                      {1, 1, 1}, 0.0, options.truth_seed);
  const Network truth_net(truth.graph);

  if (options.high_fi_degree >= options.node_degree)
    throw std::invalid_argument(
        "high_fi_degree must be below node_degree, or the bias absorbs the edges");
  const BasisSpec node_basis{BasisKind::monomial, options.node_degree, options.dim, {}};
  const BasisSpec edge_basis{BasisKind::monomial, 0, options.dim, {}};
  GraphSpec full_graph =
      make_graph(3, {{1, 2}, {1, 3}, {2, 3}}, node_basis, edge_basis);
  for (auto& node : full_graph.nodes)
    if (node.id == 3) node.basis.degree = options.high_fi_degree;

  auto edge_reg = [&](RegKind kind, double lambda) {
    RegConfig reg;
    reg.kind = kind;
    reg.default_lambda = 0.0;
    for (int node = 1; node <= 3; ++node) reg.lambda_node[node] = 0.0;
    for (const auto& edge : {std::pair{1, 2}, std::pair{1, 3}, std::pair{2, 3}})
      reg.lambda_edge[edge] = lambda;
    return reg;
  };

  auto trial = [&](int index) {
    const auto trial_start = Clock::now();
    const std::uint64_t seed = options.master_seed + static_cast<std::uint64_t>(index);

    TrialOutcome outcome;
    outcome.seed = seed;
    for (const int n_hi : options.high_fi_counts) {
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(n_hi)));
      std::vector<NodeData> datasets;
      const std::array<int, 3> counts = {options.low_fi_counts[0],
                                         options.low_fi_counts[1], n_hi};
      for (int node = 1; node <= 3; ++node) {
        NodeData data;
        data.node = node;
        const int n = counts[static_cast<std::size_t>(node - 1)];
        data.x.resize(n, options.dim);
        for (int i = 0; i < n; ++i)
          for (int d = 0; d < options.dim; ++d) data.x(i, d) = rng.uniform(-1.0, 1.0);
        data.y = truth_net.evaluate(truth.true_params, node, data.x);
        if (options.noise_sigma > 0.0)
          for (int i = 0; i < n; ++i) data.y[i] += options.noise_sigma * rng.gaussian();
        data.sigma = options.noise_sigma > 0.0 ? options.noise_sigma : 1.0;
        datasets.push_back(std::move(data));
      }

      const Network network(full_graph);
      const ParamLayout& layout = network.layout();
      const std::string prefix_nhi = "nhi" + std::to_string(n_hi) + ":";

      auto record = [&](const std::string& prefix, const FitResult& fitted,
                        bool with_kkt) {
        const Eigen::VectorXd pred =
            network.evaluate(fitted.params, 3, truth.truth_x);
        outcome.metrics[prefix + "rel_rmse"] =
            error_entry(truth.truth_y, pred).rel_rmse;
        outcome.metrics[prefix + "rho12"] =
            std::abs(fitted.params[layout.edge_slice(1, 2).offset]);
        outcome.metrics[prefix + "rho13"] =
            std::abs(fitted.params[layout.edge_slice(1, 3).offset]);
        outcome.metrics[prefix + "rho23"] =
            std::abs(fitted.params[layout.edge_slice(2, 3).offset]);
        if (with_kkt) outcome.metrics[prefix + "kkt"] = fitted.grad_norm_final;
      };

      FitConfig config;
      config.max_iters = options.max_iters;
      config.init_scale = 0.05;
      config.seed = mix_seed(seed, static_cast<std::uint64_t>(1000 + n_hi));

      config.reg = RegConfig{};
      record("none:" + prefix_nhi, fit(network, datasets, config), false);

      for (const double lambda : options.lambda_grid) {
        const std::string tag = "lam" + std::string(lambda_label(lambda)) + ":";
        config.reg = edge_reg(RegKind::gaussian, lambda);
        record("l2:" + prefix_nhi + tag, fit(network, datasets, config), false);

        config.reg = edge_reg(RegKind::laplace, lambda);
        config.grad_tol = 1e-6;  // stop on the KKT residual for the prox solver
        record("l1:" + prefix_nhi + tag, fit_sparse(network, datasets, config), true);
        config.grad_tol = FitConfig{}.grad_tol;
      }
    }
    outcome.runtime_seconds = seconds_since(trial_start);
    return outcome;
  };

  ExperimentResult result;
  result.name = "sparsity";
  result.records = run_trials(options.trials, trial);
  result.summary = summarize(result.records, {});
  result.runtime_seconds = seconds_since(start);

  if (!options.output_dir.empty()) {
    std::ostringstream grid;
    for (std::size_t i = 0; i < options.lambda_grid.size(); ++i)
      grid << (i ? "," : "") << lambda_label(options.lambda_grid[i]);
    std::ostringstream hi;
    for (std::size_t i = 0; i < options.high_fi_counts.size(); ++i)
      hi << (i ? "," : "") << options.high_fi_counts[i];
    write_experiment_files(
        result, options.output_dir,
        {{"master_seed", std::to_string(options.master_seed)},
         {"truth_seed", std::to_string(options.truth_seed)},
         {"lambda_grid", grid.str()},
         {"high_fi_counts", hi.str()},
         {"low_fi_counts", std::to_string(options.low_fi_counts[0]) + "," +
                               std::to_string(options.low_fi_counts[1])},
         {"noise_sigma", lambda_label(options.noise_sigma)},
         {"dim", std::to_string(options.dim)},
         {"node_degree", std::to_string(options.node_degree)},
         {"high_fi_degree", std::to_string(options.high_fi_degree)},
         {"max_iters", std::to_string(options.max_iters)}});
  }
  return result;
}

}  // namespace mfnet
