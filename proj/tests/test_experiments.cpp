#include "doctest.h"
#include "mfnet/experiments.hpp"

#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

using namespace mfnet;

namespace {

std::filesystem::path scratch_dir() {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("mfnet_experiments_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool identical_files(const std::filesystem::path& a, const std::filesystem::path& b) {
  return read_file(a) == read_file(b);
}

}  // namespace

TEST_CASE("median handles odd and even sample counts") {
  CHECK(median({3.0}) == 3.0);
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK_THROWS_AS(median({}), std::invalid_argument);
}

TEST_CASE("the worker pool width honors the environment cap") {
  ::setenv("MFNET_THREADS", "3", 1);
  CHECK(thread_budget() == 3);
  ::setenv("MFNET_THREADS", "0", 1);
  CHECK(thread_budget() == 1);
  ::unsetenv("MFNET_THREADS");
  CHECK(thread_budget() >= 1);
}

TEST_CASE("the three-model study emits a full record set deterministically") {
  ThreeModelOptions options;
  options.trials = 3;
  options.master_seed = 11;
  options.restarts = 1;
  options.max_iters = 300;

  const ExperimentResult result = run_three_model(options);
  CHECK(result.name == "three-model");
  REQUIRE(result.records.size() == 3);
  CHECK(result.records[0].seed == 11);
  CHECK(result.records[2].seed == 13);

  for (const char* key :
       {"mse_true", "mse_hier", "mse_ratio", "rel_rmse_true", "rel_rmse_hier",
        "sf_rmse_deg1", "sf_rmse_deg2", "sf_rmse_deg3", "f2_const", "f2_linear",
        "f2_quad", "f2_const_rel_err"})
    for (const auto& record : result.records) CHECK(record.metrics.count(key) == 1);

  // aggregates recompute from the raw records
  std::vector<double> ratios;
  for (const auto& record : result.records)
    ratios.push_back(record.metrics.at("mse_ratio"));
  CHECK(result.summary.at("median:mse_ratio") == median(ratios));
  int below = 0;
  for (const double r : ratios)
    if (r < 1.0) ++below;
  CHECK(result.summary.at("frac_lt_1:mse_ratio") == below / 3.0);

  const ExperimentResult again = run_three_model(options);
  for (std::size_t i = 0; i < result.records.size(); ++i)
    CHECK(result.records[i].metrics == again.records[i].metrics);
}

TEST_CASE("experiment directories are byte-stable across reruns") {
  ThreeModelOptions options;
  options.trials = 2;
  options.master_seed = 5;
  options.restarts = 0;
  options.max_iters = 200;

  const auto dir_a = scratch_dir();
  const auto dir_b = scratch_dir();
  options.output_dir = dir_a.string();
  run_three_model(options);
  options.output_dir = dir_b.string();
  run_three_model(options);

  for (const char* name : {"records.csv", "summary.csv", "manifest.json", "curves.csv"}) {
    CAPTURE(name);
    CHECK(std::filesystem::exists(dir_a / name));
    CHECK(identical_files(dir_a / name, dir_b / name));
  }

  // records.csv puts the seed first, then the metric columns in name order
  std::ifstream records(dir_a / "records.csv");
  std::string header;
  std::getline(records, header);
  CHECK(header.rfind("seed,", 0) == 0);
  CHECK(header.find("mse_ratio") != std::string::npos);
  std::string row;
  int rows = 0;
  while (std::getline(records, row))
    if (!row.empty()) ++rows;
  CHECK(rows == 2);

  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("the ordering study compares three graph layouts per draw") {
  NoiseOrderingOptions options;
  options.trials = 1;
  options.counts = std::vector<int>(9, 12);
  options.restarts = 0;
  options.max_iters = 60;

  const ExperimentResult result = run_noise_orderings(options);
  REQUIRE(result.records.size() == 1);
  for (const char* key : {"mse_natural", "mse_hier_delta", "mse_hier_n",
                          "ratio_delta", "ratio_n"})
    CHECK(result.records[0].metrics.count(key) == 1);
  CHECK(result.records[0].metrics.at("ratio_delta") ==
        doctest::Approx(result.records[0].metrics.at("mse_natural") /
                        result.records[0].metrics.at("mse_hier_delta")));
  CHECK(result.summary.count("frac_lt_1:ratio_n") == 1);
}

TEST_CASE("the subsampling study scores held-out points and validates its pool") {
  TopologyOptions options;
  options.trials = 6;
  options.counts = {10, 4, 2};
  options.pool_per_node = 24;
  options.max_iters = 150;

  const auto dir = scratch_dir();
  options.output_dir = dir.string();
  const ExperimentResult result = run_topology_histogram(options);
  REQUIRE(result.records.size() == 6);
  for (const auto& record : result.records) {
    CHECK(record.metrics.at("mse_full") >= 0.0);
    CHECK(record.metrics.at("r_full_peer") ==
          doctest::Approx(record.metrics.at("mse_full") /
                          record.metrics.at("mse_peer")));
  }
  for (const char* key : {"r_full_hier", "r_peer_hier", "r_full_peer"}) {
    const double frac = result.summary.at(std::string("frac_lt_1:") + key);
    CHECK(frac >= 0.0);
    CHECK(frac <= 1.0);
    CHECK(std::filesystem::exists(dir / (std::string("hist_") + key + ".csv")));
  }

  // the histogram rows cover all recorded trials
  std::ifstream hist(dir / "hist_r_full_hier.csv");
  std::string line;
  std::getline(hist, line);
  CHECK(line == "log10_lo,log10_hi,count");
  int total = 0;
  while (std::getline(hist, line)) {
    const auto last_comma = line.rfind(',');
    if (last_comma != std::string::npos)
      total += std::atoi(line.c_str() + last_comma + 1);
  }
  CHECK(total == 6);
  std::filesystem::remove_all(dir);

  options.pool_per_node = 5;  // node 1 needs 10 training samples
  options.output_dir.clear();
  CHECK_THROWS_AS(run_topology_histogram(options), std::invalid_argument);
}

TEST_CASE("the pruning study spans solvers and penalties consistently") {
  SparsityOptions options;
  options.trials = 2;
  options.lambda_grid = {0.0, 1e-3};
  options.high_fi_counts = {2};
  options.max_iters = 3000;

  const ExperimentResult result = run_sparsity_study(options);
  REQUIRE(result.records.size() == 2);
  for (const auto& record : result.records) {
    for (const char* key :
         {"none:nhi2:rel_rmse", "none:nhi2:rho12", "l2:nhi2:lam0:rel_rmse",
          "l2:nhi2:lam0.001:rho13", "l1:nhi2:lam0:kkt", "l1:nhi2:lam0.001:rho23"})
      CHECK(record.metrics.count(key) == 1);

    // every sparse solve ends at a certified stationary point
    CHECK(record.metrics.at("l1:nhi2:lam0:kkt") <= 1e-4);
    CHECK(record.metrics.at("l1:nhi2:lam0.001:kkt") <= 1e-4);

    // with no weight both solvers minimize the same objective; the landscape
    // is nonconvex so they may settle in different basins, but the fits must
    // stay comparable and nondegenerate
    const double sparse_err = record.metrics.at("l1:nhi2:lam0:rel_rmse");
    const double smooth_err = record.metrics.at("none:nhi2:rel_rmse");
    CHECK(sparse_err > 0.0);
    CHECK(sparse_err <= 3.0 * smooth_err);
  }

  SparsityOptions bad = options;
  bad.low_fi_counts = {10};
  CHECK_THROWS_AS(run_sparsity_study(bad), std::invalid_argument);
}
