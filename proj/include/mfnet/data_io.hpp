#pragma once

#include "mfnet/graph.hpp"
#include "mfnet/objective.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mfnet {

enum class Family { three_model, analytical_noise, peer_truth, chain_truth };

/// Throws std::invalid_argument listing the valid names on a bad input.
Family parse_family(const std::string& name);
std::string family_name(Family family);

struct GeneratorSpec {
  Family family = Family::three_model;
  std::vector<int> counts;  ///< per-node sample sizes for nodes 1..K
  bool nested = false;
  std::uint64_t seed = 0;
  int dims = 1;            ///< peer_truth / chain_truth input dimension
  int node_degree = 1;     ///< bias-function polynomial degree
  int edge_degree = 1;     ///< weighting-function polynomial degree
  double noise_sigma = 0.0;  ///< additive data noise for peer/chain families
  std::map<int, double> noise_overrides;  ///< declared sigma per node
};

struct GeneratedProblem {
  GraphSpec graph;
  Eigen::VectorXd true_params;  ///< empty when the truth is not network-shaped
  std::vector<NodeData> datasets;
  Eigen::MatrixXd truth_x;  ///< dense evaluation grid
  Eigen::VectorXd truth_y;  ///< noiseless target-node truth on the grid
  int target = 0;
};

/// Three linear 1-D models on the graph 1->2, 1->3, 2->3 with the fixed true
/// parameter set the desk studies revolve around; data are noiseless truth
/// evaluations. nested=true draws every node's points as a prefix of one
/// shared uniform pool, so smaller sets are subsets of larger ones.
GeneratedProblem generate_three_model(const std::vector<int>& counts, bool nested,
                                      std::uint64_t seed);

/// Nine models on [-1,1]^2 sharing one closed-form response; model k scales
/// it by (1 + mean of N_k fresh standard normals) per evaluation. Returns
/// noiseless model-9 truth on a 41x41 grid; the bundled graph is the natural
/// three-chain ordering.
GeneratedProblem generate_analytical_noise(const std::vector<int>& counts,
                                           std::uint64_t seed, int node_degree = 2,
                                           int edge_degree = 1);

/// Random network truth: peer_truth is the 3-node graph {1->3, 2->3},
/// chain_truth is the K-node chain with K = counts.size(). True parameters
/// are seeded standard normals; data get additive N(0, noise_sigma^2) noise.
GeneratedProblem generate_family(Family family, int dims, int node_degree,
                                 int edge_degree, const std::vector<int>& counts,
                                 double noise_sigma, std::uint64_t seed);

/// Dispatch on spec.family, then apply noise_overrides to the declared sigmas.
GeneratedProblem generate(const GeneratorSpec& spec);

/// Noiseless part of the nine-model response.
double analytical_base(double x1, double x2, double delta1, double delta2);

struct AnalyticalModel {
  double delta1;
  double delta2;
  int n_samples;
};

/// Per-model (delta1, delta2, N) for nodes 1..9.
AnalyticalModel analytical_model(int node);

/// Tensor grid over [-1,1]^dims used for truth evaluation: 201 points for
/// dims 1, 41 per axis for dims 2, 13 for dims 3; higher dimensions fall
/// back to 1024 seeded uniform points.
Eigen::MatrixXd test_grid(int dims);

struct DatasetFile {
  int node;
  std::string path;
  double sigma = 1.0;
};

/// Comma-separated columns x1,...,xd,y with a header row. Parse failures
/// report path and line number; every row must match the header's width.
std::vector<NodeData> load_datasets(const std::vector<DatasetFile>& files);
NodeData load_dataset(const DatasetFile& file);
void save_dataset(const std::string& path, const NodeData& data);

struct ErrorEntry {
  double rel_rmse = 0.0;
  double max_abs = 0.0;
  int count = 0;
};

using ErrorReport = std::map<int, ErrorEntry>;

/// rel_rmse = ||truth - pred||_2 / ||truth||_2; throws on length mismatch or
/// zero truth norm.
ErrorEntry error_entry(const Eigen::Ref<const Eigen::VectorXd>& truth,
                       const Eigen::Ref<const Eigen::VectorXd>& pred);

}  // namespace mfnet
