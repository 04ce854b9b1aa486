#pragma once

#include "mfnet/data_io.hpp"
#include "mfnet/graph.hpp"
#include "mfnet/network.hpp"
#include "mfnet/optimize.hpp"

#include <optional>
#include <string>
#include <utility>

namespace mfnet {

/// Name mappings shared by manifests and CLI flags.
InitScheme parse_init_scheme(const std::string& name);  // zeros | gaussian | edge-one
std::string init_scheme_name(InitScheme scheme);
RegKind parse_reg_kind(const std::string& name);  // none | l2 | l1
std::string reg_kind_name(RegKind kind);

/// "1 -> 2" edge notation used in graph files.
std::pair<int, int> parse_edge_string(const std::string& text);
std::string format_edge_string(int from, int to);

/// Graph file: JSON with nodes (id + basis), edges ("from -> to" + basis),
/// and target. Parse errors carry the file path.
GraphSpec load_graph(const std::string& path);
void save_graph(const std::string& path, const GraphSpec& spec);

struct TruthRef {
  int node = 0;
  std::string path;
};

/// Run manifest binding a graph, per-node data files with sigmas, fit
/// settings, and an optional truth grid for error reporting. Relative paths
/// inside the file resolve against the manifest's directory.
struct Manifest {
  GraphSpec graph;
  std::vector<DatasetFile> data;
  FitConfig fit;
  std::string output_dir = ".";
  std::optional<TruthRef> truth;
};

Manifest load_manifest(const std::string& path);

/// Writes the manifest next to an already-saved graph file; data and truth
/// paths are emitted as given (callers pass paths relative to `path`'s
/// directory for relocatable output).
void save_manifest(const std::string& path, const Manifest& manifest,
                   const std::string& graph_path);

/// Parameter file: values plus the layout's index map so a reader can verify
/// it against the graph it is applied to.
void save_params(const std::string& path, const Network& network,
                 const Eigen::Ref<const Eigen::VectorXd>& params);

/// Throws with a layout-mismatch message when the stored index map disagrees
/// with the network's layout.
Eigen::VectorXd load_params(const std::string& path, const Network& network);

/// Points file for prediction: CSV whose first dims columns are x1..xd; a
/// trailing y column, if present, is ignored. May have zero rows.
Eigen::MatrixXd load_points(const std::string& path, int dims);

}  // namespace mfnet
