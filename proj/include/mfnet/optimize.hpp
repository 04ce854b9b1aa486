#pragma once

#include "mfnet/objective.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace mfnet {

struct FitConfig {
  int max_iters = 500;
  double grad_tol = 1e-8;   ///< on the gradient infinity-norm
  double step_tol = 1e-10;  ///< on the relative parameter change
  InitScheme init = InitScheme::gaussian;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
  int restarts = 0;  ///< extra seeded starts; the best final objective wins
  RegConfig reg;
};

struct FitResult {
  Eigen::VectorXd params;
  std::vector<double> objective_trace;  ///< accepted iterates, non-increasing
  bool converged = false;
  std::string reason;
  double grad_norm_final = 0.0;
  int iterations = 0;
};

/// Quasi-Newton minimization (dense BFGS with a backtracking Armijo line
/// search) of the smooth objective. Accepts reg.kind none or gaussian.
/// Throws on an invalid config or a non-finite objective at the iterate.
FitResult fit(const Network& network, const std::vector<NodeData>& datasets,
              const FitConfig& config);

/// Proximal-gradient minimization (iterative soft-thresholding with
/// backtracking and Nesterov momentum, monotone variant) of
/// NLL + weighted l1. Requires reg.kind laplace.
FitResult fit_sparse(const Network& network, const std::vector<NodeData>& datasets,
                     const FitConfig& config);

/// Linear least squares min ||y - V^T(x) theta||^2 (+ ridge ||theta||^2) via
/// an orthogonal decomposition; rank-deficient systems get the minimum-norm
/// solution.
Eigen::VectorXd single_fidelity_fit(const Basis& basis,
                                    const Eigen::Ref<const Eigen::MatrixXd>& x,
                                    const Eigen::Ref<const Eigen::VectorXd>& y,
                                    double ridge = 0.0);

struct GradCheckReport {
  double max_rel_discrepancy = 0.0;
  int worst_coordinate = -1;
};

/// Central finite differences of the total NLL against the backward-sweep
/// gradient, coordinate by coordinate.
GradCheckReport gradient_check(const Network& network,
                               const Eigen::Ref<const Eigen::VectorXd>& params,
                               const std::vector<NodeData>& datasets, double fd_step);

/// Max KKT violation of the l1-regularized problem at `params`: for a zero
/// coordinate, the excess of |smooth gradient| over lambda; for a nonzero
/// one, |smooth gradient + lambda sign(theta)|.
double kkt_residual(const Network& network,
                    const Eigen::Ref<const Eigen::VectorXd>& params,
                    const std::vector<NodeData>& datasets, const RegConfig& reg);

}  // namespace mfnet
