#include "mfnet/optimize.hpp"

#include "mfnet/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfnet {

namespace {

void check_config(const FitConfig& config) {
  if (config.max_iters <= 0) throw std::invalid_argument("max_iters must be positive");
  if (!(config.grad_tol > 0.0)) throw std::invalid_argument("grad_tol must be positive");
  if (!(config.step_tol > 0.0)) throw std::invalid_argument("step_tol must be positive");
}

// One BFGS run from a fixed starting point. The inverse Hessian is kept
// dense; parameter counts stay in the tens to low hundreds here.
FitResult fit_single(const Network& network, const std::vector<NodeData>& datasets,
                     const FitConfig& config, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(network.layout().size());
  Eigen::VectorXd x = network.init_params(config.init, seed, config.init_scale);

  auto eval = [&](const Eigen::VectorXd& p) {
    return regularized_objective(network, p, datasets, config.reg);
  };

  ObjectiveEval cur = eval(x);
  if (!std::isfinite(cur.value))
    throw std::runtime_error("objective is not finite at the initial point");

  FitResult result;
  result.objective_trace.push_back(cur.value);
  result.reason = "max iterations";

  Eigen::MatrixXd inv_hess = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  constexpr double armijo = 1e-4;

  int iter = 0;
  while (iter < config.max_iters) {
    if (cur.grad.lpNorm<Eigen::Infinity>() <= config.grad_tol) {
      result.converged = true;
      result.reason = "gradient tolerance";
      break;
    }

    Eigen::VectorXd dir = -(inv_hess * cur.grad);
    double slope = cur.grad.dot(dir);
    if (!(slope < 0.0)) {
      // Curvature updates went bad; fall back to steepest descent.
      inv_hess.setIdentity();
      scaled = false;
      dir = -cur.grad;
      slope = -cur.grad.squaredNorm();
      if (slope == 0.0) {
        result.converged = true;
        result.reason = "gradient tolerance";
        break;
      }
    }

    double step = 1.0;
    ObjectiveEval trial;
    bool accepted = false;
    for (int backtracks = 0; backtracks < 60; ++backtracks) {
      trial = eval(x + step * dir);
      if (std::isfinite(trial.value) && trial.value <= cur.value + armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.reason = "line search stalled";
      break;
    }

    const Eigen::VectorXd s = step * dir;
    const Eigen::VectorXd y = trial.grad - cur.grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        inv_hess *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd left =
          Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
      inv_hess = left * inv_hess * left.transpose() + rho * s * s.transpose();
    }

    const double rel_step = s.norm() / std::max(1.0, x.norm() + s.norm());
    x += s;
    cur = trial;
    result.objective_trace.push_back(cur.value);
    ++iter;

    if (rel_step <= config.step_tol) {
      result.converged = true;
      result.reason = "step tolerance";
      break;
    }
  }

  result.params = std::move(x);
  result.grad_norm_final = cur.grad.lpNorm<Eigen::Infinity>();
  result.iterations = iter;
  return result;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// Max KKT violation of min f + sum w_i |x_i| given the smooth gradient at x.
double kkt_from(const Eigen::VectorXd& x, const Eigen::VectorXd& grad,
                const Eigen::VectorXd& weights) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double viol;
    if (x[i] == 0.0)
      viol = std::max(0.0, std::abs(grad[i]) - weights[i]);
    else
      viol = std::abs(grad[i] + weights[i] * (x[i] > 0.0 ? 1.0 : -1.0));
    worst = std::max(worst, viol);
  }
  return worst;
}

// Damped Newton descent on the working set of x with the penalty linearized
// at the current signs. The proximal iteration finds the zero set quickly but
// crawls on the smooth part whenever the data weights are large. First-order
// steps are no rescue: when a node bias can absorb a parent edge the support
// carries an exactly flat direction that the penalty tilts toward zero, and
// gradient steps along it shrink below the rounding of the objective. A
// finite-difference Hessian with adaptive diagonal damping rides such valleys
// to the orthant boundary in a handful of steps.
//
// The working set holds every nonzero coordinate plus any zero coordinate
// whose gradient strictly beats its penalty weight; those must move off zero
// at the optimum, but the proximal step that would activate them can sit far
// below the rounding of the objective. For the same reason the line search
// also accepts steps that leave the value within rounding while cutting the
// gradient norm, which is exact and keeps resolving after value comparisons
// have gone blind. x, at_x and total_x are updated if the polished point
// improved the full objective or, at an unchanged value, its KKT residual.
int polish_on_support(const Network& network, const std::vector<NodeData>& datasets,
                      const Eigen::VectorXd& weights, int budget, double grad_tol,
                      Eigen::VectorXd& x, ObjectiveEval& at_x, double& total_x) {
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] != 0.0 || std::abs(at_x.grad[i]) > weights[i]) support.push_back(i);
  const auto m = static_cast<Eigen::Index>(support.size());
  if (m == 0 || budget <= 0) return 0;

  Eigen::VectorXd signs(m), local_weights(m), u(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index i = support[k];
    u[k] = x[i];
    signs[k] = x[i] != 0.0 ? (x[i] > 0.0 ? 1.0 : -1.0)
                           : (at_x.grad[i] > 0.0 ? -1.0 : 1.0);
    local_weights[k] = weights[i];
  }

  auto embed = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(x.size());
    for (Eigen::Index k = 0; k < m; ++k) p[support[k]] = v[k];
    return p;
  };
  // Inside the closed orthant of the starting signs the linearized penalty
  // equals the true one, so clamping sign crossings to zero keeps every
  // accepted step a descent step for the full objective.
  auto project = [&](Eigen::VectorXd v) {
    for (Eigen::Index k = 0; k < m; ++k)
      if (v[k] * signs[k] < 0.0) v[k] = 0.0;
    return v;
  };
  struct LocalEval {
    double value = 0.0;
    Eigen::VectorXd grad;
    ObjectiveEval full;
  };
  auto eval = [&](const Eigen::VectorXd& v) {
    LocalEval out;
    out.full = total_nll(network, embed(v), datasets);
    out.value = out.full.value + (local_weights.array() * signs.array() * v.array()).sum();
    out.grad.resize(m);
    for (Eigen::Index k = 0; k < m; ++k)
      out.grad[k] = out.full.grad[support[k]] + local_weights[k] * signs[k];
    return out;
  };

  // Progress is judged by the true KKT residual at the embedded point, not by
  // the linearized gradient: a coordinate parked on the orthant boundary keeps
  // a constant w residual in the linearization even when the boundary is where
  // it belongs.
  auto residual = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& full_grad) {
    return kkt_from(embed(v), full_grad, weights);
  };

  LocalEval cur = eval(u);
  double cur_kkt = residual(u, cur.full.grad);
  constexpr double armijo = 1e-4;
  constexpr double damping_floor = 1e-9;
  double damping = damping_floor;

  int iter = 0;
  while (iter < budget && cur_kkt > 0.5 * grad_tol) {
    // Central differences of the smooth gradient; the linearized penalty has
    // no curvature. Symmetrize to wash out the differencing noise.
    Eigen::MatrixXd hess(m, m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const double h = 1e-5 * (1.0 + std::abs(u[k]));
      Eigen::VectorXd up = u, down = u;
      up[k] += h;
      down[k] -= h;
      hess.col(k) = (eval(up).grad - eval(down).grad) / (2.0 * h);
    }
    hess = 0.5 * (hess + hess.transpose()).eval();
    const double scale = std::max(hess.diagonal().cwiseAbs().maxCoeff(), 1e-8);

    LocalEval trial;
    Eigen::VectorXd moved(m);
    bool accepted = false;
    for (int tries = 0; tries < 25; ++tries) {
      Eigen::MatrixXd damped = hess;
      damped.diagonal().array() += damping * scale;
      const Eigen::VectorXd dir = damped.ldlt().solve(-cur.grad);
      if (dir.allFinite()) {
        moved = project(u + dir) - u;
        const double directional = cur.grad.dot(moved);
        if (directional < 0.0) {
          trial = eval(u + moved);
          if (std::isfinite(trial.value)) {
            const double rounding = 1e-12 * (1.0 + std::abs(cur.value));
            if (trial.value <= cur.value + armijo * directional ||
                (trial.value <= cur.value + rounding &&
                 residual(u + moved, trial.full.grad) <= 0.9 * cur_kkt)) {
              accepted = true;
              break;
            }
          }
        }
      }
      damping *= 10.0;
    }
    if (!accepted) break;

    u += moved;
    cur = trial;
    cur_kkt = residual(u, cur.full.grad);
    damping = std::max(damping * 0.25, damping_floor);
    ++iter;
  }

  // Signs may have drifted across zero, so judge by the true penalty.
  const Eigen::VectorXd polished = embed(u);
  const double total = cur.full.value + weights.dot(polished.cwiseAbs());
  const double rounding = 1e-12 * (1.0 + std::abs(total_x));
  const bool value_gain = total < total_x;
  const bool kkt_gain =
      total <= total_x + rounding &&
      kkt_from(polished, cur.full.grad, weights) < kkt_from(x, at_x.grad, weights);
  if (value_gain || kkt_gain) {
    x = polished;
    at_x = std::move(cur.full);
    total_x = total;
  }
  return iter;
}

}  // namespace

FitResult fit(const Network& network, const std::vector<NodeData>& datasets,
              const FitConfig& config) {
  check_config(config);
  if (config.reg.kind == RegKind::laplace)
    throw std::invalid_argument("fit handles none/gaussian regularization; use fit_sparse for laplace");
  if (config.restarts < 0) throw std::invalid_argument("restarts must be nonnegative");
  check_datasets(network, datasets);

  FitResult best = fit_single(network, datasets, config, config.seed);
  for (int r = 1; r <= config.restarts; ++r) {
    FitResult candidate = fit_single(network, datasets, config, config.seed + r);
    if (candidate.objective_trace.back() < best.objective_trace.back())
      best = std::move(candidate);
  }
  return best;
}

FitResult fit_sparse(const Network& network, const std::vector<NodeData>& datasets,
                     const FitConfig& config) {
  check_config(config);
  if (config.reg.kind != RegKind::laplace)
    throw std::invalid_argument("fit_sparse requires laplace regularization");
  check_datasets(network, datasets);

  const Eigen::VectorXd weights = l1_weight_vector(network, config.reg);
  const auto penalty = [&](const Eigen::VectorXd& p) {
    return weights.dot(p.cwiseAbs());
  };
  const auto smooth = [&](const Eigen::VectorXd& p) {
    return total_nll(network, p, datasets);
  };

  Eigen::VectorXd x = network.init_params(config.init, config.seed, config.init_scale);
  ObjectiveEval at_x = smooth(x);
  if (!std::isfinite(at_x.value))
    throw std::runtime_error("objective is not finite at the initial point");
  double total_x = at_x.value + penalty(x);

  FitResult result;
  result.objective_trace.push_back(total_x);
  result.reason = "max iterations";

  Eigen::VectorXd y = x;
  bool y_is_x = true;
  double momentum = 1.0;
  double step = 1.0;

  // Proximal chunks alternate with sign-fixed polish rounds until the KKT
  // residual clears, sharing one iteration budget. A chunk that stalls or
  // stops moving still gets a polish attempt before the solver gives up:
  // the polish sees curvature the proximal step cannot.
  constexpr int kChunk = 200;
  int iter = 0;
  while (iter < config.max_iters && !result.converged) {
    bool stalled = false;
    bool tiny_step = false;
    bool chunk_moved = false;
    for (int inner = 0; inner < kChunk && iter < config.max_iters; ++inner) {
      const ObjectiveEval at_y = y_is_x ? at_x : smooth(y);

      // Backtrack until the quadratic upper bound at y holds, so each proximal
      // step from y is a descent step for the majorizer.
      Eigen::VectorXd z(x.size());
      ObjectiveEval at_z;
      bool bounded = false;
      for (int backtracks = 0; backtracks < 80; ++backtracks) {
        for (Eigen::Index i = 0; i < x.size(); ++i)
          z[i] = soft_threshold(y[i] - step * at_y.grad[i], step * weights[i]);
        at_z = smooth(z);
        const Eigen::VectorXd d = z - y;
        const double bound =
            at_y.value + at_y.grad.dot(d) + d.squaredNorm() / (2.0 * step) + 1e-12;
        if (std::isfinite(at_z.value) && at_z.value <= bound) {
          bounded = true;
          break;
        }
        step *= 0.5;
      }
      if (!bounded) {
        stalled = true;
        break;
      }

      const double total_z = at_z.value + penalty(z);
      const Eigen::VectorXd x_old = x;
      const bool accepted = total_z <= total_x;
      if (accepted) {
        if (total_z < total_x) chunk_moved = true;
        x = z;
        at_x = at_z;
        total_x = total_z;
      }
      result.objective_trace.push_back(total_x);
      ++iter;

      const double kkt = kkt_from(x, at_x.grad, weights);
      if (kkt <= config.grad_tol) {
        result.converged = true;
        result.reason = "kkt tolerance";
        break;
      }
      if (accepted) {
        const double moved = (x - x_old).norm();
        if (moved > 0.0 && moved / std::max(1.0, x.norm()) <= config.step_tol) {
          tiny_step = true;
          break;
        }
        const double next_momentum =
            0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        y = x + (momentum / next_momentum) * (z - x) +
            ((momentum - 1.0) / next_momentum) * (x - x_old);
        momentum = next_momentum;
        y_is_x = false;
      } else {
        // Monotone safeguard: keep the incumbent and restart the momentum; the
        // next iteration is then a plain proximal step from x, which cannot be
        // rejected again.
        momentum = 1.0;
        y = x;
        y_is_x = true;
      }
      step = std::min(step * 1.25, 1e6);
    }

    if (result.converged || iter >= config.max_iters) break;

    const double total_entry = total_x;
    const double kkt_entry = kkt_from(x, at_x.grad, weights);
    iter += polish_on_support(network, datasets, weights,
                              std::min(kChunk, config.max_iters - iter),
                              config.grad_tol, x, at_x, total_x);
    if (total_x < total_entry) result.objective_trace.push_back(total_x);
    const double kkt_exit = kkt_from(x, at_x.grad, weights);
    if (kkt_exit <= config.grad_tol) {
      result.converged = true;
      result.reason = "kkt tolerance";
      break;
    }
    if (total_x >= total_entry && kkt_exit >= kkt_entry && !chunk_moved) {
      // Nothing in this round moved the value or the residual; more rounds
      // would replay the same computation.
      if (tiny_step) {
        result.converged = true;
        result.reason = "step tolerance";
      } else {
        result.reason = stalled ? "line search stalled" : "numerical floor";
      }
      break;
    }
    // Restart the momentum from the polished incumbent.
    y = x;
    y_is_x = true;
    momentum = 1.0;
  }

  result.params = x;
  result.grad_norm_final = kkt_from(x, at_x.grad, weights);
  result.iterations = iter;
  return result;
}

Eigen::VectorXd single_fidelity_fit(const Basis& basis,
                                    const Eigen::Ref<const Eigen::MatrixXd>& x,
                                    const Eigen::Ref<const Eigen::VectorXd>& y,
                                    double ridge) {
  if (x.rows() == 0) throw std::invalid_argument("single_fidelity_fit needs at least one point");
  if (x.rows() != y.size())
    throw std::invalid_argument("point count does not match response count");
  if (ridge < 0.0) throw std::invalid_argument("ridge weight must be nonnegative");

  const Eigen::MatrixXd design = basis.eval(x);
  if (ridge == 0.0)
    return design.completeOrthogonalDecomposition().solve(y);

  // Ridge via the stacked system [V; sqrt(ridge) I] theta = [y; 0].
  const Eigen::Index p = design.cols();
  Eigen::MatrixXd stacked(design.rows() + p, p);
  stacked.topRows(design.rows()) = design;
  stacked.bottomRows(p) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(p, p);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(design.rows() + p);
  rhs.head(design.rows()) = y;
  return stacked.completeOrthogonalDecomposition().solve(rhs);
}

GradCheckReport gradient_check(const Network& network,
                               const Eigen::Ref<const Eigen::VectorXd>& params,
                               const std::vector<NodeData>& datasets, double fd_step) {
  if (!(fd_step > 0.0)) throw std::invalid_argument("fd_step must be positive");
  const ObjectiveEval analytic = total_nll(network, params, datasets);

  GradCheckReport report;
  Eigen::VectorXd probe = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + fd_step;
    const double up = total_nll(network, probe, datasets).value;
    probe[i] = params[i] - fd_step;
    const double down = total_nll(network, probe, datasets).value;
    probe[i] = params[i];

    const double fd = (up - down) / (2.0 * fd_step);
    const double scale = std::max({std::abs(fd), std::abs(analytic.grad[i]), 1.0});
    const double rel = std::abs(fd - analytic.grad[i]) / scale;
    if (rel > report.max_rel_discrepancy) {
      report.max_rel_discrepancy = rel;
      report.worst_coordinate = static_cast<int>(i);
    }
  }
  return report;
}

double kkt_residual(const Network& network,
                    const Eigen::Ref<const Eigen::VectorXd>& params,
                    const std::vector<NodeData>& datasets, const RegConfig& reg) {
  if (reg.kind != RegKind::laplace)
    throw std::invalid_argument("kkt_residual applies to laplace regularization");
  const Eigen::VectorXd weights = l1_weight_vector(network, reg);
  const ObjectiveEval at = total_nll(network, params, datasets);
  return kkt_from(params, at.grad, weights);
}

}  // namespace mfnet
