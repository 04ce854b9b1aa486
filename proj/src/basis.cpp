#include "mfnet/basis.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mfnet {

std::size_t basis_cardinality(int degree, int dim) {
  // C(degree + dim, dim) computed incrementally to stay exact
  std::size_t result = 1;
  for (int i = 1; i <= dim; ++i) {
    result = result * static_cast<std::size_t>(degree + i) / static_cast<std::size_t>(i);
  }
  return result;
}

namespace {

void emit_indices(int remaining, int pos, MultiIndex& current,
                  std::vector<MultiIndex>& out) {
  if (pos == static_cast<int>(current.size()) - 1) {
    current[pos] = remaining;
    out.push_back(current);
    return;
  }
  for (int k = remaining; k >= 0; --k) {
    current[pos] = k;
    emit_indices(remaining - k, pos + 1, current, out);
  }
}

}  // namespace

std::vector<MultiIndex> total_degree_multi_indices(int degree, int dim) {
  std::vector<MultiIndex> out;
  out.reserve(basis_cardinality(degree, dim));
  MultiIndex current(dim, 0);
  for (int total = 0; total <= degree; ++total) {
    emit_indices(total, 0, current, out);
  }
  return out;
}

Basis::Basis(BasisSpec spec) : spec_(std::move(spec)) {
  if (spec_.dim < 1) {
    throw std::invalid_argument("invalid basis spec: dim must be >= 1, got " +
                                std::to_string(spec_.dim));
  }
  if (spec_.degree < 0) {
    throw std::invalid_argument("invalid basis spec: degree must be >= 0, got " +
                                std::to_string(spec_.degree));
  }
  if (spec_.kind == BasisKind::legendre) {
    if (static_cast<int>(spec_.bounds.size()) != spec_.dim) {
      throw std::invalid_argument(
          "invalid basis spec: legendre requires bounds for all " +
          std::to_string(spec_.dim) + " dimensions");
    }
    for (const Interval& b : spec_.bounds) {
      if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.lo < b.hi)) {
        throw std::invalid_argument(
            "invalid basis spec: legendre bounds must be finite with lo < hi");
      }
    }
  }
  terms_ = total_degree_multi_indices(spec_.degree, spec_.dim);
}

Eigen::MatrixXd Basis::eval(const Eigen::Ref<const Eigen::MatrixXd>& points) const {
  if (points.cols() != spec_.dim) {
    throw std::invalid_argument("dimension mismatch: basis dim " +
                                std::to_string(spec_.dim) + " but points have " +
                                std::to_string(points.cols()) + " columns");
  }
  const Eigen::Index n = points.rows();
  const Eigen::Index pc = static_cast<Eigen::Index>(terms_.size());
  Eigen::MatrixXd out(n, pc);

  // per-dimension table of univariate factors up to the total degree
  Eigen::MatrixXd table(spec_.dim, spec_.degree + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int dIdx = 0; dIdx < spec_.dim; ++dIdx) {
      double x = points(i, dIdx);
      if (spec_.kind == BasisKind::legendre) {
        const Interval& b = spec_.bounds[dIdx];
        x = 2.0 * (x - b.lo) / (b.hi - b.lo) - 1.0;
        table(dIdx, 0) = 1.0;
        if (spec_.degree >= 1) table(dIdx, 1) = x;
        for (int k = 1; k + 1 <= spec_.degree; ++k) {
          // (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}
          table(dIdx, k + 1) =
              ((2 * k + 1) * x * table(dIdx, k) - k * table(dIdx, k - 1)) / (k + 1);
        }
      } else {
        table(dIdx, 0) = 1.0;
        for (int k = 1; k <= spec_.degree; ++k) table(dIdx, k) = table(dIdx, k - 1) * x;
      }
    }
    for (Eigen::Index j = 0; j < pc; ++j) {
      double v = 1.0;
      const MultiIndex& mi = terms_[static_cast<std::size_t>(j)];
      for (int dIdx = 0; dIdx < spec_.dim; ++dIdx) v *= table(dIdx, mi[dIdx]);
      out(i, j) = v;
    }
  }
  return out;
}

}  // namespace mfnet
