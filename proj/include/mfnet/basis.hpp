#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace mfnet {

enum class BasisKind { monomial, legendre };

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
};

/// Total-degree polynomial subspace over R^dim. `bounds` is required for the
/// Legendre kind (each coordinate is affinely mapped onto [-1, 1] before the
/// recurrence) and optional for monomials.
struct BasisSpec {
  BasisKind kind = BasisKind::monomial;
  int degree = 1;
  int dim = 1;
  std::vector<Interval> bounds;
};

using MultiIndex = std::vector<int>;

/// C(degree + dim, dim), the number of multivariate terms of total degree
/// <= degree.
std::size_t basis_cardinality(int degree, int dim);

/// All multi-indices with |a| <= degree in graded-lexicographic order: sorted
/// by total degree first, then lexicographically with the first coordinate
/// most significant. This ordering is the column-order contract of every
/// basis matrix and parameter file.
std::vector<MultiIndex> total_degree_multi_indices(int degree, int dim);

class Basis {
 public:
  /// Throws std::invalid_argument for dim < 1, degree < 0, or a Legendre
  /// spec without finite per-dimension bounds.
  explicit Basis(BasisSpec spec);

  const BasisSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }
  int degree() const { return spec_.degree; }
  std::size_t cardinality() const { return terms_.size(); }
  const std::vector<MultiIndex>& terms() const { return terms_; }

  /// Vandermonde-like matrix: entry (i, j) is basis function j evaluated at
  /// row i of `points`. Throws std::invalid_argument if points.cols() != dim.
  Eigen::MatrixXd eval(const Eigen::Ref<const Eigen::MatrixXd>& points) const;

 private:
  BasisSpec spec_;
  std::vector<MultiIndex> terms_;
};

}  // namespace mfnet
