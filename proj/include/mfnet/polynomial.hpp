#pragma once

#include "mfnet/basis.hpp"

#include <Eigen/Core>

#include <map>

namespace mfnet {

/// Sparse multivariate polynomial keyed by monomial multi-index.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int dim) : dim_(dim) {}

  static Polynomial constant(int dim, double value);

  int dim() const { return dim_; }
  const std::map<MultiIndex, double>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  double coeff(const MultiIndex& mi) const;
  void add_term(const MultiIndex& mi, double value);

  Polynomial& operator+=(const Polynomial& other);
  Polynomial operator*(const Polynomial& other) const;
  Polynomial& operator*=(double scalar);

  double eval(const Eigen::Ref<const Eigen::RowVectorXd>& point) const;

  /// Highest |a| among terms with |coefficient| > tol; -1 for the zero
  /// polynomial.
  int total_degree(double tol = 0.0) const;

  /// Drops terms with |coefficient| <= tol.
  void prune(double tol);

 private:
  int dim_ = 0;
  std::map<MultiIndex, double> terms_;
};

}  // namespace mfnet
