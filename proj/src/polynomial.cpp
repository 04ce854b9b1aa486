#include "mfnet/polynomial.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mfnet {

Polynomial Polynomial::constant(int dim, double value) {
  Polynomial p(dim);
  p.add_term(MultiIndex(static_cast<std::size_t>(dim), 0), value);
  return p;
}

double Polynomial::coeff(const MultiIndex& mi) const {
  auto it = terms_.find(mi);
  return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(const MultiIndex& mi, double value) {
  if (static_cast<int>(mi.size()) != dim_) {
    throw std::invalid_argument("multi-index size does not match polynomial dim");
  }
  terms_[mi] += value;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  for (const auto& [mi, c] : other.terms_) terms_[mi] += c;
  return *this;
}

Polynomial Polynomial::operator*(const Polynomial& other) const {
  Polynomial out(dim_);
  MultiIndex sum(static_cast<std::size_t>(dim_), 0);
  for (const auto& [a, ca] : terms_) {
    for (const auto& [b, cb] : other.terms_) {
      for (int i = 0; i < dim_; ++i) sum[static_cast<std::size_t>(i)] = a[i] + b[i];
      out.terms_[sum] += ca * cb;
    }
  }
  return out;
}

Polynomial& Polynomial::operator*=(double scalar) {
  for (auto& [mi, c] : terms_) c *= scalar;
  return *this;
}

double Polynomial::eval(const Eigen::Ref<const Eigen::RowVectorXd>& point) const {
  double value = 0.0;
  for (const auto& [mi, c] : terms_) {
    double term = c;
    for (int i = 0; i < dim_; ++i) {
      for (int k = 0; k < mi[static_cast<std::size_t>(i)]; ++k) term *= point(i);
    }
    value += term;
  }
  return value;
}

int Polynomial::total_degree(double tol) const {
  int degree = -1;
  for (const auto& [mi, c] : terms_) {
    if (std::abs(c) <= tol) continue;
    degree = std::max(degree, std::accumulate(mi.begin(), mi.end(), 0));
  }
  return degree;
}

void Polynomial::prune(double tol) {
  for (auto it = terms_.begin(); it != terms_.end();) {
    it = std::abs(it->second) <= tol ? terms_.erase(it) : std::next(it);
  }
}

}  // namespace mfnet
