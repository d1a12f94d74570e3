#include "adarand/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "adarand/errors.hpp"

namespace adarand {

RealMatrix finite_diff_grad(const std::function<double(const RealMatrix&)>& loss_fn,
                            const RealMatrix& at, double h) {
  if (!(h > 0.0)) {
    throw ContractViolation("finite_diff_grad: h must be positive");
  }
  RealMatrix grad(at.rows(), at.cols());
  RealMatrix probe = at;
  for (std::size_t i = 0; i < at.rows(); ++i) {
    for (std::size_t j = 0; j < at.cols(); ++j) {
      const double original = probe(i, j);
      probe(i, j) = original + h;
      const double up = loss_fn(probe);
      probe(i, j) = original - h;
      const double down = loss_fn(probe);
      probe(i, j) = original;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericError("finite_diff_grad: non-finite loss at entry (" + std::to_string(i) +
                           "," + std::to_string(j) + ")");
      }
      grad(i, j) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

double relative_error(const RealMatrix& a, const RealMatrix& b, double floor) {
  require_same_shape(a, b, "relative_error");
  double diff = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    diff += d * d;
  }
  const double denom =
      std::max({std::sqrt(squared_frobenius(a)), std::sqrt(squared_frobenius(b)), floor});
  return std::sqrt(diff) / denom;
}

}  // namespace adarand
