#include "adarand/matrix.hpp"

#include <cmath>
#include <utility>

#include "adarand/errors.hpp"

namespace adarand {

RealMatrix::RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ContractViolation("RealMatrix: data length " + std::to_string(data_.size()) +
                            " does not match shape " + std::to_string(rows_) + "x" +
                            std::to_string(cols_));
  }
  validate_finite("RealMatrix constructor");
}

RealMatrix RealMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) {
      throw ContractViolation("RealMatrix::from_rows: ragged rows");
    }
    data.insert(data.end(), row.begin(), row.end());
  }
  return RealMatrix(r, c, std::move(data));
}

RealMatrix& RealMatrix::operator+=(const RealMatrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

RealMatrix& RealMatrix::operator-=(const RealMatrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

RealMatrix& RealMatrix::operator*=(double scalar) {
  for (double& v : data_) v *= scalar;
  return *this;
}

bool RealMatrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void RealMatrix::validate_finite(const std::string& label) const {
  if (!all_finite()) {
    throw NumericError(label + ": non-finite entry in " + std::to_string(rows_) + "x" +
                       std::to_string(cols_) + " matrix");
  }
}

RealMatrix operator+(RealMatrix lhs, const RealMatrix& rhs) {
  lhs += rhs;
  return lhs;
}

RealMatrix operator-(RealMatrix lhs, const RealMatrix& rhs) {
  lhs -= rhs;
  return lhs;
}

RealMatrix operator*(RealMatrix m, double scalar) {
  m *= scalar;
  return m;
}

RealMatrix operator*(double scalar, RealMatrix m) {
  m *= scalar;
  return m;
}

RealMatrix matmul(const RealMatrix& a, const RealMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ContractViolation("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                            std::to_string(b.rows()) + " differ");
  }
  RealMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) {
        out(i, j) += aik * b(k, j);
      }
    }
  }
  return out;
}

RealMatrix transpose(const RealMatrix& m) {
  RealMatrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      out(j, i) = m(i, j);
    }
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ContractViolation("dot: lengths differ");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double squared_frobenius(const RealMatrix& m) { return squared_norm(m.values()); }

void require_same_shape(const RealMatrix& a, const RealMatrix& b, const std::string& context) {
  if (!a.same_shape(b)) {
    throw ContractViolation(context + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                            std::to_string(b.cols()));
  }
}

}  // namespace adarand
