#ifndef ADARAND_MATRIX_HPP
#define ADARAND_MATRIX_HPP

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace adarand {

/// Dense row-major matrix of 64-bit reals. The universal carrier for
/// features, parameters, and prior tables. Entries are expected to stay
/// finite; boundary operations call validate_finite().
class RealMatrix {
public:
  RealMatrix() = default;
  RealMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static RealMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  bool same_shape(const RealMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  RealMatrix& operator+=(const RealMatrix& other);
  RealMatrix& operator-=(const RealMatrix& other);
  RealMatrix& operator*=(double scalar);

  /// Throws NumericError naming `label` if any entry is NaN or infinite.
  void validate_finite(const std::string& label) const;
  bool all_finite() const;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

RealMatrix operator+(RealMatrix lhs, const RealMatrix& rhs);
RealMatrix operator-(RealMatrix lhs, const RealMatrix& rhs);
RealMatrix operator*(RealMatrix m, double scalar);
RealMatrix operator*(double scalar, RealMatrix m);

/// a [m x k] times b [k x n] -> [m x n].
RealMatrix matmul(const RealMatrix& a, const RealMatrix& b);
RealMatrix transpose(const RealMatrix& m);

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> v);
double squared_frobenius(const RealMatrix& m);

void require_same_shape(const RealMatrix& a, const RealMatrix& b, const std::string& context);

}  // namespace adarand

#endif
