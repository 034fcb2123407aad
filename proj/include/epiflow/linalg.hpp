#ifndef EPIFLOW_LINALG_HPP
#define EPIFLOW_LINALG_HPP

#include <cstddef>
#include <vector>

namespace epiflow {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles. Sized for the graphs this project
/// works with (|N| <= ~50); nothing here is sparse or blocked.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool operator==(const Mat& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat matmul(const Mat& a, const Mat& b);
Vec matvec(const Mat& a, const Vec& x);
/// A^T x without forming the transpose.
Vec matvec_t(const Mat& a, const Vec& x);
Mat transpose(const Mat& a);

/// Scale row i of a by d[i] in place (diag(d) * a).
void scale_rows(Mat& a, const Vec& d);
/// Scale column j of a by d[j] in place (a * diag(d)).
void scale_cols(Mat& a, const Vec& d);

double max_abs(const Vec& v);
double max_abs(const Mat& m);

/// LU factorization with partial pivoting. Throws SingularSystem when a
/// pivot underflows to zero.
class LuSolver {
 public:
  explicit LuSolver(Mat a);

  Vec solve(const Vec& b) const;
  void solve_inplace(Vec& b) const;
  /// Solve A X = B column by column.
  Mat solve(const Mat& b) const;
  Mat inverse() const;

  std::size_t size() const { return lu_.rows(); }

 private:
  Mat lu_;
  std::vector<int> piv_;
};

struct PowerIterationResult {
  double value = 0.0;  // dominant eigenvalue estimate
  Vec vector;          // corresponding eigenvector, unit 1-norm, nonnegative
  int iterations = 0;
};

/// Power iteration for nonnegative matrices, started from the uniform
/// positive vector. Converges when successive Rayleigh quotients differ by
/// at most tol * max(1, |value|). Throws NoConvergence after max_iter.
PowerIterationResult power_iteration(const Mat& a, double tol = 1e-13, int max_iter = 100000);

}  // namespace epiflow

#endif
