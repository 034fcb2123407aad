#include "epiflow/linalg.hpp"

#include <cmath>
#include <utility>

#include "epiflow/errors.hpp"
#include "epiflow/kernels.hpp"

namespace epiflow {

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw IndexMismatch("matmul: inner dimensions disagree");
  Mat c(a.rows(), b.cols());
  kern::gemm_acc(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

Vec matvec(const Mat& a, const Vec& x) {
  if (a.cols() != x.size()) throw IndexMismatch("matvec: dimensions disagree");
  Vec y(a.rows());
  kern::matvec(a.data(), a.rows(), a.cols(), x.data(), y.data());
  return y;
}

Vec matvec_t(const Mat& a, const Vec& x) {
  if (a.rows() != x.size()) throw IndexMismatch("matvec_t: dimensions disagree");
  Vec y(a.cols());
  kern::matvec_t(a.data(), a.rows(), a.cols(), x.data(), y.data());
  return y;
}

Mat transpose(const Mat& a) {
  Mat t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

void scale_rows(Mat& a, const Vec& d) {
  if (a.rows() != d.size()) throw IndexMismatch("scale_rows: dimensions disagree");
  for (std::size_t i = 0; i < a.rows(); ++i) kern::scal(d[i], a.row(i), a.cols());
}

void scale_cols(Mat& a, const Vec& d) {
  if (a.cols() != d.size()) throw IndexMismatch("scale_cols: dimensions disagree");
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* r = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) r[j] *= d[j];
  }
}

double max_abs(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

double max_abs(const Mat& m) {
  double r = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) r = std::max(r, std::fabs(m(i, j)));
  return r;
}

LuSolver::LuSolver(Mat a) : lu_(std::move(a)), piv_(lu_.rows()) {
  if (lu_.rows() != lu_.cols()) throw IndexMismatch("LuSolver: matrix not square");
  const std::size_t n = lu_.rows();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::fabs(lu_(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      double v = std::fabs(lu_(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best == 0.0) throw SingularSystem("LuSolver: zero pivot");
    piv_[k] = static_cast<int>(p);
    if (p != k)
      for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
    const double inv_pivot = 1.0 / lu_(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      lu_(i, k) *= inv_pivot;
      kern::axpy(-lu_(i, k), lu_.row(k) + k + 1, lu_.row(i) + k + 1, n - k - 1);
    }
  }
}

void LuSolver::solve_inplace(Vec& b) const {
  const std::size_t n = lu_.rows();
  if (b.size() != n) throw IndexMismatch("LuSolver::solve: dimensions disagree");
  for (std::size_t k = 0; k < n; ++k) std::swap(b[k], b[static_cast<std::size_t>(piv_[k])]);
  // forward substitution, unit lower triangle
  for (std::size_t k = 0; k < n; ++k) b[k] -= kern::dot(lu_.row(k), b.data(), k);
  for (std::size_t k = n; k-- > 0;) {
    b[k] -= kern::dot(lu_.row(k) + k + 1, b.data() + k + 1, n - k - 1);
    b[k] /= lu_(k, k);
  }
}

Vec LuSolver::solve(const Vec& b) const {
  Vec x = b;
  solve_inplace(x);
  return x;
}

Mat LuSolver::solve(const Mat& b) const {
  const std::size_t n = lu_.rows();
  if (b.rows() != n) throw IndexMismatch("LuSolver::solve: dimensions disagree");
  Mat x = b;
  Vec col(n);
  for (std::size_t j = 0; j < b.cols(); ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = x(i, j);
    solve_inplace(col);
    for (std::size_t i = 0; i < n; ++i) x(i, j) = col[i];
  }
  return x;
}

Mat LuSolver::inverse() const { return solve(Mat::identity(lu_.rows())); }

PowerIterationResult power_iteration(const Mat& a, double tol, int max_iter) {
  if (a.rows() != a.cols()) throw IndexMismatch("power_iteration: matrix not square");
  const std::size_t n = a.rows();
  PowerIterationResult res;
  if (n == 1) {
    res.value = a(0, 0);
    res.vector = {1.0};
    res.iterations = 0;
    return res;
  }
  Vec x(n, 1.0 / static_cast<double>(n));
  Vec y(n);
  double lambda_prev = 0.0;
  double diff = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    kern::matvec(a.data(), n, n, x.data(), y.data());
    const double xx = kern::dot(x.data(), x.data(), n);
    const double lambda = kern::dot(x.data(), y.data(), n) / xx;
    const double norm = kern::sum(y.data(), n);
    if (norm <= 0.0 || !std::isfinite(norm)) {
      // dominant eigenvalue is zero (or matrix annihilates the iterate)
      if (max_abs(y) == 0.0) {
        res.value = 0.0;
        res.vector = x;
        res.iterations = it;
        return res;
      }
      throw NoConvergence("power_iteration: iterate left the nonnegative cone", norm);
    }
    kern::scal(1.0 / norm, y.data(), n);
    std::swap(x, y);
    diff = std::fabs(lambda - lambda_prev);
    if (it > 1 && diff <= tol * std::max(1.0, std::fabs(lambda))) {
      res.value = lambda;
      res.vector = std::move(x);
      res.iterations = it;
      return res;
    }
    lambda_prev = lambda;
  }
  throw NoConvergence("power_iteration: no convergence", diff);
}

}  // namespace epiflow
