#ifndef EPIFLOW_KERNELS_HPP
#define EPIFLOW_KERNELS_HPP

#include <cstddef>

// Data-parallel inner loops used by the dense linear algebra layer.
//
// Every kernel exists in a scalar reference version and, on x86-64 with
// AVX2+FMA, a vectorized version. The backend is picked once at runtime
// (CPU probe, overridable with force_backend() or EPIFLOW_KERNELS=scalar).
// Both backends compute the same quantities; they may differ by reduction
// order, so cross-backend comparisons are tolerance-based, not bitwise.

namespace epiflow::kern {

enum class Backend { scalar, avx2 };

/// Backend currently in use.
Backend active_backend();

/// Highest backend this CPU supports.
Backend best_backend();

/// Override the dispatch decision. Throws Error if unsupported on this CPU.
void force_backend(Backend b);

const char* backend_name(Backend b);

/// sum_i a[i] * b[i]
double dot(const double* a, const double* b, std::size_t n);

/// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);

/// x[i] *= alpha
void scal(double alpha, double* x, std::size_t n);

/// sum_i x[i]
double sum(const double* x, std::size_t n);

/// max_i x[i]; n must be >= 1
double maxval(const double* x, std::size_t n);

/// out[i] = a[i] * b[i]
void hadamard(const double* a, const double* b, double* out, std::size_t n);

/// y = A x, A row-major rows x cols
void matvec(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);

/// y = A^T x, A row-major rows x cols (y has length cols)
void matvec_t(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);

/// C += A B, all row-major, A m x k, B k x n, C m x n
void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
              std::size_t n);

namespace detail {

struct KernelTable {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scal)(double, double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*maxval)(const double*, std::size_t);
  void (*hadamard)(const double*, const double*, double*, std::size_t);
};

extern const KernelTable scalar_table;
#if defined(__x86_64__) || defined(_M_X64)
extern const KernelTable avx2_table;
#endif

}  // namespace detail

}  // namespace epiflow::kern

#endif
