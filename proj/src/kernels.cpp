#include "epiflow/kernels.hpp"

#include <cstdlib>
#include <cstring>

#include "epiflow/errors.hpp"

namespace epiflow::kern {

namespace {

using detail::KernelTable;

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend pick_backend() {
  if (const char* env = std::getenv("EPIFLOW_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0 && cpu_has_avx2()) return Backend::avx2;
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

const KernelTable* table_for(Backend b) {
#if defined(__x86_64__) || defined(_M_X64)
  if (b == Backend::avx2) return &detail::avx2_table;
#endif
  (void)b;
  return &detail::scalar_table;
}

Backend g_backend = pick_backend();
const KernelTable* g_table = table_for(g_backend);

}  // namespace

Backend active_backend() { return g_backend; }

Backend best_backend() { return cpu_has_avx2() ? Backend::avx2 : Backend::scalar; }

void force_backend(Backend b) {
  if (b == Backend::avx2 && !cpu_has_avx2())
    throw Error("avx2 kernels requested but this CPU lacks AVX2/FMA");
  g_backend = b;
  g_table = table_for(b);
}

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
  }
  return "?";
}

double dot(const double* a, const double* b, std::size_t n) { return g_table->dot(a, b, n); }

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  g_table->axpy(alpha, x, y, n);
}

void scal(double alpha, double* x, std::size_t n) { g_table->scal(alpha, x, n); }

double sum(const double* x, std::size_t n) { return g_table->sum(x, n); }

double maxval(const double* x, std::size_t n) { return g_table->maxval(x, n); }

void hadamard(const double* a, const double* b, double* out, std::size_t n) {
  g_table->hadamard(a, b, out, n);
}

void matvec(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t i = 0; i < rows; ++i) y[i] = g_table->dot(a + i * cols, x, cols);
}

void matvec_t(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t j = 0; j < cols; ++j) y[j] = 0.0;
  // accumulate rows: y += x_i * A[i,:], unit stride
  for (std::size_t i = 0; i < rows; ++i) g_table->axpy(x[i], a + i * cols, y, cols);
}

void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
              std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) g_table->axpy(arow[p], b + p * n, crow, n);
  }
}

}  // namespace epiflow::kern
