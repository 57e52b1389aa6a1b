#pragma once

#include <cstddef>

namespace uid::kernels {

// Dense f64 kernels used by the autodiff tape. The default entry points
// parallelize over independent output rows/elements with OpenMP; the
// kernels::ref namespace holds serial mirrors used as the reference in
// tests and benchmarks. Both call the same per-row cores, so outputs are
// bit-identical regardless of thread count.

// c[m x n] = a[m x k] * b[k x n]
void matmul(const double* a, const double* b, double* c, long m, long k, long n);
// c[m x n] = a[m x k] * b[n x k]^T
void matmul_nt(const double* a, const double* b, double* c, long m, long k, long n);
// c[k x n] = a[m x k]^T * b[m x n]
void matmul_tn(const double* a, const double* b, double* c, long m, long k, long n);

void softmax_rows(const double* x, double* y, long rows, long cols);
// dx from cached output y
void softmax_rows_backward(const double* y, const double* dy, double* dx, long rows, long cols);

// y = gain .* (x - mean) * rstd + bias per row; xhat and rstd cached for backward
void layer_norm_rows(const double* x, const double* gain, const double* bias, double* y,
                     double* xhat, double* rstd, long rows, long cols, double eps);
void layer_norm_rows_backward(const double* xhat, const double* rstd, const double* gain,
                              const double* dy, double* dx, double* dgain, double* dbias,
                              long rows, long cols);

void gelu(const double* x, double* y, long n);
void gelu_backward(const double* x, const double* dy, double* dx, long n);
void relu(const double* x, double* y, long n);
void relu_backward(const double* x, const double* dy, double* dx, long n);

namespace ref {

void matmul(const double* a, const double* b, double* c, long m, long k, long n);
void matmul_nt(const double* a, const double* b, double* c, long m, long k, long n);
void matmul_tn(const double* a, const double* b, double* c, long m, long k, long n);
void softmax_rows(const double* x, double* y, long rows, long cols);
void softmax_rows_backward(const double* y, const double* dy, double* dx, long rows, long cols);
void layer_norm_rows(const double* x, const double* gain, const double* bias, double* y,
                     double* xhat, double* rstd, long rows, long cols, double eps);
void layer_norm_rows_backward(const double* xhat, const double* rstd, const double* gain,
                              const double* dy, double* dx, double* dgain, double* dbias,
                              long rows, long cols);
void gelu(const double* x, double* y, long n);
void gelu_backward(const double* x, const double* dy, double* dx, long n);
void relu(const double* x, double* y, long n);
void relu_backward(const double* x, const double* dy, double* dx, long n);

}  // namespace ref

}  // namespace uid::kernels
