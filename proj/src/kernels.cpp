#include "uid/kernels.hpp"

#include <cmath>

namespace uid::kernels {

namespace {

// Per-row cores shared by the parallel and serial entry points. Keeping the
// inner accumulation order identical in both paths makes them bit-equal.

inline void matmul_row(const double* a, const double* b, double* c, long k, long n) {
    for (long j = 0; j < n; ++j) c[j] = 0.0;
    for (long p = 0; p < k; ++p) {
        const double av = a[p];
        const double* brow = b + p * n;
        for (long j = 0; j < n; ++j) c[j] += av * brow[j];
    }
}

inline void matmul_nt_row(const double* a, const double* b, double* c, long k, long n) {
    for (long j = 0; j < n; ++j) {
        const double* brow = b + j * k;
        double s = 0.0;
        for (long p = 0; p < k; ++p) s += a[p] * brow[p];
        c[j] = s;
    }
}

// row p of c = a^T * b, i.e. c[p][q] = sum_m a[m][p] * b[m][q]
inline void matmul_tn_row(const double* a, const double* b, double* c, long p, long m, long k, long n) {
    for (long q = 0; q < n; ++q) c[q] = 0.0;
    for (long i = 0; i < m; ++i) {
        const double av = a[i * k + p];
        const double* brow = b + i * n;
        for (long q = 0; q < n; ++q) c[q] += av * brow[q];
    }
}

inline void softmax_row(const double* x, double* y, long cols) {
    double mx = x[0];
    for (long j = 1; j < cols; ++j) mx = std::max(mx, x[j]);
    double sum = 0.0;
    for (long j = 0; j < cols; ++j) {
        y[j] = std::exp(x[j] - mx);
        sum += y[j];
    }
    const double inv = 1.0 / sum;
    for (long j = 0; j < cols; ++j) y[j] *= inv;
}

inline void softmax_bwd_row(const double* y, const double* dy, double* dx, long cols) {
    double dot = 0.0;
    for (long j = 0; j < cols; ++j) dot += dy[j] * y[j];
    for (long j = 0; j < cols; ++j) dx[j] = y[j] * (dy[j] - dot);
}

inline void layer_norm_row(const double* x, const double* gain, const double* bias, double* y,
                           double* xhat, double* rstd_out, long cols, double eps) {
    double mean = 0.0;
    for (long j = 0; j < cols; ++j) mean += x[j];
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (long j = 0; j < cols; ++j) {
        const double d = x[j] - mean;
        var += d * d;
    }
    var /= static_cast<double>(cols);
    const double rstd = 1.0 / std::sqrt(var + eps);
    *rstd_out = rstd;
    for (long j = 0; j < cols; ++j) {
        xhat[j] = (x[j] - mean) * rstd;
        y[j] = xhat[j] * gain[j] + bias[j];
    }
}

inline void layer_norm_bwd_row(const double* xhat, double rstd, const double* gain,
                               const double* dy, double* dx, long cols) {
    double mean_dyh = 0.0;
    double mean_dyh_xhat = 0.0;
    for (long j = 0; j < cols; ++j) {
        const double dyh = dy[j] * gain[j];
        mean_dyh += dyh;
        mean_dyh_xhat += dyh * xhat[j];
    }
    mean_dyh /= static_cast<double>(cols);
    mean_dyh_xhat /= static_cast<double>(cols);
    for (long j = 0; j < cols; ++j) {
        const double dyh = dy[j] * gain[j];
        dx[j] = (dyh - mean_dyh - xhat[j] * mean_dyh_xhat) * rstd;
    }
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double gelu_one(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }
inline double gelu_grad_one(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    return cdf + x * pdf;
}

}  // namespace

void matmul(const double* a, const double* b, double* c, long m, long k, long n) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < m; ++i) matmul_row(a + i * k, b, c + i * n, k, n);
}

void matmul_nt(const double* a, const double* b, double* c, long m, long k, long n) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < m; ++i) matmul_nt_row(a + i * k, b, c + i * n, k, n);
}

void matmul_tn(const double* a, const double* b, double* c, long m, long k, long n) {
#pragma omp parallel for schedule(static)
    for (long p = 0; p < k; ++p) matmul_tn_row(a, b, c + p * n, p, m, k, n);
}

void softmax_rows(const double* x, double* y, long rows, long cols) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < rows; ++i) softmax_row(x + i * cols, y + i * cols, cols);
}

void softmax_rows_backward(const double* y, const double* dy, double* dx, long rows, long cols) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < rows; ++i) softmax_bwd_row(y + i * cols, dy + i * cols, dx + i * cols, cols);
}

void layer_norm_rows(const double* x, const double* gain, const double* bias, double* y,
                     double* xhat, double* rstd, long rows, long cols, double eps) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < rows; ++i)
        layer_norm_row(x + i * cols, gain, bias, y + i * cols, xhat + i * cols, rstd + i, cols, eps);
}

void layer_norm_rows_backward(const double* xhat, const double* rstd, const double* gain,
                              const double* dy, double* dx, double* dgain, double* dbias,
                              long rows, long cols) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < rows; ++i)
        layer_norm_bwd_row(xhat + i * cols, rstd[i], gain, dy + i * cols, dx + i * cols, cols);
    // dgain/dbias reduce over rows; accumulate in fixed row order.
    for (long j = 0; j < cols; ++j) {
        dgain[j] = 0.0;
        dbias[j] = 0.0;
    }
    for (long i = 0; i < rows; ++i) {
        const double* xh = xhat + i * cols;
        const double* dyr = dy + i * cols;
        for (long j = 0; j < cols; ++j) {
            dgain[j] += dyr[j] * xh[j];
            dbias[j] += dyr[j];
        }
    }
}

void gelu(const double* x, double* y, long n) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) y[i] = gelu_one(x[i]);
}

void gelu_backward(const double* x, const double* dy, double* dx, long n) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) dx[i] = dy[i] * gelu_grad_one(x[i]);
}

void relu(const double* x, double* y, long n) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, const double* dy, double* dx, long n) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
}

namespace ref {

void matmul(const double* a, const double* b, double* c, long m, long k, long n) {
    for (long i = 0; i < m; ++i) matmul_row(a + i * k, b, c + i * n, k, n);
}

void matmul_nt(const double* a, const double* b, double* c, long m, long k, long n) {
    for (long i = 0; i < m; ++i) matmul_nt_row(a + i * k, b, c + i * n, k, n);
}

void matmul_tn(const double* a, const double* b, double* c, long m, long k, long n) {
    for (long p = 0; p < k; ++p) matmul_tn_row(a, b, c + p * n, p, m, k, n);
}

void softmax_rows(const double* x, double* y, long rows, long cols) {
    for (long i = 0; i < rows; ++i) softmax_row(x + i * cols, y + i * cols, cols);
}

void softmax_rows_backward(const double* y, const double* dy, double* dx, long rows, long cols) {
    for (long i = 0; i < rows; ++i) softmax_bwd_row(y + i * cols, dy + i * cols, dx + i * cols, cols);
}

void layer_norm_rows(const double* x, const double* gain, const double* bias, double* y,
                     double* xhat, double* rstd, long rows, long cols, double eps) {
    for (long i = 0; i < rows; ++i)
        layer_norm_row(x + i * cols, gain, bias, y + i * cols, xhat + i * cols, rstd + i, cols, eps);
}

void layer_norm_rows_backward(const double* xhat, const double* rstd, const double* gain,
                              const double* dy, double* dx, double* dgain, double* dbias,
                              long rows, long cols) {
    for (long i = 0; i < rows; ++i)
        layer_norm_bwd_row(xhat + i * cols, rstd[i], gain, dy + i * cols, dx + i * cols, cols);
    for (long j = 0; j < cols; ++j) {
        dgain[j] = 0.0;
        dbias[j] = 0.0;
    }
    for (long i = 0; i < rows; ++i) {
        const double* xh = xhat + i * cols;
        const double* dyr = dy + i * cols;
        for (long j = 0; j < cols; ++j) {
            dgain[j] += dyr[j] * xh[j];
            dbias[j] += dyr[j];
        }
    }
}

void gelu(const double* x, double* y, long n) {
    for (long i = 0; i < n; ++i) y[i] = gelu_one(x[i]);
}

void gelu_backward(const double* x, const double* dy, double* dx, long n) {
    for (long i = 0; i < n; ++i) dx[i] = dy[i] * gelu_grad_one(x[i]);
}

void relu(const double* x, double* y, long n) {
    for (long i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, const double* dy, double* dx, long n) {
    for (long i = 0; i < n; ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
}

}  // namespace ref

}  // namespace uid::kernels
