#include "tsadv/kernels.hpp"

#include <cmath>

// Scalar reference kernels. These define the semantics the AVX2 variants are
// tested against; keep them as plain loops.

namespace tsadv::kernels {
namespace {

void add_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i];
}

void clamp_scalar(const double* x, double lo, double hi, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        double v = x[i];
        if (v < lo) v = lo;
        if (v > hi) v = hi;
        out[i] = v;
    }
}

void sign_scale_scalar(double a, const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        double s = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
        out[i] = a * s;
    }
}

void relu_scalar(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_grad_scalar(const double* x, const double* g, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] > 0.0) out[i] += g[i];
    }
}

void tanh_grad_scalar(const double* y, const double* g, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] += g[i] * (1.0 - y[i] * y[i]);
}

void sigmoid_grad_scalar(const double* y, const double* g, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] += g[i] * (y[i] * (1.0 - y[i]));
}

void acc_const_scalar(double a, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a;
}

double sum_scalar(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_sq_diff_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double abs_sum_scalar(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::fabs(x[i]);
    return s;
}

double max_abs_scalar(const double* x, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double v = std::fabs(x[i]);
        if (v > m) m = v;
    }
    return m;
}

void gemm_nn_scalar(const double* A, const double* B, double* C,
                    std::size_t r, std::size_t k, std::size_t c) {
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t l = 0; l < k; ++l) {
            double a = A[i * k + l];
            const double* Brow = B + l * c;
            double* Crow = C + i * c;
            for (std::size_t j = 0; j < c; ++j) Crow[j] += a * Brow[j];
        }
    }
}

void gemm_nt_scalar(const double* A, const double* B, double* C,
                    std::size_t r, std::size_t k, std::size_t c) {
    for (std::size_t i = 0; i < r; ++i) {
        const double* Arow = A + i * k;
        for (std::size_t j = 0; j < c; ++j) {
            const double* Brow = B + j * k;
            double s = 0.0;
            for (std::size_t l = 0; l < k; ++l) s += Arow[l] * Brow[l];
            C[i * c + j] += s;
        }
    }
}

void gemm_tn_scalar(const double* A, const double* B, double* C,
                    std::size_t r, std::size_t k, std::size_t c) {
    for (std::size_t l = 0; l < k; ++l) {
        const double* Arow = A + l * r;
        const double* Brow = B + l * c;
        for (std::size_t i = 0; i < r; ++i) {
            double a = Arow[i];
            double* Crow = C + i * c;
            for (std::size_t j = 0; j < c; ++j) Crow[j] += a * Brow[j];
        }
    }
}

} // namespace

const Ops& scalar_ops() {
    static const Ops ops = {
        "scalar",
        add_scalar,
        sub_scalar,
        mul_scalar,
        axpy_scalar,
        scale_scalar,
        clamp_scalar,
        sign_scale_scalar,
        relu_scalar,
        relu_grad_scalar,
        tanh_grad_scalar,
        sigmoid_grad_scalar,
        acc_const_scalar,
        sum_scalar,
        dot_scalar,
        sum_sq_diff_scalar,
        abs_sum_scalar,
        max_abs_scalar,
        gemm_nn_scalar,
        gemm_nt_scalar,
        gemm_tn_scalar,
    };
    return ops;
}

} // namespace tsadv::kernels
