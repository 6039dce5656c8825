#pragma once

// Dense double-precision kernels used by the autodiff engine and the attack
// loops. Every kernel has a scalar reference implementation; on x86-64 an
// AVX2/FMA variant is selected at runtime when the CPU supports it. The two
// implementations are equivalence-tested against each other.

#include <cstddef>

namespace tsadv::kernels {

// Function table for one implementation. All gemm_* variants accumulate into
// C; callers zero C for a plain product.
struct Ops {
    const char* name;

    void (*add)(const double* a, const double* b, double* out, std::size_t n);
    void (*sub)(const double* a, const double* b, double* out, std::size_t n);
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);

    // y += a * x
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // out = a * x
    void (*scale)(double a, const double* x, double* out, std::size_t n);
    // out = min(max(x, lo), hi)
    void (*clamp)(const double* x, double lo, double hi, double* out, std::size_t n);
    // out = a * sign(x), with sign(0) = 0
    void (*sign_scale)(double a, const double* x, double* out, std::size_t n);
    // out = max(x, 0)
    void (*relu)(const double* x, double* out, std::size_t n);
    // out += g where x > 0
    void (*relu_grad)(const double* x, const double* g, double* out, std::size_t n);
    // out += g * (1 - y^2), y = tanh(x)
    void (*tanh_grad)(const double* y, const double* g, double* out, std::size_t n);
    // out += g * y * (1 - y), y = sigmoid(x)
    void (*sigmoid_grad)(const double* y, const double* g, double* out, std::size_t n);
    // y += a
    void (*acc_const)(double a, double* y, std::size_t n);

    double (*sum)(const double* x, std::size_t n);
    double (*dot)(const double* a, const double* b, std::size_t n);
    // sum of (a[i] - b[i])^2
    double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
    double (*abs_sum)(const double* x, std::size_t n);
    double (*max_abs)(const double* x, std::size_t n);

    // C[r x c] += A[r x k] * B[k x c], row-major
    void (*gemm_nn)(const double* A, const double* B, double* C,
                    std::size_t r, std::size_t k, std::size_t c);
    // C[r x c] += A[r x k] * B^T, with B stored as [c x k]
    void (*gemm_nt)(const double* A, const double* B, double* C,
                    std::size_t r, std::size_t k, std::size_t c);
    // C[r x c] += A^T * B, with A stored as [k x r], B as [k x c]
    void (*gemm_tn)(const double* A, const double* B, double* C,
                    std::size_t r, std::size_t k, std::size_t c);
};

const Ops& scalar_ops();

#if defined(__x86_64__) || defined(_M_X64)
#define TSADV_HAVE_AVX2_KERNELS 1
const Ops& avx2_ops();
bool cpu_has_avx2();
#else
#define TSADV_HAVE_AVX2_KERNELS 0
#endif

// Active table: AVX2 when the CPU supports it, scalar otherwise. The
// TSADV_KERNELS environment variable ("scalar" or "avx2") overrides the
// automatic choice; it is read once on first use.
const Ops& active();

} // namespace tsadv::kernels
