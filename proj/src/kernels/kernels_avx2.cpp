#include "tsadv/kernels.hpp"

#if TSADV_HAVE_AVX2_KERNELS

#include <immintrin.h>

#include <cmath>

// AVX2/FMA kernels, 4 doubles per lane with scalar remainder loops.
// Elementwise kernels avoid FMA so they match the scalar reference bit for
// bit; reductions and gemms use FMA and are compared at a tolerance.

namespace tsadv::kernels {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

inline double hmax(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_max_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_max_sd(lo, shuf));
}

void add_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d prod = _mm256_mul_pd(av, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(double a, const double* x, double* out, std::size_t n) {
    __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) out[i] = a * x[i];
}

void clamp_avx2(const double* x, double lo, double hi, double* out, std::size_t n) {
    __m256d lov = _mm256_set1_pd(lo);
    __m256d hiv = _mm256_set1_pd(hi);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(x + i);
        v = _mm256_max_pd(v, lov);
        v = _mm256_min_pd(v, hiv);
        _mm256_storeu_pd(out + i, v);
    }
    for (; i < n; ++i) {
        double v = x[i];
        if (v < lo) v = lo;
        if (v > hi) v = hi;
        out[i] = v;
    }
}

void sign_scale_avx2(double a, const double* x, double* out, std::size_t n) {
    __m256d av = _mm256_set1_pd(a);
    __m256d zero = _mm256_setzero_pd();
    __m256d one = _mm256_set1_pd(1.0);
    __m256d neg_one = _mm256_set1_pd(-1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(x + i);
        __m256d pos = _mm256_and_pd(_mm256_cmp_pd(v, zero, _CMP_GT_OQ), one);
        __m256d neg = _mm256_and_pd(_mm256_cmp_pd(v, zero, _CMP_LT_OQ), neg_one);
        __m256d sign = _mm256_or_pd(pos, neg);
        _mm256_storeu_pd(out + i, _mm256_mul_pd(av, sign));
    }
    for (; i < n; ++i) {
        double s = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
        out[i] = a * s;
    }
}

void relu_avx2(const double* x, double* out, std::size_t n) {
    __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    }
    for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_grad_avx2(const double* x, const double* g, double* out, std::size_t n) {
    __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        __m256d gm = _mm256_and_pd(mask, _mm256_loadu_pd(g + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), gm));
    }
    for (; i < n; ++i) {
        if (x[i] > 0.0) out[i] += g[i];
    }
}

void tanh_grad_avx2(const double* y, const double* g, double* out, std::size_t n) {
    __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        __m256d d = _mm256_sub_pd(one, _mm256_mul_pd(yv, yv));
        __m256d gm = _mm256_mul_pd(_mm256_loadu_pd(g + i), d);
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), gm));
    }
    for (; i < n; ++i) out[i] += g[i] * (1.0 - y[i] * y[i]);
}

void sigmoid_grad_avx2(const double* y, const double* g, double* out, std::size_t n) {
    __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        __m256d d = _mm256_mul_pd(yv, _mm256_sub_pd(one, yv));
        __m256d gm = _mm256_mul_pd(_mm256_loadu_pd(g + i), d);
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), gm));
    }
    for (; i < n; ++i) out[i] += g[i] * (y[i] * (1.0 - y[i]));
}

void acc_const_avx2(double a, double* y, std::size_t n) {
    __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), av));
    }
    for (; i < n; ++i) y[i] += a;
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_sq_diff_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double abs_sum_avx2(const double* x, std::size_t n) {
    __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign_mask, _mm256_loadu_pd(x + i)));
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += std::fabs(x[i]);
    return s;
}

double max_abs_avx2(const double* x, std::size_t n) {
    __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_max_pd(acc, _mm256_andnot_pd(sign_mask, _mm256_loadu_pd(x + i)));
    }
    double m = hmax(acc);
    for (; i < n; ++i) {
        double v = std::fabs(x[i]);
        if (v > m) m = v;
    }
    return m;
}

void gemm_nn_avx2(const double* A, const double* B, double* C,
                  std::size_t r, std::size_t k, std::size_t c) {
    for (std::size_t i = 0; i < r; ++i) {
        double* Crow = C + i * c;
        for (std::size_t l = 0; l < k; ++l) {
            double a = A[i * k + l];
            const double* Brow = B + l * c;
            __m256d av = _mm256_set1_pd(a);
            std::size_t j = 0;
            for (; j + 4 <= c; j += 4) {
                __m256d cv = _mm256_loadu_pd(Crow + j);
                cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(Brow + j), cv);
                _mm256_storeu_pd(Crow + j, cv);
            }
            for (; j < c; ++j) Crow[j] += a * Brow[j];
        }
    }
}

void gemm_nt_avx2(const double* A, const double* B, double* C,
                  std::size_t r, std::size_t k, std::size_t c) {
    for (std::size_t i = 0; i < r; ++i) {
        const double* Arow = A + i * k;
        for (std::size_t j = 0; j < c; ++j) {
            C[i * c + j] += dot_avx2(Arow, B + j * k, k);
        }
    }
}

void gemm_tn_avx2(const double* A, const double* B, double* C,
                  std::size_t r, std::size_t k, std::size_t c) {
    for (std::size_t l = 0; l < k; ++l) {
        const double* Arow = A + l * r;
        const double* Brow = B + l * c;
        for (std::size_t i = 0; i < r; ++i) {
            double a = Arow[i];
            double* Crow = C + i * c;
            __m256d av = _mm256_set1_pd(a);
            std::size_t j = 0;
            for (; j + 4 <= c; j += 4) {
                __m256d cv = _mm256_loadu_pd(Crow + j);
                cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(Brow + j), cv);
                _mm256_storeu_pd(Crow + j, cv);
            }
            for (; j < c; ++j) Crow[j] += a * Brow[j];
        }
    }
}

} // namespace

const Ops& avx2_ops() {
    static const Ops ops = {
        "avx2",
        add_avx2,
        sub_avx2,
        mul_avx2,
        axpy_avx2,
        scale_avx2,
        clamp_avx2,
        sign_scale_avx2,
        relu_avx2,
        relu_grad_avx2,
        tanh_grad_avx2,
        sigmoid_grad_avx2,
        acc_const_avx2,
        sum_avx2,
        dot_avx2,
        sum_sq_diff_avx2,
        abs_sum_avx2,
        max_abs_avx2,
        gemm_nn_avx2,
        gemm_nt_avx2,
        gemm_tn_avx2,
    };
    return ops;
}

bool cpu_has_avx2() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

} // namespace tsadv::kernels

#endif // TSADV_HAVE_AVX2_KERNELS
