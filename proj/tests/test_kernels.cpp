#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "tsadv/kernels.hpp"
#include "tsadv/rng.hpp"

using namespace tsadv;
namespace kern = tsadv::kernels;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = -3.0, double hi = 3.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

// Sizes chosen to cover the vector width and every remainder length.
const std::size_t kSizes[] = {1, 2, 3, 4, 5, 7, 8, 15, 16, 33, 64, 67, 100};

} // namespace

TEST_CASE("active table resolves to a known implementation") {
    const kern::Ops& ops = kern::active();
    CHECK((std::string(ops.name) == "scalar" || std::string(ops.name) == "avx2"));
}

#if TSADV_HAVE_AVX2_KERNELS

TEST_CASE("avx2 elementwise kernels match scalar bit for bit") {
    if (!kern::cpu_has_avx2()) return;
    const kern::Ops& s = kern::scalar_ops();
    const kern::Ops& v = kern::avx2_ops();
    Rng rng(11);

    for (std::size_t n : kSizes) {
        auto a = random_vec(rng, n);
        auto b = random_vec(rng, n);
        std::vector<double> out_s(n), out_v(n);

        s.add(a.data(), b.data(), out_s.data(), n);
        v.add(a.data(), b.data(), out_v.data(), n);
        CHECK(out_s == out_v);

        s.sub(a.data(), b.data(), out_s.data(), n);
        v.sub(a.data(), b.data(), out_v.data(), n);
        CHECK(out_s == out_v);

        s.mul(a.data(), b.data(), out_s.data(), n);
        v.mul(a.data(), b.data(), out_v.data(), n);
        CHECK(out_s == out_v);

        s.scale(1.7, a.data(), out_s.data(), n);
        v.scale(1.7, a.data(), out_v.data(), n);
        CHECK(out_s == out_v);

        s.clamp(a.data(), -0.5, 0.5, out_s.data(), n);
        v.clamp(a.data(), -0.5, 0.5, out_v.data(), n);
        CHECK(out_s == out_v);

        s.sign_scale(0.1, a.data(), out_s.data(), n);
        v.sign_scale(0.1, a.data(), out_v.data(), n);
        CHECK(out_s == out_v);

        s.relu(a.data(), out_s.data(), n);
        v.relu(a.data(), out_v.data(), n);
        CHECK(out_s == out_v);

        auto y_s = b;
        auto y_v = b;
        s.axpy(-0.3, a.data(), y_s.data(), n);
        v.axpy(-0.3, a.data(), y_v.data(), n);
        CHECK(y_s == y_v);

        y_s = b;
        y_v = b;
        s.acc_const(0.25, y_s.data(), n);
        v.acc_const(0.25, y_v.data(), n);
        CHECK(y_s == y_v);

        auto g = random_vec(rng, n);
        auto o_s = random_vec(rng, n);
        auto o_v = o_s;
        s.relu_grad(a.data(), g.data(), o_s.data(), n);
        v.relu_grad(a.data(), g.data(), o_v.data(), n);
        CHECK(o_s == o_v);

        auto yh = random_vec(rng, n, -0.99, 0.99);
        o_s = random_vec(rng, n);
        o_v = o_s;
        s.tanh_grad(yh.data(), g.data(), o_s.data(), n);
        v.tanh_grad(yh.data(), g.data(), o_v.data(), n);
        CHECK(o_s == o_v);

        auto ys = random_vec(rng, n, 0.01, 0.99);
        o_s = random_vec(rng, n);
        o_v = o_s;
        s.sigmoid_grad(ys.data(), g.data(), o_s.data(), n);
        v.sigmoid_grad(ys.data(), g.data(), o_v.data(), n);
        CHECK(o_s == o_v);
    }
}

TEST_CASE("avx2 reductions match scalar within accumulation tolerance") {
    if (!kern::cpu_has_avx2()) return;
    const kern::Ops& s = kern::scalar_ops();
    const kern::Ops& v = kern::avx2_ops();
    Rng rng(12);

    for (std::size_t n : kSizes) {
        auto a = random_vec(rng, n);
        auto b = random_vec(rng, n);

        CHECK(v.sum(a.data(), n) == doctest::Approx(s.sum(a.data(), n)).epsilon(1e-12));
        CHECK(v.dot(a.data(), b.data(), n) ==
              doctest::Approx(s.dot(a.data(), b.data(), n)).epsilon(1e-12));
        CHECK(v.sum_sq_diff(a.data(), b.data(), n) ==
              doctest::Approx(s.sum_sq_diff(a.data(), b.data(), n)).epsilon(1e-12));
        CHECK(v.abs_sum(a.data(), n) ==
              doctest::Approx(s.abs_sum(a.data(), n)).epsilon(1e-12));
        // max is order-independent, so this one is exact.
        CHECK(v.max_abs(a.data(), n) == s.max_abs(a.data(), n));
    }
}

TEST_CASE("avx2 gemm variants match scalar within tolerance") {
    if (!kern::cpu_has_avx2()) return;
    const kern::Ops& s = kern::scalar_ops();
    const kern::Ops& v = kern::avx2_ops();
    Rng rng(13);

    const std::size_t dims[][3] = {{1, 1, 1}, {2, 3, 4}, {5, 7, 3}, {8, 8, 8},
                                   {13, 9, 17}, {1, 30, 16}, {32, 30, 30}};
    for (const auto& d : dims) {
        std::size_t r = d[0], k = d[1], c = d[2];
        auto A = random_vec(rng, r * k);
        auto B = random_vec(rng, k * c);
        auto Bt = random_vec(rng, c * k);
        auto At = random_vec(rng, k * r);

        std::vector<double> C_s(r * c, 0.5), C_v(r * c, 0.5);
        s.gemm_nn(A.data(), B.data(), C_s.data(), r, k, c);
        v.gemm_nn(A.data(), B.data(), C_v.data(), r, k, c);
        for (std::size_t i = 0; i < r * c; ++i) {
            CHECK(C_v[i] == doctest::Approx(C_s[i]).epsilon(1e-12));
        }

        std::fill(C_s.begin(), C_s.end(), 0.0);
        std::fill(C_v.begin(), C_v.end(), 0.0);
        s.gemm_nt(A.data(), Bt.data(), C_s.data(), r, k, c);
        v.gemm_nt(A.data(), Bt.data(), C_v.data(), r, k, c);
        for (std::size_t i = 0; i < r * c; ++i) {
            CHECK(C_v[i] == doctest::Approx(C_s[i]).epsilon(1e-12));
        }

        std::fill(C_s.begin(), C_s.end(), 0.0);
        std::fill(C_v.begin(), C_v.end(), 0.0);
        s.gemm_tn(At.data(), B.data(), C_s.data(), r, k, c);
        v.gemm_tn(At.data(), B.data(), C_v.data(), r, k, c);
        for (std::size_t i = 0; i < r * c; ++i) {
            CHECK(C_v[i] == doctest::Approx(C_s[i]).epsilon(1e-12));
        }
    }
}

#endif // TSADV_HAVE_AVX2_KERNELS

TEST_CASE("scalar kernels basic semantics") {
    const kern::Ops& s = kern::scalar_ops();

    std::vector<double> x = {-2.0, 0.0, 3.0};
    std::vector<double> out(3);
    s.sign_scale(0.1, x.data(), out.data(), 3);
    CHECK(out == std::vector<double>{-0.1, 0.0, 0.1});

    s.clamp(x.data(), -1.0, 1.0, out.data(), 3);
    CHECK(out == std::vector<double>{-1.0, 0.0, 1.0});

    CHECK(s.abs_sum(x.data(), 3) == 5.0);
    CHECK(s.max_abs(x.data(), 3) == 3.0);

    // gemm_nn against a hand product: [[1,2],[3,4]] * [[5,6],[7,8]]
    std::vector<double> A = {1, 2, 3, 4};
    std::vector<double> B = {5, 6, 7, 8};
    std::vector<double> C(4, 0.0);
    s.gemm_nn(A.data(), B.data(), C.data(), 2, 2, 2);
    CHECK(C == std::vector<double>{19, 22, 43, 50});

    // gemm_tn and gemm_nt are transposed views of the same product.
    std::vector<double> C2(4, 0.0);
    std::vector<double> At = {1, 3, 2, 4}; // A^T stored row-major
    s.gemm_tn(At.data(), B.data(), C2.data(), 2, 2, 2);
    CHECK(C2 == C);

    std::vector<double> C3(4, 0.0);
    std::vector<double> Bt = {5, 7, 6, 8};
    s.gemm_nt(A.data(), Bt.data(), C3.data(), 2, 2, 2);
    CHECK(C3 == C);
}
