#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "tsadv/autodiff.hpp"
#include "tsadv/errors.hpp"
#include "tsadv/rng.hpp"

using namespace tsadv;

TEST_CASE("leaf construction and rejection") {
    Graph g;
    Tensor t = g.leaf({2, 2}, {1, 2, 3, 4});
    CHECK(t.value() == std::vector<double>{1, 2, 3, 4});
    CHECK_FALSE(t.requires_grad());
    CHECK_FALSE(t.has_grad());

    Tensor z = g.leaf({3}, {0, 0, 0});
    CHECK(z.value() == std::vector<double>{0, 0, 0});

    CHECK_THROWS_AS(g.leaf({2}, {1.0, std::nan("")}), std::invalid_argument);
    CHECK_THROWS_AS(g.leaf({2}, {1.0, INFINITY}), std::invalid_argument);
    CHECK_THROWS_AS(g.leaf({3}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("forward op values") {
    Graph g;
    Tensor x = g.leaf({2}, {1, 2});
    Tensor y = g.leaf({2}, {0, 0});

    CHECK(g.mse_loss(x, x).scalar() == 0.0);
    CHECK(g.mse_loss(x, y).scalar() == 2.5);

    Tensor z = g.leaf({1}, {0.0});
    CHECK(g.tanh(z).scalar() == 0.0);
    CHECK(g.sigmoid(z).scalar() == 0.5);

    Tensor neg = g.leaf({3}, {-1, 0, 2});
    CHECK(g.relu(neg).value() == std::vector<double>{0, 0, 2});
    CHECK(g.reduce_sum(neg).scalar() == 1.0);
    CHECK(g.reduce_mean(neg).scalar() == doctest::Approx(1.0 / 3.0));

    Tensor a = g.leaf({2, 2}, {1, 2, 3, 4});
    Tensor b = g.leaf({2, 2}, {5, 6, 7, 8});
    CHECK(g.matmul(a, b).value() == std::vector<double>{19, 22, 43, 50});
    CHECK(g.add(a, b).value() == std::vector<double>{6, 8, 10, 12});
    CHECK(g.sub(b, a).value() == std::vector<double>{4, 4, 4, 4});
    CHECK(g.mul(a, b).value() == std::vector<double>{5, 12, 21, 32});

    Tensor v = g.leaf({2}, {10, 20});
    CHECK(g.add_rowvec(a, v).value() == std::vector<double>{11, 22, 13, 24});
    CHECK(g.take_row(a, 1).value() == std::vector<double>{3, 4});

    CHECK_THROWS_AS(g.add(a, v), std::invalid_argument);
    CHECK_THROWS_AS(g.matmul(a, g.leaf({3, 2}, {1, 2, 3, 4, 5, 6})), std::invalid_argument);
}

TEST_CASE("backward single-weight chain rule") {
    // loss = mse(w*x, y), w=1, x=2, y=0  =>  dloss/dw = 2*(wx-y)*x = 8
    Graph g;
    Tensor w = g.leaf({1, 1}, {1.0}, true);
    Tensor x = g.leaf({1, 1}, {2.0});
    Tensor y = g.leaf({1, 1}, {0.0});
    Tensor loss = g.mse_loss(g.matmul(x, w), y);
    g.backward(loss);
    CHECK(w.grad() == std::vector<double>{8.0});
}

TEST_CASE("tanh derivative at zero is one") {
    Graph g;
    Tensor x = g.leaf({1}, {0.0}, true);
    Tensor loss = g.reduce_sum(g.tanh(x));
    g.backward(loss);
    CHECK(x.grad() == std::vector<double>{1.0});
}

TEST_CASE("gradient accumulation through fan-out") {
    // y = x + x gives dy/dx = 2 exactly.
    Graph g;
    Tensor x = g.leaf({1}, {3.0}, true);
    Tensor y = g.add(x, x);
    g.backward(g.reduce_sum(y));
    CHECK(x.grad() == std::vector<double>{2.0});
}

TEST_CASE("backward accumulates across calls") {
    Graph g;
    Tensor x = g.leaf({2}, {1.0, -2.0}, true);
    Tensor loss = g.reduce_mean(g.mul(x, x));
    g.backward(loss);
    std::vector<double> once = x.grad();
    CHECK(once == std::vector<double>{1.0, -2.0});
    g.backward(loss);
    CHECK(x.grad() == std::vector<double>{2.0, -4.0});
}

TEST_CASE("backward rejects non-scalar loss") {
    Graph g;
    Tensor x = g.leaf({2}, {1, 2}, true);
    CHECK_THROWS_AS(g.backward(g.mul(x, x)), std::invalid_argument);
}

TEST_CASE("input_gradient basics") {
    // loss = mean(input^2), input = [1, -2] -> grad [1, -2]
    auto quad = [](Graph& g, const Tensor& in) { return g.reduce_mean(g.mul(in, in)); };
    auto grad = input_gradient(quad, {2}, {1.0, -2.0});
    CHECK(grad == std::vector<double>{1.0, -2.0});

    // Detached input -> zero gradient.
    auto constant = [](Graph& g, const Tensor&) { return g.leaf({1}, {4.0}); };
    CHECK(input_gradient(constant, {3}, {1, 2, 3}) == std::vector<double>{0, 0, 0});

    auto vec = [](Graph& g, const Tensor& in) { return g.mul(in, in); };
    CHECK_THROWS_AS(input_gradient(vec, {2}, {1.0, 2.0}), std::invalid_argument);
}

namespace {

// A random small MLP evaluated without the tape, used as the independent
// route for the finite-difference oracle.
struct SmallMlp {
    std::vector<int> widths; // e.g. {3, 4, 2}
    std::vector<double> params;
    std::vector<double> input;
    std::vector<double> target;

    static SmallMlp make(Rng& rng, int max_layers, int max_width) {
        SmallMlp m;
        int layers = static_cast<int>(rng.uniform_int(1, max_layers));
        m.widths.push_back(static_cast<int>(rng.uniform_int(1, max_width)));
        for (int l = 0; l < layers; ++l) {
            m.widths.push_back(static_cast<int>(rng.uniform_int(1, max_width)));
        }
        std::size_t count = 0;
        for (std::size_t l = 0; l + 1 < m.widths.size(); ++l) {
            count += static_cast<std::size_t>(m.widths[l]) * m.widths[l + 1] + m.widths[l + 1];
        }
        m.params.resize(count);
        for (auto& p : m.params) p = rng.uniform(-0.8, 0.8);
        m.input.resize(m.widths.front());
        for (auto& x : m.input) x = rng.uniform(-1.0, 1.0);
        m.target.resize(m.widths.back());
        for (auto& y : m.target) y = rng.uniform(-1.0, 1.0);
        return m;
    }

    std::size_t param_count() const { return params.size(); }

    // Tape route: build the network from autodiff ops with params as leaves.
    Tensor loss_on_tape(Graph& g, const std::vector<double>& p, bool params_require_grad,
                        std::vector<Tensor>* param_leaves) const {
        std::size_t off = 0;
        Tensor h = g.leaf({widths.front()}, input);
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            int in = widths[l], out = widths[l + 1];
            std::vector<double> wbuf(p.begin() + off, p.begin() + off + in * out);
            off += static_cast<std::size_t>(in) * out;
            std::vector<double> bbuf(p.begin() + off, p.begin() + off + out);
            off += out;
            Tensor W = g.leaf({in, out}, wbuf, params_require_grad);
            Tensor b = g.leaf({out}, bbuf, params_require_grad);
            if (param_leaves) {
                param_leaves->push_back(W);
                param_leaves->push_back(b);
            }
            h = g.add(g.matmul(h, W), b);
            if (l + 2 < widths.size()) h = g.tanh(h);
        }
        Tensor t = g.leaf({widths.back()}, target);
        return g.mse_loss(h, t);
    }

    double loss_value(const std::vector<double>& p) const {
        Graph g;
        return loss_on_tape(g, p, false, nullptr).scalar();
    }
};

} // namespace

TEST_CASE("finite-difference oracle over 20 random networks") {
    // Central differences at h=1e-5, relative error <= 1e-4 over all params.
    const double h = 1e-5;
    double worst = 0.0;
    for (int seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        SmallMlp m = SmallMlp::make(rng, 3, 4);
        if (m.param_count() > 64) continue; // keep within the stated budget
        REQUIRE(m.param_count() <= 64);

        Graph g;
        std::vector<Tensor> leaves;
        Tensor loss = m.loss_on_tape(g, m.params, true, &leaves);
        g.backward(loss);
        std::vector<double> ad;
        for (const Tensor& t : leaves) {
            REQUIRE(t.has_grad());
            ad.insert(ad.end(), t.grad().begin(), t.grad().end());
        }
        REQUIRE(ad.size() == m.param_count());

        for (std::size_t i = 0; i < m.param_count(); ++i) {
            std::vector<double> plus = m.params, minus = m.params;
            plus[i] += h;
            minus[i] -= h;
            double fd = (m.loss_value(plus) - m.loss_value(minus)) / (2.0 * h);
            double rel = std::fabs(ad[i] - fd) / std::max(std::fabs(fd), 1e-8);
            worst = std::max(worst, rel);
        }
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("input gradient matches finite difference through an autoencoder") {
    Rng rng(77);
    // Tiny dense autoencoder 4 -> 3 -> 4 with fixed random params.
    std::vector<double> W1(12), b1(3, 0.0), W2(12), b2(4, 0.0);
    for (auto& w : W1) w = rng.uniform(-0.7, 0.7);
    for (auto& w : W2) w = rng.uniform(-0.7, 0.7);
    std::vector<double> window(2 * 4);
    for (auto& x : window) x = rng.uniform(-1.0, 1.0);

    auto loss_fn = [&](Graph& g, const Tensor& in) {
        Tensor w1 = g.leaf({4, 3}, W1);
        Tensor bb1 = g.leaf({3}, b1);
        Tensor w2 = g.leaf({3, 4}, W2);
        Tensor bb2 = g.leaf({4}, b2);
        Tensor h = g.tanh(g.add_rowvec(g.matmul(in, w1), bb1));
        Tensor rec = g.add_rowvec(g.matmul(h, w2), bb2);
        return g.mse_loss(rec, g.leaf({2, 4}, window));
    };

    auto ad = input_gradient(loss_fn, {2, 4}, window);

    const double h = 1e-5;
    for (std::size_t i = 0; i < window.size(); ++i) {
        auto plus = window, minus = window;
        plus[i] += h;
        minus[i] -= h;
        Graph gp, gm;
        double fp = loss_fn(gp, gp.leaf({2, 4}, plus)).scalar();
        double fm = loss_fn(gm, gm.leaf({2, 4}, minus)).scalar();
        double fd = (fp - fm) / (2.0 * h);
        double rel = std::fabs(ad[i] - fd) / std::max(std::fabs(fd), 1e-8);
        CHECK(rel <= 1e-4);
    }
}

TEST_CASE("parameters receive no gradient when only the input requires it") {
    Rng rng(5);
    std::vector<double> W(4);
    for (auto& w : W) w = rng.uniform(-1, 1);
    Graph g;
    Tensor input = g.leaf({2}, {0.5, -0.5}, true);
    Tensor Wt = g.leaf({2, 2}, W, false);
    Tensor loss = g.reduce_mean(g.mul(g.matmul(input, Wt), g.matmul(input, Wt)));
    g.backward(loss);
    CHECK(input.has_grad());
    CHECK_FALSE(Wt.has_grad());
}

TEST_CASE("stack_rows and take_row round trip with gradients") {
    Graph g;
    Tensor m = g.leaf({3, 2}, {1, 2, 3, 4, 5, 6}, true);
    std::vector<Tensor> rows;
    for (int r = 0; r < 3; ++r) rows.push_back(g.take_row(m, r));
    Tensor re = g.stack_rows(rows);
    CHECK(re.value() == m.value());
    g.backward(g.reduce_sum(re));
    CHECK(m.grad() == std::vector<double>(6, 1.0));
}

TEST_CASE("reshape keeps values and routes gradients") {
    Graph g;
    Tensor m = g.leaf({2, 3}, {1, 2, 3, 4, 5, 6}, true);
    Tensor flat = g.reshape(m, {6});
    CHECK(flat.value() == m.value());
    g.backward(g.reduce_mean(flat));
    CHECK(m.grad() == std::vector<double>(6, 1.0 / 6.0));
    CHECK_THROWS_AS(g.reshape(m, {4}), std::invalid_argument);
}
