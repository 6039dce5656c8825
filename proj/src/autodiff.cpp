#include "tsadv/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tsadv/errors.hpp"
#include "tsadv/kernels.hpp"

namespace tsadv {

namespace {

using detail::TensorNode;
namespace kern = tsadv::kernels;

std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
}

// (rows, cols) view of a 1-D or 2-D tensor, vectors as a single row.
std::pair<std::size_t, std::size_t> as_matrix(const std::vector<int>& shape, const char* op) {
    if (shape.size() == 1) return {1, static_cast<std::size_t>(shape[0])};
    if (shape.size() == 2) {
        return {static_cast<std::size_t>(shape[0]), static_cast<std::size_t>(shape[1])};
    }
    throw std::invalid_argument(std::string(op) + ": expected 1-D or 2-D tensor, got " +
                                shape_str(shape));
}

} // namespace

std::size_t shape_size(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw std::invalid_argument("negative dimension in shape " + shape_str(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

double Tensor::scalar() const {
    if (size() != 1) {
        throw std::invalid_argument("scalar() on tensor of shape " + shape_str(node_->shape));
    }
    return node_->value[0];
}

Tensor Graph::leaf(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
    if (shape_size(shape) != values.size()) {
        throw std::invalid_argument("leaf: shape " + shape_str(shape) + " needs " +
                                    std::to_string(shape_size(shape)) + " values, got " +
                                    std::to_string(values.size()));
    }
    if (!all_finite(values)) {
        throw std::invalid_argument("leaf: non-finite value rejected");
    }
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    node->needs_grad = requires_grad;
    node->owner = this;
    nodes_.push_back(node);
    return Tensor(node);
}

void Graph::check_owned(const Tensor& t) const {
    if (!t.valid() || t.node_->owner != this) {
        throw std::logic_error("tensor does not belong to this graph");
    }
}

Tensor Graph::record(Op op, std::vector<int> shape, std::vector<double> value,
                     std::vector<std::shared_ptr<TensorNode>> inputs) {
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    node->op = op;
    node->inputs = std::move(inputs);
    node->owner = this;
    for (const auto& in : node->inputs) {
        if (in->needs_grad) {
            node->needs_grad = true;
            break;
        }
    }
    nodes_.push_back(node);
    return Tensor(node);
}

Tensor Graph::add(const Tensor& a, const Tensor& b) {
    check_owned(a);
    check_owned(b);
    require_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    kern::active().add(a.value().data(), b.value().data(), out.data(), out.size());
    return record(Op::Add, a.shape(), std::move(out), {a.node_, b.node_});
}

Tensor Graph::sub(const Tensor& a, const Tensor& b) {
    check_owned(a);
    check_owned(b);
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.size());
    kern::active().sub(a.value().data(), b.value().data(), out.data(), out.size());
    return record(Op::Sub, a.shape(), std::move(out), {a.node_, b.node_});
}

Tensor Graph::mul(const Tensor& a, const Tensor& b) {
    check_owned(a);
    check_owned(b);
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    kern::active().mul(a.value().data(), b.value().data(), out.data(), out.size());
    return record(Op::Mul, a.shape(), std::move(out), {a.node_, b.node_});
}

Tensor Graph::matmul(const Tensor& a, const Tensor& b) {
    check_owned(a);
    check_owned(b);
    auto [r, k] = as_matrix(a.shape(), "matmul");
    if (b.shape().size() != 2) {
        throw std::invalid_argument("matmul: rhs must be 2-D, got " + shape_str(b.shape()));
    }
    std::size_t k2 = static_cast<std::size_t>(b.shape()[0]);
    std::size_t c = static_cast<std::size_t>(b.shape()[1]);
    if (k != k2) {
        throw std::invalid_argument("matmul: inner dims " + shape_str(a.shape()) + " x " +
                                    shape_str(b.shape()));
    }
    std::vector<double> out(r * c, 0.0);
    kern::active().gemm_nn(a.value().data(), b.value().data(), out.data(), r, k, c);
    std::vector<int> out_shape = a.shape().size() == 1
                                     ? std::vector<int>{static_cast<int>(c)}
                                     : std::vector<int>{static_cast<int>(r), static_cast<int>(c)};
    return record(Op::MatMul, std::move(out_shape), std::move(out), {a.node_, b.node_});
}

Tensor Graph::add_rowvec(const Tensor& m, const Tensor& v) {
    check_owned(m);
    check_owned(v);
    auto [r, c] = as_matrix(m.shape(), "add_rowvec");
    if (v.shape().size() != 1 || static_cast<std::size_t>(v.shape()[0]) != c) {
        throw std::invalid_argument("add_rowvec: vector " + shape_str(v.shape()) +
                                    " vs matrix " + shape_str(m.shape()));
    }
    std::vector<double> out(m.size());
    for (std::size_t i = 0; i < r; ++i) {
        kern::active().add(m.value().data() + i * c, v.value().data(), out.data() + i * c, c);
    }
    return record(Op::AddRowVec, m.shape(), std::move(out), {m.node_, v.node_});
}

Tensor Graph::tanh(const Tensor& x) {
    check_owned(x);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x.value()[i]);
    return record(Op::Tanh, x.shape(), std::move(out), {x.node_});
}

Tensor Graph::relu(const Tensor& x) {
    check_owned(x);
    std::vector<double> out(x.size());
    kern::active().relu(x.value().data(), out.data(), out.size());
    return record(Op::Relu, x.shape(), std::move(out), {x.node_});
}

Tensor Graph::sigmoid(const Tensor& x) {
    check_owned(x);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-x.value()[i]));
    return record(Op::Sigmoid, x.shape(), std::move(out), {x.node_});
}

Tensor Graph::reduce_sum(const Tensor& x) {
    check_owned(x);
    double s = kern::active().sum(x.value().data(), x.size());
    return record(Op::ReduceSum, {1}, {s}, {x.node_});
}

Tensor Graph::reduce_mean(const Tensor& x) {
    check_owned(x);
    if (x.size() == 0) throw std::invalid_argument("reduce_mean: empty tensor");
    double s = kern::active().sum(x.value().data(), x.size()) / static_cast<double>(x.size());
    return record(Op::ReduceMean, {1}, {s}, {x.node_});
}

Tensor Graph::mse_loss(const Tensor& pred, const Tensor& target) {
    check_owned(pred);
    check_owned(target);
    require_same_shape(pred, target, "mse_loss");
    if (pred.size() == 0) throw std::invalid_argument("mse_loss: empty tensor");
    double s = kern::active().sum_sq_diff(pred.value().data(), target.value().data(), pred.size());
    s /= static_cast<double>(pred.size());
    return record(Op::MseLoss, {1}, {s}, {pred.node_, target.node_});
}

Tensor Graph::scale(const Tensor& x, double c) {
    check_owned(x);
    std::vector<double> out(x.size());
    kern::active().scale(c, x.value().data(), out.data(), out.size());
    Tensor t = record(Op::ScaleConst, x.shape(), std::move(out), {x.node_});
    t.node_->carg = c;
    return t;
}

Tensor Graph::reshape(const Tensor& x, std::vector<int> shape) {
    check_owned(x);
    if (shape_size(shape) != x.size()) {
        throw std::invalid_argument("reshape: " + shape_str(x.shape()) + " to " +
                                    shape_str(shape) + " changes element count");
    }
    return record(Op::Reshape, std::move(shape), x.value(), {x.node_});
}

Tensor Graph::take_row(const Tensor& x, int row) {
    check_owned(x);
    if (x.shape().size() != 2) {
        throw std::invalid_argument("take_row: expected matrix, got " + shape_str(x.shape()));
    }
    int r = x.shape()[0];
    int c = x.shape()[1];
    if (row < 0 || row >= r) {
        throw std::invalid_argument("take_row: row " + std::to_string(row) + " out of " +
                                    std::to_string(r));
    }
    std::vector<double> out(x.value().begin() + static_cast<std::size_t>(row) * c,
                            x.value().begin() + static_cast<std::size_t>(row + 1) * c);
    Tensor t = record(Op::TakeRow, {c}, std::move(out), {x.node_});
    t.node_->iarg = row;
    return t;
}

Tensor Graph::stack_rows(const std::vector<Tensor>& rows) {
    if (rows.empty()) throw std::invalid_argument("stack_rows: no rows");
    int c = -1;
    std::vector<std::shared_ptr<TensorNode>> ins;
    ins.reserve(rows.size());
    std::vector<double> out;
    for (const Tensor& row : rows) {
        check_owned(row);
        if (row.shape().size() != 1) {
            throw std::invalid_argument("stack_rows: rows must be vectors");
        }
        if (c < 0) c = row.shape()[0];
        if (row.shape()[0] != c) throw std::invalid_argument("stack_rows: ragged rows");
        out.insert(out.end(), row.value().begin(), row.value().end());
        ins.push_back(row.node_);
    }
    return record(Op::StackRows, {static_cast<int>(rows.size()), c}, std::move(out),
                  std::move(ins));
}

void Graph::backward(const Tensor& loss) {
    check_owned(loss);
    if (!loss.is_scalar()) {
        throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                    shape_str(loss.shape()));
    }
    const auto& ops = kern::active();

    for (const auto& n : nodes_) n->pass_grad.clear();
    loss.node_->pass_grad.assign(1, 1.0);

    auto ensure = [](TensorNode& n) -> std::vector<double>& {
        if (n.pass_grad.empty()) n.pass_grad.assign(n.value.size(), 0.0);
        return n.pass_grad;
    };

    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        TensorNode& n = **it;
        if (n.pass_grad.empty() || !n.needs_grad || n.op == Op::Leaf) continue;
        const std::vector<double>& g = n.pass_grad;
        auto& in = n.inputs;

        switch (n.op) {
        case Op::Add:
            if (in[0]->needs_grad) ops.axpy(1.0, g.data(), ensure(*in[0]).data(), g.size());
            if (in[1]->needs_grad) ops.axpy(1.0, g.data(), ensure(*in[1]).data(), g.size());
            break;
        case Op::Sub:
            if (in[0]->needs_grad) ops.axpy(1.0, g.data(), ensure(*in[0]).data(), g.size());
            if (in[1]->needs_grad) ops.axpy(-1.0, g.data(), ensure(*in[1]).data(), g.size());
            break;
        case Op::Mul: {
            std::vector<double> tmp(g.size());
            if (in[0]->needs_grad) {
                ops.mul(g.data(), in[1]->value.data(), tmp.data(), g.size());
                ops.axpy(1.0, tmp.data(), ensure(*in[0]).data(), g.size());
            }
            if (in[1]->needs_grad) {
                ops.mul(g.data(), in[0]->value.data(), tmp.data(), g.size());
                ops.axpy(1.0, tmp.data(), ensure(*in[1]).data(), g.size());
            }
            break;
        }
        case Op::MatMul: {
            auto [r, k] = as_matrix(in[0]->shape, "matmul");
            std::size_t c = static_cast<std::size_t>(in[1]->shape[1]);
            // dA += G * B^T, dB += A^T * G
            if (in[0]->needs_grad) {
                ops.gemm_nt(g.data(), in[1]->value.data(), ensure(*in[0]).data(), r, c, k);
            }
            if (in[1]->needs_grad) {
                ops.gemm_tn(in[0]->value.data(), g.data(), ensure(*in[1]).data(), k, r, c);
            }
            break;
        }
        case Op::AddRowVec: {
            auto [r, c] = as_matrix(in[0]->shape, "add_rowvec");
            if (in[0]->needs_grad) ops.axpy(1.0, g.data(), ensure(*in[0]).data(), g.size());
            if (in[1]->needs_grad) {
                auto& dv = ensure(*in[1]);
                for (std::size_t i = 0; i < r; ++i) {
                    ops.axpy(1.0, g.data() + i * c, dv.data(), c);
                }
            }
            break;
        }
        case Op::Tanh:
            if (in[0]->needs_grad) {
                ops.tanh_grad(n.value.data(), g.data(), ensure(*in[0]).data(), g.size());
            }
            break;
        case Op::Relu:
            if (in[0]->needs_grad) {
                ops.relu_grad(in[0]->value.data(), g.data(), ensure(*in[0]).data(), g.size());
            }
            break;
        case Op::Sigmoid:
            if (in[0]->needs_grad) {
                ops.sigmoid_grad(n.value.data(), g.data(), ensure(*in[0]).data(), g.size());
            }
            break;
        case Op::ReduceSum:
            if (in[0]->needs_grad) {
                ops.acc_const(g[0], ensure(*in[0]).data(), in[0]->value.size());
            }
            break;
        case Op::ReduceMean:
            if (in[0]->needs_grad) {
                ops.acc_const(g[0] / static_cast<double>(in[0]->value.size()),
                              ensure(*in[0]).data(), in[0]->value.size());
            }
            break;
        case Op::MseLoss: {
            std::size_t m = in[0]->value.size();
            double w = 2.0 * g[0] / static_cast<double>(m);
            std::vector<double> diff(m);
            ops.sub(in[0]->value.data(), in[1]->value.data(), diff.data(), m);
            if (in[0]->needs_grad) ops.axpy(w, diff.data(), ensure(*in[0]).data(), m);
            if (in[1]->needs_grad) ops.axpy(-w, diff.data(), ensure(*in[1]).data(), m);
            break;
        }
        case Op::ScaleConst:
            if (in[0]->needs_grad) ops.axpy(n.carg, g.data(), ensure(*in[0]).data(), g.size());
            break;
        case Op::Reshape:
            if (in[0]->needs_grad) ops.axpy(1.0, g.data(), ensure(*in[0]).data(), g.size());
            break;
        case Op::TakeRow: {
            if (in[0]->needs_grad) {
                std::size_t c = g.size();
                ops.axpy(1.0, g.data(),
                         ensure(*in[0]).data() + static_cast<std::size_t>(n.iarg) * c, c);
            }
            break;
        }
        case Op::StackRows: {
            std::size_t c = static_cast<std::size_t>(n.shape[1]);
            for (std::size_t i = 0; i < in.size(); ++i) {
                if (in[i]->needs_grad) {
                    ops.axpy(1.0, g.data() + i * c, ensure(*in[i]).data(), c);
                }
            }
            break;
        }
        case Op::Leaf:
            break;
        }
    }

    // Flush scratch into the persistent accumulators.
    for (const auto& n : nodes_) {
        if (n->pass_grad.empty()) continue;
        if (n->grad.empty()) n->grad.assign(n->value.size(), 0.0);
        ops.axpy(1.0, n->pass_grad.data(), n->grad.data(), n->grad.size());
        n->pass_grad.clear();
    }
}

std::vector<double> input_gradient(
    const std::function<Tensor(Graph&, const Tensor&)>& loss_fn,
    const std::vector<int>& input_shape, const std::vector<double>& input_values) {
    Graph g;
    Tensor input = g.leaf(input_shape, input_values, /*requires_grad=*/true);
    Tensor loss = loss_fn(g, input);
    if (!loss.is_scalar()) {
        throw std::invalid_argument("input_gradient: loss must be scalar");
    }
    if (!std::isfinite(loss.scalar())) {
        throw NumericError("input_gradient: non-finite loss");
    }
    g.backward(loss);
    if (!input.has_grad()) return std::vector<double>(input.size(), 0.0);
    return input.grad();
}

} // namespace tsadv
