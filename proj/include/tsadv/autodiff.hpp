#pragma once

// Reverse-mode automatic differentiation over dense double tensors. A Graph
// is a dynamic tape: operations are appended in execution order and the
// backward pass walks them in exact reverse order. A Graph and its Tensors
// belong to one thread; independent Graphs may run in parallel.

#include <functional>
#include <memory>
#include <vector>

namespace tsadv {

enum class Op {
    Leaf,
    Add,
    Sub,
    Mul,
    MatMul,
    AddRowVec,
    Tanh,
    Relu,
    Sigmoid,
    ReduceSum,
    ReduceMean,
    MseLoss,
    ScaleConst,
    Reshape,
    TakeRow,
    StackRows,
};

class Graph;

namespace detail {
struct TensorNode {
    std::vector<int> shape;
    std::vector<double> value;
    std::vector<double> grad;      // persistent; backward accumulates into it
    std::vector<double> pass_grad; // scratch for one backward sweep
    bool requires_grad = false;
    bool needs_grad = false;
    Op op = Op::Leaf;
    std::vector<std::shared_ptr<TensorNode>> inputs;
    double carg = 0.0; // ScaleConst factor
    int iarg = 0;      // TakeRow index
    const Graph* owner = nullptr;
};
} // namespace detail

// Value handle onto a tape node. Copies share the node.
class Tensor {
public:
    Tensor() = default;

    const std::vector<int>& shape() const { return node_->shape; }
    const std::vector<double>& value() const { return node_->value; }
    bool requires_grad() const { return node_->requires_grad; }
    bool has_grad() const { return !node_->grad.empty(); }
    // Accumulated gradient; empty until backward reaches this tensor.
    const std::vector<double>& grad() const { return node_->grad; }
    void clear_grad() { node_->grad.clear(); }

    std::size_t size() const { return node_->value.size(); }
    bool is_scalar() const { return size() == 1; }
    // Value of a single-element tensor.
    double scalar() const;

    bool valid() const { return node_ != nullptr; }

private:
    explicit Tensor(std::shared_ptr<detail::TensorNode> n) : node_(std::move(n)) {}
    std::shared_ptr<detail::TensorNode> node_;
    friend class Graph;
};

std::size_t shape_size(const std::vector<int>& shape);

class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    // Rejects non-finite values and shape/length mismatches.
    Tensor leaf(std::vector<int> shape, std::vector<double> values, bool requires_grad = false);

    Tensor add(const Tensor& a, const Tensor& b);
    Tensor sub(const Tensor& a, const Tensor& b);
    Tensor mul(const Tensor& a, const Tensor& b);
    // [r,k] x [k,c] -> [r,c]; a vector [k] is treated as a single row.
    Tensor matmul(const Tensor& a, const Tensor& b);
    // [r,c] + [c], the vector added to every row.
    Tensor add_rowvec(const Tensor& m, const Tensor& v);
    Tensor tanh(const Tensor& x);
    Tensor relu(const Tensor& x);
    Tensor sigmoid(const Tensor& x);
    Tensor reduce_sum(const Tensor& x);
    Tensor reduce_mean(const Tensor& x);
    // Scalar mean over all elements of (pred - target)^2.
    Tensor mse_loss(const Tensor& pred, const Tensor& target);
    Tensor scale(const Tensor& x, double c);
    Tensor reshape(const Tensor& x, std::vector<int> shape);
    // Row r of a matrix as a vector [c].
    Tensor take_row(const Tensor& x, int row);
    // Stack vectors of equal length into a [n,c] matrix.
    Tensor stack_rows(const std::vector<Tensor>& rows);

    // Propagates d(loss)/d(node) to every tensor reachable from the scalar
    // loss. Gradients are accumulated: a second call without clearing grads
    // doubles them.
    void backward(const Tensor& loss);

    std::size_t node_count() const { return nodes_.size(); }

private:
    Tensor record(Op op, std::vector<int> shape, std::vector<double> value,
                  std::vector<std::shared_ptr<detail::TensorNode>> inputs);
    void check_owned(const Tensor& t) const;

    std::vector<std::shared_ptr<detail::TensorNode>> nodes_;
};

// Gradient of a scalar loss w.r.t. an input tensor, on a fresh graph. The
// loss function sees the input as a requires_grad leaf; any other leaves it
// creates (model parameters) are left untouched.
std::vector<double> input_gradient(
    const std::function<Tensor(Graph&, const Tensor&)>& loss_fn,
    const std::vector<int>& input_shape, const std::vector<double>& input_values);

} // namespace tsadv
