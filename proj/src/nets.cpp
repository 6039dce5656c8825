#include "tsadv/nets.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "tsadv/errors.hpp"
#include "tsadv/kernels.hpp"
#include "tsadv/rng.hpp"

namespace tsadv {

namespace {

Tensor apply_activation(Graph& g, const Tensor& x, Activation act) {
    switch (act) {
    case Activation::Tanh: return g.tanh(x);
    case Activation::Relu: return g.relu(x);
    case Activation::Sigmoid: return g.sigmoid(x);
    case Activation::Linear: return x;
    }
    throw std::logic_error("unknown activation");
}

} // namespace

void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, const TrainConfig& cfg) {
    if (params.size() != grads.size()) {
        throw std::invalid_argument("adam_step: param/grad size mismatch");
    }
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    state.step += 1;
    double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * grads[i];
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * grads[i] * grads[i];
        double mhat = state.m[i] / bc1;
        double vhat = state.v[i] / bc2;
        params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
}

void Network::compute_offsets() {
    offsets_.clear();
    std::size_t off = 0;
    for (const LayerSpec& s : specs_) {
        LayerOffsets o;
        o.w = off;
        off += static_cast<std::size_t>(s.in_dim) * s.out_dim;
        if (s.kind == LayerKind::ElmanRnn) {
            o.u = off;
            off += static_cast<std::size_t>(s.out_dim) * s.out_dim;
        }
        o.b = off;
        off += static_cast<std::size_t>(s.out_dim);
        offsets_.push_back(o);
    }
    params_.resize(off, 0.0);
}

Network Network::init(std::vector<LayerSpec> specs, std::uint64_t seed) {
    if (specs.empty()) throw std::invalid_argument("network needs at least one layer");
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (specs[i].in_dim < 1 || specs[i].out_dim < 1) {
            throw std::invalid_argument("layer dims must be >= 1");
        }
        if (i > 0 && specs[i - 1].out_dim != specs[i].in_dim) {
            throw std::invalid_argument("layer dims do not chain at layer " + std::to_string(i));
        }
    }
    Network net;
    net.specs_ = std::move(specs);
    net.seed_ = seed;
    net.compute_offsets();

    Rng rng(seed);
    for (std::size_t l = 0; l < net.specs_.size(); ++l) {
        const LayerSpec& s = net.specs_[l];
        const LayerOffsets& o = net.offsets_[l];
        double bound = std::sqrt(6.0 / (s.in_dim + s.out_dim));
        for (std::size_t i = 0; i < static_cast<std::size_t>(s.in_dim) * s.out_dim; ++i) {
            net.params_[o.w + i] = rng.uniform(-bound, bound);
        }
        if (s.kind == LayerKind::ElmanRnn) {
            double ub = std::sqrt(6.0 / (s.out_dim + s.out_dim));
            for (std::size_t i = 0; i < static_cast<std::size_t>(s.out_dim) * s.out_dim; ++i) {
                net.params_[o.u + i] = rng.uniform(-ub, ub);
            }
        }
        // biases stay zero
    }
    return net;
}

Network::Network(const Network& other)
    : specs_(other.specs_),
      params_(other.params_),
      offsets_(other.offsets_),
      seed_(other.seed_),
      forward_count_(other.forward_count_.load()) {}

Network& Network::operator=(const Network& other) {
    if (this != &other) {
        specs_ = other.specs_;
        params_ = other.params_;
        offsets_ = other.offsets_;
        seed_ = other.seed_;
        forward_count_.store(other.forward_count_.load());
    }
    return *this;
}

void Network::set_flat_params(std::vector<double> p) {
    if (p.size() != params_.size()) {
        throw std::invalid_argument("set_flat_params: expected " + std::to_string(params_.size()) +
                                    " values, got " + std::to_string(p.size()));
    }
    params_ = std::move(p);
}

Tensor Network::forward(Graph& g, const Tensor& x, std::vector<Tensor>* param_leaves) const {
    forward_count_.fetch_add(1, std::memory_order_relaxed);
    bool req = param_leaves != nullptr;

    Tensor h = x;
    for (std::size_t l = 0; l < specs_.size(); ++l) {
        const LayerSpec& s = specs_[l];
        const LayerOffsets& o = offsets_[l];
        std::vector<double> wbuf(params_.begin() + o.w,
                                 params_.begin() + o.w +
                                     static_cast<std::size_t>(s.in_dim) * s.out_dim);
        Tensor W = g.leaf({s.in_dim, s.out_dim}, std::move(wbuf), req);
        std::vector<double> bbuf(params_.begin() + o.b, params_.begin() + o.b + s.out_dim);
        Tensor b = g.leaf({s.out_dim}, std::move(bbuf), req);

        if (s.kind == LayerKind::Dense) {
            if (param_leaves) {
                param_leaves->push_back(W);
                param_leaves->push_back(b);
            }
            if (h.shape().size() == 1) {
                h = apply_activation(g, g.add(g.matmul(h, W), b), s.act);
            } else {
                h = apply_activation(g, g.add_rowvec(g.matmul(h, W), b), s.act);
            }
        } else {
            std::vector<double> ubuf(params_.begin() + o.u,
                                     params_.begin() + o.u +
                                         static_cast<std::size_t>(s.out_dim) * s.out_dim);
            Tensor U = g.leaf({s.out_dim, s.out_dim}, std::move(ubuf), req);
            if (param_leaves) {
                param_leaves->push_back(W);
                param_leaves->push_back(U);
                param_leaves->push_back(b);
            }
            if (h.shape().size() != 2) {
                throw std::invalid_argument("elman layer expects a [steps, in_dim] matrix");
            }
            int steps = h.shape()[0];
            // hidden state resets to zero for every window
            Tensor hidden;
            std::vector<Tensor> outputs;
            outputs.reserve(static_cast<std::size_t>(steps));
            for (int t = 0; t < steps; ++t) {
                Tensor xt = g.take_row(h, t);
                Tensor pre = g.add(g.matmul(xt, W), b);
                if (t > 0) pre = g.add(pre, g.matmul(hidden, U));
                hidden = g.tanh(pre);
                outputs.push_back(hidden);
            }
            h = g.stack_rows(outputs);
        }
    }
    return h;
}

TrainStats train(Network& net, const std::vector<TrainSample>& data, const TrainConfig& cfg) {
    if (data.empty()) throw std::invalid_argument("train: no samples");
    if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (cfg.learning_rate < 0.0) throw std::invalid_argument("train: negative learning rate");

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<double> params = net.flat_params();
    AdamState state;
    TrainStats stats;
    std::size_t batch_size = cfg.batch_size > 0 ? static_cast<std::size_t>(cfg.batch_size) : 32;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t batches = 0;

        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            std::size_t end = std::min(order.size(), start + batch_size);
            std::vector<double> grad_acc(params.size(), 0.0);
            double batch_loss = 0.0;

            for (std::size_t i = start; i < end; ++i) {
                const TrainSample& sample = data[order[i]];
                Graph g;
                std::vector<Tensor> leaves;
                Tensor x = g.leaf(sample.x_shape, sample.x);
                Tensor out = net.forward(g, x, &leaves);
                Tensor target = g.leaf(sample.y_shape, sample.y);
                Tensor loss = g.mse_loss(out, target);
                double lv = loss.scalar();
                if (!std::isfinite(lv)) {
                    throw NumericError("train: non-finite loss at epoch " +
                                       std::to_string(epoch) + ", sample " +
                                       std::to_string(order[i]));
                }
                batch_loss += lv;
                g.backward(loss);
                std::size_t off = 0;
                for (const Tensor& leaf : leaves) {
                    if (leaf.has_grad()) {
                        kernels::active().axpy(1.0, leaf.grad().data(), grad_acc.data() + off,
                                               leaf.size());
                    }
                    off += leaf.size();
                }
            }

            double inv = 1.0 / static_cast<double>(end - start);
            for (auto& gv : grad_acc) gv *= inv;
            adam_step(params, grad_acc, state, cfg);
            net.set_flat_params(params);
            epoch_loss += batch_loss * inv;
            ++batches;
        }
        stats.loss_per_epoch.push_back(epoch_loss / static_cast<double>(batches));
    }
    return stats;
}

std::string layer_kind_name(LayerKind k) {
    return k == LayerKind::Dense ? "dense" : "elman_rnn";
}

std::string activation_name(Activation a) {
    switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Linear: return "linear";
    }
    return "linear";
}

LayerKind layer_kind_from_name(const std::string& s) {
    if (s == "dense") return LayerKind::Dense;
    if (s == "elman_rnn") return LayerKind::ElmanRnn;
    throw std::invalid_argument("unknown layer kind: " + s);
}

Activation activation_from_name(const std::string& s) {
    if (s == "tanh") return Activation::Tanh;
    if (s == "relu") return Activation::Relu;
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "linear") return Activation::Linear;
    throw std::invalid_argument("unknown activation: " + s);
}

namespace {

using json = nlohmann::ordered_json;

} // namespace

std::string network_to_json(const Network& net) {
    json layers = json::array();
    for (const LayerSpec& s : net.specs()) {
        layers.push_back({{"kind", layer_kind_name(s.kind)},
                          {"in", s.in_dim},
                          {"out", s.out_dim},
                          {"activation", activation_name(s.act)}});
    }
    json j = {{"format", "tsadv-net"},
              {"version", 1},
              {"seed", net.seed()},
              {"layers", layers},
              {"params", net.flat_params()}};
    return j.dump();
}

Network network_from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.value("format", "") != "tsadv-net" || j.value("version", 0) != 1) {
        throw DataError("unrecognized network checkpoint format");
    }
    std::vector<LayerSpec> specs;
    for (const auto& lj : j.at("layers")) {
        LayerSpec s;
        s.kind = layer_kind_from_name(lj.at("kind").get<std::string>());
        s.in_dim = lj.at("in").get<int>();
        s.out_dim = lj.at("out").get<int>();
        s.act = activation_from_name(lj.at("activation").get<std::string>());
        specs.push_back(s);
    }
    Network net = Network::init(std::move(specs), j.at("seed").get<std::uint64_t>());
    net.set_flat_params(j.at("params").get<std::vector<double>>());
    return net;
}

void save_network(const Network& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << network_to_json(net) << "\n";
}

Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return network_from_json(text);
}

} // namespace tsadv
