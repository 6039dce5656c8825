#pragma once

// Trainable feed-forward and Elman recurrent networks with an Adam optimizer.
// Parameters live in one flat buffer; each forward pass rebuilds the tape, so
// a Network is immutable during inference and attacks.

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "tsadv/autodiff.hpp"

namespace tsadv {

enum class LayerKind { Dense, ElmanRnn };
enum class Activation { Tanh, Relu, Sigmoid, Linear };

struct LayerSpec {
    LayerKind kind = LayerKind::Dense;
    int in_dim = 0;
    int out_dim = 0;
    Activation act = Activation::Linear;

    bool operator==(const LayerSpec&) const = default;
};

struct TrainConfig {
    int epochs = 20;
    int batch_size = 32;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
};

struct TrainStats {
    std::vector<double> loss_per_epoch;
};

struct TrainSample {
    std::vector<int> x_shape;
    std::vector<double> x;
    std::vector<int> y_shape;
    std::vector<double> y;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;
};

// params -= lr * m_hat / (sqrt(v_hat) + eps); a zero gradient is a no-op.
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, const TrainConfig& cfg);

class Network {
public:
    Network() = default;

    // Glorot-uniform weights, zero biases, deterministic in seed. Consecutive
    // layer dims must chain.
    static Network init(std::vector<LayerSpec> specs, std::uint64_t seed);

    Network(const Network& other);
    Network& operator=(const Network& other);
    Network(Network&&) noexcept = default;
    Network& operator=(Network&&) noexcept = default;

    const std::vector<LayerSpec>& specs() const { return specs_; }
    std::uint64_t seed() const { return seed_; }
    int in_dim() const { return specs_.front().in_dim; }
    int out_dim() const { return specs_.back().out_dim; }

    const std::vector<double>& flat_params() const { return params_; }
    void set_flat_params(std::vector<double> p);

    // Builds the network on the given tape. x is [rows, in_dim] (dense layers
    // apply row-wise, Elman layers scan rows with the hidden state reset per
    // call) or a plain [in_dim] vector. When param_leaves is non-null the
    // parameter leaves are created with requires_grad and returned in order.
    Tensor forward(Graph& g, const Tensor& x, std::vector<Tensor>* param_leaves = nullptr) const;

    // Number of tape constructions this instance has performed; used to assert
    // that a victim model is never differentiated during black-box crafting.
    std::uint64_t forward_count() const { return forward_count_.load(); }

private:
    struct LayerOffsets {
        std::size_t w = 0, u = 0, b = 0;
    };

    std::vector<LayerSpec> specs_;
    std::vector<double> params_;
    std::vector<LayerOffsets> offsets_;
    std::uint64_t seed_ = 0;
    mutable std::atomic<std::uint64_t> forward_count_{0};

    void compute_offsets();
};

// Mini-batch Adam on mean MSE. Deterministic shuffle order from cfg.seed.
// Throws NumericError if any batch loss goes non-finite.
TrainStats train(Network& net, const std::vector<TrainSample>& data, const TrainConfig& cfg);

std::string layer_kind_name(LayerKind k);
std::string activation_name(Activation a);
LayerKind layer_kind_from_name(const std::string& s);
Activation activation_from_name(const std::string& s);

// Versioned JSON checkpoint; round-trips parameters bit-exactly.
std::string network_to_json(const Network& net);
Network network_from_json(const std::string& text);
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

} // namespace tsadv
