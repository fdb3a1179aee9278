#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "cycleguard/error.hpp"
#include "cycleguard/model.hpp"
#include "cycleguard/tensor.hpp"

namespace cycleguard {

struct AdamConfig {
    double base_lr = 8e-4;
    double decay = 0.5;
    int decay_interval = 50;  // epochs between decays
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// base * decay^floor(epoch / interval).
inline double lr_schedule(std::int64_t epoch, const AdamConfig& c) {
    if (epoch < 0) throw ConfigError("lr_schedule: epoch must be >= 0");
    return c.base_lr * std::pow(c.decay, static_cast<double>(epoch / c.decay_interval));
}

// First/second moments per layer, weights and bias separately. Allocated for
// every layer so an unfreeze mid-stage needs no reshaping; frozen layers'
// moments simply stay zero.
template <class T>
struct OptimizerStateT {
    AdamConfig config;
    std::int64_t step = 0;
    std::vector<TensorT<T>> m_w, v_w, m_b, v_b;
};

using OptimizerState = OptimizerStateT<double>;

template <class T>
OptimizerStateT<T> init_optimizer(const AutoencoderT<T>& model, AdamConfig config = {}) {
    OptimizerStateT<T> st;
    st.config = config;
    for (const LayerParamsT<T>& l : model.layers) {
        st.m_w.emplace_back(l.weights.shape());
        st.v_w.emplace_back(l.weights.shape());
        st.m_b.emplace_back(l.bias.shape());
        st.v_b.emplace_back(l.bias.shape());
    }
    return st;
}

// Per-layer gradient pair; empty tensors mean "layer frozen, no gradient".
template <class T>
struct LayerGradsT {
    TensorT<T> weights;
    TensorT<T> bias;
};

// Pulls the tape's gradient map back into per-layer order. Every trainable
// layer must be covered (the tape reports zeros for disconnected trainable
// leaves, so absence means the caller wired the wrong bindings).
template <class T>
std::vector<LayerGradsT<T>> collect_gradients(const AutoencoderT<T>& model, const TapeBindings& bindings,
                                              const std::unordered_map<NodeId, TensorT<T>>& grad_map) {
    if (bindings.layer_nodes.size() != model.layers.size())
        throw ContractError("collect_gradients: bindings cover " + std::to_string(bindings.layer_nodes.size()) +
                            " layers, model has " + std::to_string(model.layers.size()));
    std::vector<LayerGradsT<T>> out(model.layers.size());
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        if (!model.layers[i].trainable) continue;
        const auto [w_node, b_node] = bindings.layer_nodes[i];
        const auto wg = grad_map.find(w_node);
        const auto bg = grad_map.find(b_node);
        if (wg == grad_map.end() || bg == grad_map.end())
            throw ContractError("collect_gradients: missing gradient for trainable layer " + std::to_string(i + 1));
        out[i].weights = wg->second;
        out[i].bias = bg->second;
    }
    return out;
}

namespace detail {

template <class T>
void adam_update(TensorT<T>& param, const TensorT<T>& grad, TensorT<T>& m, TensorT<T>& v,
                 const AdamConfig& c, double lr, double bc1, double bc2) {
    for (std::int64_t i = 0; i < param.size(); ++i) {
        const double g = static_cast<double>(grad[i]);
        const double mi = c.beta1 * static_cast<double>(m[i]) + (1.0 - c.beta1) * g;
        const double vi = c.beta2 * static_cast<double>(v[i]) + (1.0 - c.beta2) * g * g;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        const double mhat = mi / bc1;
        const double vhat = vi / bc2;
        param[i] = static_cast<T>(static_cast<double>(param[i]) - lr * mhat / (std::sqrt(vhat) + c.epsilon));
    }
}

}  // namespace detail

// One Adam step with bias correction at learning rate lr. Frozen layers are
// untouched down to the bit; a trainable layer without a gradient is a
// contract violation.
template <class T>
void adam_step(AutoencoderT<T>& model, const std::vector<LayerGradsT<T>>& grads, OptimizerStateT<T>& st,
               double lr) {
    if (grads.size() != model.layers.size())
        throw ContractError("adam_step: gradient list covers " + std::to_string(grads.size()) +
                            " layers, model has " + std::to_string(model.layers.size()));
    st.step += 1;
    const double bc1 = 1.0 - std::pow(st.config.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(st.config.beta2, static_cast<double>(st.step));
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        LayerParamsT<T>& l = model.layers[i];
        if (!l.trainable) continue;
        const LayerGradsT<T>& g = grads[i];
        if (g.weights.empty() || g.bias.empty())
            throw ContractError("adam_step: trainable layer " + std::to_string(i + 1) + " has no gradient");
        if (!g.weights.same_shape(l.weights) || !g.bias.same_shape(l.bias))
            throw ContractError("adam_step: gradient shape mismatch at layer " + std::to_string(i + 1));
        detail::adam_update(l.weights, g.weights, st.m_w[i], st.v_w[i], st.config, lr, bc1, bc2);
        detail::adam_update(l.bias, g.bias, st.m_b[i], st.v_b[i], st.config, lr, bc1, bc2);
    }
}

}  // namespace cycleguard
