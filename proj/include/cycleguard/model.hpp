#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cycleguard/arch.hpp"
#include "cycleguard/error.hpp"
#include "cycleguard/ops.hpp"
#include "cycleguard/rng.hpp"
#include "cycleguard/tape.hpp"
#include "cycleguard/tensor.hpp"

namespace cycleguard {

template <class T>
struct LayerParamsT {
    TensorT<T> weights;
    TensorT<T> bias;
    bool trainable = true;
};

// Parameter set for one staged autoencoder. Layers run encoder first, then
// decoder, in forward order.
template <class T>
struct AutoencoderT {
    ArchitectureSpec arch;
    std::vector<LayerParamsT<T>> layers;

    std::size_t layer_count() const { return layers.size(); }

    const LayerSpec& layer_spec(std::size_t i) const {
        return i < arch.encoder.size() ? arch.encoder[i] : arch.decoder[i - arch.encoder.size()];
    }

    // Channels of the tensor the layer consumes; fixes the weight shape
    // together with the spec.
    std::int64_t layer_in_channels(std::size_t i) const {
        if (i < arch.encoder.size()) return arch.encoder_in_channels(i);
        const std::size_t d = i - arch.encoder.size();
        return d == 0 ? arch.encoder.back().conv.filters : arch.decoder[d - 1].conv.filters;
    }
};

using Autoencoder = AutoencoderT<double>;

namespace detail {

template <class T>
Shape weight_shape(const LayerSpec& spec, std::int64_t in_channels) {
    // Conv weights (kh,kw,in,f); transpose weights (kh,kw,f,in) so the same
    // tensor satisfies the conv/transpose adjoint pairing.
    if (spec.transposed)
        return Shape{spec.conv.kernel_h, spec.conv.kernel_w, spec.conv.filters, in_channels};
    return Shape{spec.conv.kernel_h, spec.conv.kernel_w, in_channels, spec.conv.filters};
}

}  // namespace detail

// Initializes a stage network. He-uniform weights scaled by the receptive
// fan-in, zero biases; the draw order is fixed, so one seed pins every value.
template <class T = double>
AutoencoderT<T> build(const ArchitectureSpec& arch, std::mt19937_64& rng) {
    arch.validate();
    AutoencoderT<T> model;
    model.arch = arch;
    const std::size_t n = arch.encoder.size() + arch.decoder.size();
    for (std::size_t i = 0; i < n; ++i) {
        const LayerSpec& spec = model.layer_spec(i);
        const std::int64_t in_ch = model.layer_in_channels(i);
        LayerParamsT<T> p;
        p.weights = TensorT<T>(detail::weight_shape<T>(spec, in_ch));
        const double fan_in =
            static_cast<double>(spec.conv.kernel_h) * spec.conv.kernel_w * static_cast<double>(in_ch);
        const double limit = std::sqrt(6.0 / fan_in);
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (std::int64_t j = 0; j < p.weights.size(); ++j) p.weights[j] = static_cast<T>(dist(rng));
        p.bias = TensorT<T>(Shape{spec.conv.filters});
        model.layers.push_back(std::move(p));
    }
    return model;
}

template <class T = double>
AutoencoderT<T> build(int stage, std::uint64_t seed, StandardOptions opt = {}) {
    std::mt19937_64 rng = make_rng(seed);
    return build<T>(ArchitectureSpec::standard(stage, opt), rng);
}

template <class T>
struct ForwardResultT {
    TensorT<T> reconstruction;
    TensorT<T> latent;
};

// Pure forward pass. Input (B, input_h, input_w, input_c) exactly; output
// reconstruction of the same shape plus the innermost encoder activation.
template <class T>
ForwardResultT<T> forward(const AutoencoderT<T>& model, const TensorT<T>& batch) {
    const ArchitectureSpec& a = model.arch;
    if (batch.rank() != 4 || batch.dim(1) != a.input_h || batch.dim(2) != a.input_w ||
        batch.dim(3) != a.input_c)
        throw DimensionError("forward: batch " + batch.shape().str() + " does not match model input " +
                             std::to_string(a.input_h) + "x" + std::to_string(a.input_w) + "x" +
                             std::to_string(a.input_c));
    ForwardResultT<T> out;
    TensorT<T> x = batch;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const LayerSpec& spec = model.layer_spec(i);
        const LayerParamsT<T>& p = model.layers[i];
        x = spec.transposed ? conv_transpose2d(x, p.weights, p.bias, spec.conv)
                            : conv2d(x, p.weights, p.bias, spec.conv);
        if (spec.relu) x = relu(x);
        if (i + 1 == a.encoder.size()) out.latent = x;
    }
    out.reconstruction = std::move(x);
    return out;
}

// Node handles for one recorded forward pass; what the trainer needs to pull
// gradients back out of the tape.
struct TapeBindings {
    NodeId input = -1;
    NodeId reconstruction = -1;
    NodeId latent = -1;
    std::vector<std::pair<NodeId, NodeId>> layer_nodes;  // (weights, bias) per layer
};

// Same computation as forward(), recorded. Frozen layers enter as
// non-trainable leaves, so backward skips their gradients entirely.
template <class T>
TapeBindings forward_on_tape(GradTape<T>& tape, const AutoencoderT<T>& model, const TensorT<T>& batch) {
    const ArchitectureSpec& a = model.arch;
    if (batch.rank() != 4 || batch.dim(1) != a.input_h || batch.dim(2) != a.input_w ||
        batch.dim(3) != a.input_c)
        throw DimensionError("forward_on_tape: batch " + batch.shape().str() + " does not match model input");
    TapeBindings b;
    b.input = tape.leaf(batch, false);
    NodeId x = b.input;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const LayerSpec& spec = model.layer_spec(i);
        const LayerParamsT<T>& p = model.layers[i];
        const NodeId w = tape.leaf(p.weights, p.trainable);
        const NodeId bias = tape.leaf(p.bias, p.trainable);
        b.layer_nodes.emplace_back(w, bias);
        x = spec.transposed ? tape.conv_transpose2d(x, w, bias, spec.conv)
                            : tape.conv2d(x, w, bias, spec.conv);
        if (spec.relu) x = tape.relu(x);
        if (i + 1 == a.encoder.size()) b.latent = x;
    }
    b.reconstruction = x;
    return b;
}

// Copies the outer layers of a shallower stage into a deeper one. Encoder
// layers align from the front; decoder layers align from the back (the
// shallow decoder's layers are the deep decoder's outermost). Transferred
// layers are frozen, the fresh inner layers stay trainable.
template <class T>
AutoencoderT<T> transfer_weights(const AutoencoderT<T>& shallow, AutoencoderT<T> deep) {
    const std::size_t sn = shallow.arch.encoder.size();
    const std::size_t dn = deep.arch.encoder.size();
    if (sn >= dn)
        throw StateError("transfer_weights: source stage " + std::to_string(shallow.arch.stage()) +
                         " must be shallower than target stage " + std::to_string(deep.arch.stage()));
    for (std::size_t i = 0; i < sn; ++i) {
        if (!(shallow.arch.encoder[i].conv.filters == deep.arch.encoder[i].conv.filters &&
              shallow.arch.encoder[i].conv.kernel_h == deep.arch.encoder[i].conv.kernel_h))
            throw StateError("transfer_weights: encoder layer " + std::to_string(i + 1) +
                             " differs between stages");
    }

    for (std::size_t i = 0; i < deep.layers.size(); ++i) deep.layers[i].trainable = true;
    // Encoder: shallow layer i -> deep layer i.
    for (std::size_t i = 0; i < sn; ++i) {
        if (!shallow.layers[i].weights.same_shape(deep.layers[i].weights))
            throw StateError("transfer_weights: encoder layer " + std::to_string(i + 1) + " shape mismatch");
        deep.layers[i].weights = shallow.layers[i].weights;
        deep.layers[i].bias = shallow.layers[i].bias;
        deep.layers[i].trainable = false;
    }
    // Decoder: shallow decoder j -> deep decoder (dn - sn) + j.
    for (std::size_t j = 0; j < sn; ++j) {
        const std::size_t src = sn + j;
        const std::size_t dst = dn + (dn - sn) + j;
        if (!shallow.layers[src].weights.same_shape(deep.layers[dst].weights))
            throw StateError("transfer_weights: decoder layer " + std::to_string(j + 1) + " shape mismatch");
        deep.layers[dst].weights = shallow.layers[src].weights;
        deep.layers[dst].bias = shallow.layers[src].bias;
        deep.layers[dst].trainable = false;
    }
    return deep;
}

template <class T>
void unfreeze_all(AutoencoderT<T>& model) {
    for (auto& l : model.layers) l.trainable = true;
}

}  // namespace cycleguard
