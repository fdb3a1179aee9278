#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cycleguard/loss.hpp"
#include "cycleguard/ops.hpp"
#include "cycleguard/tensor.hpp"

namespace cycleguard {

using NodeId = int;

// Reverse-mode gradient tape over the fixed op set. Recording an op runs the
// forward computation eagerly and saves what backward needs; backward() walks
// the recorded graph once in reverse and accumulates gradients, so a tensor
// feeding several ops receives the sum of all path contributions.
template <class T>
class GradTape {
public:
    // Registers an input tensor. Trainable leaves are the ones gradients are
    // reported for; backward skips subgraphs that reach no trainable leaf.
    NodeId leaf(TensorT<T> value, bool trainable = false) {
        Node node;
        node.value = std::move(value);
        node.is_leaf = true;
        node.trainable = trainable;
        node.needs_grad = trainable;
        nodes_.push_back(std::move(node));
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    NodeId conv2d(NodeId x, NodeId w, NodeId b, ConvSpec spec) {
        TensorT<T> value = cycleguard::conv2d(value_of(x), value_of(w), value_of(b), spec);
        const std::int64_t H = value_of(x).dim(1), W = value_of(x).dim(2);
        const ConvGeometry geo = conv_geometry(H, W, spec);
        return record(std::move(value), {x, w, b},
                      [spec, geo](GradTape& t, const Node& n, const TensorT<T>& gout,
                                  std::array<TensorT<T>*, 3> gin) {
                          const TensorT<T>& xv = t.value_of(n.inputs[0]);
                          const std::int64_t B = xv.dim(0), H = xv.dim(1), W = xv.dim(2), C = xv.dim(3);
                          const std::int64_t OH = gout.dim(1), OW = gout.dim(2), F = gout.dim(3);
                          if (gin[0])
                              detail::conv_scatter(gin[0]->data(), gout.data(),
                                                   t.value_of(n.inputs[1]).data(), B, H, W, C, OH, OW,
                                                   F, spec, geo.pad_top, geo.pad_left);
                          if (gin[1])
                              detail::conv_weight_grad(xv.data(), gout.data(), gin[1]->data(), B, H, W,
                                                       C, OH, OW, F, spec, geo.pad_top, geo.pad_left);
                          if (gin[2]) reduce_per_channel(gout, F, gin[2]);
                      });
    }

    NodeId conv_transpose2d(NodeId y, NodeId w, NodeId b, ConvSpec spec) {
        TensorT<T> value = cycleguard::conv_transpose2d(value_of(y), value_of(w), value_of(b), spec);
        const std::int64_t h = value_of(y).dim(1), wd = value_of(y).dim(2);
        std::int64_t OH = 0, OW = 0;
        const ConvGeometry geo = transpose_geometry(h, wd, spec, &OH, &OW);
        return record(std::move(value), {y, w, b},
                      [spec, geo](GradTape& t, const Node& n, const TensorT<T>& gout,
                                  std::array<TensorT<T>*, 3> gin) {
                          // gout lives in the transpose's output (conv-input) space.
                          const TensorT<T>& yv = t.value_of(n.inputs[0]);
                          const std::int64_t B = yv.dim(0), h = yv.dim(1), wd = yv.dim(2), K = yv.dim(3);
                          const std::int64_t OH = gout.dim(1), OW = gout.dim(2), C = gout.dim(3);
                          if (gin[0])
                              detail::conv_gather(gout.data(), gin[0]->data(),
                                                  t.value_of(n.inputs[1]).data(), B, OH, OW, C, h, wd,
                                                  K, spec, geo.pad_top, geo.pad_left);
                          if (gin[1])
                              detail::conv_weight_grad(gout.data(), yv.data(), gin[1]->data(), B, OH, OW,
                                                       C, h, wd, K, spec, geo.pad_top, geo.pad_left);
                          if (gin[2]) reduce_per_channel(gout, C, gin[2]);
                      });
    }

    NodeId dense(NodeId x, NodeId w, NodeId b) {
        TensorT<T> value = cycleguard::dense(value_of(x), value_of(w), value_of(b));
        return record(std::move(value), {x, w, b},
                      [](GradTape& t, const Node& n, const TensorT<T>& gout,
                         std::array<TensorT<T>*, 3> gin) {
                          const TensorT<T>& xv = t.value_of(n.inputs[0]);
                          const TensorT<T>& wv = t.value_of(n.inputs[1]);
                          const std::int64_t K = wv.dim(0), M = wv.dim(1);
                          const std::int64_t B = xv.rank() == 2 ? xv.dim(0) : 1;
                          for (std::int64_t bb = 0; bb < B; ++bb) {
                              const T* gr = gout.data() + bb * M;
                              const T* xr = xv.data() + bb * K;
                              for (std::int64_t k = 0; k < K; ++k) {
                                  const T* wr = wv.data() + k * M;
                                  T acc = 0;
                                  for (std::int64_t m = 0; m < M; ++m) {
                                      acc += wr[m] * gr[m];
                                      if (gin[1]) (*gin[1])[k * M + m] += xr[k] * gr[m];
                                  }
                                  if (gin[0]) (*gin[0])[bb * K + k] += acc;
                              }
                              if (gin[2])
                                  for (std::int64_t m = 0; m < M; ++m) (*gin[2])[m] += gr[m];
                          }
                      });
    }

    NodeId relu(NodeId x) {
        TensorT<T> value = cycleguard::relu(value_of(x));
        return record(std::move(value), {x, -1, -1},
                      [](GradTape& t, const Node& n, const TensorT<T>& gout,
                         std::array<TensorT<T>*, 3> gin) {
                          if (!gin[0]) return;
                          const TensorT<T>& xv = t.value_of(n.inputs[0]);
                          for (std::int64_t i = 0; i < xv.size(); ++i)
                              if (xv[i] > T(0)) (*gin[0])[i] += gout[i];
                      });
    }

    NodeId pad_crop(NodeId x, std::int64_t target_h, std::int64_t target_w, PadMode mode) {
        TensorT<T> value = cycleguard::pad_crop(value_of(x), target_h, target_w, mode);
        return record(std::move(value), {x, -1, -1},
                      [](GradTape& t, const Node& n, const TensorT<T>& gout,
                         std::array<TensorT<T>*, 3> gin) {
                          if (!gin[0]) return;
                          // Adjoint: copy the shared region back, zeros elsewhere.
                          const TensorT<T>& xv = t.value_of(n.inputs[0]);
                          const int hb = xv.rank() == 2 ? 0 : 1;
                          const std::int64_t rows = std::min(xv.dim(hb), gout.dim(hb));
                          const std::int64_t cols = std::min(xv.dim(hb + 1), gout.dim(hb + 1));
                          add_region(gout, *gin[0], rows, cols);
                      });
    }

    // Scalar sum over all elements; the reduction used to close a graph into
    // a loss when no cost node applies.
    NodeId sum(NodeId x) {
        const TensorT<T>& xv = value_of(x);
        T acc = 0;
        for (std::int64_t i = 0; i < xv.size(); ++i) acc += xv[i];
        TensorT<T> value(Shape{1});
        value[0] = acc;
        return record(std::move(value), {x, -1, -1},
                      [](GradTape&, const Node&, const TensorT<T>& gout,
                         std::array<TensorT<T>*, 3> gin) {
                          if (!gin[0]) return;
                          for (std::int64_t i = 0; i < gin[0]->size(); ++i) (*gin[0])[i] += gout[0];
                      });
    }

    // Composite reconstruction cost as a scalar node. Gradients flow into
    // both arguments. If breakdown is non-null the part values are stored
    // there at record time.
    NodeId composite_loss(NodeId x, NodeId reconstruction, LossOptions opt,
                          LossBreakdown* breakdown = nullptr) {
        const LossBreakdown lb = cycleguard::composite_loss(value_of(x), value_of(reconstruction), opt);
        if (breakdown) *breakdown = lb;
        TensorT<T> value(Shape{1});
        value[0] = static_cast<T>(lb.total);
        return record(std::move(value), {x, reconstruction, -1},
                      [opt](GradTape& t, const Node& n, const TensorT<T>& gout,
                            std::array<TensorT<T>*, 3> gin) {
                          detail::composite_loss_grad(t.value_of(n.inputs[0]), t.value_of(n.inputs[1]),
                                                      opt, static_cast<double>(gout[0]), gin[1], gin[0]);
                      });
    }

    // Plain mean squared error over all elements, scalar node.
    NodeId mse_loss(NodeId x, NodeId reconstruction) {
        const TensorT<T>& xv = value_of(x);
        const TensorT<T>& rv = value_of(reconstruction);
        if (!xv.same_shape(rv))
            throw DimensionError("mse_loss: shape mismatch " + xv.shape().str() + " vs " + rv.shape().str());
        double acc = 0;
        for (std::int64_t i = 0; i < xv.size(); ++i) {
            const double e = static_cast<double>(xv[i]) - static_cast<double>(rv[i]);
            acc += e * e;
        }
        TensorT<T> value(Shape{1});
        value[0] = static_cast<T>(acc / static_cast<double>(xv.size()));
        return record(std::move(value), {x, reconstruction, -1},
                      [](GradTape& t, const Node& n, const TensorT<T>& gout,
                         std::array<TensorT<T>*, 3> gin) {
                          const TensorT<T>& xv = t.value_of(n.inputs[0]);
                          const TensorT<T>& rv = t.value_of(n.inputs[1]);
                          const double scale = 2.0 * static_cast<double>(gout[0]) /
                                               static_cast<double>(xv.size());
                          for (std::int64_t i = 0; i < xv.size(); ++i) {
                              const T g = static_cast<T>(scale * (static_cast<double>(xv[i]) -
                                                                  static_cast<double>(rv[i])));
                              if (gin[0]) (*gin[0])[i] += g;
                              if (gin[1]) (*gin[1])[i] -= g;
                          }
                      });
    }

    const TensorT<T>& value_of(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }
    std::size_t node_count() const { return nodes_.size(); }

    // Gradients of a scalar loss node with respect to every trainable leaf,
    // keyed by leaf id. A trainable leaf the loss does not reach maps to a
    // zero tensor of its shape rather than being an error.
    std::unordered_map<NodeId, TensorT<T>> backward(NodeId loss_node) {
        const Node& loss = node(loss_node);
        if (loss.value.size() != 1)
            throw ContractError("backward: loss node must be scalar, got " + loss.value.shape().str());

        std::vector<TensorT<T>> grads(nodes_.size());
        grads[static_cast<std::size_t>(loss_node)] = TensorT<T>::filled(Shape{1}, T(1));

        for (NodeId id = loss_node; id >= 0; --id) {
            Node& n = nodes_[static_cast<std::size_t>(id)];
            if (n.is_leaf || !n.needs_grad) continue;
            TensorT<T>& gout = grads[static_cast<std::size_t>(id)];
            if (gout.empty()) continue;  // not on a path to the loss
            std::array<TensorT<T>*, 3> gin{nullptr, nullptr, nullptr};
            for (int i = 0; i < 3; ++i) {
                const NodeId in = n.inputs[i];
                if (in < 0 || !nodes_[static_cast<std::size_t>(in)].needs_grad) continue;
                TensorT<T>& g = grads[static_cast<std::size_t>(in)];
                if (g.empty()) g = TensorT<T>(nodes_[static_cast<std::size_t>(in)].value.shape());
                gin[static_cast<std::size_t>(i)] = &g;
            }
            n.backprop(*this, n, gout, gin);
            gout = TensorT<T>();  // free as soon as consumed
        }

        std::unordered_map<NodeId, TensorT<T>> out;
        for (NodeId id = 0; id < static_cast<NodeId>(nodes_.size()); ++id) {
            const Node& n = nodes_[static_cast<std::size_t>(id)];
            if (!n.is_leaf || !n.trainable) continue;
            TensorT<T>& g = grads[static_cast<std::size_t>(id)];
            out[id] = g.empty() ? TensorT<T>(n.value.shape()) : std::move(g);
        }
        return out;
    }

private:
    struct Node {
        TensorT<T> value;
        std::array<NodeId, 3> inputs{-1, -1, -1};
        bool is_leaf = false;
        bool trainable = false;
        bool needs_grad = false;
        std::function<void(GradTape&, const Node&, const TensorT<T>&, std::array<TensorT<T>*, 3>)>
            backprop;
    };

    Node& node(NodeId id) { return nodes_.at(static_cast<std::size_t>(id)); }

    template <class Fn>
    NodeId record(TensorT<T> value, std::array<NodeId, 3> inputs, Fn&& backprop) {
        Node n;
        n.value = std::move(value);
        n.inputs = inputs;
        for (NodeId in : inputs)
            if (in >= 0 && node(in).needs_grad) n.needs_grad = true;
        n.backprop = std::forward<Fn>(backprop);
        nodes_.push_back(std::move(n));
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    static void reduce_per_channel(const TensorT<T>& gout, std::int64_t channels, TensorT<T>* db) {
        const T* gp = gout.data();
        for (std::int64_t i = 0; i < gout.size(); ++i) (*db)[i % channels] += gp[i];
    }

    static void add_region(const TensorT<T>& src, TensorT<T>& dst, std::int64_t rows, std::int64_t cols) {
        if (src.rank() == 2) {
            for (std::int64_t r = 0; r < rows; ++r)
                for (std::int64_t c = 0; c < cols; ++c) dst.at(r, c) += src.at(r, c);
        } else {
            const std::int64_t B = src.dim(0), C = src.dim(3);
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t r = 0; r < rows; ++r)
                    for (std::int64_t c = 0; c < cols; ++c)
                        for (std::int64_t k = 0; k < C; ++k) dst.at(b, r, c, k) += src.at(b, r, c, k);
        }
    }

    std::vector<Node> nodes_;
};

}  // namespace cycleguard
