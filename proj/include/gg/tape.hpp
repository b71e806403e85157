#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gg/tensor.hpp"

namespace gg::nn {

using ValueId = std::uint32_t;

// A Tape is the computation record: values live in nodes, primitive
// operations are appended in execution order. forward() replays the whole
// record against the current leaf values; backward() walks the record in
// exact reverse and accumulates reverse-mode gradients. Building an op also
// runs it once, so node values are always materialized.
class Tape {
public:
    ValueId input(Tensor t) { return add_node(std::move(t), /*requires_grad=*/false, /*leaf=*/true); }

    ValueId param(Tensor t) {
        ValueId id = add_node(std::move(t), /*requires_grad=*/true, /*leaf=*/true);
        params_.push_back(id);
        return id;
    }

    const std::vector<ValueId>& params() const { return params_; }
    std::size_t op_count() const { return ops_.size(); }

    Tensor& value(ValueId id) { return nodes_[id].value; }
    const Tensor& value(ValueId id) const { return nodes_[id].value; }
    const Tensor& grad(ValueId id) const { return nodes_[id].grad; }
    Tensor& grad_mut(ValueId id) { return nodes_[id].grad; }

    void set_value(ValueId id, const Tensor& t) {
        if (!nodes_[id].value.same_shape(t)) {
            throw std::invalid_argument("set_value shape " + Tensor::shape_str(t.shape) +
                                        " does not match node shape " +
                                        Tensor::shape_str(nodes_[id].value.shape));
        }
        nodes_[id].value.data = t.data;
    }

    // ---- primitive ops ----

    // 3x3x3 convolution with zero padding of 1 on each spatial side.
    // x: [C_in, D, H, W], k: [C_out, C_in, 3, 3, 3], b: [C_out].
    ValueId conv3d(ValueId x, ValueId k, ValueId b, int stride = 1) {
        const Tensor& xv = value(x);
        const Tensor& kv = value(k);
        const Tensor& bv = value(b);
        if (xv.rank() != 4) throw std::invalid_argument("conv3d input must be rank 4, got " + Tensor::shape_str(xv.shape));
        if (kv.rank() != 5 || kv.shape[2] != 3 || kv.shape[3] != 3 || kv.shape[4] != 3)
            throw std::invalid_argument("conv3d kernels must be [C_out,C_in,3,3,3], got " + Tensor::shape_str(kv.shape));
        if (kv.shape[1] != xv.shape[0])
            throw std::invalid_argument("conv3d channel mismatch: kernels " + Tensor::shape_str(kv.shape) +
                                        " expect C_in=" + std::to_string(kv.shape[1]) + " but input " +
                                        Tensor::shape_str(xv.shape) + " has C_in=" + std::to_string(xv.shape[0]));
        if (bv.rank() != 1 || bv.shape[0] != kv.shape[0])
            throw std::invalid_argument("conv3d bias must be [C_out], got " + Tensor::shape_str(bv.shape));
        if (stride < 1) throw std::invalid_argument("conv3d stride must be >= 1");
        if (xv.shape[1] < 3 || xv.shape[2] < 3 || xv.shape[3] < 3)
            throw std::invalid_argument("conv3d spatial dims must be >= 3, got " + Tensor::shape_str(xv.shape));
        auto osz = [stride](int n) { return (n + 2 - 3) / stride + 1; };
        Op op;
        op.kind = OpKind::Conv3d;
        op.in = {x, k, b};
        op.n_in = 3;
        op.i0 = stride;
        return push(op, {kv.shape[0], osz(xv.shape[1]), osz(xv.shape[2]), osz(xv.shape[3])});
    }

    // Non-overlapping max pooling; gradient routes to the argmax cell with
    // ties broken by lowest linear index.
    ValueId max_pool3d(ValueId x, int window = 2, int stride = 2) {
        const Tensor& xv = value(x);
        if (xv.rank() != 4) throw std::invalid_argument("max_pool3d input must be rank 4, got " + Tensor::shape_str(xv.shape));
        if (window != stride) throw std::invalid_argument("max_pool3d requires window == stride");
        if (window < 1) throw std::invalid_argument("max_pool3d window must be >= 1");
        for (int i = 1; i < 4; ++i)
            if (xv.shape[i] % window != 0)
                throw std::invalid_argument("max_pool3d dims " + Tensor::shape_str(xv.shape) +
                                            " not divisible by window " + std::to_string(window));
        Op op;
        op.kind = OpKind::MaxPool3d;
        op.in = {x, 0, 0};
        op.n_in = 1;
        op.i0 = window;
        return push(op, {xv.shape[0], xv.shape[1] / window, xv.shape[2] / window, xv.shape[3] / window});
    }

    ValueId relu(ValueId x) {
        Op op;
        op.kind = OpKind::Relu;
        op.in = {x, 0, 0};
        op.n_in = 1;
        return push(op, value(x).shape);
    }

    ValueId sigmoid(ValueId x) {
        Op op;
        op.kind = OpKind::Sigmoid;
        op.in = {x, 0, 0};
        op.n_in = 1;
        return push(op, value(x).shape);
    }

    // W*x + b with x: [n_in], W: [n_out, n_in], b: [n_out].
    ValueId fully_connected(ValueId x, ValueId w, ValueId b) {
        const Tensor& xv = value(x);
        const Tensor& wv = value(w);
        const Tensor& bv = value(b);
        if (xv.rank() != 1 || wv.rank() != 2 || bv.rank() != 1 || wv.shape[1] != xv.shape[0] ||
            bv.shape[0] != wv.shape[0])
            throw std::invalid_argument("fully_connected dimension mismatch: x " + Tensor::shape_str(xv.shape) +
                                        ", W " + Tensor::shape_str(wv.shape) + ", b " + Tensor::shape_str(bv.shape));
        Op op;
        op.kind = OpKind::FullyConnected;
        op.in = {x, w, b};
        op.n_in = 3;
        return push(op, {wv.shape[0]});
    }

    // Mean of squared elementwise differences.
    ValueId mse_loss(ValueId pred, ValueId target) {
        if (!value(pred).same_shape(value(target)))
            throw std::invalid_argument("mse_loss shape mismatch: " + Tensor::shape_str(value(pred).shape) +
                                        " vs " + Tensor::shape_str(value(target).shape));
        Op op;
        op.kind = OpKind::MseLoss;
        op.in = {pred, target, 0};
        op.n_in = 2;
        return push(op, {1});
    }

    ValueId concat(ValueId a, ValueId b) {
        if (value(a).rank() != 1 || value(b).rank() != 1)
            throw std::invalid_argument("concat expects rank-1 inputs");
        Op op;
        op.kind = OpKind::Concat;
        op.in = {a, b, 0};
        op.n_in = 2;
        return push(op, {value(a).shape[0] + value(b).shape[0]});
    }

    ValueId slice(ValueId x, int begin, int len) {
        const Tensor& xv = value(x);
        if (xv.rank() != 1) throw std::invalid_argument("slice expects a rank-1 input");
        if (begin < 0 || len <= 0 || begin + len > xv.shape[0])
            throw std::invalid_argument("slice [" + std::to_string(begin) + "," + std::to_string(begin + len) +
                                        ") out of range for " + Tensor::shape_str(xv.shape));
        Op op;
        op.kind = OpKind::Slice;
        op.in = {x, 0, 0};
        op.n_in = 1;
        op.i0 = begin;
        op.i1 = len;
        return push(op, {len});
    }

    ValueId reshape(ValueId x, std::vector<int> shape) {
        if (Tensor::numel_of(shape) != value(x).numel())
            throw std::invalid_argument("reshape to " + Tensor::shape_str(shape) + " changes element count of " +
                                        Tensor::shape_str(value(x).shape));
        Op op;
        op.kind = OpKind::Reshape;
        op.in = {x, 0, 0};
        op.n_in = 1;
        return push(op, std::move(shape));
    }

    // Nearest-neighbor x2 upsampling of [C, D, H, W].
    ValueId upsample_nearest(ValueId x) {
        const Tensor& xv = value(x);
        if (xv.rank() != 4) throw std::invalid_argument("upsample_nearest input must be rank 4");
        Op op;
        op.kind = OpKind::Upsample;
        op.in = {x, 0, 0};
        op.n_in = 1;
        return push(op, {xv.shape[0], 2 * xv.shape[1], 2 * xv.shape[2], 2 * xv.shape[3]});
    }

    ValueId add(ValueId a, ValueId b) {
        if (!value(a).same_shape(value(b)))
            throw std::invalid_argument("add shape mismatch: " + Tensor::shape_str(value(a).shape) + " vs " +
                                        Tensor::shape_str(value(b).shape));
        Op op;
        op.kind = OpKind::Add;
        op.in = {a, b, 0};
        op.n_in = 2;
        return push(op, value(a).shape);
    }

    ValueId scale(ValueId x, double c) {
        Op op;
        op.kind = OpKind::Scale;
        op.in = {x, 0, 0};
        op.n_in = 1;
        op.c0 = c;
        return push(op, value(x).shape);
    }

    // ---- execution ----

    // Replays every recorded op in forward order against current leaf values.
    void forward() {
        for (auto& op : ops_) run_forward(op);
    }

    // Reverse-mode gradients of a scalar loss w.r.t. every grad-requiring
    // node. Gradients are recomputed from scratch on each call.
    void backward(ValueId loss) {
        if (value(loss).numel() != 1)
            throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                        Tensor::shape_str(value(loss).shape));
        for (auto& n : nodes_) {
            if (n.requires_grad) {
                if (n.grad.data.size() != n.value.numel()) n.grad = Tensor::zeros(n.value.shape);
                else n.grad.fill(0.0);
            }
        }
        if (!nodes_[loss].requires_grad) return;  // no parameters upstream
        nodes_[loss].grad.data[0] = 1.0;
        for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) run_backward(*it);
    }

private:
    enum class OpKind { Conv3d, MaxPool3d, Relu, Sigmoid, FullyConnected, MseLoss, Concat, Slice, Reshape, Upsample, Add, Scale };

    struct Op {
        OpKind kind{};
        std::array<ValueId, 3> in{};
        int n_in = 0;
        ValueId out = 0;
        int i0 = 0;
        int i1 = 0;
        double c0 = 0.0;
        std::vector<int> aux;  // max-pool argmax cache
    };

    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool is_leaf = false;
    };

    ValueId add_node(Tensor t, bool requires_grad, bool leaf) {
        nodes_.push_back(Node{std::move(t), Tensor(), requires_grad, leaf});
        return static_cast<ValueId>(nodes_.size() - 1);
    }

    ValueId push(Op op, std::vector<int> out_shape) {
        bool rg = false;
        for (int i = 0; i < op.n_in; ++i) rg = rg || nodes_[op.in[i]].requires_grad;
        op.out = add_node(Tensor::zeros(std::move(out_shape)), rg, false);
        ops_.push_back(std::move(op));
        run_forward(ops_.back());
        return ops_.back().out;
    }

    static bool range_for_tap(int k, int stride, int in_n, int out_n, int& lo, int& hi) {
        // output positions o where o*stride + k - 1 lands inside [0, in_n)
        lo = 0;
        while (lo < out_n && lo * stride + k - 1 < 0) ++lo;
        hi = out_n - 1;
        while (hi >= 0 && hi * stride + k - 1 >= in_n) --hi;
        return lo <= hi;
    }

    void run_forward(Op& op) {
        const Tensor& a = nodes_[op.in[0]].value;
        Tensor& out = nodes_[op.out].value;
        switch (op.kind) {
            case OpKind::Conv3d: {
                const Tensor& k = nodes_[op.in[1]].value;
                const Tensor& b = nodes_[op.in[2]].value;
                conv3d_forward(a, k, b, op.i0, out);
                break;
            }
            case OpKind::MaxPool3d:
                pool_forward(a, op.i0, out, op.aux);
                break;
            case OpKind::Relu:
                for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = a.data[i] > 0.0 ? a.data[i] : 0.0;
                break;
            case OpKind::Sigmoid:
                for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = 1.0 / (1.0 + std::exp(-a.data[i]));
                break;
            case OpKind::FullyConnected: {
                const Tensor& w = nodes_[op.in[1]].value;
                const Tensor& b = nodes_[op.in[2]].value;
                const int n_out = w.shape[0], n_in = w.shape[1];
                for (int o = 0; o < n_out; ++o) {
                    double acc = b.data[o];
                    const double* wrow = &w.data[static_cast<std::size_t>(o) * n_in];
                    for (int i = 0; i < n_in; ++i) acc += wrow[i] * a.data[i];
                    out.data[o] = acc;
                }
                break;
            }
            case OpKind::MseLoss: {
                const Tensor& t = nodes_[op.in[1]].value;
                double acc = 0.0;
                for (std::size_t i = 0; i < a.numel(); ++i) {
                    const double d = a.data[i] - t.data[i];
                    acc += d * d;
                }
                out.data[0] = acc / static_cast<double>(a.numel());
                break;
            }
            case OpKind::Concat: {
                const Tensor& b = nodes_[op.in[1]].value;
                std::copy(a.data.begin(), a.data.end(), out.data.begin());
                std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
                break;
            }
            case OpKind::Slice:
                std::copy(a.data.begin() + op.i0, a.data.begin() + op.i0 + op.i1, out.data.begin());
                break;
            case OpKind::Reshape:
                out.data = a.data;
                break;
            case OpKind::Upsample: {
                const int c = a.shape[0], d = a.shape[1], h = a.shape[2], w = a.shape[3];
                for (int ci = 0; ci < c; ++ci)
                    for (int di = 0; di < d; ++di)
                        for (int hi = 0; hi < h; ++hi)
                            for (int wi = 0; wi < w; ++wi) {
                                const double v = a.data[((static_cast<std::size_t>(ci) * d + di) * h + hi) * w + wi];
                                for (int dz = 0; dz < 2; ++dz)
                                    for (int dy = 0; dy < 2; ++dy)
                                        for (int dx = 0; dx < 2; ++dx)
                                            out.data[((static_cast<std::size_t>(ci) * 2 * d + 2 * di + dz) * 2 * h + 2 * hi + dy) * 2 * w +
                                                     2 * wi + dx] = v;
                            }
                break;
            }
            case OpKind::Add: {
                const Tensor& b = nodes_[op.in[1]].value;
                for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = a.data[i] + b.data[i];
                break;
            }
            case OpKind::Scale:
                for (std::size_t i = 0; i < a.numel(); ++i) out.data[i] = op.c0 * a.data[i];
                break;
        }
    }

    void run_backward(Op& op) {
        Node& out_node = nodes_[op.out];
        if (!out_node.requires_grad) return;
        const Tensor& g = out_node.grad;
        switch (op.kind) {
            case OpKind::Conv3d:
                conv3d_backward(op, g);
                break;
            case OpKind::MaxPool3d: {
                Node& x = nodes_[op.in[0]];
                if (!x.requires_grad) break;
                for (std::size_t i = 0; i < g.numel(); ++i) x.grad.data[op.aux[i]] += g.data[i];
                break;
            }
            case OpKind::Relu: {
                Node& x = nodes_[op.in[0]];
                if (!x.requires_grad) break;
                for (std::size_t i = 0; i < g.numel(); ++i)
                    if (x.value.data[i] > 0.0) x.grad.data[i] += g.data[i];
                break;
            }
            case OpKind::Sigmoid: {
                Node& x = nodes_[op.in[0]];
                if (!x.requires_grad) break;
                const Tensor& y = out_node.value;
                for (std::size_t i = 0; i < g.numel(); ++i)
                    x.grad.data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
                break;
            }
            case OpKind::FullyConnected: {
                Node& x = nodes_[op.in[0]];
                Node& w = nodes_[op.in[1]];
                Node& b = nodes_[op.in[2]];
                const int n_out = w.value.shape[0], n_in = w.value.shape[1];
                for (int o = 0; o < n_out; ++o) {
                    const double go = g.data[o];
                    const double* wrow = &w.value.data[static_cast<std::size_t>(o) * n_in];
                    if (x.requires_grad)
                        for (int i = 0; i < n_in; ++i) x.grad.data[i] += wrow[i] * go;
                    if (w.requires_grad) {
                        double* gw = &w.grad.data[static_cast<std::size_t>(o) * n_in];
                        for (int i = 0; i < n_in; ++i) gw[i] += x.value.data[i] * go;
                    }
                    if (b.requires_grad) b.grad.data[o] += go;
                }
                break;
            }
            case OpKind::MseLoss: {
                Node& p = nodes_[op.in[0]];
                Node& t = nodes_[op.in[1]];
                const double s = 2.0 * g.data[0] / static_cast<double>(p.value.numel());
                for (std::size_t i = 0; i < p.value.numel(); ++i) {
                    const double d = s * (p.value.data[i] - t.value.data[i]);
                    if (p.requires_grad) p.grad.data[i] += d;
                    if (t.requires_grad) t.grad.data[i] -= d;
                }
                break;
            }
            case OpKind::Concat: {
                Node& x = nodes_[op.in[0]];
                Node& y = nodes_[op.in[1]];
                const std::size_t na = x.value.numel();
                if (x.requires_grad)
                    for (std::size_t i = 0; i < na; ++i) x.grad.data[i] += g.data[i];
                if (y.requires_grad)
                    for (std::size_t i = 0; i < y.value.numel(); ++i) y.grad.data[i] += g.data[na + i];
                break;
            }
            case OpKind::Slice: {
                Node& x = nodes_[op.in[0]];
                if (!x.requires_grad) break;
                for (int i = 0; i < op.i1; ++i) x.grad.data[op.i0 + i] += g.data[i];
                break;
            }
            case OpKind::Reshape: {
                Node& x = nodes_[op.in[0]];
                if (!x.requires_grad) break;
                for (std::size_t i = 0; i < g.numel(); ++i) x.grad.data[i] += g.data[i];
                break;
            }
            case OpKind::Upsample: {
                Node& x = nodes_[op.in[0]];
                if (!x.requires_grad) break;
                const int c = x.value.shape[0], d = x.value.shape[1], h = x.value.shape[2], w = x.value.shape[3];
                for (int ci = 0; ci < c; ++ci)
                    for (int di = 0; di < d; ++di)
                        for (int hi = 0; hi < h; ++hi)
                            for (int wi = 0; wi < w; ++wi) {
                                double acc = 0.0;
                                for (int dz = 0; dz < 2; ++dz)
                                    for (int dy = 0; dy < 2; ++dy)
                                        for (int dx = 0; dx < 2; ++dx)
                                            acc += g.data[((static_cast<std::size_t>(ci) * 2 * d + 2 * di + dz) * 2 * h + 2 * hi + dy) * 2 * w +
                                                          2 * wi + dx];
                                x.grad.data[((static_cast<std::size_t>(ci) * d + di) * h + hi) * w + wi] += acc;
                            }
                break;
            }
            case OpKind::Add: {
                Node& x = nodes_[op.in[0]];
                Node& y = nodes_[op.in[1]];
                for (std::size_t i = 0; i < g.numel(); ++i) {
                    if (x.requires_grad) x.grad.data[i] += g.data[i];
                    if (y.requires_grad) y.grad.data[i] += g.data[i];
                }
                break;
            }
            case OpKind::Scale: {
                Node& x = nodes_[op.in[0]];
                if (!x.requires_grad) break;
                for (std::size_t i = 0; i < g.numel(); ++i) x.grad.data[i] += op.c0 * g.data[i];
                break;
            }
        }
    }

    void conv3d_forward(const Tensor& x, const Tensor& k, const Tensor& b, int stride, Tensor& out) {
        const int ci_n = x.shape[0], d = x.shape[1], h = x.shape[2], w = x.shape[3];
        const int co_n = out.shape[0], od_n = out.shape[1], oh_n = out.shape[2], ow_n = out.shape[3];
        const std::size_t o_plane = static_cast<std::size_t>(od_n) * oh_n * ow_n;
        for (int co = 0; co < co_n; ++co)
            std::fill(out.data.begin() + co * o_plane, out.data.begin() + (co + 1) * o_plane, b.data[co]);
        for (int co = 0; co < co_n; ++co) {
            for (int ci = 0; ci < ci_n; ++ci) {
                const double* xc = &x.data[static_cast<std::size_t>(ci) * d * h * w];
                const double* kc = &k.data[(static_cast<std::size_t>(co) * ci_n + ci) * 27];
                for (int kd = 0; kd < 3; ++kd) {
                    int od_lo, od_hi;
                    if (!range_for_tap(kd, stride, d, od_n, od_lo, od_hi)) continue;
                    for (int kh = 0; kh < 3; ++kh) {
                        int oh_lo, oh_hi;
                        if (!range_for_tap(kh, stride, h, oh_n, oh_lo, oh_hi)) continue;
                        for (int kw = 0; kw < 3; ++kw) {
                            int ow_lo, ow_hi;
                            if (!range_for_tap(kw, stride, w, ow_n, ow_lo, ow_hi)) continue;
                            const double kv = kc[(kd * 3 + kh) * 3 + kw];
                            if (kv == 0.0) continue;
                            for (int od = od_lo; od <= od_hi; ++od) {
                                const int id = od * stride + kd - 1;
                                for (int oh = oh_lo; oh <= oh_hi; ++oh) {
                                    const int ih = oh * stride + kh - 1;
                                    const double* xrow = &xc[(static_cast<std::size_t>(id) * h + ih) * w];
                                    double* orow = &out.data[((static_cast<std::size_t>(co) * od_n + od) * oh_n + oh) * ow_n];
                                    if (stride == 1) {
                                        for (int ow = ow_lo; ow <= ow_hi; ++ow) orow[ow] += kv * xrow[ow + kw - 1];
                                    } else {
                                        for (int ow = ow_lo; ow <= ow_hi; ++ow)
                                            orow[ow] += kv * xrow[ow * stride + kw - 1];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    void conv3d_backward(Op& op, const Tensor& g) {
        Node& xn = nodes_[op.in[0]];
        Node& kn = nodes_[op.in[1]];
        Node& bn = nodes_[op.in[2]];
        const Tensor& x = xn.value;
        const Tensor& k = kn.value;
        const int stride = op.i0;
        const int ci_n = x.shape[0], d = x.shape[1], h = x.shape[2], w = x.shape[3];
        const int co_n = g.shape[0], od_n = g.shape[1], oh_n = g.shape[2], ow_n = g.shape[3];
        if (bn.requires_grad) {
            const std::size_t o_plane = static_cast<std::size_t>(od_n) * oh_n * ow_n;
            for (int co = 0; co < co_n; ++co) {
                double acc = 0.0;
                const double* gp = &g.data[co * o_plane];
                for (std::size_t i = 0; i < o_plane; ++i) acc += gp[i];
                bn.grad.data[co] += acc;
            }
        }
        for (int co = 0; co < co_n; ++co) {
            for (int ci = 0; ci < ci_n; ++ci) {
                const double* xc = &x.data[static_cast<std::size_t>(ci) * d * h * w];
                const double* kc = &k.data[(static_cast<std::size_t>(co) * ci_n + ci) * 27];
                double* gkc = kn.requires_grad ? &kn.grad.data[(static_cast<std::size_t>(co) * ci_n + ci) * 27] : nullptr;
                double* gxc = xn.requires_grad ? &xn.grad.data[static_cast<std::size_t>(ci) * d * h * w] : nullptr;
                for (int kd = 0; kd < 3; ++kd) {
                    int od_lo, od_hi;
                    if (!range_for_tap(kd, stride, d, od_n, od_lo, od_hi)) continue;
                    for (int kh = 0; kh < 3; ++kh) {
                        int oh_lo, oh_hi;
                        if (!range_for_tap(kh, stride, h, oh_n, oh_lo, oh_hi)) continue;
                        for (int kw = 0; kw < 3; ++kw) {
                            int ow_lo, ow_hi;
                            if (!range_for_tap(kw, stride, w, ow_n, ow_lo, ow_hi)) continue;
                            const double kv = kc[(kd * 3 + kh) * 3 + kw];
                            double kacc = 0.0;
                            for (int od = od_lo; od <= od_hi; ++od) {
                                const int id = od * stride + kd - 1;
                                for (int oh = oh_lo; oh <= oh_hi; ++oh) {
                                    const int ih = oh * stride + kh - 1;
                                    const double* xrow = &xc[(static_cast<std::size_t>(id) * h + ih) * w];
                                    const double* grow = &g.data[((static_cast<std::size_t>(co) * od_n + od) * oh_n + oh) * ow_n];
                                    double* gxrow = gxc ? &gxc[(static_cast<std::size_t>(id) * h + ih) * w] : nullptr;
                                    for (int ow = ow_lo; ow <= ow_hi; ++ow) {
                                        const int iw = ow * stride + kw - 1;
                                        kacc += xrow[iw] * grow[ow];
                                        if (gxrow) gxrow[iw] += kv * grow[ow];
                                    }
                                }
                            }
                            if (gkc) gkc[(kd * 3 + kh) * 3 + kw] += kacc;
                        }
                    }
                }
            }
        }
    }

    void pool_forward(const Tensor& x, int window, Tensor& out, std::vector<int>& aux) {
        const int c = x.shape[0], d = x.shape[1], h = x.shape[2], w = x.shape[3];
        const int od = d / window, oh = h / window, ow = w / window;
        aux.assign(out.numel(), 0);
        std::size_t oi = 0;
        for (int ci = 0; ci < c; ++ci)
            for (int zd = 0; zd < od; ++zd)
                for (int zh = 0; zh < oh; ++zh)
                    for (int zw = 0; zw < ow; ++zw, ++oi) {
                        double best = -std::numeric_limits<double>::infinity();
                        int best_idx = 0;
                        for (int a = 0; a < window; ++a)
                            for (int b = 0; b < window; ++b)
                                for (int e = 0; e < window; ++e) {
                                    const int id = zd * window + a, ih = zh * window + b, iw = zw * window + e;
                                    const std::size_t idx = ((static_cast<std::size_t>(ci) * d + id) * h + ih) * w + iw;
                                    if (x.data[idx] > best) {
                                        best = x.data[idx];
                                        best_idx = static_cast<int>(idx);
                                    }
                                }
                        out.data[oi] = best;
                        aux[oi] = best_idx;
                    }
    }

    std::vector<Node> nodes_;
    std::vector<Op> ops_;
    std::vector<ValueId> params_;
};

}  // namespace gg::nn
