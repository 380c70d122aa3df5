#include "renki/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "renki/errors.hpp"

namespace renki {

std::size_t FeedForwardNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.weights.size() + layer.bias.size();
    return n;
}

std::vector<double> relu(std::span<const double> x) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

FeedForwardNet make_ffn(std::span<const std::size_t> dims, Rng& rng) {
    if (dims.size() < 2) throw ShapeError("network needs at least input and output dims");
    FeedForwardNet net;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        DenseLayer layer;
        layer.weights = Matrix(dims[l], dims[l + 1]);
        layer.bias.assign(dims[l + 1], 0.0);
        layer.relu = (l + 2 < dims.size());
        const double scale = 1.0 / std::sqrt(static_cast<double>(dims[l]));
        for (std::size_t i = 0; i < dims[l]; ++i)
            for (std::size_t j = 0; j < dims[l + 1]; ++j) layer.weights(i, j) = scale * rng.normal();
        net.layers.push_back(std::move(layer));
    }
    return net;
}

FeedForwardNet make_ffn(std::initializer_list<std::size_t> dims, Rng& rng) {
    return make_ffn(std::span<const std::size_t>(dims.begin(), dims.size()), rng);
}

void validate(const FeedForwardNet& net) {
    if (net.layers.empty()) throw ShapeError("network has no layers");
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& layer = net.layers[l];
        if (layer.weights.cols() != layer.bias.size())
            throw ShapeError("layer " + std::to_string(l) + ": bias length != weight columns");
        if (l > 0 && net.layers[l - 1].out_dim() != layer.in_dim())
            throw ShapeError("layer " + std::to_string(l) + ": input dim does not chain");
        if (!layer.weight_mask.empty() &&
            (layer.weight_mask.rows() != layer.weights.rows() ||
             layer.weight_mask.cols() != layer.weights.cols()))
            throw ShapeError("layer " + std::to_string(l) + ": weight mask shape mismatch");
        if (!layer.bias_mask.empty() && layer.bias_mask.size() != layer.bias.size())
            throw ShapeError("layer " + std::to_string(l) + ": bias mask shape mismatch");
    }
}

namespace {

void apply_layer(const DenseLayer& layer, std::span<const double> x, std::vector<double>& out) {
    const std::size_t in = layer.in_dim(), outn = layer.out_dim();
    out.assign(layer.bias.begin(), layer.bias.end());
    for (std::size_t i = 0; i < in; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* w = &layer.weights(i, 0);
        for (std::size_t j = 0; j < outn; ++j) out[j] += xi * w[j];
    }
    if (layer.relu)
        for (auto& v : out) v = v > 0.0 ? v : 0.0;
}

}  // namespace

std::vector<double> ffn_forward(const FeedForwardNet& net, std::span<const double> x) {
    if (x.size() != net.input_dim())
        throw ShapeError("input length " + std::to_string(x.size()) + " != network input dim " +
                         std::to_string(net.input_dim()));
    std::vector<double> cur(x.begin(), x.end()), next;
    for (const auto& layer : net.layers) {
        apply_layer(layer, cur, next);
        std::swap(cur, next);
    }
    return cur;
}

ForwardTrace ffn_forward_trace(const FeedForwardNet& net, std::span<const double> x) {
    if (x.size() != net.input_dim())
        throw ShapeError("input length " + std::to_string(x.size()) + " != network input dim " +
                         std::to_string(net.input_dim()));
    ForwardTrace trace;
    trace.activations.reserve(net.layers.size() + 1);
    trace.activations.emplace_back(x.begin(), x.end());
    for (const auto& layer : net.layers) {
        std::vector<double> out;
        apply_layer(layer, trace.activations.back(), out);
        trace.activations.push_back(std::move(out));
    }
    return trace;
}

GradientTape make_tape(const FeedForwardNet& net) {
    GradientTape tape;
    tape.weight_grads.reserve(net.layers.size());
    tape.bias_grads.reserve(net.layers.size());
    for (const auto& layer : net.layers) {
        tape.weight_grads.emplace_back(layer.weights.rows(), layer.weights.cols());
        tape.bias_grads.emplace_back(layer.bias.size(), 0.0);
    }
    tape.input_grad.assign(net.input_dim(), 0.0);
    return tape;
}

void zero(GradientTape& tape) {
    for (auto& m : tape.weight_grads) m.fill(0.0);
    for (auto& b : tape.bias_grads) std::fill(b.begin(), b.end(), 0.0);
    std::fill(tape.input_grad.begin(), tape.input_grad.end(), 0.0);
}

void ffn_backward_accumulate(const FeedForwardNet& net, const ForwardTrace& trace,
                             std::span<const double> upstream, GradientTape& tape,
                             std::span<double> input_grad) {
    if (upstream.size() != net.output_dim())
        throw ShapeError("upstream length != network output dim");
    if (input_grad.size() != net.input_dim())
        throw ShapeError("input gradient length != network input dim");

    // delta = d(upstream . output) / d(pre-activation of current layer)
    std::vector<double> delta(upstream.begin(), upstream.end()), prev_delta;
    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const auto& layer = net.layers[li];
        const auto& in_act = trace.activations[li];
        const auto& out_act = trace.activations[li + 1];
        if (layer.relu) {
            // out_act == relu(pre), so out_act > 0 iff pre > 0; derivative at
            // pre == 0 is taken to be 0.
            for (std::size_t j = 0; j < delta.size(); ++j)
                if (out_act[j] <= 0.0) delta[j] = 0.0;
        }
        auto& wg = tape.weight_grads[li];
        auto& bg = tape.bias_grads[li];
        const std::size_t in = layer.in_dim(), out = layer.out_dim();
        for (std::size_t j = 0; j < out; ++j) bg[j] += delta[j];
        prev_delta.assign(in, 0.0);
        for (std::size_t i = 0; i < in; ++i) {
            const double xi = in_act[i];
            const double* w = &layer.weights(i, 0);
            double* g = &wg(i, 0);
            double acc = 0.0;
            for (std::size_t j = 0; j < out; ++j) {
                g[j] += xi * delta[j];
                acc += w[j] * delta[j];
            }
            prev_delta[i] = acc;
        }
        std::swap(delta, prev_delta);
    }
    std::copy(delta.begin(), delta.end(), input_grad.begin());
}

GradientTape ffn_backward(const FeedForwardNet& net, std::span<const double> x,
                          std::span<const double> upstream) {
    const ForwardTrace trace = ffn_forward_trace(net, x);
    GradientTape tape = make_tape(net);
    ffn_backward_accumulate(net, trace, upstream, tape, tape.input_grad);
    return tape;
}

}  // namespace renki
