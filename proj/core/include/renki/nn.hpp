#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "renki/matrix.hpp"
#include "renki/rng.hpp"

namespace renki {

// One dense layer computing y_j = sum_i x_i * weights(i, j) + bias_j,
// optionally followed by ReLU. Weights are stored input-by-output.
//
// weight_mask / bias_mask, when non-empty, mark which parameters are
// trainable (1) versus fixed (0); this is how partially connected networks
// are represented. Empty masks mean fully trainable.
struct DenseLayer {
    Matrix weights;            // in x out
    std::vector<double> bias;  // out
    bool relu = true;
    Matrix weight_mask;              // optional, same shape as weights
    std::vector<double> bias_mask;   // optional, same length as bias

    std::size_t in_dim() const { return weights.rows(); }
    std::size_t out_dim() const { return weights.cols(); }
};

// Composition of dense layers; hidden layers use ReLU, the output layer is
// linear. Layer dimensions must chain.
struct FeedForwardNet {
    std::vector<DenseLayer> layers;

    std::size_t input_dim() const { return layers.front().in_dim(); }
    std::size_t output_dim() const { return layers.back().out_dim(); }
    std::size_t depth() const { return layers.size(); }
    std::size_t parameter_count() const;
};

// Gradients of upstream^T * net(x) with respect to every weight, bias and
// the input. Shapes mirror the network parameters exactly.
struct GradientTape {
    std::vector<Matrix> weight_grads;
    std::vector<std::vector<double>> bias_grads;
    std::vector<double> input_grad;
};

// Post-activation values per layer; activations[0] is the input copy.
struct ForwardTrace {
    std::vector<std::vector<double>> activations;

    std::span<const double> output() const { return activations.back(); }
};

std::vector<double> relu(std::span<const double> x);

// dims = {input, hidden..., output}; hidden layers get ReLU. Weights are
// drawn N(0, 1/sqrt(fan_in)), biases start at zero.
FeedForwardNet make_ffn(std::span<const std::size_t> dims, Rng& rng);
FeedForwardNet make_ffn(std::initializer_list<std::size_t> dims, Rng& rng);

// Throws ShapeError if the layer dimensions do not chain or x has the wrong
// length.
void validate(const FeedForwardNet& net);

std::vector<double> ffn_forward(const FeedForwardNet& net, std::span<const double> x);
ForwardTrace ffn_forward_trace(const FeedForwardNet& net, std::span<const double> x);

GradientTape make_tape(const FeedForwardNet& net);
void zero(GradientTape& tape);

// Reverse-mode pass. Parameter gradients are *added* into `tape`; the input
// gradient is written to `input_grad` (which must have length input_dim).
// The ReLU subgradient at exactly 0 is taken as 0.
void ffn_backward_accumulate(const FeedForwardNet& net, const ForwardTrace& trace,
                             std::span<const double> upstream, GradientTape& tape,
                             std::span<double> input_grad);

GradientTape ffn_backward(const FeedForwardNet& net, std::span<const double> x,
                          std::span<const double> upstream);

}  // namespace renki
