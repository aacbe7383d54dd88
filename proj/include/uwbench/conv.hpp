#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "uwbench/tensor.hpp"

namespace uw::net {

enum class Activation : std::int32_t { none = 0, relu = 1, sigmoid = 2 };

std::string_view to_string(Activation a);

// Stride-1, same-size convolution (zero padding (k-1)/2) followed by an activation.
// Kernel layout is out_c x in_c x k x k.
struct ConvLayer {
    int in_c = 0;
    int out_c = 0;
    int k = 1;
    Activation act = Activation::none;
    std::vector<double> kernel;
    std::vector<double> bias;

    ConvLayer() = default;
    ConvLayer(int in_channels, int out_channels, int kernel_size, Activation activation);

    std::size_t kernel_index(int o, int i, int ky, int kx) const {
        return ((static_cast<std::size_t>(o) * in_c + i) * k + ky) * k + kx;
    }
    std::size_t parameter_count() const { return kernel.size() + bias.size(); }

    // Kernel ~ N(0, stddev^2), bias = bias_value.
    void init_gaussian(std::mt19937_64& rng, double stddev, double bias_value = 0.0);

    friend bool operator==(const ConvLayer&, const ConvLayer&) = default;
};

struct ConvGrads {
    Tensor4 grad_x;
    std::vector<double> grad_kernel;
    std::vector<double> grad_bias;
};

Tensor4 conv_forward(const ConvLayer& layer, const Tensor4& x);

// Gradients given the layer input and the gradient w.r.t. the layer output (post-activation).
ConvGrads conv_backward(const ConvLayer& layer, const Tensor4& x, const Tensor4& grad_out);
// Same, reusing the forward output to avoid recomputing it. With need_grad_x false the
// input gradient is left empty (first layer of a stack).
ConvGrads conv_backward(const ConvLayer& layer, const Tensor4& x, const Tensor4& y, const Tensor4& grad_out,
                        bool need_grad_x = true);

// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
Tensor4 maxpool2_forward(const Tensor4& x);
Tensor4 maxpool2_backward(const Tensor4& x, const Tensor4& grad_out);

// Per-pixel softmax across channels.
Tensor4 softmax_channels(const Tensor4& logits);
Tensor4 softmax_channels_backward(const Tensor4& probs, const Tensor4& grad_probs);

}  // namespace uw::net
