#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "uwbench/conv.hpp"
#include "uwbench/enhance.hpp"
#include "uwbench/tensor.hpp"

namespace uw::net {

// Branch order used for FTUs, confidence maps and refined inputs.
enum Branch : int { kWhiteBalance = 0, kHistEq = 1, kGamma = 2 };
inline constexpr int kBranches = 3;

// Layer counts and widths. Every FTU ends in a 3-channel sigmoid layer; the trunk feeds
// a 3-channel head whose logits are softmaxed into confidence maps.
struct ArchConfig {
    std::vector<int> trunk_kernels{7, 7, 7, 5, 5, 3, 3};
    int trunk_width = 32;
    int head_kernel = 3;
    std::vector<int> ftu_kernels{7, 5, 3};
    int ftu_width = 32;
    // Kernel init N(0, init_stddev^2); biases start at init_bias.
    double init_stddev = 0.02;
    double init_bias = 0.0;
};

struct WaterNetModel {
    // Consumes raw || wb || he || gc (12 channels).
    std::vector<ConvLayer> trunk;
    ConvLayer head;
    // Each maps raw || input_k (6 channels) to a refined 3-channel image.
    std::array<std::vector<ConvLayer>, kBranches> ftu;
    std::uint64_t rng_seed = 0;

    // Every layer in a fixed order: trunk, head, ftu[0], ftu[1], ftu[2].
    std::vector<ConvLayer*> layers();
    std::vector<const ConvLayer*> layers() const;
    std::size_t parameter_count() const;

    friend bool operator==(const WaterNetModel&, const WaterNetModel&) = default;
};

WaterNetModel make_model(const ArchConfig& arch, std::uint64_t seed);

// Throws DimensionError unless channel counts chain correctly from input to outputs.
void validate_model(const WaterNetModel& model);

// Rounds every parameter to the nearest float32 so weights survive the file format unchanged.
void quantize_to_float(WaterNetModel& model);

// N-image batch of the four inputs, each N x 3 x H x W.
struct InputTensors {
    Tensor4 raw;
    Tensor4 wb;
    Tensor4 he;
    Tensor4 gc;
};

InputTensors to_input_tensors(std::span<const EnhanceInputs> inputs);

// Activations retained for the backward pass.
struct ForwardCache {
    Tensor4 trunk_in;
    std::vector<Tensor4> trunk_out;
    Tensor4 maps;
    std::array<Tensor4, kBranches> ftu_in;
    std::array<std::vector<Tensor4>, kBranches> ftu_out;
    Tensor4 fused;

    const Tensor4& refined(int branch) const { return ftu_out[branch].back(); }
};

ForwardCache forward_tensors(const WaterNetModel& model, const InputTensors& inputs);

// Gated fusion: sum_k refined_k * maps[:, k] with each single-channel map broadcast over RGB.
Tensor4 fuse(const Tensor4& maps, const std::array<const Tensor4*, kBranches>& refined);

struct WaterNetOutput {
    ImageBuf enhanced;
    Tensor4 maps;
    std::array<ImageBuf, kBranches> refined;
};

WaterNetOutput forward(const WaterNetModel& model, const EnhanceInputs& inputs);

// Convenience: generate_inputs then forward; returns the fused image.
ImageBuf enhance_image(const WaterNetModel& model, const ImageBuf& raw);

// Parameter gradients laid out like WaterNetModel::layers().
struct ModelGrads {
    std::vector<std::vector<double>> kernel;
    std::vector<std::vector<double>> bias;

    bool all_finite() const;
};

ModelGrads backward(const WaterNetModel& model, const ForwardCache& cache, const Tensor4& grad_fused);

}  // namespace uw::net
