#include "uwbench/waternet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uwbench/error.hpp"

namespace uw::net {

std::vector<ConvLayer*> WaterNetModel::layers() {
    std::vector<ConvLayer*> out;
    for (auto& l : trunk) out.push_back(&l);
    out.push_back(&head);
    for (auto& branch : ftu) {
        for (auto& l : branch) out.push_back(&l);
    }
    return out;
}

std::vector<const ConvLayer*> WaterNetModel::layers() const {
    std::vector<const ConvLayer*> out;
    for (const auto* l : const_cast<WaterNetModel*>(this)->layers()) out.push_back(l);
    return out;
}

std::size_t WaterNetModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto* l : layers()) n += l->parameter_count();
    return n;
}

WaterNetModel make_model(const ArchConfig& arch, std::uint64_t seed) {
    if (arch.trunk_width < 1 || arch.ftu_width < 1) throw InvalidArgument("layer widths must be positive");
    if (arch.ftu_kernels.empty()) throw InvalidArgument("an FTU needs at least one layer");
    WaterNetModel m;
    m.rng_seed = seed;
    std::mt19937_64 rng(seed);

    int in_c = 12;
    for (int k : arch.trunk_kernels) {
        m.trunk.emplace_back(in_c, arch.trunk_width, k, Activation::relu);
        in_c = arch.trunk_width;
    }
    m.head = ConvLayer(in_c, kBranches, arch.head_kernel, Activation::none);

    for (auto& branch : m.ftu) {
        int c = 6;
        for (std::size_t i = 0; i < arch.ftu_kernels.size(); ++i) {
            const bool last = i + 1 == arch.ftu_kernels.size();
            branch.emplace_back(c, last ? 3 : arch.ftu_width, arch.ftu_kernels[i],
                                last ? Activation::sigmoid : Activation::relu);
            c = arch.ftu_width;
        }
    }
    for (ConvLayer* l : m.layers()) l->init_gaussian(rng, arch.init_stddev, arch.init_bias);
    quantize_to_float(m);
    return m;
}

void validate_model(const WaterNetModel& model) {
    auto check_layer = [](const ConvLayer& l, const std::string& where) {
        if (l.k < 1 || l.k % 2 == 0) throw DimensionError(where + ": kernel size must be odd");
        if (l.kernel.size() != static_cast<std::size_t>(l.out_c) * l.in_c * l.k * l.k ||
            l.bias.size() != static_cast<std::size_t>(l.out_c)) {
            throw DimensionError(where + ": parameter count does not match shape");
        }
    };
    int c = 12;
    for (std::size_t i = 0; i < model.trunk.size(); ++i) {
        check_layer(model.trunk[i], "trunk layer " + std::to_string(i));
        if (model.trunk[i].in_c != c) throw DimensionError("trunk layer " + std::to_string(i) + ": channel chain broken");
        c = model.trunk[i].out_c;
    }
    check_layer(model.head, "head");
    if (model.head.in_c != c || model.head.out_c != kBranches) throw DimensionError("head: wrong channel counts");
    for (int b = 0; b < kBranches; ++b) {
        const auto& branch = model.ftu[b];
        if (branch.empty()) throw DimensionError("ftu " + std::to_string(b) + ": no layers");
        int fc = 6;
        for (std::size_t i = 0; i < branch.size(); ++i) {
            check_layer(branch[i], "ftu " + std::to_string(b));
            if (branch[i].in_c != fc) throw DimensionError("ftu " + std::to_string(b) + ": channel chain broken");
            fc = branch[i].out_c;
        }
        if (fc != 3 || branch.back().act != Activation::sigmoid) {
            throw DimensionError("ftu " + std::to_string(b) + ": must end in a 3-channel sigmoid layer");
        }
    }
}

void quantize_to_float(WaterNetModel& model) {
    for (ConvLayer* l : model.layers()) {
        for (double& v : l->kernel) v = static_cast<float>(v);
        for (double& v : l->bias) v = static_cast<float>(v);
    }
}

InputTensors to_input_tensors(std::span<const EnhanceInputs> inputs) {
    if (inputs.empty()) throw InvalidArgument("no inputs");
    std::vector<ImageBuf> raw, wb, he, gc;
    for (const auto& in : inputs) {
        if (!in.raw.same_dims(in.wb) || !in.raw.same_dims(in.he) || !in.raw.same_dims(in.gc)) {
            throw DimensionError("network inputs differ in size");
        }
        raw.push_back(in.raw);
        wb.push_back(in.wb);
        he.push_back(in.he);
        gc.push_back(in.gc);
    }
    return {to_tensor(raw), to_tensor(wb), to_tensor(he), to_tensor(gc)};
}

Tensor4 fuse(const Tensor4& maps, const std::array<const Tensor4*, kBranches>& refined) {
    if (maps.c() != kBranches) throw DimensionError("fuse: expected 3 confidence maps");
    for (const Tensor4* r : refined) {
        if (r->n() != maps.n() || r->c() != 3 || r->h() != maps.h() || r->w() != maps.w()) {
            throw DimensionError("fuse: refined input shape mismatch");
        }
    }
    Tensor4 out(maps.n(), 3, maps.h(), maps.w());
    for (int n = 0; n < maps.n(); ++n) {
        for (int c = 0; c < 3; ++c) {
            double* o = out.plane_ptr(n, c);
            for (int k = 0; k < kBranches; ++k) {
                const double* m = maps.plane_ptr(n, k);
                const double* r = refined[k]->plane_ptr(n, c);
                for (std::size_t p = 0; p < out.plane(); ++p) o[p] += r[p] * m[p];
            }
        }
    }
    return out;
}

ForwardCache forward_tensors(const WaterNetModel& model, const InputTensors& in) {
    for (const Tensor4* t : {&in.wb, &in.he, &in.gc}) {
        if (!t->same_shape(in.raw)) throw DimensionError("network inputs differ in shape");
    }
    if (in.raw.c() != 3) throw DimensionError("network inputs must be RGB");

    ForwardCache cache;
    const Tensor4* all[] = {&in.raw, &in.wb, &in.he, &in.gc};
    cache.trunk_in = concat_channels(all);
    const Tensor4* x = &cache.trunk_in;
    cache.trunk_out.reserve(model.trunk.size());
    for (const ConvLayer& l : model.trunk) {
        cache.trunk_out.push_back(conv_forward(l, *x));
        x = &cache.trunk_out.back();
    }
    cache.maps = softmax_channels(conv_forward(model.head, *x));

    const Tensor4* derived[kBranches] = {&in.wb, &in.he, &in.gc};
    for (int b = 0; b < kBranches; ++b) {
        const Tensor4* pair[] = {&in.raw, derived[b]};
        cache.ftu_in[b] = concat_channels(pair);
        const Tensor4* fx = &cache.ftu_in[b];
        auto& outs = cache.ftu_out[b];
        outs.reserve(model.ftu[b].size());
        for (const ConvLayer& l : model.ftu[b]) {
            outs.push_back(conv_forward(l, *fx));
            fx = &outs.back();
        }
    }
    cache.fused = fuse(cache.maps, {&cache.refined(0), &cache.refined(1), &cache.refined(2)});
    return cache;
}

WaterNetOutput forward(const WaterNetModel& model, const EnhanceInputs& inputs) {
    // Same arithmetic as forward_tensors, but intermediate activations are released as
    // soon as the next layer has consumed them (large images at full width).
    const InputTensors in = to_input_tensors(std::span<const EnhanceInputs>(&inputs, 1));
    Tensor4 maps;
    {
        const Tensor4* all[] = {&in.raw, &in.wb, &in.he, &in.gc};
        Tensor4 x = concat_channels(all);
        for (const ConvLayer& l : model.trunk) x = conv_forward(l, x);
        maps = softmax_channels(conv_forward(model.head, x));
    }
    std::array<Tensor4, kBranches> refined;
    const Tensor4* derived[kBranches] = {&in.wb, &in.he, &in.gc};
    for (int b = 0; b < kBranches; ++b) {
        const Tensor4* pair[] = {&in.raw, derived[b]};
        Tensor4 x = concat_channels(pair);
        for (const ConvLayer& l : model.ftu[b]) x = conv_forward(l, x);
        refined[b] = std::move(x);
    }
    WaterNetOutput out;
    out.enhanced = to_image(fuse(maps, {&refined[0], &refined[1], &refined[2]}));
    out.maps = std::move(maps);
    for (int b = 0; b < kBranches; ++b) out.refined[b] = to_image(refined[b]);
    return out;
}

ImageBuf enhance_image(const WaterNetModel& model, const ImageBuf& raw) {
    return forward(model, generate_inputs(raw)).enhanced;
}

bool ModelGrads::all_finite() const {
    auto finite = [](const std::vector<std::vector<double>>& vv) {
        for (const auto& v : vv) {
            for (double d : v) {
                if (!std::isfinite(d)) return false;
            }
        }
        return true;
    };
    return finite(kernel) && finite(bias);
}

ModelGrads backward(const WaterNetModel& model, const ForwardCache& cache, const Tensor4& grad_fused) {
    if (!grad_fused.same_shape(cache.fused)) throw DimensionError("backward: gradient shape mismatch");
    const auto layers = model.layers();
    ModelGrads grads;
    grads.kernel.resize(layers.size());
    grads.bias.resize(layers.size());

    const Tensor4& maps = cache.maps;
    const int N = maps.n();
    const std::size_t plane = maps.plane();

    // d fused / d maps and d fused / d refined.
    Tensor4 grad_maps(N, kBranches, maps.h(), maps.w());
    std::array<Tensor4, kBranches> grad_refined;
    for (int k = 0; k < kBranches; ++k) {
        const Tensor4& r = cache.refined(k);
        grad_refined[k] = Tensor4(N, 3, maps.h(), maps.w());
        for (int n = 0; n < N; ++n) {
            const double* m = maps.plane_ptr(n, k);
            double* gm = grad_maps.plane_ptr(n, k);
            for (int c = 0; c < 3; ++c) {
                const double* g = grad_fused.plane_ptr(n, c);
                const double* rv = r.plane_ptr(n, c);
                double* gr = grad_refined[k].plane_ptr(n, c);
                for (std::size_t p = 0; p < plane; ++p) {
                    gr[p] = g[p] * m[p];
                    gm[p] += g[p] * rv[p];
                }
            }
        }
    }

    std::size_t slot = 0;
    // Trunk + head.
    {
        const std::size_t head_slot = model.trunk.size();
        Tensor4 g = softmax_channels_backward(maps, grad_maps);
        const Tensor4& head_in = model.trunk.empty() ? cache.trunk_in : cache.trunk_out.back();
        // The head has no activation, so its forward output is only needed for the shape.
        ConvGrads hg = conv_backward(model.head, head_in, g, g);
        grads.kernel[head_slot] = std::move(hg.grad_kernel);
        grads.bias[head_slot] = std::move(hg.grad_bias);
        g = std::move(hg.grad_x);
        for (std::size_t i = model.trunk.size(); i-- > 0;) {
            const Tensor4& x = i == 0 ? cache.trunk_in : cache.trunk_out[i - 1];
            ConvGrads lg = conv_backward(model.trunk[i], x, cache.trunk_out[i], g, i > 0);
            grads.kernel[i] = std::move(lg.grad_kernel);
            grads.bias[i] = std::move(lg.grad_bias);
            g = std::move(lg.grad_x);
        }
        slot = head_slot + 1;
    }
    for (int b = 0; b < kBranches; ++b) {
        const auto& branch = model.ftu[b];
        Tensor4 g = std::move(grad_refined[b]);
        for (std::size_t i = branch.size(); i-- > 0;) {
            const Tensor4& x = i == 0 ? cache.ftu_in[b] : cache.ftu_out[b][i - 1];
            ConvGrads lg = conv_backward(branch[i], x, cache.ftu_out[b][i], g, i > 0);
            grads.kernel[slot + i] = std::move(lg.grad_kernel);
            grads.bias[slot + i] = std::move(lg.grad_bias);
            if (i > 0) g = std::move(lg.grad_x);
        }
        slot += branch.size();
    }
    return grads;
}

}  // namespace uw::net
