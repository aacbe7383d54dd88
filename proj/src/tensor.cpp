#include "uwbench/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "uwbench/error.hpp"

namespace uw::net {

Tensor4::Tensor4(int n, int c, int h, int w, double fill) : n_(n), c_(c), h_(h), w_(w) {
    if (n < 0 || c < 0 || h < 0 || w < 0) throw DimensionError("negative tensor extent");
    data_.assign(static_cast<std::size_t>(n) * c * h * w, fill);
}

bool Tensor4::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor4::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor4 to_tensor(std::span<const ImageBuf> images) {
    if (images.empty()) throw InvalidArgument("to_tensor: no images");
    const int w = images[0].width(), h = images[0].height();
    Tensor4 t(static_cast<int>(images.size()), 3, h, w);
    for (std::size_t n = 0; n < images.size(); ++n) {
        const ImageBuf& img = images[n];
        if (img.width() != w || img.height() != h) throw DimensionError("to_tensor: images differ in size");
        const auto d = img.data();
        for (int c = 0; c < 3; ++c) {
            double* dst = t.plane_ptr(static_cast<int>(n), c);
            for (std::size_t i = 0; i < img.pixel_count(); ++i) dst[i] = d[3 * i + c];
        }
    }
    return t;
}

Tensor4 to_tensor(const ImageBuf& image) { return to_tensor(std::span<const ImageBuf>(&image, 1)); }

ImageBuf to_image(const Tensor4& t, int n) {
    if (t.c() != 3) throw DimensionError("to_image: tensor must have 3 channels");
    if (n < 0 || n >= t.n()) throw DimensionError("to_image: batch index out of range");
    ImageBuf img(t.w(), t.h());
    auto d = img.data();
    for (int c = 0; c < 3; ++c) {
        const double* src = t.plane_ptr(n, c);
        for (std::size_t i = 0; i < t.plane(); ++i) d[3 * i + c] = src[i];
    }
    img.clamp();
    return img;
}

Tensor4 concat_channels(std::span<const Tensor4* const> parts) {
    if (parts.empty()) throw InvalidArgument("concat_channels: nothing to concatenate");
    const Tensor4& first = *parts[0];
    int channels = 0;
    for (const Tensor4* p : parts) {
        if (p->n() != first.n() || p->h() != first.h() || p->w() != first.w()) {
            throw DimensionError("concat_channels: extents differ");
        }
        channels += p->c();
    }
    Tensor4 out(first.n(), channels, first.h(), first.w());
    for (int n = 0; n < first.n(); ++n) {
        int dst_c = 0;
        for (const Tensor4* p : parts) {
            std::memcpy(out.plane_ptr(n, dst_c), p->plane_ptr(n, 0), p->plane() * p->c() * sizeof(double));
            dst_c += p->c();
        }
    }
    return out;
}

}  // namespace uw::net
