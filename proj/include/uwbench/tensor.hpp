#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "uwbench/image.hpp"

namespace uw::net {

// N x C x H x W array, row-major (NCHW).
class Tensor4 {
public:
    Tensor4() = default;
    Tensor4(int n, int c, int h, int w, double fill = 0.0);

    int n() const { return n_; }
    int c() const { return c_; }
    int h() const { return h_; }
    int w() const { return w_; }
    std::size_t size() const { return data_.size(); }
    std::size_t plane() const { return static_cast<std::size_t>(h_) * w_; }

    double& at(int n, int c, int y, int x) { return data_[offset(n, c, y, x)]; }
    double at(int n, int c, int y, int x) const { return data_[offset(n, c, y, x)]; }

    // Pointer to the start of plane (n, c).
    double* plane_ptr(int n, int c) { return data_.data() + offset(n, c, 0, 0); }
    const double* plane_ptr(int n, int c) const { return data_.data() + offset(n, c, 0, 0); }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool same_shape(const Tensor4& o) const { return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }
    bool all_finite() const;
    void fill(double v);

    friend bool operator==(const Tensor4&, const Tensor4&) = default;

private:
    std::size_t offset(int n, int c, int y, int x) const {
        return ((static_cast<std::size_t>(n) * c_ + c) * h_ + y) * w_ + x;
    }

    int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
    std::vector<double> data_;
};

// Stacks images (all the same size) into an N x 3 x H x W tensor.
Tensor4 to_tensor(std::span<const ImageBuf> images);
Tensor4 to_tensor(const ImageBuf& image);
// Extracts batch element n of a 3-channel tensor; values are clamped to [0,1].
ImageBuf to_image(const Tensor4& t, int n = 0);

// Channel-wise concatenation of tensors sharing N, H and W.
Tensor4 concat_channels(std::span<const Tensor4* const> parts);

}  // namespace uw::net
