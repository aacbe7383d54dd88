#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace uw {

// H x W x 3 interleaved RGB image with channel values in [0,1], row-major.
class ImageBuf {
public:
    ImageBuf() = default;
    ImageBuf(int width, int height, double fill = 0.0);
    ImageBuf(int width, int height, std::vector<double> data);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
    bool empty() const { return data_.empty(); }

    double& at(int x, int y, int c) { return data_[index(x, y, c)]; }
    double at(int x, int y, int c) const { return data_[index(x, y, c)]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool same_dims(const ImageBuf& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    // Clamps every channel into [0,1]; non-finite values become 0.
    void clamp();

    friend bool operator==(const ImageBuf&, const ImageBuf&) = default;

private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * 3 + c;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

// CIELAB planes (D65). L in [0,100]; a and b unbounded.
struct LabImage {
    int width = 0;
    int height = 0;
    std::vector<double> L;
    std::vector<double> a;
    std::vector<double> b;

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

struct Lab {
    double L = 0.0;
    double a = 0.0;
    double b = 0.0;
};

// sRGB (D65, standard transfer curve) <-> CIELAB.
Lab srgb_to_lab(double r, double g, double b);
void lab_to_srgb(const Lab& lab, double& r, double& g, double& b);

LabImage rgb_to_lab(const ImageBuf& img);
// Out-of-gamut results are clamped to [0,1].
ImageBuf lab_to_rgb(const LabImage& lab);

// Largest CIELAB chroma reachable inside the sRGB cube (attained at the blue primary).
double max_srgb_chroma();

// Bilinear resampling with half-pixel-centred sample positions and edge clamping.
ImageBuf resize_bilinear(const ImageBuf& img, int width, int height);

// BT.601 luma on the 0-255 scale, one value per pixel.
std::vector<double> luma_255(const ImageBuf& img);

}  // namespace uw
