#include "uwbench/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "uwbench/error.hpp"

namespace uw {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

// IEC 61966-2-1 linear sRGB -> XYZ.
constexpr Mat3 kRgbToXyz = {{
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
}};

Mat3 invert(const Mat3& m) {
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    Mat3 r{};
    r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
    r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
    r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
    r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    return r;
}

const Mat3& xyz_to_rgb() {
    static const Mat3 inv = invert(kRgbToXyz);
    return inv;
}

// White point as the XYZ of RGB (1,1,1) so the gray axis maps to a = b = 0.
constexpr std::array<double, 3> kWhite = {
    kRgbToXyz[0][0] + kRgbToXyz[0][1] + kRgbToXyz[0][2],
    kRgbToXyz[1][0] + kRgbToXyz[1][1] + kRgbToXyz[1][2],
    kRgbToXyz[2][0] + kRgbToXyz[2][1] + kRgbToXyz[2][2],
};

constexpr double kDelta = 6.0 / 29.0;

double to_linear(double v) {
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double to_gamma(double v) {
    return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) {
    return t > kDelta * kDelta * kDelta ? std::cbrt(t) : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

double lab_f_inv(double t) {
    return t > kDelta ? t * t * t : 3.0 * kDelta * kDelta * (t - 4.0 / 29.0);
}

double clamp01(double v) {
    if (!std::isfinite(v)) return 0.0;
    return std::clamp(v, 0.0, 1.0);
}

}  // namespace

ImageBuf::ImageBuf(int width, int height, double fill) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw DimensionError("negative image dimensions");
    data_.assign(static_cast<std::size_t>(width) * height * 3, fill);
}

ImageBuf::ImageBuf(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    if (width < 0 || height < 0 ||
        data_.size() != static_cast<std::size_t>(width) * height * 3) {
        throw DimensionError("image data length does not match " + std::to_string(width) + "x" +
                             std::to_string(height) + "x3");
    }
}

void ImageBuf::clamp() {
    for (double& v : data_) v = clamp01(v);
}

Lab srgb_to_lab(double r, double g, double b) {
    const double lr = to_linear(r), lg = to_linear(g), lb = to_linear(b);
    std::array<double, 3> xyz{};
    for (int i = 0; i < 3; ++i) {
        xyz[i] = (kRgbToXyz[i][0] * lr + kRgbToXyz[i][1] * lg + kRgbToXyz[i][2] * lb) / kWhite[i];
    }
    const double fx = lab_f(xyz[0]), fy = lab_f(xyz[1]), fz = lab_f(xyz[2]);
    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

void lab_to_srgb(const Lab& lab, double& r, double& g, double& b) {
    const double fy = (lab.L + 16.0) / 116.0;
    const double fx = fy + lab.a / 500.0;
    const double fz = fy - lab.b / 200.0;
    const std::array<double, 3> xyz = {lab_f_inv(fx) * kWhite[0], lab_f_inv(fy) * kWhite[1],
                                       lab_f_inv(fz) * kWhite[2]};
    const Mat3& m = xyz_to_rgb();
    std::array<double, 3> rgb{};
    for (int i = 0; i < 3; ++i) {
        rgb[i] = clamp01(to_gamma(std::max(0.0, m[i][0] * xyz[0] + m[i][1] * xyz[1] + m[i][2] * xyz[2])));
    }
    r = rgb[0];
    g = rgb[1];
    b = rgb[2];
}

LabImage rgb_to_lab(const ImageBuf& img) {
    LabImage out;
    out.width = img.width();
    out.height = img.height();
    const std::size_t n = img.pixel_count();
    out.L.resize(n);
    out.a.resize(n);
    out.b.resize(n);
    const auto d = img.data();
    for (std::size_t i = 0; i < n; ++i) {
        const Lab lab = srgb_to_lab(d[3 * i], d[3 * i + 1], d[3 * i + 2]);
        out.L[i] = lab.L;
        out.a[i] = lab.a;
        out.b[i] = lab.b;
    }
    return out;
}

ImageBuf lab_to_rgb(const LabImage& lab) {
    const std::size_t n = lab.pixel_count();
    if (lab.L.size() != n || lab.a.size() != n || lab.b.size() != n) {
        throw DimensionError("Lab planes do not match image dimensions");
    }
    ImageBuf out(lab.width, lab.height);
    auto d = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        lab_to_srgb({lab.L[i], lab.a[i], lab.b[i]}, d[3 * i], d[3 * i + 1], d[3 * i + 2]);
    }
    return out;
}

double max_srgb_chroma() {
    static const double chroma = [] {
        const Lab blue = srgb_to_lab(0.0, 0.0, 1.0);
        return std::hypot(blue.a, blue.b);
    }();
    return chroma;
}

ImageBuf resize_bilinear(const ImageBuf& img, int width, int height) {
    if (width < 1 || height < 1) throw InvalidArgument("resize target must be at least 1x1");
    if (img.empty()) throw InvalidArgument("cannot resize an empty image");
    if (width == img.width() && height == img.height()) return img;

    const double sx = static_cast<double>(img.width()) / width;
    const double sy = static_cast<double>(img.height()) / height;
    ImageBuf out(width, height);
    for (int y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height() - 1);
        const double ty = fy - y0;
        for (int x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width() - 1);
            const double tx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                const double p00 = img.at(x0, y0, c), p10 = img.at(x1, y0, c);
                const double p01 = img.at(x0, y1, c), p11 = img.at(x1, y1, c);
                const double top = p00 + tx * (p10 - p00);
                const double bottom = p01 + tx * (p11 - p01);
                out.at(x, y, c) = top + ty * (bottom - top);
            }
        }
    }
    out.clamp();
    return out;
}

std::vector<double> luma_255(const ImageBuf& img) {
    std::vector<double> y(img.pixel_count());
    const auto d = img.data();
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = 255.0 * (0.299 * d[3 * i] + 0.587 * d[3 * i + 1] + 0.114 * d[3 * i + 2]);
    }
    return y;
}

}  // namespace uw
