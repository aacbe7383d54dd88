#include "uwbench/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace uw {

ImageBuf synthetic_scene(int width, int height, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    struct Wave {
        double fx, fy, phase, amp;
    };
    Wave waves[3][3];
    for (auto& chan : waves) {
        for (auto& w : chan) w = {u(rng) * 4.0 + 0.5, u(rng) * 4.0 + 0.5, u(rng) * 2.0 * std::numbers::pi, u(rng) * 0.2 + 0.05};
    }
    struct Disc {
        double cx, cy, r, col[3];
    };
    Disc discs[4];
    for (auto& d : discs) d = {u(rng), u(rng), 0.05 + 0.15 * u(rng), {u(rng), u(rng), u(rng)}};

    ImageBuf img(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double nx = (x + 0.5) / width, ny = (y + 0.5) / height;
            for (int c = 0; c < 3; ++c) {
                double v = 0.5;
                for (const Wave& w : waves[c]) {
                    v += w.amp * std::sin(2.0 * std::numbers::pi * (w.fx * nx + w.fy * ny) + w.phase);
                }
                for (const Disc& d : discs) {
                    if (std::hypot(nx - d.cx, ny - d.cy) < d.r) v = 0.5 * v + 0.5 * d.col[c];
                }
                img.at(x, y, c) = v;
            }
        }
    }
    img.clamp();
    return img;
}

ImageBuf noise_image(int width, int height, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ImageBuf img(width, height);
    for (double& v : img.data()) v = u(rng);
    return img;
}

ImageBuf underwater_cast(const ImageBuf& clean, double gamma) {
    constexpr double attenuation[3] = {0.35, 0.75, 0.95};
    constexpr double veil[3] = {0.02, 0.10, 0.20};
    ImageBuf out = clean;
    auto d = out.data();
    for (std::size_t i = 0; i < out.pixel_count(); ++i) {
        for (int c = 0; c < 3; ++c) {
            const double v = attenuation[c] * d[3 * i + c] + veil[c];
            d[3 * i + c] = std::pow(std::clamp(v, 0.0, 1.0), gamma);
        }
    }
    return out;
}

}  // namespace uw
