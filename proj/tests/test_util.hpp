#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "uwbench/image.hpp"
#include "uwbench/tensor.hpp"

namespace uwtest {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("uwbench-" + tag + "-" + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& s) const { return path_ / s; }

private:
    fs::path path_;
};

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary | std::ios::trunc) << text;
}

inline uw::ImageBuf random_image(int w, int h, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    uw::ImageBuf img(w, h);
    for (double& v : img.data()) v = u(rng);
    return img;
}

// Values on the 8-bit grid, so they survive a PNG round trip exactly.
inline uw::ImageBuf random_image_8bit(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    uw::ImageBuf img(w, h);
    for (double& v : img.data()) v = static_cast<double>(rng() % 256) / 255.0;
    return img;
}

inline uw::net::Tensor4 random_tensor(int n, int c, int h, int w, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, scale);
    uw::net::Tensor4 t(n, c, h, w);
    for (double& v : t.data()) v = nd(rng);
    return t;
}

// |a - n| / max(|a|, |n|, floor): relative, but tolerant of entries that are both ~0.
inline double rel_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct FdReport {
    int checked = 0;
    int skipped = 0;  // kink crossed inside +-eps (ReLU sign or max-pool winner changed)
    double worst = 0.0;
};

// Central difference of f with respect to *p. `signature` (optional) identifies the
// piecewise-linear region; samples whose +-eps probes land in a different region are
// skipped, since the derivative is not defined across a kink.
inline bool central_difference(const std::function<double()>& f, double* p, double eps, double& out,
                               const std::function<std::string()>& signature = {}) {
    const double orig = *p;
    const std::string base = signature ? signature() : std::string();
    *p = orig + eps;
    const double fp = f();
    const std::string sp = signature ? signature() : std::string();
    *p = orig - eps;
    const double fm = f();
    const std::string sm = signature ? signature() : std::string();
    *p = orig;
    out = (fp - fm) / (2.0 * eps);
    return sp == base && sm == base;
}

}  // namespace uwtest
