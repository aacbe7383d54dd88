#include "uwbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <vector>

#include "uwbench/error.hpp"

namespace uw::metrics {

namespace {

void require_same_dims(const ImageBuf& a, const ImageBuf& b, const char* what) {
    if (!a.same_dims(b)) throw DimensionError(std::string(what) + ": images differ in size");
    if (a.empty()) throw InvalidArgument(std::string(what) + ": empty image");
}

// Plane of doubles with replicate-border access.
struct Plane {
    int w = 0, h = 0;
    std::vector<double> v;

    double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
    double clamped(int x, int y) const { return at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)); }
};

Plane channel_255(const ImageBuf& img, int c) {
    Plane p{img.width(), img.height(), std::vector<double>(img.pixel_count())};
    const auto d = img.data();
    for (std::size_t i = 0; i < p.v.size(); ++i) p.v[i] = 255.0 * d[3 * i + c];
    return p;
}

Plane sobel_magnitude(const Plane& p) {
    Plane out{p.w, p.h, std::vector<double>(p.v.size())};
    for (int y = 0; y < p.h; ++y) {
        for (int x = 0; x < p.w; ++x) {
            const double gx = (p.clamped(x + 1, y - 1) + 2.0 * p.clamped(x + 1, y) + p.clamped(x + 1, y + 1)) -
                              (p.clamped(x - 1, y - 1) + 2.0 * p.clamped(x - 1, y) + p.clamped(x - 1, y + 1));
            const double gy = (p.clamped(x - 1, y + 1) + 2.0 * p.clamped(x, y + 1) + p.clamped(x + 1, y + 1)) -
                              (p.clamped(x - 1, y - 1) + 2.0 * p.clamped(x, y - 1) + p.clamped(x + 1, y - 1));
            out.v[static_cast<std::size_t>(y) * p.w + x] = std::sqrt(gx * gx + gy * gy);
        }
    }
    return out;
}

// Visits the min/max of each block on a grid of floor(extent/block) blocks per axis;
// an axis shorter than one block is treated as a single block. Returns the block count.
template <typename F>
int for_each_block(const Plane& p, int block, F&& fn) {
    const int bx = std::max(1, p.w / block), by = std::max(1, p.h / block);
    const int sx = p.w >= block ? block : p.w, sy = p.h >= block ? block : p.h;
    for (int j = 0; j < by; ++j) {
        for (int i = 0; i < bx; ++i) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (int y = j * sy; y < (j + 1) * sy; ++y) {
                for (int x = i * sx; x < (i + 1) * sx; ++x) {
                    lo = std::min(lo, p.at(x, y));
                    hi = std::max(hi, p.at(x, y));
                }
            }
            fn(lo, hi);
        }
    }
    return bx * by;
}

// Enhancement measure: (2 / blocks) * sum log(max/min), skipping blocks with a zero extreme.
double eme(const Plane& p, int block) {
    double sum = 0.0;
    const int n = for_each_block(p, block, [&](double lo, double hi) {
        if (lo > 0.0 && hi > 0.0) sum += std::log(hi / lo);
    });
    return 2.0 * sum / n;
}

// Michelson-contrast entropy, -(1/blocks) * sum r*log(r), r = (max-min)/(max+min).
double log_amee(const Plane& p, int block) {
    double sum = 0.0;
    const int n = for_each_block(p, block, [&](double lo, double hi) {
        const double top = hi - lo, bottom = hi + lo;
        if (top > 0.0 && bottom > 0.0) {
            const double r = top / bottom;
            sum += r * std::log(r);
        }
    });
    return -sum / n;
}

struct TrimmedStats {
    double mean = 0.0;
    double variance = 0.0;
};

// Asymmetric alpha-trimmed mean (alpha dropped from each tail) and the spread about it.
TrimmedStats trimmed_stats(std::vector<double> x, double alpha) {
    const std::size_t K = x.size();
    std::sort(x.begin(), x.end());
    const auto lo = static_cast<std::size_t>(std::ceil(alpha * K - 1e-9));
    const auto hi_cut = static_cast<std::size_t>(std::floor(alpha * K + 1e-9));
    const std::size_t end = K - std::min(hi_cut, K);
    TrimmedStats s;
    if (end > lo) {
        s.mean = std::accumulate(x.begin() + static_cast<std::ptrdiff_t>(lo), x.begin() + static_cast<std::ptrdiff_t>(end), 0.0) /
                 static_cast<double>(end - lo);
    }
    for (double v : x) s.variance += (v - s.mean) * (v - s.mean);
    s.variance /= static_cast<double>(K);
    return s;
}

std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> g(static_cast<std::size_t>(size));
    const double c = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        g[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
        sum += g[i];
    }
    for (double& v : g) v /= sum;
    return g;
}

// Separable "valid" filtering: output is (w - size + 1) x (h - size + 1).
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h, const std::vector<double>& g) {
    const int size = static_cast<int>(g.size());
    const int ow = w - size + 1, oh = h - size + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < size; ++i) acc += g[i] * src[static_cast<std::size_t>(y) * w + x + i];
            tmp[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < size; ++i) acc += g[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    return out;
}

}  // namespace

double mse(const ImageBuf& a, const ImageBuf& b) {
    require_same_dims(a, b, "mse");
    const auto da = a.data(), db = b.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double d = 255.0 * (da[i] - db[i]);
        sum += d * d;
    }
    return sum / static_cast<double>(da.size());
}

double psnr_from_mse(double m) {
    if (m < 0.0 || std::isnan(m)) throw InvalidArgument("psnr: mse must be non-negative");
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / m);
}

double psnr(const ImageBuf& a, const ImageBuf& b) { return psnr_from_mse(mse(a, b)); }

double ssim(const ImageBuf& a, const ImageBuf& b, const SsimParams& p) {
    require_same_dims(a, b, "ssim");
    if (a.width() < p.window || a.height() < p.window) {
        throw DimensionError("ssim: image smaller than the " + std::to_string(p.window) + "x" +
                             std::to_string(p.window) + " window");
    }
    const int w = a.width(), h = a.height();
    const std::vector<double> x = luma_255(a), y = luma_255(b);
    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto g = gaussian_window(p.window, p.sigma);
    const auto mu_x = filter_valid(x, w, h, g), mu_y = filter_valid(y, w, h, g);
    const auto e_xx = filter_valid(xx, w, h, g), e_yy = filter_valid(yy, w, h, g), e_xy = filter_valid(xy, w, h, g);
    const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
    const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
    double sum = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
        const double mx = mu_x[i], my = mu_y[i];
        const double sxx = e_xx[i] - mx * mx, syy = e_yy[i] - my * my, sxy = e_xy[i] - mx * my;
        sum += ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
    }
    return sum / static_cast<double>(mu_x.size());
}

UciqeComponents uciqe_components(const ImageBuf& img, const UciqeParams& params) {
    if (img.empty()) throw InvalidArgument("uciqe: empty image");
    const LabImage lab = rgb_to_lab(img);
    const std::size_t n = lab.pixel_count();
    std::vector<double> chroma(n);
    double sum_c = 0.0, sum_sat = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        chroma[i] = std::hypot(lab.a[i], lab.b[i]);
        sum_c += chroma[i];
        const double denom = std::hypot(chroma[i], lab.L[i]);
        sum_sat += denom > 0.0 ? chroma[i] / denom : 0.0;
    }
    const double mean_c = sum_c / n;
    double var_c = 0.0;
    for (double c : chroma) var_c += (c - mean_c) * (c - mean_c);
    var_c /= n;

    std::vector<double> L = lab.L;
    std::sort(L.begin(), L.end());
    const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(params.contrast_fraction * n + 1e-9));
    const double bottom = std::accumulate(L.begin(), L.begin() + static_cast<std::ptrdiff_t>(k), 0.0) / k;
    const double top = std::accumulate(L.end() - static_cast<std::ptrdiff_t>(k), L.end(), 0.0) / k;

    return {std::sqrt(var_c) / max_srgb_chroma(), (top - bottom) / 100.0, sum_sat / n};
}

double uciqe(const ImageBuf& img, const UciqeParams& params) {
    const UciqeComponents c = uciqe_components(img, params);
    return params.w_chroma_std * c.chroma_std + params.w_contrast * c.contrast_l + params.w_saturation * c.saturation;
}

UiqmComponents uiqm_components(const ImageBuf& img, const UiqmParams& params) {
    if (img.empty()) throw InvalidArgument("uiqm: empty image");
    if (params.block < 1) throw InvalidArgument("uiqm: block size must be positive");
    const Plane r = channel_255(img, 0), g = channel_255(img, 1), b = channel_255(img, 2);
    const std::size_t n = img.pixel_count();

    std::vector<double> rg(n), yb(n);
    for (std::size_t i = 0; i < n; ++i) {
        rg[i] = r.v[i] - g.v[i];
        yb[i] = 0.5 * (r.v[i] + g.v[i]) - b.v[i];
    }
    const TrimmedStats s_rg = trimmed_stats(std::move(rg), params.trim_alpha);
    const TrimmedStats s_yb = trimmed_stats(std::move(yb), params.trim_alpha);
    UiqmComponents out;
    out.uicm = -0.0268 * std::sqrt(s_rg.mean * s_rg.mean + s_yb.mean * s_yb.mean) +
               0.1586 * std::sqrt(s_rg.variance + s_yb.variance);

    const double weights[3] = {0.299, 0.587, 0.114};
    const Plane* chans[3] = {&r, &g, &b};
    for (int c = 0; c < 3; ++c) {
        Plane edge = sobel_magnitude(*chans[c]);
        for (std::size_t i = 0; i < n; ++i) edge.v[i] *= chans[c]->v[i];
        out.uism += weights[c] * eme(edge, params.block);
    }

    Plane intensity{img.width(), img.height(), luma_255(img)};
    out.uiconm = log_amee(intensity, params.block);
    return out;
}

double uiqm(const ImageBuf& img, const UiqmParams& params) {
    const UiqmComponents c = uiqm_components(img, params);
    return params.c_colorfulness * c.uicm + params.c_sharpness * c.uism + params.c_contrast * c.uiconm;
}

MetricScores score_pair(const ImageBuf& result, const ImageBuf* reference) {
    MetricScores s;
    if (reference) {
        require_same_dims(result, *reference, "score_pair");
        s.mse = mse(result, *reference);
        s.psnr = psnr_from_mse(*s.mse);
        s.ssim = ssim(result, *reference);
    }
    s.uciqe = uciqe(result);
    s.uiqm = uiqm(result);
    return s;
}

std::string format_value(double v, int precision) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

}  // namespace uw::metrics
