#include "uwbench/enhance.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "uwbench/error.hpp"

namespace uw {

WhiteBalanceResult white_balance(const ImageBuf& img, const WhiteBalanceParams& params) {
    if (img.empty()) throw InvalidArgument("white_balance: empty image");
    std::array<double, 3> mean{};
    const auto d = img.data();
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        for (int c = 0; c < 3; ++c) mean[c] += d[3 * i + c];
    }
    for (double& m : mean) m /= static_cast<double>(img.pixel_count());

    // Gray target is the mean over the channels that carry any signal.
    double target = 0.0;
    int live = 0;
    for (double m : mean) {
        if (m > 0.0) {
            target += m;
            ++live;
        }
    }
    if (live == 0) throw InvalidArgument("white_balance: all channel means are zero");
    target /= live;

    WhiteBalanceResult result;
    for (int c = 0; c < 3; ++c) {
        if (mean[c] > 0.0) {
            result.gains[c] = std::clamp(target / mean[c], params.min_gain, params.max_gain);
        } else {
            result.gains[c] = 1.0;
            result.zero_channel = true;
        }
    }
    result.image = img;
    auto out = result.image.data();
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        for (int c = 0; c < 3; ++c) out[3 * i + c] *= result.gains[c];
    }
    result.image.clamp();
    return result;
}

namespace {

// Per-tile grey-level transfer. An empty lut means identity (tile without contrast).
struct TileMapping {
    std::vector<double> lut;

    double apply(double L, int bins) const {
        if (lut.empty()) return L;
        return lut[static_cast<std::size_t>(bin_of(L, bins))];
    }

    static int bin_of(double L, int bins) {
        const double t = std::clamp(L, 0.0, 100.0) / 100.0;
        return std::min(bins - 1, static_cast<int>(t * bins));
    }
};

TileMapping make_mapping(const LabImage& lab, int x0, int x1, int y0, int y1, const ClaheParams& p) {
    std::vector<double> hist(static_cast<std::size_t>(p.bins), 0.0);
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            hist[static_cast<std::size_t>(TileMapping::bin_of(lab.L[static_cast<std::size_t>(y) * lab.width + x], p.bins))] += 1.0;
        }
    }
    const auto occupied = std::count_if(hist.begin(), hist.end(), [](double h) { return h > 0.0; });
    if (occupied <= 1) return {};

    const double n = static_cast<double>(x1 - x0) * (y1 - y0);
    const double min_clip = std::ceil(n / p.bins);
    const double clip = min_clip + std::round(p.clip_limit * (n - min_clip));
    double excess = 0.0;
    for (double& h : hist) {
        if (h > clip) {
            excess += h - clip;
            h = clip;
        }
    }
    const double share = excess / p.bins;
    for (double& h : hist) h += share;

    TileMapping m;
    m.lut.resize(hist.size());
    double cdf = 0.0;
    for (std::size_t b = 0; b < hist.size(); ++b) {
        cdf += hist[b];
        m.lut[b] = std::min(100.0, cdf * 100.0 / n);
    }
    return m;
}

}  // namespace

LabImage clahe_l_channel(const LabImage& lab, const ClaheParams& params, int* used_tiles_x, int* used_tiles_y) {
    if (!(params.clip_limit > 0.0 && params.clip_limit <= 1.0)) {
        throw InvalidArgument("clahe: clip limit must lie in (0,1]");
    }
    if (params.tiles_x < 1 || params.tiles_y < 1) throw InvalidArgument("clahe: tile grid must be at least 1x1");
    if (params.bins < 2) throw InvalidArgument("clahe: need at least 2 histogram bins");
    if (lab.width < 1 || lab.height < 1) throw InvalidArgument("clahe: empty image");

    const int tx = std::min(params.tiles_x, lab.width);
    const int ty = std::min(params.tiles_y, lab.height);
    if (used_tiles_x) *used_tiles_x = tx;
    if (used_tiles_y) *used_tiles_y = ty;

    auto edge = [](int i, int tiles, int extent) { return static_cast<int>(static_cast<long long>(i) * extent / tiles); };

    std::vector<TileMapping> maps(static_cast<std::size_t>(tx) * ty);
    std::vector<double> cx(tx), cy(ty);
    for (int j = 0; j < ty; ++j) {
        const int y0 = edge(j, ty, lab.height), y1 = edge(j + 1, ty, lab.height);
        cy[j] = 0.5 * (y0 + y1) - 0.5;
        for (int i = 0; i < tx; ++i) {
            const int x0 = edge(i, tx, lab.width), x1 = edge(i + 1, tx, lab.width);
            if (j == 0) cx[i] = 0.5 * (x0 + x1) - 0.5;
            maps[static_cast<std::size_t>(j) * tx + i] = make_mapping(lab, x0, x1, y0, y1, params);
        }
    }

    // Locates the pair of tile centres bracketing a coordinate and the blend weight.
    auto bracket = [](const std::vector<double>& centres, double v, int& lo, int& hi, double& t) {
        const int n = static_cast<int>(centres.size());
        if (v <= centres.front()) {
            lo = hi = 0;
            t = 0.0;
            return;
        }
        if (v >= centres.back()) {
            lo = hi = n - 1;
            t = 0.0;
            return;
        }
        hi = static_cast<int>(std::upper_bound(centres.begin(), centres.end(), v) - centres.begin());
        lo = hi - 1;
        t = (v - centres[lo]) / (centres[hi] - centres[lo]);
    };

    LabImage out = lab;
    for (int y = 0; y < lab.height; ++y) {
        int j0 = 0, j1 = 0;
        double wy = 0.0;
        bracket(cy, y, j0, j1, wy);
        for (int x = 0; x < lab.width; ++x) {
            int i0 = 0, i1 = 0;
            double wx = 0.0;
            bracket(cx, x, i0, i1, wx);
            const std::size_t idx = static_cast<std::size_t>(y) * lab.width + x;
            const double L = lab.L[idx];
            auto map = [&](int i, int j) { return maps[static_cast<std::size_t>(j) * tx + i].apply(L, params.bins); };
            const double top = (1.0 - wx) * map(i0, j0) + wx * map(i1, j0);
            const double bottom = (1.0 - wx) * map(i0, j1) + wx * map(i1, j1);
            out.L[idx] = std::clamp((1.0 - wy) * top + wy * bottom, 0.0, 100.0);
        }
    }
    return out;
}

ClaheResult clahe_on_l(const ImageBuf& img, const ClaheParams& params) {
    ClaheResult result;
    const LabImage eq = clahe_l_channel(rgb_to_lab(img), params, &result.tiles_x, &result.tiles_y);
    result.grid_reduced = result.tiles_x != params.tiles_x || result.tiles_y != params.tiles_y;
    result.image = lab_to_rgb(eq);
    return result;
}

ImageBuf gamma_correct(const ImageBuf& img, double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("gamma must be positive");
    ImageBuf out = img;
    for (double& v : out.data()) v = std::pow(std::clamp(v, 0.0, 1.0), gamma);
    return out;
}

EnhanceInputs generate_inputs(const ImageBuf& img) {
    if (img.empty()) throw InvalidArgument("generate_inputs: empty image");
    return {img, white_balance(img).image, clahe_on_l(img).image, gamma_correct(img, 0.7)};
}

}  // namespace uw
