#pragma once

#include <optional>
#include <string>

#include "uwbench/image.hpp"

namespace uw::metrics {

// Mean squared error on the 0-255 scale over all pixels and channels.
double mse(const ImageBuf& a, const ImageBuf& b);

// 10*log10(255^2 / mse); +infinity for identical images.
double psnr_from_mse(double mse);
double psnr(const ImageBuf& a, const ImageBuf& b);

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 255.0;
};

// Mean local SSIM of the BT.601 luma planes ("valid" window positions only).
double ssim(const ImageBuf& a, const ImageBuf& b, const SsimParams& params = {});

struct UciqeParams {
    double w_chroma_std = 0.4680;
    double w_contrast = 0.2745;
    double w_saturation = 0.2576;
    // Fraction of brightest/darkest pixels used for the luminance contrast term.
    double contrast_fraction = 0.01;
};

struct UciqeComponents {
    double chroma_std = 0.0;   // std of chroma / max sRGB chroma
    double contrast_l = 0.0;   // (mean top 1% L - mean bottom 1% L) / 100
    double saturation = 0.0;   // mean chroma / sqrt(chroma^2 + L^2)
};

UciqeComponents uciqe_components(const ImageBuf& img, const UciqeParams& params = {});
double uciqe(const ImageBuf& img, const UciqeParams& params = {});

struct UiqmParams {
    double c_colorfulness = 0.0282;
    double c_sharpness = 0.2953;
    double c_contrast = 3.5753;
    double trim_alpha = 0.1;
    int block = 8;
};

struct UiqmComponents {
    double uicm = 0.0;
    double uism = 0.0;
    double uiconm = 0.0;
};

UiqmComponents uiqm_components(const ImageBuf& img, const UiqmParams& params = {});
double uiqm(const ImageBuf& img, const UiqmParams& params = {});

// Full-reference fields are present only when a reference was supplied.
struct MetricScores {
    std::optional<double> mse;
    std::optional<double> psnr;
    std::optional<double> ssim;
    double uciqe = 0.0;
    double uiqm = 0.0;
};

MetricScores score_pair(const ImageBuf& result, const ImageBuf* reference);

// Fixed-precision text for report cells; +inf renders as "inf".
std::string format_value(double v, int precision = 6);

}  // namespace uw::metrics
