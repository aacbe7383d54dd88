#pragma once

#include <array>

#include "uwbench/image.hpp"

namespace uw {

// Gray-world colour-cast correction.
struct WhiteBalanceResult {
    ImageBuf image;
    std::array<double, 3> gains{1.0, 1.0, 1.0};
    // Set when a channel mean was exactly 0 and its gain was forced to 1.
    bool zero_channel = false;
};

struct WhiteBalanceParams {
    double min_gain = 0.5;
    double max_gain = 3.0;
};

WhiteBalanceResult white_balance(const ImageBuf& img, const WhiteBalanceParams& params = {});

struct ClaheParams {
    // Normalised clip limit in (0,1]; 1 disables clipping.
    double clip_limit = 0.01;
    int tiles_x = 8;
    int tiles_y = 8;
    int bins = 256;
};

struct ClaheResult {
    ImageBuf image;
    int tiles_x = 0;
    int tiles_y = 0;
    // The requested grid did not fit the image and was shrunk.
    bool grid_reduced = false;
};

// Contrast-limited adaptive histogram equalisation applied to the L plane only.
// a and b are copied through untouched.
LabImage clahe_l_channel(const LabImage& lab, const ClaheParams& params, int* used_tiles_x = nullptr,
                         int* used_tiles_y = nullptr);

ClaheResult clahe_on_l(const ImageBuf& img, const ClaheParams& params = {});

ImageBuf gamma_correct(const ImageBuf& img, double gamma = 0.7);

// The four network inputs. All share the raw image's dimensions.
struct EnhanceInputs {
    ImageBuf raw;
    ImageBuf wb;
    ImageBuf he;
    ImageBuf gc;
};

EnhanceInputs generate_inputs(const ImageBuf& img);

}  // namespace uw
