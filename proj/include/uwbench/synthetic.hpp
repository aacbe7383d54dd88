#pragma once

#include <cstdint>

#include "uwbench/image.hpp"

namespace uw {

// Smooth, colourful test scene (sums of seeded sinusoids plus a few discs).
ImageBuf synthetic_scene(int width, int height, std::uint64_t seed);

// Uniform noise image, as used for runtime measurements.
ImageBuf noise_image(int width, int height, std::uint64_t seed);

// Degrades a clean image the way water does: red/green attenuation, a blue veil and
// a darkening gamma.
ImageBuf underwater_cast(const ImageBuf& clean, double gamma = 1.4);

}  // namespace uw
