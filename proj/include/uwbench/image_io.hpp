#pragma once

#include <filesystem>

#include "uwbench/image.hpp"

namespace uw {

// Reads an 8-bit PNG (RGB, RGBA, gray or palette; alpha dropped) or a binary PPM (P6,
// maxval 255). Throws FormatError for anything else and IoError when unreadable.
ImageBuf load_image(const std::filesystem::path& path);

// Writes 8-bit output; the format follows the extension (.ppm -> P6, otherwise PNG).
void save_image(const ImageBuf& img, const std::filesystem::path& path);

}  // namespace uw
