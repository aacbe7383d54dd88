#include "uwbench/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "uwbench/error.hpp"

namespace uw {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t quantize(double v) {
    if (!std::isfinite(v)) v = 0.0;
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::string lowercase_ext(const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

ImageBuf from_bytes(int w, int h, const std::vector<std::uint8_t>& rgb) {
    std::vector<double> data(rgb.size());
    std::transform(rgb.begin(), rgb.end(), data.begin(), [](std::uint8_t v) { return v / 255.0; });
    return ImageBuf(w, h, std::move(data));
}

void png_error_fn(png_structp png, png_const_charp msg) {
    auto* err = static_cast<std::string*>(png_get_error_ptr(png));
    if (err) *err = msg;
    png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

// Skips whitespace and '#' comments in a PPM header.
int read_ppm_int(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int v = -1;
    if (!(in >> v)) throw FormatError("malformed PPM header");
    return v;
}

ImageBuf load_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[2] = {};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '6') {
        throw FormatError(path.string() + ": only binary PPM (P6) is supported");
    }
    const int w = read_ppm_int(in);
    const int h = read_ppm_int(in);
    const int maxval = read_ppm_int(in);
    if (w <= 0 || h <= 0) throw FormatError(path.string() + ": invalid PPM dimensions");
    if (maxval != 255) throw FormatError(path.string() + ": unsupported PPM maxval " + std::to_string(maxval));
    in.get();  // single whitespace before the raster
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (in.gcount() != static_cast<std::streamsize>(rgb.size())) {
        throw FormatError(path.string() + ": truncated PPM raster");
    }
    return from_bytes(w, h, rgb);
}

ImageBuf load_png(std::FILE* fp, const std::filesystem::path& path) {
    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    if (!png) throw IoError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng initialisation failed");
    }
    std::vector<std::uint8_t> rgb;
    std::vector<png_bytep> rows;
    png_uint_32 w = 0, h = 0;
    int bit_depth = 0;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError(path.string() + ": " + (err.empty() ? "corrupt PNG" : err));
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    int color_type = 0;
    png_get_IHDR(png, info, &w, &h, &bit_depth, &color_type, nullptr, nullptr, nullptr);
    const bool palette = color_type == PNG_COLOR_TYPE_PALETTE;
    if (bit_depth != 8 && !(palette && bit_depth < 8)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError(path.string() + ": unsupported PNG bit depth " + std::to_string(bit_depth) +
                          " (8-bit only)");
    }
    if (palette) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    if (png_get_rowbytes(png, info) != static_cast<png_size_t>(w) * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError(path.string() + ": unexpected PNG channel layout");
    }
    rgb.resize(static_cast<std::size_t>(w) * h * 3);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = rgb.data() + static_cast<std::size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return from_bytes(static_cast<int>(w), static_cast<int>(h), rgb);
}

void save_ppm(const ImageBuf& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
    std::vector<std::uint8_t> bytes(img.data().size());
    std::transform(img.data().begin(), img.data().end(), bytes.begin(), quantize);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

void save_png(const ImageBuf& img, const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw IoError("cannot write " + path.string());
    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    if (!png) throw IoError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng initialisation failed");
    }
    std::vector<std::uint8_t> bytes(img.data().size());
    std::transform(img.data().begin(), img.data().end(), bytes.begin(), quantize);
    std::vector<png_bytep> rows(img.height());
    for (int y = 0; y < img.height(); ++y) {
        rows[y] = bytes.data() + static_cast<std::size_t>(y) * img.width() * 3;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError(path.string() + ": " + err);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width(), img.height(), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

ImageBuf load_image(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path.string());
    unsigned char sig[8] = {};
    const std::size_t n = std::fread(sig, 1, sizeof sig, fp.get());
    if (n == 8 && png_sig_cmp(sig, 0, 8) == 0) {
        std::rewind(fp.get());
        return load_png(fp.get(), path);
    }
    if (n >= 2 && sig[0] == 'P') {
        fp.reset();
        return load_ppm(path);
    }
    throw FormatError(path.string() + ": unsupported image format (PNG or PPM P6 expected)");
}

void save_image(const ImageBuf& img, const std::filesystem::path& path) {
    if (img.empty()) throw InvalidArgument("cannot save an empty image");
    if (lowercase_ext(path) == ".ppm") {
        save_ppm(img, path);
    } else {
        save_png(img, path);
    }
}

}  // namespace uw
