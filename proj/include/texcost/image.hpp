/**
 * @file
 * @brief Grayscale rasters, PNG/PGM decoding, area-based rescaling and the level-L patch grid.
 */
#pragma once

#include "texcost/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace texcost {

/**
 * @brief Immutable 8-bit intensity raster stored row-major.
 */
class GrayImage {
  public:
    GrayImage() = default;

    GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels) :
        width_{ width }, height_{ height }, pixels_{ std::move(pixels) } {
        detail::require(width_ >= 1 && height_ >= 1, "GrayImage: zero-dimension image");
        detail::require(pixels_.size() == width_ * height_, "GrayImage: pixel buffer does not match width x height");
    }

    /// Constant-valued image.
    static GrayImage filled(std::size_t width, std::size_t height, std::uint8_t value) {
        return GrayImage{ width, height, std::vector<std::uint8_t>(width * height, value) };
    }

    [[nodiscard]] std::size_t width() const noexcept { return width_; }
    [[nodiscard]] std::size_t height() const noexcept { return height_; }
    /// Total pixel count P.
    [[nodiscard]] std::size_t pixel_count() const noexcept { return pixels_.size(); }
    [[nodiscard]] bool empty() const noexcept { return pixels_.empty(); }

    [[nodiscard]] std::uint8_t at(std::size_t x, std::size_t y) const noexcept { return pixels_[y * width_ + x]; }
    [[nodiscard]] std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    [[nodiscard]] std::span<const std::uint8_t> row(std::size_t y) const noexcept {
        return std::span<const std::uint8_t>{ pixels_ }.subspan(y * width_, width_);
    }

    /// Copy of the rectangle [x0, x0 + w) x [y0, y0 + h).
    [[nodiscard]] GrayImage crop(std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) const {
        detail::require(w >= 1 && h >= 1 && x0 + w <= width_ && y0 + h <= height_, "GrayImage::crop: region out of bounds");
        std::vector<std::uint8_t> out;
        out.reserve(w * h);
        for (std::size_t y = y0; y < y0 + h; ++y) {
            const auto src = row(y).subspan(x0, w);
            out.insert(out.end(), src.begin(), src.end());
        }
        return GrayImage{ w, h, std::move(out) };
    }

    friend bool operator==(const GrayImage &, const GrayImage &) = default;

  private:
    std::size_t width_{ 0 };
    std::size_t height_{ 0 };
    std::vector<std::uint8_t> pixels_;
};

/**
 * @brief The N = 4^(L-1) equal, non-overlapping sub-images of one image, row-major.
 */
struct PatchGrid {
    int level{ 1 };
    std::size_t side{ 1 };
    std::vector<GrayImage> patches;
};

/// BT.601 luma, rounded half-up in exact integer arithmetic.
[[nodiscard]] constexpr std::uint8_t luma_bt601(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
    return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

namespace detail {

inline void skip_pnm_whitespace(std::istream &in) {
    while (true) {
        const int c = in.peek();
        if (c == '#') {
            std::string comment;
            std::getline(in, comment);
        } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            in.get();
        } else {
            return;
        }
    }
}

inline std::size_t read_pnm_number(std::istream &in, const std::string &what) {
    skip_pnm_whitespace(in);
    std::size_t value = 0;
    if (!(in >> value)) {
        throw error("PGM: malformed header field '" + what + "'");
    }
    return value;
}

inline GrayImage decode_pgm(std::istream &in) {
    char magic[2] = { 0, 0 };
    in.read(magic, 2);
    require(in && magic[0] == 'P' && magic[1] == '5', "PGM: only binary P5 files are supported");
    const std::size_t width = read_pnm_number(in, "width");
    const std::size_t height = read_pnm_number(in, "height");
    const std::size_t maxval = read_pnm_number(in, "maxval");
    require(width >= 1 && height >= 1, "PGM: zero-dimension image");
    require(maxval >= 1 && maxval <= 65535, "PGM: maxval out of range");
    in.get();  // single whitespace byte before the raster

    const std::size_t count = width * height;
    std::vector<std::uint8_t> pixels(count);
    if (maxval < 256) {
        in.read(reinterpret_cast<char *>(pixels.data()), static_cast<std::streamsize>(count));
        require(static_cast<std::size_t>(in.gcount()) == count, "PGM: truncated raster");
        if (maxval != 255) {
            for (auto &p : pixels) {
                p = static_cast<std::uint8_t>(std::min<std::size_t>(255, (p * 255 + maxval / 2) / maxval));
            }
        }
    } else {
        std::vector<unsigned char> raw(count * 2);
        in.read(reinterpret_cast<char *>(raw.data()), static_cast<std::streamsize>(raw.size()));
        require(static_cast<std::size_t>(in.gcount()) == raw.size(), "PGM: truncated raster");
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t v = (static_cast<std::size_t>(raw[2 * i]) << 8) | raw[2 * i + 1];
            pixels[i] = static_cast<std::uint8_t>(std::min<std::size_t>(255, (v * 255 + maxval / 2) / maxval));
        }
    }
    return GrayImage{ width, height, std::move(pixels) };
}

inline GrayImage decode_png(const std::filesystem::path &path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_file(&image, path.string().c_str()) == 0) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw error("PNG: " + msg);
    }
    image.format = PNG_FORMAT_RGB;
    require(image.width >= 1 && image.height >= 1, "PNG: zero-dimension image");
    std::vector<png_byte> rgb(PNG_IMAGE_SIZE(image));
    const png_color white{ 255, 255, 255 };
    if (png_image_finish_read(&image, &white, rgb.data(), 0, nullptr) == 0) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw error("PNG: " + msg);
    }
    const std::size_t count = static_cast<std::size_t>(image.width) * image.height;
    std::vector<std::uint8_t> pixels(count);
    for (std::size_t i = 0; i < count; ++i) {
        pixels[i] = luma_bt601(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
    }
    return GrayImage{ image.width, image.height, std::move(pixels) };
}

}  // namespace detail

/**
 * @brief Decode a PNG or binary PGM (P5) file into a grayscale image.
 * @details Color PNGs are reduced with BT.601 luma weights; alpha is composited over white.
 */
[[nodiscard]] inline GrayImage load_image(const std::filesystem::path &path) {
    std::ifstream in{ path, std::ios::binary };
    if (!in) {
        throw error("load_image: cannot open " + path.string());
    }
    unsigned char signature[8] = {};
    in.read(reinterpret_cast<char *>(signature), 8);
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got >= 2 && signature[0] == 'P' && signature[1] == '5') {
        in.clear();
        in.seekg(0);
        return detail::decode_pgm(in);
    }
    if (got == 8 && png_sig_cmp(signature, 0, 8) == 0) {
        in.close();
        return detail::decode_png(path);
    }
    throw error("load_image: unsupported format in " + path.string());
}

/// Write a binary P5 PGM with maxval 255.
inline void write_pgm(const GrayImage &img, const std::filesystem::path &path) {
    std::ofstream out{ path, std::ios::binary };
    if (!out) {
        throw error("write_pgm: cannot open " + path.string());
    }
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char *>(img.pixels().data()), static_cast<std::streamsize>(img.pixel_count()));
    if (!out) {
        throw error("write_pgm: write failed for " + path.string());
    }
}

/**
 * @brief Output dimension for a linear size under the area scale S: round(dim * sqrt(S)), at least 1.
 */
[[nodiscard]] inline std::size_t scaled_dimension(std::size_t dim, double scale) {
    const auto v = static_cast<std::size_t>(std::llround(static_cast<double>(dim) * std::sqrt(scale)));
    return std::max<std::size_t>(1, v);
}

/**
 * @brief Resample @p img so that its pixel count is approximately S * P.
 * @details S is an area ratio, so each axis is scaled by sqrt(S). Bilinear interpolation with
 *          pixel-centre alignment; S == 1 returns an exact copy.
 */
[[nodiscard]] inline GrayImage rescale(const GrayImage &img, double scale) {
    detail::require(scale > 0.0 && scale <= 1.0, "rescale: scale must lie in (0, 1]");
    if (scale == 1.0) {
        return img;
    }
    const std::size_t out_w = scaled_dimension(img.width(), scale);
    const std::size_t out_h = scaled_dimension(img.height(), scale);
    const double fx = static_cast<double>(img.width()) / static_cast<double>(out_w);
    const double fy = static_cast<double>(img.height()) / static_cast<double>(out_h);
    const auto max_x = static_cast<double>(img.width() - 1);
    const auto max_y = static_cast<double>(img.height() - 1);

    std::vector<std::uint8_t> out(out_w * out_h);
    for (std::size_t y = 0; y < out_h; ++y) {
        const double sy = std::clamp((static_cast<double>(y) + 0.5) * fy - 0.5, 0.0, max_y);
        const auto y0 = static_cast<std::size_t>(sy);
        const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
        const double wy = sy - static_cast<double>(y0);
        for (std::size_t x = 0; x < out_w; ++x) {
            const double sx = std::clamp((static_cast<double>(x) + 0.5) * fx - 0.5, 0.0, max_x);
            const auto x0 = static_cast<std::size_t>(sx);
            const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
            const double wx = sx - static_cast<double>(x0);
            const double top = (1.0 - wx) * img.at(x0, y0) + wx * img.at(x1, y0);
            const double bottom = (1.0 - wx) * img.at(x0, y1) + wx * img.at(x1, y1);
            const double v = (1.0 - wy) * top + wy * bottom;
            out[y * out_w + x] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    }
    return GrayImage{ out_w, out_h, std::move(out) };
}

/// Patch count N = f(L) = 4^(L-1).
[[nodiscard]] inline std::uint64_t grid_count(int level) {
    detail::require(level >= 1 && level <= 32, "grid_count: level must be >= 1");
    return std::uint64_t{ 1 } << (2 * (level - 1));
}

/// Patches per axis, 2^(L-1).
[[nodiscard]] inline std::size_t grid_side(int level) {
    detail::require(level >= 1 && level <= 32, "grid_side: level must be >= 1");
    return std::size_t{ 1 } << (level - 1);
}

/**
 * @brief Divide @p img into a 2^(L-1) x 2^(L-1) grid of equal patches.
 * @details Patch size is floor(W / side) x floor(H / side); remainder columns and rows at the
 *          right and bottom are discarded.
 */
[[nodiscard]] inline PatchGrid split_patches(const GrayImage &img, int level) {
    const std::size_t side = grid_side(level);
    detail::require(img.width() >= side && img.height() >= side,
                    "split_patches: image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                        " too small for level " + std::to_string(level));
    const std::size_t pw = img.width() / side;
    const std::size_t ph = img.height() / side;
    PatchGrid grid{ level, side, {} };
    grid.patches.reserve(side * side);
    for (std::size_t gy = 0; gy < side; ++gy) {
        for (std::size_t gx = 0; gx < side; ++gx) {
            grid.patches.push_back(img.crop(gx * pw, gy * ph, pw, ph));
        }
    }
    return grid;
}

}  // namespace texcost
