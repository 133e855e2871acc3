/**
 * @file
 * @brief Uniform LBP(8,1) and LPQ(7x7) texture histograms.
 */
#pragma once

#include "texcost/cost.hpp"
#include "texcost/error.hpp"
#include "texcost/image.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace texcost {

enum class FeatureSetId : std::uint8_t {
    lbp = 0,
    lpq = 1,
};

/**
 * @brief Static description of a feature set: its histogram dimension D and the pixel window W
 *        touched per output pixel.
 */
struct FeatureSetDescriptor {
    FeatureSetId id;
    std::size_t dimension;
    std::size_t window;
    /// Smallest image side the extractor accepts.
    std::size_t min_side;
};

inline constexpr FeatureSetDescriptor lbp_descriptor{ FeatureSetId::lbp, 59, 9, 3 };
inline constexpr FeatureSetDescriptor lpq_descriptor{ FeatureSetId::lpq, 256, 49, 7 };

[[nodiscard]] inline const FeatureSetDescriptor &descriptor(FeatureSetId id) {
    switch (id) {
        case FeatureSetId::lbp:
            return lbp_descriptor;
        case FeatureSetId::lpq:
            return lpq_descriptor;
    }
    throw error("unknown feature-set id " + std::to_string(static_cast<int>(id)));
}

[[nodiscard]] inline std::string_view to_string(FeatureSetId id) {
    switch (id) {
        case FeatureSetId::lbp:
            return "lbp";
        case FeatureSetId::lpq:
            return "lpq";
    }
    throw error("unknown feature-set id " + std::to_string(static_cast<int>(id)));
}

[[nodiscard]] inline FeatureSetId parse_feature_set(std::string_view name) {
    if (name == "lbp" || name == "LBP") {
        return FeatureSetId::lbp;
    }
    if (name == "lpq" || name == "LPQ") {
        return FeatureSetId::lpq;
    }
    throw error("unknown feature set '" + std::string{ name } + "'");
}

/**
 * @brief L1-normalised descriptor histogram tagged with its feature set.
 */
struct FeatureVector {
    FeatureSetId set{ FeatureSetId::lbp };
    std::vector<double> values;

    [[nodiscard]] std::size_t dimension() const noexcept { return values.size(); }
    friend bool operator==(const FeatureVector &, const FeatureVector &) = default;
};

namespace detail {

/// Number of 0/1 transitions in the circular 8-bit pattern.
[[nodiscard]] constexpr int circular_transitions(std::uint8_t code) noexcept {
    const auto rotated = static_cast<std::uint8_t>((code >> 1) | (code << 7));
    return std::popcount(static_cast<unsigned>(code ^ rotated));
}

/// Maps the 256 LBP codes to 59 bins: uniform codes in ascending order, then one shared bin.
[[nodiscard]] constexpr std::array<std::uint8_t, 256> make_uniform_lbp_table() noexcept {
    std::array<std::uint8_t, 256> table{};
    std::uint8_t next = 0;
    for (int code = 0; code < 256; ++code) {
        if (circular_transitions(static_cast<std::uint8_t>(code)) <= 2) {
            table[static_cast<std::size_t>(code)] = next++;
        } else {
            table[static_cast<std::size_t>(code)] = 58;
        }
    }
    return table;
}

inline constexpr std::array<std::uint8_t, 256> uniform_lbp_table = make_uniform_lbp_table();
static_assert(uniform_lbp_table[255] == 57 && uniform_lbp_table[0] == 0);

inline void normalize_l1(std::vector<double> &hist, std::size_t total) {
    const auto n = static_cast<double>(total);
    for (auto &h : hist) {
        h /= n;
    }
}

}  // namespace detail

/// LBP neighbour offsets in circular order starting at the top-left corner; bit i is neighbour i.
inline constexpr std::array<std::array<int, 2>, 8> lbp_neighbours{ { { -1, -1 }, { 0, -1 }, { 1, -1 }, { 1, 0 }, { 1, 1 }, { 0, 1 }, { -1, 1 }, { -1, 0 } } };

/// Raw 8-bit LBP code at interior pixel (x, y); a neighbour >= centre sets its bit.
[[nodiscard]] inline std::uint8_t lbp_code(const GrayImage &img, std::size_t x, std::size_t y) noexcept {
    const std::uint8_t centre = img.at(x, y);
    unsigned code = 0;
    for (std::size_t i = 0; i < lbp_neighbours.size(); ++i) {
        const auto nx = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(x) + lbp_neighbours[i][0]);
        const auto ny = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(y) + lbp_neighbours[i][1]);
        code |= static_cast<unsigned>(img.at(nx, ny) >= centre) << i;
    }
    return static_cast<std::uint8_t>(code);
}

/**
 * @brief 59-bin uniform LBP(8,1) histogram over all interior pixels.
 * @details Charges pixel_count x 9 filter operations to @p ledger when given.
 */
[[nodiscard]] inline FeatureVector extract_lbp(const GrayImage &img, CostLedger *ledger = nullptr) {
    detail::require(img.width() >= lbp_descriptor.min_side && img.height() >= lbp_descriptor.min_side,
                    "extract_lbp: image smaller than 3x3");
    std::vector<double> hist(lbp_descriptor.dimension, 0.0);
    for (std::size_t y = 1; y + 1 < img.height(); ++y) {
        for (std::size_t x = 1; x + 1 < img.width(); ++x) {
            hist[detail::uniform_lbp_table[lbp_code(img, x, y)]] += 1.0;
        }
    }
    detail::normalize_l1(hist, (img.width() - 2) * (img.height() - 2));
    if (ledger != nullptr) {
        ledger->charge_feature(img.pixel_count(), lbp_descriptor.window);
    }
    return FeatureVector{ FeatureSetId::lbp, std::move(hist) };
}

/// LPQ coefficients within this distance of zero quantise as non-negative.
inline constexpr double lpq_zero_tolerance = 1e-6;

/// Per-position LPQ codes, row-major over the (w - 6) x (h - 6) positions whose window fits.
struct LpqCodeMap {
    std::size_t width{ 0 };
    std::size_t height{ 0 };
    std::vector<std::uint8_t> codes;

    [[nodiscard]] std::uint8_t at(std::size_t x, std::size_t y) const { return codes[y * width + x]; }
};

/**
 * @brief LPQ codes from a 7x7 STFT at (a,0), (0,a), (a,a), (a,-a) with a = 1/7.
 * @details F(u) = sum_{dx,dy} f(x+dx, y+dy) exp(-2 pi i (u_x dx + u_y dy)) over dx, dy in [-3, 3],
 *          evaluated separably. Bits 0-3 hold the real parts of the four coefficients, bits 4-7 the
 *          imaginary parts; a component >= -lpq_zero_tolerance sets its bit. No decorrelation.
 *          Entry (x, y) belongs to the window centred at image position (x + 3, y + 3).
 */
[[nodiscard]] inline LpqCodeMap lpq_codes(const GrayImage &img) {
    constexpr int radius = 3;
    constexpr std::size_t win = 2 * radius + 1;
    detail::require(img.width() >= win && img.height() >= win, "lpq: image smaller than 7x7");

    // e[k] = exp(-2 pi i a d) for d = k - radius
    std::array<double, win> cos_t{};
    std::array<double, win> sin_t{};
    for (std::size_t k = 0; k < win; ++k) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(static_cast<int>(k) - radius) / static_cast<double>(win);
        cos_t[k] = std::cos(angle);
        sin_t[k] = -std::sin(angle);
    }

    const std::size_t w = img.width();
    const std::size_t h = img.height();
    const std::size_t out_w = w - 2 * radius;
    const std::size_t out_h = h - 2 * radius;

    // Horizontal pass: plain sum (h0) and the first-frequency response (h1) for every row.
    std::vector<double> h0(out_w * h);
    std::vector<double> h1_re(out_w * h);
    std::vector<double> h1_im(out_w * h);
    for (std::size_t y = 0; y < h; ++y) {
        const auto row = img.row(y);
        for (std::size_t x = 0; x < out_w; ++x) {
            double s0 = 0.0, sr = 0.0, si = 0.0;
            for (std::size_t k = 0; k < win; ++k) {
                const double p = row[x + k];
                s0 += p;
                sr += p * cos_t[k];
                si += p * sin_t[k];
            }
            h0[y * out_w + x] = s0;
            h1_re[y * out_w + x] = sr;
            h1_im[y * out_w + x] = si;
        }
    }

    LpqCodeMap map{ out_w, out_h, std::vector<std::uint8_t>(out_w * out_h) };
    for (std::size_t y = 0; y < out_h; ++y) {
        for (std::size_t x = 0; x < out_w; ++x) {
            double f1r = 0, f1i = 0, f2r = 0, f2i = 0, f3r = 0, f3i = 0, f4r = 0, f4i = 0;
            for (std::size_t k = 0; k < win; ++k) {
                const std::size_t idx = (y + k) * out_w + x;
                const double c = cos_t[k];
                const double s = sin_t[k];
                const double ar = h1_re[idx];
                const double ai = h1_im[idx];
                f1r += ar;
                f1i += ai;
                f2r += c * h0[idx];
                f2i += s * h0[idx];
                // (ar + i ai)(c + i s)
                f3r += ar * c - ai * s;
                f3i += ar * s + ai * c;
                // (ar + i ai)(c - i s)
                f4r += ar * c + ai * s;
                f4i += ai * c - ar * s;
            }
            const std::array<double, 8> parts{ f1r, f2r, f3r, f4r, f1i, f2i, f3i, f4i };
            unsigned code = 0;
            for (std::size_t b = 0; b < parts.size(); ++b) {
                code |= static_cast<unsigned>(parts[b] >= -lpq_zero_tolerance) << b;
            }
            map.codes[y * out_w + x] = static_cast<std::uint8_t>(code);
        }
    }
    return map;
}

/// 256-bin L1-normalised histogram of lpq_codes().
[[nodiscard]] inline FeatureVector extract_lpq(const GrayImage &img, CostLedger *ledger = nullptr) {
    const auto map = lpq_codes(img);
    std::vector<double> hist(lpq_descriptor.dimension, 0.0);
    for (const auto c : map.codes) {
        hist[c] += 1.0;
    }
    detail::normalize_l1(hist, map.codes.size());
    if (ledger != nullptr) {
        ledger->charge_feature(img.pixel_count(), lpq_descriptor.window);
    }
    return FeatureVector{ FeatureSetId::lpq, std::move(hist) };
}

/// Dispatch to the extractor for @p id.
[[nodiscard]] inline FeatureVector extract(const GrayImage &img, FeatureSetId id, CostLedger *ledger = nullptr) {
    switch (id) {
        case FeatureSetId::lbp:
            return extract_lbp(img, ledger);
        case FeatureSetId::lpq:
            return extract_lpq(img, ledger);
    }
    throw error("extract: unknown feature-set id " + std::to_string(static_cast<int>(id)));
}

}  // namespace texcost
