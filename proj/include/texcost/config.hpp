/**
 * @file
 * @brief Experiment configuration and its flat `key = value` file format.
 *
 * Recognised keys (blank lines and `#` comments ignored):
 *
 *     manifest         path to a dataset manifest; empty -> synthetic gratings
 *     synth_classes    K for the synthetic set (5)
 *     synth_per_class  images per class (20)
 *     synth_size       image side in pixels (64)
 *     features         comma list of lbp, lpq (lbp)
 *     lmax             cascade depth L_max (3)
 *     scale            area scale S in (0, 1] (1.0)
 *     fusion           mean | product | max (mean)
 *     grid_c           comma list of C values; `2^e` accepted (2^-5, 2^-3, ..., 2^15)
 *     grid_gamma       comma list of gamma values (2^-15, 2^-13, ..., 2^3)
 *     grid_steps       threshold candidates per level (10)
 *     replications     R (10)
 *     seed             64-bit seed (1)
 *     out              output directory (out)
 */
#pragma once

#include "texcost/error.hpp"
#include "texcost/features.hpp"
#include "texcost/slf.hpp"
#include "texcost/svm.hpp"

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace texcost {

struct ExperimentConfig {
    std::filesystem::path manifest;
    int synth_classes{ 5 };
    int synth_per_class{ 20 };
    std::size_t synth_size{ 64 };
    std::vector<FeatureSetId> features{ FeatureSetId::lbp };
    int lmax{ 3 };
    double scale{ 1.0 };
    FusionRule fusion{ FusionRule::mean };
    std::vector<double> grid_c{ default_grid_c() };
    std::vector<double> grid_gamma{ default_grid_gamma() };
    int grid_steps{ 10 };
    int replications{ 10 };
    std::uint64_t seed{ 1 };
    std::filesystem::path out{ "out" };

    void validate() const {
        detail::require(scale > 0.0 && scale <= 1.0, "config: scale must lie in (0, 1]");
        detail::require(lmax >= 1, "config: lmax must be >= 1");
        detail::require(replications >= 1, "config: replications must be >= 1");
        detail::require(grid_steps >= 2, "config: grid_steps must be >= 2");
        detail::require(!features.empty(), "config: at least one feature set required");
        detail::require(!grid_c.empty() && !grid_gamma.empty(), "config: SVM grids must be non-empty");
    }

    [[nodiscard]] TrainOptions train_options() const {
        TrainOptions opts;
        opts.grid_c = grid_c;
        opts.grid_gamma = grid_gamma;
        return opts;
    }
};

namespace detail {

[[nodiscard]] inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string{ s.substr(b, e - b + 1) };
}

[[nodiscard]] inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto piece = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (!piece.empty()) {
            out.push_back(piece);
        }
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

template <typename T>
[[nodiscard]] T parse_number(const std::string &text, const std::string &key) {
    T value{};
    const auto *first = text.data();
    const auto *last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    require(ec == std::errc{} && ptr == last, "config: invalid value '" + text + "' for " + key);
    return value;
}

/// A real number, or `2^e` for a power of two.
[[nodiscard]] inline double parse_grid_value(const std::string &text, const std::string &key) {
    if (text.size() > 2 && text.starts_with("2^")) {
        return std::ldexp(1.0, parse_number<int>(text.substr(2), key));
    }
    return parse_number<double>(text, key);
}

}  // namespace detail

/// Apply one `key = value` setting.
inline void set_config_value(ExperimentConfig &cfg, const std::string &key, const std::string &value) {
    using detail::parse_number;
    if (key == "manifest") {
        cfg.manifest = value;
    } else if (key == "synth_classes") {
        cfg.synth_classes = parse_number<int>(value, key);
    } else if (key == "synth_per_class") {
        cfg.synth_per_class = parse_number<int>(value, key);
    } else if (key == "synth_size") {
        cfg.synth_size = parse_number<std::size_t>(value, key);
    } else if (key == "features") {
        cfg.features.clear();
        for (const auto &f : detail::split_list(value)) {
            cfg.features.push_back(parse_feature_set(f));
        }
    } else if (key == "lmax") {
        cfg.lmax = parse_number<int>(value, key);
    } else if (key == "scale") {
        cfg.scale = parse_number<double>(value, key);
    } else if (key == "fusion") {
        cfg.fusion = parse_fusion(value);
    } else if (key == "grid_c" || key == "grid_gamma") {
        std::vector<double> grid;
        for (const auto &v : detail::split_list(value)) {
            grid.push_back(detail::parse_grid_value(v, key));
        }
        (key == "grid_c" ? cfg.grid_c : cfg.grid_gamma) = std::move(grid);
    } else if (key == "grid_steps") {
        cfg.grid_steps = parse_number<int>(value, key);
    } else if (key == "replications") {
        cfg.replications = parse_number<int>(value, key);
    } else if (key == "seed") {
        cfg.seed = parse_number<std::uint64_t>(value, key);
    } else if (key == "out") {
        cfg.out = value;
    } else {
        throw error("config: unknown key '" + key + "'");
    }
}

[[nodiscard]] inline ExperimentConfig parse_config(std::istream &in, ExperimentConfig cfg = {}) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const auto body = detail::trim(std::string_view{ line }.substr(0, hash));
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        detail::require(eq != std::string::npos, "config line " + std::to_string(lineno) + ": expected key = value");
        set_config_value(cfg, detail::trim(std::string_view{ body }.substr(0, eq)), detail::trim(std::string_view{ body }.substr(eq + 1)));
    }
    return cfg;
}

[[nodiscard]] inline ExperimentConfig load_config(const std::filesystem::path &path) {
    std::ifstream in{ path };
    detail::require(static_cast<bool>(in), "config: cannot open " + path.string());
    return parse_config(in);
}

}  // namespace texcost
