/**
 * @file
 * @brief Dataset manifests, stratified 50/20/30 split replications and the synthetic grating set.
 */
#pragma once

#include "texcost/error.hpp"
#include "texcost/image.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace texcost {

struct ManifestEntry {
    /// Relative to the manifest's directory.
    std::filesystem::path image;
    int label{ 0 };
};

/**
 * @brief Image list with contiguous 0-based labels assigned in alphabetical order of class names.
 * @details On disk: a JSON object mapping relative image paths to class-name strings.
 */
struct DatasetManifest {
    std::filesystem::path root;
    std::vector<ManifestEntry> entries;
    std::vector<std::string> class_names;

    [[nodiscard]] int class_count() const noexcept { return static_cast<int>(class_names.size()); }
    [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }
    [[nodiscard]] std::filesystem::path resolve(std::size_t i) const { return root / entries[i].image; }

    void validate() const {
        detail::require(class_names.size() >= 2, "manifest: need at least two classes");
        std::vector<std::size_t> counts(class_names.size(), 0);
        for (const auto &e : entries) {
            detail::require(e.label >= 0 && e.label < class_count(), "manifest: label out of range");
            ++counts[static_cast<std::size_t>(e.label)];
        }
        for (std::size_t k = 0; k < counts.size(); ++k) {
            detail::require(counts[k] >= 4, "manifest: class '" + class_names[k] + "' has fewer than 4 samples");
        }
    }
};

[[nodiscard]] inline DatasetManifest manifest_from_json(const nlohmann::json &j, const std::filesystem::path &root) {
    detail::require(j.is_object(), "manifest: expected a JSON object of path -> label");
    std::map<std::string, int> label_index;
    for (const auto &[path, label] : j.items()) {
        detail::require(label.is_string(), "manifest: label for '" + path + "' is not a string");
        label_index.emplace(label.get<std::string>(), 0);
    }
    DatasetManifest m;
    m.root = root;
    int next = 0;
    for (auto &[name, idx] : label_index) {
        idx = next++;
        m.class_names.push_back(name);
    }
    for (const auto &[path, label] : j.items()) {
        m.entries.push_back(ManifestEntry{ path, label_index.at(label.get<std::string>()) });
    }
    m.validate();
    return m;
}

[[nodiscard]] inline DatasetManifest load_manifest(const std::filesystem::path &path) {
    std::ifstream in{ path };
    detail::require(static_cast<bool>(in), "manifest: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw error("manifest: " + std::string{ e.what() });
    }
    return manifest_from_json(j, path.parent_path());
}

[[nodiscard]] inline nlohmann::json to_json(const DatasetManifest &m) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto &e : m.entries) {
        j[e.image.generic_string()] = m.class_names[static_cast<std::size_t>(e.label)];
    }
    return j;
}

inline void save_json(const nlohmann::json &j, const std::filesystem::path &path) {
    std::ofstream out{ path };
    detail::require(static_cast<bool>(out), "cannot write " + path.string());
    out << j.dump(2) << '\n';
    detail::require(static_cast<bool>(out), "write failed for " + path.string());
}

[[nodiscard]] inline nlohmann::json load_json(const std::filesystem::path &path) {
    std::ifstream in{ path };
    detail::require(static_cast<bool>(in), "cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception &e) {
        throw error(path.string() + ": " + e.what());
    }
}

enum class SplitTag : std::uint8_t {
    train,
    validation,
    test,
};

/// Disjoint manifest-index lists for one replication.
struct SplitPlan {
    int replication{ 1 };
    std::uint64_t seed{ 0 };
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;

    [[nodiscard]] const std::vector<std::size_t> &indices(SplitTag tag) const {
        switch (tag) {
            case SplitTag::train:
                return train;
            case SplitTag::validation:
                return validation;
            case SplitTag::test:
                return test;
        }
        throw error("unknown split tag");
    }

    friend bool operator==(const SplitPlan &, const SplitPlan &) = default;
};

namespace detail {

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Unbiased draw in [0, bound) by rejection; portable across standard libraries.
[[nodiscard]] inline std::uint64_t bounded(std::mt19937_64 &rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % bound;
}

template <typename T>
void fisher_yates(std::vector<T> &v, std::mt19937_64 &rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[bounded(rng, i)]);
    }
}

/// Standard normal via Box-Muller on 53-bit uniforms.
[[nodiscard]] inline double standard_normal(std::mt19937_64 &rng) {
    const auto uniform = [&] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace detail

/// Per-class split sizes: floor(n/2) train, floor(n/5) validation, remainder test.
struct SplitSizes {
    std::size_t train;
    std::size_t validation;
    std::size_t test;
};

[[nodiscard]] constexpr SplitSizes split_sizes(std::size_t n) noexcept {
    const std::size_t tr = n / 2;
    const std::size_t va = n / 5;
    return SplitSizes{ tr, va, n - tr - va };
}

/**
 * @brief R stratified 50/20/30 partitions; replication r is shuffled with a generator keyed by (seed, r).
 */
[[nodiscard]] inline std::vector<SplitPlan> make_splits(const DatasetManifest &manifest, std::uint64_t seed, int replications) {
    manifest.validate();
    detail::require(replications >= 1, "make_splits: replications must be >= 1");
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(manifest.class_count()));
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        by_class[static_cast<std::size_t>(manifest.entries[i].label)].push_back(i);
    }

    std::vector<SplitPlan> plans;
    for (int r = 1; r <= replications; ++r) {
        SplitPlan plan{ r, seed, {}, {}, {} };
        std::mt19937_64 rng{ detail::splitmix64(seed ^ detail::splitmix64(static_cast<std::uint64_t>(r))) };
        for (auto members : by_class) {
            detail::fisher_yates(members, rng);
            const auto sizes = split_sizes(members.size());
            plan.train.insert(plan.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(sizes.train));
            plan.validation.insert(plan.validation.end(), members.begin() + static_cast<std::ptrdiff_t>(sizes.train),
                                   members.begin() + static_cast<std::ptrdiff_t>(sizes.train + sizes.validation));
            plan.test.insert(plan.test.end(), members.begin() + static_cast<std::ptrdiff_t>(sizes.train + sizes.validation), members.end());
        }
        plans.push_back(std::move(plan));
    }
    return plans;
}

[[nodiscard]] inline nlohmann::json to_json(const std::vector<SplitPlan> &plans) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto &p : plans) {
        arr.push_back({ { "replication", p.replication }, { "seed", p.seed }, { "train", p.train }, { "validation", p.validation }, { "test", p.test } });
    }
    return { { "format", "texcost-splits" }, { "version", 1 }, { "replications", arr } };
}

[[nodiscard]] inline std::vector<SplitPlan> splits_from_json(const nlohmann::json &j) {
    try {
        detail::require(j.at("format") == "texcost-splits" && j.at("version") == 1, "splits: unsupported format or version");
        std::vector<SplitPlan> plans;
        for (const auto &p : j.at("replications")) {
            plans.push_back(SplitPlan{ p.at("replication").get<int>(), p.at("seed").get<std::uint64_t>(),
                                       p.at("train").get<std::vector<std::size_t>>(), p.at("validation").get<std::vector<std::size_t>>(),
                                       p.at("test").get<std::vector<std::size_t>>() });
        }
        return plans;
    } catch (const nlohmann::json::exception &e) {
        throw error(std::string{ "splits: " } + e.what());
    }
}

/// Spatial frequency (cycles per pixel) of class @p k's grating.
[[nodiscard]] inline double synth_frequency(int k) noexcept { return 0.06 + 0.025 * static_cast<double>(k % 8); }

/**
 * @brief One synthetic sample: an oriented sinusoidal grating (orientation k pi / K, class-specific
 *        frequency, random phase) plus Gaussian noise with sigma 20, quantised to [0, 255].
 */
[[nodiscard]] inline GrayImage synth_image(int k, int class_count, std::size_t size, std::mt19937_64 &rng) {
    const double theta = std::numbers::pi * static_cast<double>(k) / static_cast<double>(class_count);
    const double freq = synth_frequency(k);
    const double phase = 2.0 * std::numbers::pi * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    std::vector<std::uint8_t> px(size * size);
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            const double u = static_cast<double>(x) * ct + static_cast<double>(y) * st;
            const double v = 128.0 + 80.0 * std::sin(2.0 * std::numbers::pi * freq * u + phase) + 20.0 * detail::standard_normal(rng);
            px[y * size + x] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    }
    return GrayImage{ size, size, std::move(px) };
}

/**
 * @brief Write K x n grating images as PGM under @p out_dir together with manifest.json.
 */
inline DatasetManifest synth_dataset(int class_count, int per_class, std::size_t size, std::uint64_t seed, const std::filesystem::path &out_dir) {
    detail::require(class_count >= 2, "synth: need at least two classes");
    detail::require(per_class >= 4, "synth: need at least 4 images per class");
    detail::require(size >= 32, "synth: image size must be >= 32");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    detail::require(!ec, "synth: cannot create " + out_dir.string() + ": " + ec.message());

    DatasetManifest m;
    m.root = out_dir;
    std::mt19937_64 rng{ detail::splitmix64(seed) };
    char buf[64];
    for (int k = 0; k < class_count; ++k) {
        std::snprintf(buf, sizeof buf, "class_%03d", k);
        const std::string cls = buf;
        m.class_names.push_back(cls);
        std::filesystem::create_directories(out_dir / cls, ec);
        detail::require(!ec, "synth: cannot create " + (out_dir / cls).string());
        for (int i = 0; i < per_class; ++i) {
            std::snprintf(buf, sizeof buf, "img_%04d.pgm", i);
            const std::filesystem::path rel = std::filesystem::path{ cls } / buf;
            write_pgm(synth_image(k, class_count, size, rng), out_dir / rel);
            m.entries.push_back(ManifestEntry{ rel, k });
        }
    }
    save_json(to_json(m), out_dir / "manifest.json");
    return m;
}

}  // namespace texcost
