/**
 * @file
 * @brief Versioned JSON model files holding a full cascade: per-level classifiers, thresholds and
 *        the margin ranges they were calibrated in.
 */
#pragma once

#include "texcost/amlf.hpp"
#include "texcost/dataset.hpp"
#include "texcost/error.hpp"
#include "texcost/features.hpp"
#include "texcost/slf.hpp"
#include "texcost/svm.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace texcost {

inline constexpr int model_format_version = 1;

/// A cascade plus the settings it was trained under.
struct ModelFile {
    AmlfModel<KernelClassifier> model;
    std::vector<FeatureSetId> features;
    double scale{ 1.0 };
    FusionRule fusion{ FusionRule::mean };
    /// false for a cascade whose classifiers saw only the training split and have no thresholds yet
    bool calibrated{ false };
};

[[nodiscard]] inline nlohmann::json to_json(const ModelFile &file) {
    nlohmann::json features = nlohmann::json::array();
    for (const auto f : file.features) {
        features.push_back(std::string{ to_string(f) });
    }
    nlohmann::json levels = nlohmann::json::array();
    for (const auto &level : file.model.levels) {
        nlohmann::json classifiers = nlohmann::json::array();
        for (const auto &c : level.classifiers) {
            classifiers.push_back(to_json(c));
        }
        levels.push_back({ { "level", level.level }, { "classifiers", classifiers } });
    }
    nlohmann::json ranges = nlohmann::json::array();
    for (const auto &r : file.model.ranges) {
        ranges.push_back({ { "level", r.level }, { "min", r.low }, { "max", r.high } });
    }
    return {
        { "format", "texcost-model" },
        { "version", model_format_version },
        { "status", file.calibrated ? "calibrated" : "staged" },
        { "features", features },
        { "scale", file.scale },
        { "fusion", std::string{ to_string(file.fusion) } },
        { "lmax", file.model.max_level() },
        { "thresholds", file.model.thresholds },
        { "margin_ranges", ranges },
        { "levels", levels },
    };
}

[[nodiscard]] inline ModelFile model_from_json(const nlohmann::json &j) {
    try {
        detail::require(j.at("format") == "texcost-model", "model: not a texcost model file");
        detail::require(j.at("version") == model_format_version, "model: unsupported version " + j.at("version").dump());
        ModelFile file;
        file.calibrated = j.at("status") == "calibrated";
        for (const auto &f : j.at("features")) {
            file.features.push_back(parse_feature_set(f.get<std::string>()));
        }
        file.scale = j.at("scale").get<double>();
        file.fusion = parse_fusion(j.at("fusion").get<std::string>());
        file.model.thresholds = j.at("thresholds").get<std::vector<double>>();
        for (const auto &r : j.at("margin_ranges")) {
            file.model.ranges.push_back(MarginRange{ r.at("level").get<int>(), r.at("min").get<double>(), r.at("max").get<double>() });
        }
        for (const auto &lv : j.at("levels")) {
            SlfLevelModel<KernelClassifier> level;
            level.level = lv.at("level").get<int>();
            level.feature_sets = file.features;
            for (const auto &c : lv.at("classifiers")) {
                level.classifiers.push_back(classifier_from_json(c));
            }
            file.model.levels.push_back(std::move(level));
        }
        detail::require(file.model.max_level() == j.at("lmax").get<int>(), "model: lmax disagrees with level list");
        if (file.calibrated) {
            file.model.validate();
        } else {
            for (const auto &level : file.model.levels) {
                level.validate();
            }
        }
        return file;
    } catch (const nlohmann::json::exception &e) {
        throw error(std::string{ "model: " } + e.what());
    }
}

inline void save_model(const ModelFile &file, const std::filesystem::path &path) { save_json(to_json(file), path); }

[[nodiscard]] inline ModelFile load_model(const std::filesystem::path &path) { return model_from_json(load_json(path)); }

}  // namespace texcost
