/**
 * @file
 * @brief Training, calibration and evaluation pipelines over a split plan, and the full
 *        replicated experiment.
 *
 * Every loaded sample carries the tag of the split it came from. Functions that fit classifiers
 * or calibrate thresholds refuse samples tagged as test.
 */
#pragma once

#include "texcost/amlf.hpp"
#include "texcost/config.hpp"
#include "texcost/cost.hpp"
#include "texcost/dataset.hpp"
#include "texcost/error.hpp"
#include "texcost/features.hpp"
#include "texcost/image.hpp"
#include "texcost/model_io.hpp"
#include "texcost/report.hpp"
#include "texcost/slf.hpp"
#include "texcost/svm.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace texcost {

/// An image already resampled to the experiment scale, with its provenance.
struct TaggedImage {
    GrayImage image;
    int label{ 0 };
    SplitTag tag{ SplitTag::train };
    std::size_t index{ 0 };
    /// Pixel count P of the file before rescaling.
    std::size_t original_pixels{ 0 };
};

[[nodiscard]] inline std::vector<TaggedImage> load_split(const DatasetManifest &manifest, const SplitPlan &plan, SplitTag tag, double scale) {
    std::vector<TaggedImage> out;
    for (const auto idx : plan.indices(tag)) {
        detail::require(idx < manifest.size(), "load_split: index out of range");
        auto img = load_image(manifest.resolve(idx));
        const std::size_t p = img.pixel_count();
        out.push_back(TaggedImage{ rescale(img, scale), manifest.entries[idx].label, tag, idx, p });
    }
    return out;
}

/// Aborts with an error if any sample comes from the test split.
inline void require_no_test_samples(std::span<const TaggedImage> samples, const char *where) {
    for (const auto &s : samples) {
        if (s.tag == SplitTag::test) {
            throw error(std::string{ where } + ": test sample #" + std::to_string(s.index) + " reached a training path");
        }
    }
}

/**
 * @brief Training rows for level-L classifiers: every patch of every image is one sample carrying
 *        its image's label.
 */
[[nodiscard]] inline LabeledSet level_features(std::span<const TaggedImage> samples, int level, FeatureSetId set) {
    require_no_test_samples(samples, "level_features");
    LabeledSet out;
    for (const auto &s : samples) {
        for (const auto &patch : split_patches(s.image, level).patches) {
            out.add(extract(patch, set).values, s.label);
        }
    }
    return out;
}

namespace detail {

[[nodiscard]] inline std::vector<GrayImage> images_of(std::span<const TaggedImage> samples) {
    std::vector<GrayImage> out;
    out.reserve(samples.size());
    for (const auto &s : samples) {
        out.push_back(s.image);
    }
    return out;
}

[[nodiscard]] inline std::vector<int> labels_of(std::span<const TaggedImage> samples) {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const auto &s : samples) {
        out.push_back(s.label);
    }
    return out;
}

}  // namespace detail

/// Hyper-parameters chosen for one (level, feature set) cell.
struct LevelSearch {
    int level{ 1 };
    FeatureSetId set{ FeatureSetId::lbp };
    GridSearchResult search;
};

/**
 * @brief Grid-search every (level, feature set) classifier on train vs validation and fit it on
 *        the training split only. The result has no thresholds yet.
 */
[[nodiscard]] inline ModelFile train_stage(const ExperimentConfig &config, std::span<const TaggedImage> train,
                                           std::span<const TaggedImage> validation, std::vector<LevelSearch> *searches = nullptr) {
    config.validate();
    require_no_test_samples(train, "train_stage");
    require_no_test_samples(validation, "train_stage");
    ModelFile file;
    file.features = config.features;
    file.scale = config.scale;
    file.fusion = config.fusion;
    const auto options = config.train_options();
    for (int l = 1; l <= config.lmax; ++l) {
        SlfLevelModel<KernelClassifier> level{ l, config.features, {} };
        for (const auto set : config.features) {
            const auto tr = level_features(train, l, set);
            const auto va = level_features(validation, l, set);
            auto search = grid_search(tr, va, options);
            level.classifiers.push_back(fit(tr, search.c, search.gamma, options.smo));
            if (searches != nullptr) {
                searches->push_back(LevelSearch{ l, set, std::move(search) });
            }
        }
        file.model.levels.push_back(std::move(level));
    }
    return file;
}

/**
 * @brief Calibrate thresholds with the train-only classifiers of @p staged on the validation
 *        split, then refit every classifier on train and validation together with its selected
 *        (C, gamma).
 */
[[nodiscard]] inline ModelFile calibrate_and_refit(const ExperimentConfig &config, const ModelFile &staged, std::span<const TaggedImage> train,
                                                   std::span<const TaggedImage> validation, CalibrationResult *calibration = nullptr) {
    require_no_test_samples(train, "calibrate_and_refit");
    require_no_test_samples(validation, "calibrate_and_refit");
    detail::require(!staged.calibrated, "calibrate_and_refit: model is already calibrated");
    const auto images = detail::images_of(validation);
    const auto labels = detail::labels_of(validation);
    auto cal = calibrate_thresholds(images, labels, staged.model, staged.fusion, config.grid_steps);

    ModelFile out = staged;
    out.calibrated = true;
    out.model.thresholds = cal.thresholds;
    out.model.ranges = cal.ranges;
    const SmoOptions smo{};
    for (auto &level : out.model.levels) {
        for (std::size_t j = 0; j < level.feature_sets.size(); ++j) {
            const auto &old = level.classifiers[j];
            const auto joint = LabeledSet::concat(level_features(train, level.level, level.feature_sets[j]),
                                                  level_features(validation, level.level, level.feature_sets[j]));
            level.classifiers[j] = fit(joint, old.c(), old.gamma(), smo);
        }
    }
    out.model.validate();
    if (calibration != nullptr) {
        *calibration = std::move(cal);
    }
    return out;
}

struct TrainedSystem {
    ModelFile model;
    std::vector<LevelSearch> searches;
    CalibrationResult calibration;
};

[[nodiscard]] inline TrainedSystem train_pipeline(const ExperimentConfig &config, const DatasetManifest &manifest, const SplitPlan &plan) {
    const auto train = load_split(manifest, plan, SplitTag::train, config.scale);
    const auto validation = load_split(manifest, plan, SplitTag::validation, config.scale);
    TrainedSystem sys;
    const auto staged = train_stage(config, train, validation, &sys.searches);
    sys.model = calibrate_and_refit(config, staged, train, validation, &sys.calibration);
    return sys;
}

/// Short system label: B (LBP), P (LPQ) or BP, followed by the level or '*' for the cascade.
[[nodiscard]] inline std::string system_id(std::span<const FeatureSetId> features, bool cascade, int level) {
    std::string id;
    for (const auto f : features) {
        id += f == FeatureSetId::lbp ? "B" : "P";
    }
    return id + (cascade ? std::string{ "*" } : std::to_string(level));
}

[[nodiscard]] inline CostParams cost_params_for(const ModelFile &file, std::size_t original_pixels) {
    CostParams params;
    params.pixels = original_pixels;
    params.scale = file.scale;
    for (const auto f : file.features) {
        const auto &d = descriptor(f);
        params.feature_sets.push_back(FeatureCostShape{ d.window, d.dimension });
    }
    for (const auto &level : file.model.levels) {
        std::vector<std::uint64_t> g;
        for (const auto &c : level.classifiers) {
            g.push_back(c.gamma_cost());
        }
        params.gamma.push_back(std::move(g));
    }
    return params;
}

/// Outcome of classifying a test split with one system.
struct Evaluation {
    ReportRow row;
    CostLedger ledger;
    std::vector<int> predictions;
};

/**
 * @brief Classify every test sample with SLF at @p level (cascade == false) or with the cascade.
 * @details Measured costs come from the ledger; analytic costs from the closed-form evaluators
 *          with the model's Gamma values.
 */
[[nodiscard]] inline Evaluation evaluate(const ModelFile &file, std::span<const TaggedImage> test, bool cascade, int level, int replication) {
    detail::require(!test.empty(), "evaluate: empty test set");
    if (cascade) {
        detail::require(file.calibrated, "evaluate: cascade needs a calibrated model");
        file.model.validate();
    } else {
        detail::require(level >= 1 && level <= file.model.max_level(), "evaluate: level out of range");
    }

    Evaluation ev;
    ev.row.system = system_id(file.features, cascade, level);
    ev.row.replication = replication;
    double analytic_global = 0.0;
    std::size_t hits = 0;
    for (const auto &s : test) {
        const auto params = cost_params_for(file, s.original_pixels);
        int pred;
        if (cascade) {
            const auto r = amlf_classify(s.image, file.model, file.fusion, ev.ledger);
            pred = r.decision;
            std::vector<std::uint64_t> one(static_cast<std::size_t>(r.exit_level), 0);
            one.back() = 1;
            analytic_global += global_amlf(one, params);
        } else {
            pred = slf_classify(s.image, file.model.levels[static_cast<std::size_t>(level - 1)], file.fusion, ev.ledger).argmax();
            ev.ledger.record_sample();
            analytic_global += global_slf(1, level, params);
        }
        ev.predictions.push_back(pred);
        hits += pred == s.label ? 1 : 0;
    }

    const auto gamma = cost_params_for(file, 1).gamma;
    ev.row.accuracy = static_cast<double>(hits) / static_cast<double>(test.size());
    ev.row.measured_cost = cost_classification(ev.ledger);
    ev.row.measured_global_cost = ev.ledger.global_ops();
    ev.row.analytic_global_cost = analytic_global;
    if (cascade) {
        ev.row.exits = ev.ledger.exit_counts;
        ev.row.exits.resize(static_cast<std::size_t>(file.model.max_level()), 0);
        ev.row.analytic_cost = static_cast<double>(cost_amlf(ev.row.exits, gamma));
    } else {
        ev.row.analytic_cost = static_cast<double>(cost_slf(test.size(), level, gamma[static_cast<std::size_t>(level - 1)]));
    }
    return ev;
}

/// Rows for SLF at every level 1..L_max followed by the cascade, for one replication.
[[nodiscard]] inline std::vector<ReportRow> evaluate_all(const ModelFile &file, std::span<const TaggedImage> test, int replication) {
    std::vector<ReportRow> rows;
    for (int l = 1; l <= file.model.max_level(); ++l) {
        rows.push_back(evaluate(file, test, false, l, replication).row);
    }
    rows.push_back(evaluate(file, test, true, 0, replication).row);
    return rows;
}

/**
 * @brief Synthesise the dataset if no manifest is configured, split it R times, and train and
 *        evaluate every replication. Writes report.csv, report.json and summary.csv under config.out.
 */
[[nodiscard]] inline std::vector<ReportRow> run_experiment(const ExperimentConfig &config) {
    config.validate();
    std::filesystem::create_directories(config.out);
    const DatasetManifest manifest =
        config.manifest.empty()
            ? synth_dataset(config.synth_classes, config.synth_per_class, config.synth_size, config.seed, config.out / "synth")
            : load_manifest(config.manifest);
    const auto plans = make_splits(manifest, config.seed, config.replications);
    save_json(to_json(plans), config.out / "splits.json");

    std::vector<ReportRow> rows;
    for (const auto &plan : plans) {
        const auto sys = train_pipeline(config, manifest, plan);
        const auto test = load_split(manifest, plan, SplitTag::test, config.scale);
        auto rep = evaluate_all(sys.model, test, plan.replication);
        rows.insert(rows.end(), rep.begin(), rep.end());
    }
    emit_report(rows, ReportFormat::csv, config.out / "report.csv");
    emit_report(rows, ReportFormat::json, config.out / "report.json");
    emit_summary(summarize(rows), ReportFormat::csv, config.out / "summary.csv");
    return rows;
}

}  // namespace texcost
