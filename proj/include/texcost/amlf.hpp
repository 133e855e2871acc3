/**
 * @file
 * @brief Adaptive multi-level cascade over SLF levels with top-2 margin gating, and the two-step
 *        threshold calibration on a validation set.
 */
#pragma once

#include "texcost/cost.hpp"
#include "texcost/error.hpp"
#include "texcost/image.hpp"
#include "texcost/probability.hpp"
#include "texcost/slf.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace texcost {

/// Largest minus second-largest probability.
[[nodiscard]] inline double margin(const ProbabilityVector &p) {
    detail::require(p.size() >= 2, "margin: need at least two classes");
    double first = -std::numeric_limits<double>::infinity();
    double second = -std::numeric_limits<double>::infinity();
    for (const double v : p.probs) {
        if (v > first) {
            second = first;
            first = v;
        } else if (v > second) {
            second = v;
        }
    }
    return first - second;
}

struct CascadeResult {
    int decision{ 0 };
    int exit_level{ 1 };
    std::vector<double> margins;
};

/// Observed margin extremes at one level.
struct MarginRange {
    int level{ 1 };
    double low{ 0.0 };
    double high{ 0.0 };

    friend bool operator==(const MarginRange &, const MarginRange &) = default;
};

/**
 * @brief Drive the cascade: evaluate levels 1..L_max in order and stop at the first level whose
 *        margin reaches its threshold, or at L_max.
 * @param evaluate_level called as evaluate_level(l, ledger) and must charge its own cost
 * @details Records the exit level (and the sample) in @p ledger. The decision is the arg-max of
 *          the exiting level's probabilities.
 */
template <typename LevelFn>
CascadeResult run_cascade(int max_level, std::span<const double> thresholds, LevelFn &&evaluate_level, CostLedger &ledger) {
    detail::require(max_level >= 1, "run_cascade: L_max must be >= 1");
    detail::require(thresholds.size() == static_cast<std::size_t>(max_level - 1), "run_cascade: need L_max - 1 thresholds");
    CascadeResult result;
    for (int l = 1; l <= max_level; ++l) {
        const ProbabilityVector p = evaluate_level(l, ledger);
        const double m = margin(p);
        result.margins.push_back(m);
        if (l == max_level || m >= thresholds[static_cast<std::size_t>(l - 1)]) {
            result.decision = p.argmax();
            result.exit_level = l;
            ledger.record_exit(l);
            return result;
        }
    }
    throw error("run_cascade: unreachable");
}

/**
 * @brief Stacked SLF levels 1..L_max with rejection thresholds for levels 1..L_max-1.
 */
template <PatchClassifier Classifier = KernelClassifier>
struct AmlfModel {
    std::vector<SlfLevelModel<Classifier>> levels;
    std::vector<double> thresholds;
    std::vector<MarginRange> ranges;

    [[nodiscard]] int max_level() const noexcept { return static_cast<int>(levels.size()); }

    void validate() const {
        detail::require(!levels.empty(), "AmlfModel: no levels");
        detail::require(thresholds.size() + 1 == levels.size(), "AmlfModel: need L_max - 1 thresholds");
        for (std::size_t i = 0; i < levels.size(); ++i) {
            detail::require(levels[i].level == static_cast<int>(i + 1), "AmlfModel: levels must be 1..L_max in order");
            levels[i].validate();
        }
    }
};

template <PatchClassifier Classifier>
CascadeResult amlf_classify(const GrayImage &im, const AmlfModel<Classifier> &model, FusionRule rule, CostLedger &ledger) {
    model.validate();
    return run_cascade(
        model.max_level(), model.thresholds,
        [&](int l, CostLedger &led) { return slf_classify(im, model.levels[static_cast<std::size_t>(l - 1)], rule, led); }, ledger);
}

/// Per-level SLF output of one validation sample: probabilities and classification cost.
struct LevelOutcome {
    ProbabilityVector probs;
    std::uint64_t cost{ 0 };
};

/**
 * @brief SLF outputs of every validation sample at every level, computed once and reused across
 *        the threshold grid.
 */
struct ValidationCache {
    std::vector<int> labels;
    /// outcomes[sample][level - 1]
    std::vector<std::vector<LevelOutcome>> outcomes;

    [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
    [[nodiscard]] int max_level() const { return outcomes.empty() ? 0 : static_cast<int>(outcomes.front().size()); }
};

template <PatchClassifier Classifier>
[[nodiscard]] ValidationCache build_validation_cache(std::span<const GrayImage> images, std::span<const int> labels,
                                                     const AmlfModel<Classifier> &model, FusionRule rule) {
    detail::require(images.size() == labels.size(), "build_validation_cache: image/label count mismatch");
    detail::require(!images.empty(), "build_validation_cache: empty validation set");
    ValidationCache cache;
    cache.labels.assign(labels.begin(), labels.end());
    for (const auto &im : images) {
        std::vector<LevelOutcome> per_level;
        for (const auto &level : model.levels) {
            CostLedger ledger;
            auto p = slf_classify(im, level, rule, ledger);
            per_level.push_back(LevelOutcome{ std::move(p), ledger.weighted_classifier_ops });
        }
        cache.outcomes.push_back(std::move(per_level));
    }
    return cache;
}

/// Minimum and maximum margin over @p outputs.
[[nodiscard]] inline MarginRange margin_range(std::span<const ProbabilityVector> outputs, int level) {
    detail::require(!outputs.empty(), "margin_range: empty validation set");
    MarginRange r{ level, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity() };
    for (const auto &p : outputs) {
        const double m = margin(p);
        r.low = std::min(r.low, m);
        r.high = std::max(r.high, m);
    }
    return r;
}

[[nodiscard]] inline MarginRange margin_range(const ValidationCache &cache, int level) {
    detail::require(cache.size() > 0, "margin_range: empty validation set");
    detail::require(level >= 1 && level <= cache.max_level(), "margin_range: level out of range");
    std::vector<ProbabilityVector> outputs;
    outputs.reserve(cache.size());
    for (const auto &o : cache.outcomes) {
        outputs.push_back(o[static_cast<std::size_t>(level - 1)].probs);
    }
    return margin_range(outputs, level);
}

/// Run SLF at @p level on every sample and return the observed margin range.
template <PatchClassifier Classifier>
[[nodiscard]] MarginRange margin_range(std::span<const GrayImage> images, int level, const AmlfModel<Classifier> &model, FusionRule rule) {
    detail::require(!images.empty(), "margin_range: empty validation set");
    detail::require(level >= 1 && level <= model.max_level(), "margin_range: level out of range");
    std::vector<ProbabilityVector> outputs;
    outputs.reserve(images.size());
    for (const auto &im : images) {
        CostLedger scratch;
        outputs.push_back(slf_classify(im, model.levels[static_cast<std::size_t>(level - 1)], rule, scratch));
    }
    return margin_range(outputs, level);
}

/// @p steps equally spaced values spanning [low, high]; a single value when the range is collapsed.
[[nodiscard]] inline std::vector<double> threshold_candidates(const MarginRange &range, int steps) {
    detail::require(steps >= 2, "threshold_candidates: grid steps must be >= 2");
    if (range.low == range.high) {
        return { range.low };
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(steps));
    for (int s = 0; s < steps; ++s) {
        out.push_back(s == steps - 1 ? range.high
                                     : range.low + (range.high - range.low) * static_cast<double>(s) / static_cast<double>(steps - 1));
    }
    return out;
}

struct ThresholdScore {
    std::size_t correct{ 0 };
    std::uint64_t cost{ 0 };
};

/// Validation hits and cascade cost for one threshold vector, using cached level outputs.
[[nodiscard]] inline ThresholdScore score_thresholds(const ValidationCache &cache, std::span<const double> thresholds) {
    const int lmax = cache.max_level();
    ThresholdScore score;
    for (std::size_t s = 0; s < cache.size(); ++s) {
        const auto &levels = cache.outcomes[s];
        for (int l = 1; l <= lmax; ++l) {
            const auto &out = levels[static_cast<std::size_t>(l - 1)];
            score.cost += out.cost;
            if (l == lmax || margin(out.probs) >= thresholds[static_cast<std::size_t>(l - 1)]) {
                score.correct += out.probs.argmax() == cache.labels[s] ? 1 : 0;
                break;
            }
        }
    }
    return score;
}

struct CalibrationResult {
    std::vector<double> thresholds;
    std::vector<MarginRange> ranges;
    double accuracy{ 0.0 };
    std::uint64_t cost{ 0 };
};

/**
 * @brief Grid search over threshold combinations between each level's observed margin extremes.
 * @details Picks the highest validation accuracy; ties go to the lower cascade cost, then to the
 *          lexicographically larger threshold vector.
 */
[[nodiscard]] inline CalibrationResult calibrate_thresholds(const ValidationCache &cache, int grid_steps) {
    detail::require(cache.size() > 0, "calibrate_thresholds: empty validation set");
    detail::require(grid_steps >= 2, "calibrate_thresholds: grid steps must be >= 2");
    const int lmax = cache.max_level();
    detail::require(lmax >= 1, "calibrate_thresholds: no levels");
    for (const auto &o : cache.outcomes) {
        detail::require(static_cast<int>(o.size()) == lmax, "calibrate_thresholds: ragged validation cache");
    }

    CalibrationResult best;
    std::vector<std::vector<double>> candidates;
    for (int l = 1; l < lmax; ++l) {
        best.ranges.push_back(margin_range(cache, l));
        candidates.push_back(threshold_candidates(best.ranges.back(), grid_steps));
    }

    std::vector<std::size_t> odometer(candidates.size(), 0);
    std::vector<double> current(candidates.size());
    bool have_best = false;
    std::size_t best_correct = 0;
    while (true) {
        for (std::size_t l = 0; l < candidates.size(); ++l) {
            current[l] = candidates[l][odometer[l]];
        }
        const auto score = score_thresholds(cache, current);
        const bool better = !have_best || score.correct > best_correct ||
                            (score.correct == best_correct &&
                             (score.cost < best.cost || (score.cost == best.cost && current > best.thresholds)));
        if (better) {
            have_best = true;
            best_correct = score.correct;
            best.cost = score.cost;
            best.thresholds = current;
        }
        std::size_t pos = 0;
        while (pos < odometer.size() && ++odometer[pos] == candidates[pos].size()) {
            odometer[pos++] = 0;
        }
        if (pos == odometer.size()) {
            break;
        }
    }
    best.accuracy = static_cast<double>(best_correct) / static_cast<double>(cache.size());
    return best;
}

/// Calibrate thresholds for @p model on validation images; the model's classifiers must not have seen them.
template <PatchClassifier Classifier>
[[nodiscard]] CalibrationResult calibrate_thresholds(std::span<const GrayImage> images, std::span<const int> labels,
                                                     const AmlfModel<Classifier> &model, FusionRule rule, int grid_steps) {
    return calibrate_thresholds(build_validation_cache(images, labels, model, rule), grid_steps);
}

}  // namespace texcost
