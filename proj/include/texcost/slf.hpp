/**
 * @file
 * @brief Single-level multi-feature-vector classification: split an image into the level-L patch
 *        grid, classify every (patch, feature set) vector and fuse the scores.
 */
#pragma once

#include "texcost/cost.hpp"
#include "texcost/error.hpp"
#include "texcost/features.hpp"
#include "texcost/image.hpp"
#include "texcost/probability.hpp"
#include "texcost/svm.hpp"

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace texcost {

enum class FusionRule : std::uint8_t {
    mean,
    product,
    max,
};

[[nodiscard]] inline std::string_view to_string(FusionRule rule) {
    switch (rule) {
        case FusionRule::mean:
            return "mean";
        case FusionRule::product:
            return "product";
        case FusionRule::max:
            return "max";
    }
    throw error("unknown fusion rule");
}

[[nodiscard]] inline FusionRule parse_fusion(std::string_view name) {
    if (name == "mean") {
        return FusionRule::mean;
    }
    if (name == "product") {
        return FusionRule::product;
    }
    if (name == "max") {
        return FusionRule::max;
    }
    throw error("unknown fusion rule '" + std::string{ name } + "'");
}

/// Anything that turns a feature vector into class scores and reports its cost weight Gamma.
template <typename T>
concept PatchClassifier = requires(const T &c, const FeatureVector &fv) {
    { c.classify(fv) } -> std::convertible_to<ProbabilityVector>;
    { c.gamma_cost() } -> std::convertible_to<std::uint64_t>;
    { c.dimension() } -> std::convertible_to<std::size_t>;
    { c.class_count() } -> std::convertible_to<int>;
};

static_assert(PatchClassifier<KernelClassifier>);

/// Scores s_i^j for patch i and feature set j, stored at i * M + j.
struct ScoreSet {
    std::size_t patch_count{ 0 };
    std::size_t feature_set_count{ 0 };
    std::vector<ProbabilityVector> scores;

    [[nodiscard]] const ProbabilityVector &at(std::size_t patch, std::size_t set) const { return scores[patch * feature_set_count + set]; }
};

/**
 * @brief Combine score vectors into one probability vector.
 * @details mean: (1/n) sum; product and max are renormalised to sum 1. A product that vanishes for
 *          every class yields the uniform distribution.
 */
[[nodiscard]] inline ProbabilityVector fuse(std::span<const ProbabilityVector> scores, FusionRule rule = FusionRule::mean) {
    detail::require(!scores.empty(), "fuse: empty score set");
    const std::size_t k = scores.front().size();
    detail::require(k >= 1, "fuse: zero-length score vector");
    for (const auto &s : scores) {
        detail::require(s.size() == k, "fuse: inconsistent class count");
    }
    if (scores.size() == 1) {
        return scores.front();
    }

    std::vector<double> out(k, rule == FusionRule::product ? 1.0 : 0.0);
    for (const auto &s : scores) {
        for (std::size_t c = 0; c < k; ++c) {
            switch (rule) {
                case FusionRule::mean:
                    out[c] += s[c];
                    break;
                case FusionRule::product:
                    out[c] *= s[c];
                    break;
                case FusionRule::max:
                    out[c] = std::max(out[c], s[c]);
                    break;
            }
        }
    }
    double total = 0.0;
    for (const double v : out) {
        total += v;
    }
    if (total <= 0.0) {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(k));
    } else {
        const double inv = rule == FusionRule::mean ? 1.0 / static_cast<double>(scores.size()) : 1.0 / total;
        for (auto &v : out) {
            v *= inv;
        }
    }
    return ProbabilityVector{ std::move(out) };
}

[[nodiscard]] inline ProbabilityVector fuse(const ScoreSet &scores, FusionRule rule = FusionRule::mean) {
    detail::require(scores.scores.size() == scores.patch_count * scores.feature_set_count, "fuse: score set shape mismatch");
    return fuse(std::span<const ProbabilityVector>{ scores.scores }, rule);
}

/**
 * @brief The classifiers for one grid level, one per feature set.
 */
template <PatchClassifier Classifier = KernelClassifier>
struct SlfLevelModel {
    int level{ 1 };
    std::vector<FeatureSetId> feature_sets;
    std::vector<Classifier> classifiers;

    [[nodiscard]] int class_count() const { return classifiers.front().class_count(); }

    void validate() const {
        detail::require(level >= 1, "SlfLevelModel: level must be >= 1");
        detail::require(!feature_sets.empty(), "SlfLevelModel: no feature sets");
        detail::require(classifiers.size() == feature_sets.size(), "SlfLevelModel: one classifier per feature set required");
        for (std::size_t j = 0; j < classifiers.size(); ++j) {
            detail::require(classifiers[j].class_count() == classifiers.front().class_count(), "SlfLevelModel: classifiers disagree on K");
            detail::require(classifiers[j].dimension() == descriptor(feature_sets[j]).dimension,
                            "SlfLevelModel: classifier dimension does not match its feature set");
        }
    }
};

/// Classify every (patch, feature set) vector of @p im at the model's level.
template <PatchClassifier Classifier>
[[nodiscard]] ScoreSet slf_scores(const GrayImage &im, const SlfLevelModel<Classifier> &model, CostLedger &ledger) {
    model.validate();
    const auto grid = split_patches(im, model.level);
    const std::size_t m = model.feature_sets.size();

    // extract everything first, then classify
    std::vector<FeatureVector> vectors;
    vectors.reserve(grid.patches.size() * m);
    for (const auto &patch : grid.patches) {
        for (const auto set : model.feature_sets) {
            vectors.push_back(extract(patch, set, &ledger));
        }
    }

    ScoreSet out{ grid.patches.size(), m, {} };
    out.scores.reserve(vectors.size());
    for (std::size_t v = 0; v < vectors.size(); ++v) {
        const auto &classifier = model.classifiers[v % m];
        out.scores.push_back(classifier.classify(vectors[v]));
        ledger.charge_classification(classifier.gamma_cost(), classifier.dimension());
    }
    return out;
}

/**
 * @brief Fused class probabilities P_L for @p im.
 * @details Charges N x M classifier calls and the feature-extraction work to @p ledger. Does not
 *          count the sample; callers record it.
 */
template <PatchClassifier Classifier>
[[nodiscard]] ProbabilityVector slf_classify(const GrayImage &im, const SlfLevelModel<Classifier> &model, FusionRule rule,
                                             CostLedger &ledger) {
    return fuse(slf_scores(im, model, ledger), rule);
}

}  // namespace texcost
