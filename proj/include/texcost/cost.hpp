/**
 * @file
 * @brief Operation-count cost ledger and closed-form cost evaluators.
 *
 * Measured costs come from a CostLedger filled while the engine runs; analytic costs come from the
 * evaluators below. Classification cost counts classifier calls weighted by the classifier's
 * support-vector count Gamma (and by the input dimension D in the global model). Feature cost
 * counts pixels times the filter window W.
 */
#pragma once

#include "texcost/error.hpp"
#include "texcost/image.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace texcost {

/**
 * @brief Exact counters accumulated while classifying a set of samples.
 */
struct CostLedger {
    std::uint64_t classifier_calls{ 0 };
    /// Sum over calls of Gamma.
    std::uint64_t weighted_classifier_ops{ 0 };
    /// Sum over calls of Gamma x D.
    std::uint64_t weighted_dimension_ops{ 0 };
    /// Sum over extractions of pixels x W.
    std::uint64_t feature_ops{ 0 };
    /// Ne_L, indexed by level - 1. Only filled by cascade runs.
    std::vector<std::uint64_t> exit_counts;
    /// Ne.
    std::uint64_t sample_count{ 0 };

    void charge_classification(std::uint64_t gamma, std::uint64_t dimension) {
        ++classifier_calls;
        weighted_classifier_ops += gamma;
        weighted_dimension_ops += gamma * dimension;
    }

    void charge_feature(std::uint64_t pixels, std::uint64_t window) { feature_ops += pixels * window; }

    void record_sample() { ++sample_count; }

    void record_exit(int level) {
        detail::require(level >= 1, "CostLedger::record_exit: level must be >= 1");
        const auto idx = static_cast<std::size_t>(level - 1);
        if (exit_counts.size() <= idx) {
            exit_counts.resize(idx + 1, 0);
        }
        ++exit_counts[idx];
        ++sample_count;
    }

    /// Feature plus classification operations in the global (dot-product) cost model.
    [[nodiscard]] std::uint64_t global_ops() const noexcept { return feature_ops + weighted_dimension_ops; }

    CostLedger &merge(const CostLedger &other) {
        classifier_calls += other.classifier_calls;
        weighted_classifier_ops += other.weighted_classifier_ops;
        weighted_dimension_ops += other.weighted_dimension_ops;
        feature_ops += other.feature_ops;
        sample_count += other.sample_count;
        if (exit_counts.size() < other.exit_counts.size()) {
            exit_counts.resize(other.exit_counts.size(), 0);
        }
        for (std::size_t i = 0; i < other.exit_counts.size(); ++i) {
            exit_counts[i] += other.exit_counts[i];
        }
        return *this;
    }

    friend CostLedger operator+(CostLedger lhs, const CostLedger &rhs) { return lhs.merge(rhs); }

    /// Field-wise equality; trailing zero exit counts are ignored.
    friend bool operator==(const CostLedger &a, const CostLedger &b) {
        const std::size_t n = std::max(a.exit_counts.size(), b.exit_counts.size());
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint64_t ea = i < a.exit_counts.size() ? a.exit_counts[i] : 0;
            const std::uint64_t eb = i < b.exit_counts.size() ? b.exit_counts[i] : 0;
            if (ea != eb) {
                return false;
            }
        }
        return a.classifier_calls == b.classifier_calls && a.weighted_classifier_ops == b.weighted_classifier_ops &&
               a.weighted_dimension_ops == b.weighted_dimension_ops && a.feature_ops == b.feature_ops &&
               a.sample_count == b.sample_count;
    }
};

/// Window W and dimension D of one feature set.
struct FeatureCostShape {
    std::uint64_t window{ 1 };
    std::uint64_t dimension{ 1 };
};

/**
 * @brief Parameters of the analytic cost model.
 * @details gamma[l - 1][j] is the classifier cost of feature set j at level l.
 */
struct CostParams {
    std::uint64_t pixels{ 1 };
    std::vector<FeatureCostShape> feature_sets;
    double scale{ 1.0 };
    std::vector<std::vector<std::uint64_t>> gamma;

    [[nodiscard]] std::size_t feature_set_count() const noexcept { return feature_sets.size(); }

    void validate() const {
        detail::require(scale > 0.0 && scale <= 1.0, "CostParams: scale must lie in (0, 1]");
        detail::require(pixels >= 1, "CostParams: pixel count must be >= 1");
        detail::require(!feature_sets.empty(), "CostParams: at least one feature set required");
        for (const auto &fs : feature_sets) {
            detail::require(fs.window >= 1 && fs.dimension >= 1, "CostParams: W and D must be >= 1");
        }
        for (const auto &per_set : gamma) {
            detail::require(per_set.size() == feature_sets.size(), "CostParams: gamma table does not match feature-set count");
        }
    }

    [[nodiscard]] std::span<const std::uint64_t> gamma_at(int level) const {
        detail::require(level >= 1 && static_cast<std::size_t>(level) <= gamma.size(), "CostParams: no gamma for level");
        return gamma[static_cast<std::size_t>(level - 1)];
    }
};

/// One test sample's classifier-call count f_i and classifier weight Gamma_i.
struct SampleCost {
    std::uint64_t calls{ 0 };
    std::uint64_t gamma{ 0 };
};

/// Classification-only cost: sum of f_i x Gamma_i, as recorded by a ledger.
[[nodiscard]] inline std::uint64_t cost_classification(const CostLedger &ledger) noexcept {
    return ledger.weighted_classifier_ops;
}

/// Classification-only cost from per-sample records.
[[nodiscard]] inline std::uint64_t cost_classification(std::span<const SampleCost> samples) noexcept {
    std::uint64_t total = 0;
    for (const auto &s : samples) {
        total += s.calls * s.gamma;
    }
    return total;
}

/// SLF classification cost Ne x f(L) x Gamma(L) with f(L) = 4^(L-1) x M, one shared Gamma.
[[nodiscard]] inline std::uint64_t cost_slf(std::uint64_t samples, int level, std::uint64_t gamma, std::uint64_t feature_sets = 1) {
    return samples * grid_count(level) * feature_sets * gamma;
}

/// SLF classification cost with a distinct Gamma per feature set: Ne x 4^(L-1) x sum_j Gamma_j.
[[nodiscard]] inline std::uint64_t cost_slf(std::uint64_t samples, int level, std::span<const std::uint64_t> gamma_per_set) {
    const std::uint64_t gamma_sum = std::accumulate(gamma_per_set.begin(), gamma_per_set.end(), std::uint64_t{ 0 });
    return samples * grid_count(level) * gamma_sum;
}

/**
 * @brief Cascade classification cost: sum over exit levels L of Ne_L x sum_{l <= L} f(l) Gamma(l).
 * @param exit_counts Ne_L indexed by L - 1
 * @param gamma gamma[l - 1][j] per level and feature set
 */
[[nodiscard]] inline std::uint64_t cost_amlf(std::span<const std::uint64_t> exit_counts,
                                             const std::vector<std::vector<std::uint64_t>> &gamma) {
    detail::require(exit_counts.size() <= gamma.size(), "cost_amlf: exit counts cover more levels than the gamma table");
    std::uint64_t total = 0;
    std::uint64_t prefix = 0;
    for (std::size_t i = 0; i < exit_counts.size(); ++i) {
        prefix += cost_slf(1, static_cast<int>(i + 1), gamma[i]);
        total += exit_counts[i] * prefix;
    }
    return total;
}

/// Feature extraction cost S x P x W. With W = 1 this is the plain S x P pixel cost.
[[nodiscard]] inline double cost_feature(double scale, double pixels, double window = 1.0) noexcept {
    return scale * (pixels * window);
}

/// Classification cost in the global model for one sample: f(L) x Gamma(L) x D, one feature set.
[[nodiscard]] inline std::uint64_t cost_c(int level, std::uint64_t gamma, std::uint64_t dimension) {
    return grid_count(level) * gamma * dimension;
}

/// Classification cost in the global model, summed over feature sets with their own Gamma and D.
[[nodiscard]] inline std::uint64_t cost_c(int level, const CostParams &params) {
    const auto gamma = params.gamma_at(level);
    std::uint64_t total = 0;
    for (std::size_t j = 0; j < params.feature_sets.size(); ++j) {
        total += cost_c(level, gamma[j], params.feature_sets[j].dimension);
    }
    return total;
}

/// Feature cost of one sample summed over feature sets, each at its own window.
[[nodiscard]] inline double cost_feature(const CostParams &params) {
    double total = 0.0;
    for (const auto &fs : params.feature_sets) {
        total += cost_feature(params.scale, static_cast<double>(params.pixels), static_cast<double>(fs.window));
    }
    return total;
}

/// Global SLF cost Ne x (Cost^F(S) + Cost^C(L)).
[[nodiscard]] inline double global_slf(std::uint64_t samples, int level, const CostParams &params) {
    params.validate();
    return static_cast<double>(samples) * (cost_feature(params) + static_cast<double>(cost_c(level, params)));
}

/**
 * @brief Global cascade cost: sum over L of Ne_L x sum_{l <= L} (Cost^F(S) + Cost^C(l)).
 * @details The classification term is indexed by the visited level l.
 */
[[nodiscard]] inline double global_amlf(std::span<const std::uint64_t> exit_counts, const CostParams &params) {
    params.validate();
    detail::require(exit_counts.size() <= params.gamma.size(), "global_amlf: exit counts cover more levels than the gamma table");
    const double feature = cost_feature(params);
    double total = 0.0;
    double prefix = 0.0;
    for (std::size_t i = 0; i < exit_counts.size(); ++i) {
        prefix += feature + static_cast<double>(cost_c(static_cast<int>(i + 1), params));
        total += static_cast<double>(exit_counts[i]) * prefix;
    }
    return total;
}

}  // namespace texcost
