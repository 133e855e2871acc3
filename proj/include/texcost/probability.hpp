#pragma once

#include "texcost/error.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace texcost {

/// Per-class scores that are non-negative and sum to one.
struct ProbabilityVector {
    std::vector<double> probs;

    [[nodiscard]] std::size_t size() const noexcept { return probs.size(); }
    [[nodiscard]] double operator[](std::size_t k) const noexcept { return probs[k]; }

    /// Index of the largest entry; ties go to the lowest index.
    [[nodiscard]] int argmax() const {
        detail::require(!probs.empty(), "ProbabilityVector::argmax: empty vector");
        std::size_t best = 0;
        for (std::size_t k = 1; k < probs.size(); ++k) {
            if (probs[k] > probs[best]) {
                best = k;
            }
        }
        return static_cast<int>(best);
    }

    [[nodiscard]] bool is_valid(double tolerance = 1e-9) const noexcept {
        if (probs.empty()) {
            return false;
        }
        double sum = 0.0;
        for (const double p : probs) {
            if (!(p >= 0.0)) {
                return false;
            }
            sum += p;
        }
        return std::abs(sum - 1.0) <= tolerance;
    }

    friend bool operator==(const ProbabilityVector &, const ProbabilityVector &) = default;
};

}  // namespace texcost
