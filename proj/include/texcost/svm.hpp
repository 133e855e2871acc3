/**
 * @file
 * @brief Gaussian-kernel C-SVM: SMO solver, one-vs-one multiclass voting, [-1, +1] attribute
 *        scaling, hold-out grid search and JSON model files.
 */
#pragma once

#include "texcost/error.hpp"
#include "texcost/features.hpp"
#include "texcost/probability.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace texcost {

/**
 * @brief Per-attribute minimum and maximum of the fitting data.
 */
struct NormalizationStats {
    std::vector<double> min;
    std::vector<double> max;

    [[nodiscard]] std::size_t dimension() const noexcept { return min.size(); }

    [[nodiscard]] static NormalizationStats fit(std::span<const std::vector<double>> rows) {
        detail::require(!rows.empty(), "NormalizationStats::fit: no rows");
        NormalizationStats stats{ rows.front(), rows.front() };
        for (const auto &r : rows) {
            detail::require(r.size() == stats.min.size(), "NormalizationStats::fit: inconsistent dimensions");
            for (std::size_t a = 0; a < r.size(); ++a) {
                stats.min[a] = std::min(stats.min[a], r[a]);
                stats.max[a] = std::max(stats.max[a], r[a]);
            }
        }
        return stats;
    }

    /// Linear map of [min, max] onto [-1, +1]; constant attributes map to 0, out-of-range values clamp.
    [[nodiscard]] std::vector<double> apply(std::span<const double> x) const {
        detail::require(x.size() == min.size(), "normalize: dimension mismatch (got " + std::to_string(x.size()) + ", expected " +
                                                    std::to_string(min.size()) + ")");
        std::vector<double> out(x.size());
        for (std::size_t a = 0; a < x.size(); ++a) {
            const double range = max[a] - min[a];
            if (range <= 0.0) {
                out[a] = 0.0;
            } else {
                out[a] = std::clamp(2.0 * (x[a] - min[a]) / range - 1.0, -1.0, 1.0);
            }
        }
        return out;
    }

    friend bool operator==(const NormalizationStats &, const NormalizationStats &) = default;
};

[[nodiscard]] inline std::vector<double> normalize(const FeatureVector &fv, const NormalizationStats &stats) {
    return stats.apply(fv.values);
}

/// Feature rows with integer class labels 0..K-1.
struct LabeledSet {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;

    [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
    [[nodiscard]] bool empty() const noexcept { return labels.empty(); }

    void add(std::vector<double> x, int label) {
        features.push_back(std::move(x));
        labels.push_back(label);
    }

    [[nodiscard]] static LabeledSet concat(const LabeledSet &a, const LabeledSet &b) {
        LabeledSet out = a;
        out.features.insert(out.features.end(), b.features.begin(), b.features.end());
        out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
        return out;
    }
};

struct SmoOptions {
    /// Stopping tolerance on the maximal KKT violation.
    double tolerance{ 1e-3 };
    /// Iteration cap; 0 selects max(100000, 100 n).
    std::size_t max_iterations{ 0 };
    /// Budget for the cached kernel rows of one pairwise problem.
    std::size_t cache_bytes{ std::size_t{ 256 } << 20 };
};

[[nodiscard]] inline std::vector<double> default_grid_c() {
    std::vector<double> grid;
    for (int e = -5; e <= 15; e += 2) {
        grid.push_back(std::ldexp(1.0, e));
    }
    return grid;
}

[[nodiscard]] inline std::vector<double> default_grid_gamma() {
    std::vector<double> grid;
    for (int e = -15; e <= 3; e += 2) {
        grid.push_back(std::ldexp(1.0, e));
    }
    return grid;
}

struct TrainOptions {
    std::vector<double> grid_c{ default_grid_c() };
    std::vector<double> grid_gamma{ default_grid_gamma() };
    SmoOptions smo{};
};

namespace detail {

[[nodiscard]] inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        sum += d * d;
    }
    return sum;
}

/// Squared distances between the rows of one set; dense when it fits, computed on demand otherwise.
class DistanceTable {
  public:
    static constexpr std::size_t dense_limit = 4096;

    explicit DistanceTable(const std::vector<std::vector<double>> &rows) :
        rows_{ &rows } {
        const std::size_t n = rows.size();
        if (n <= dense_limit) {
            dense_.assign(n * n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) {
                    const double d = squared_distance(rows[i], rows[j]);
                    dense_[i * n + j] = d;
                    dense_[j * n + i] = d;
                }
            }
        }
    }

    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const {
        if (!dense_.empty()) {
            return dense_[i * rows_->size() + j];
        }
        return i == j ? 0.0 : squared_distance((*rows_)[i], (*rows_)[j]);
    }

  private:
    const std::vector<std::vector<double>> *rows_;
    std::vector<double> dense_;
};

/// Bounded FIFO cache of kernel rows for one pairwise problem.
class KernelRowCache {
  public:
    KernelRowCache(std::size_t n, std::size_t budget_bytes, std::function<double(std::size_t, std::size_t)> kernel) :
        n_{ n }, kernel_{ std::move(kernel) }, slot_of_(n, npos) {
        const std::size_t row_bytes = std::max<std::size_t>(1, n * sizeof(double));
        capacity_ = std::clamp<std::size_t>(budget_bytes / row_bytes, 2, std::max<std::size_t>(n, 2));
    }

    [[nodiscard]] std::span<const double> row(std::size_t i) {
        if (slot_of_[i] != npos) {
            return storage_[slot_of_[i]];
        }
        std::size_t slot;
        if (storage_.size() < capacity_) {
            slot = storage_.size();
            storage_.emplace_back(n_);
        } else {
            const std::size_t victim = order_.front();
            order_.pop_front();
            slot = slot_of_[victim];
            slot_of_[victim] = npos;
        }
        auto &r = storage_[slot];
        for (std::size_t j = 0; j < n_; ++j) {
            r[j] = kernel_(i, j);
        }
        slot_of_[i] = slot;
        order_.push_back(i);
        return r;
    }

  private:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    std::size_t n_;
    std::size_t capacity_{ 2 };
    std::function<double(std::size_t, std::size_t)> kernel_;
    std::vector<std::size_t> slot_of_;
    std::vector<std::vector<double>> storage_;
    std::deque<std::size_t> order_;
};

struct BinarySolution {
    std::vector<double> alpha;
    double rho{ 0.0 };
    std::size_t iterations{ 0 };
};

/**
 * @brief Dual C-SVC solved by SMO with second-order working-set selection.
 * @details Minimises 1/2 a'Qa - e'a subject to 0 <= a <= C and y'a = 0 with Q_ij = y_i y_j K_ij.
 *          The kernel diagonal is assumed to be 1 (Gaussian kernel).
 */
[[nodiscard]] inline BinarySolution solve_binary(std::span<const std::int8_t> y, double c, KernelRowCache &kernel, const SmoOptions &options) {
    constexpr double tau = 1e-12;
    constexpr double inf = std::numeric_limits<double>::infinity();
    const std::size_t n = y.size();
    const std::size_t max_iter = options.max_iterations != 0 ? options.max_iterations : std::max<std::size_t>(100000, 100 * n);

    BinarySolution sol;
    sol.alpha.assign(n, 0.0);
    std::vector<double> grad(n, -1.0);
    auto &alpha = sol.alpha;
    const auto is_upper = [&](std::size_t t) { return alpha[t] >= c; };
    const auto is_lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

    while (sol.iterations < max_iter) {
        // select i: maximal violation in I_up
        double gmax = -inf;
        std::size_t i = n;
        for (std::size_t t = 0; t < n; ++t) {
            if (y[t] == 1) {
                if (!is_upper(t) && -grad[t] >= gmax) {
                    gmax = -grad[t];
                    i = t;
                }
            } else if (!is_lower(t) && grad[t] >= gmax) {
                gmax = grad[t];
                i = t;
            }
        }
        if (i == n) {
            break;
        }
        const auto k_i = kernel.row(i);
        double gmax2 = -inf;
        double obj_min = inf;
        std::size_t j = n;
        for (std::size_t t = 0; t < n; ++t) {
            if (y[t] == 1) {
                if (!is_lower(t)) {
                    const double diff = gmax + grad[t];
                    gmax2 = std::max(gmax2, grad[t]);
                    if (diff > 0.0) {
                        const double quad = 2.0 - 2.0 * y[i] * k_i[t];
                        const double obj = -(diff * diff) / (quad > 0.0 ? quad : tau);
                        if (obj <= obj_min) {
                            obj_min = obj;
                            j = t;
                        }
                    }
                }
            } else if (!is_upper(t)) {
                const double diff = gmax - grad[t];
                gmax2 = std::max(gmax2, -grad[t]);
                if (diff > 0.0) {
                    const double quad = 2.0 + 2.0 * y[i] * k_i[t];
                    const double obj = -(diff * diff) / (quad > 0.0 ? quad : tau);
                    if (obj <= obj_min) {
                        obj_min = obj;
                        j = t;
                    }
                }
            }
        }
        if (gmax + gmax2 < options.tolerance || j == n) {
            break;
        }
        ++sol.iterations;

        const double q_ij = y[i] * y[j] * k_i[j];
        const double old_ai = alpha[i];
        const double old_aj = alpha[j];
        if (y[i] != y[j]) {
            double quad = 2.0 + 2.0 * q_ij;
            if (quad <= 0.0) {
                quad = tau;
            }
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if (diff > 0.0) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if (alpha[j] > c) {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            double quad = 2.0 - 2.0 * q_ij;
            if (quad <= 0.0) {
                quad = tau;
            }
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if (alpha[j] < 0.0) {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if (sum > c) {
                if (alpha[j] > c) {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        const double d_i = (alpha[i] - old_ai) * y[i];
        const double d_j = (alpha[j] - old_aj) * y[j];
        const auto k_j = kernel.row(j);
        // kernel.row(j) may evict row i; only k_j is read from here on
        for (std::size_t t = 0; t < n; ++t) {
            grad[t] += y[t] * (d_j * k_j[t]);
        }
        const auto k_i2 = kernel.row(i);
        for (std::size_t t = 0; t < n; ++t) {
            grad[t] += y[t] * (d_i * k_i2[t]);
        }
    }

    // rho from free vectors, or the midpoint of the feasible interval
    double ub = inf;
    double lb = -inf;
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * grad[t];
        if (is_upper(t)) {
            if (y[t] == -1) {
                ub = std::min(ub, yg);
            } else {
                lb = std::max(lb, yg);
            }
        } else if (is_lower(t)) {
            if (y[t] == 1) {
                ub = std::min(ub, yg);
            } else {
                lb = std::max(lb, yg);
            }
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    sol.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
    return sol;
}

}  // namespace detail

/// Decision f(x) = sum coef * K(sv, x) - rho; f > 0 votes for @p positive, otherwise @p negative.
struct PairwiseMachine {
    int positive{ 0 };
    int negative{ 1 };
    double rho{ 0.0 };
    std::vector<std::uint32_t> support;
    std::vector<double> coef;

    friend bool operator==(const PairwiseMachine &, const PairwiseMachine &) = default;
};

/// Votes per class given the kernel value of every support vector.
[[nodiscard]] inline std::vector<int> pairwise_votes(std::span<const PairwiseMachine> pairs, int class_count, std::span<const double> kvals) {
    std::vector<int> votes(static_cast<std::size_t>(class_count), 0);
    for (const auto &p : pairs) {
        double f = -p.rho;
        for (std::size_t s = 0; s < p.support.size(); ++s) {
            f += p.coef[s] * kvals[p.support[s]];
        }
        ++votes[static_cast<std::size_t>(f > 0.0 ? p.positive : p.negative)];
    }
    return votes;
}

/**
 * @brief Trained one-vs-one Gaussian-kernel SVM.
 * @details Support vectors are stored already normalised and deduplicated across pairwise
 *          machines. Scores are the vote shares of the K(K-1)/2 pairwise decisions.
 */
class KernelClassifier {
  public:
    using PairMachine = PairwiseMachine;

    KernelClassifier() = default;

    KernelClassifier(int class_count, double c, double gamma, NormalizationStats stats,
                     std::vector<std::vector<double>> support_vectors, std::vector<PairMachine> pairs) :
        class_count_{ class_count }, c_{ c }, gamma_{ gamma }, stats_{ std::move(stats) },
        support_vectors_{ std::move(support_vectors) }, pairs_{ std::move(pairs) } {
        detail::require(class_count_ >= 2, "KernelClassifier: need at least two classes");
        detail::require(pairs_.size() == static_cast<std::size_t>(class_count_ * (class_count_ - 1) / 2),
                        "KernelClassifier: expected K(K-1)/2 pairwise machines");
        for (const auto &sv : support_vectors_) {
            detail::require(sv.size() == stats_.dimension(), "KernelClassifier: support vector dimension mismatch");
        }
        for (const auto &p : pairs_) {
            detail::require(p.support.size() == p.coef.size(), "KernelClassifier: support/coefficient length mismatch");
            for (const auto s : p.support) {
                detail::require(s < support_vectors_.size(), "KernelClassifier: support index out of range");
            }
        }
    }

    [[nodiscard]] int class_count() const noexcept { return class_count_; }
    [[nodiscard]] std::size_t dimension() const noexcept { return stats_.dimension(); }
    [[nodiscard]] double c() const noexcept { return c_; }
    [[nodiscard]] double gamma() const noexcept { return gamma_; }
    [[nodiscard]] const NormalizationStats &normalization() const noexcept { return stats_; }
    [[nodiscard]] const std::vector<std::vector<double>> &support_vectors() const noexcept { return support_vectors_; }
    [[nodiscard]] const std::vector<PairMachine> &pairs() const noexcept { return pairs_; }

    /// Gamma: number of distinct support vectors, i.e. kernel evaluations per classification.
    [[nodiscard]] std::uint64_t gamma_cost() const noexcept { return support_vectors_.size(); }

    /// Pairwise votes per class for an already-normalised input.
    [[nodiscard]] std::vector<int> votes_normalized(std::span<const double> x) const {
        std::vector<double> kvals(support_vectors_.size());
        for (std::size_t s = 0; s < support_vectors_.size(); ++s) {
            kvals[s] = std::exp(-gamma_ * detail::squared_distance(support_vectors_[s], x));
        }
        return votes_from_kernel(kvals);
    }

    [[nodiscard]] std::vector<int> votes_from_kernel(std::span<const double> kvals) const {
        return pairwise_votes(pairs_, class_count_, kvals);
    }

    [[nodiscard]] ProbabilityVector classify(std::span<const double> raw) const {
        const auto votes = votes_normalized(stats_.apply(raw));
        return votes_to_probability(votes);
    }

    [[nodiscard]] ProbabilityVector classify(const FeatureVector &fv) const { return classify(std::span<const double>{ fv.values }); }

    [[nodiscard]] static ProbabilityVector votes_to_probability(std::span<const int> votes) {
        const double total = std::accumulate(votes.begin(), votes.end(), 0.0);
        detail::require(total > 0.0, "votes_to_probability: no votes");
        ProbabilityVector pv;
        pv.probs.reserve(votes.size());
        for (const int v : votes) {
            pv.probs.push_back(static_cast<double>(v) / total);
        }
        return pv;
    }

    friend bool operator==(const KernelClassifier &, const KernelClassifier &) = default;

  private:
    int class_count_{ 0 };
    double c_{ 1.0 };
    double gamma_{ 1.0 };
    NormalizationStats stats_;
    std::vector<std::vector<double>> support_vectors_;
    std::vector<PairMachine> pairs_;
};

[[nodiscard]] inline std::uint64_t gamma_cost(const KernelClassifier &model) noexcept { return model.gamma_cost(); }

[[nodiscard]] inline ProbabilityVector classify(const KernelClassifier &model, const FeatureVector &fv) { return model.classify(fv); }

namespace detail {

/// Number of classes K of a label vector; labels must cover 0..K-1 with K >= 2.
[[nodiscard]] inline int checked_class_count(std::span<const int> labels) {
    require(!labels.empty(), "svm: empty training set");
    const auto [lo, hi] = std::minmax_element(labels.begin(), labels.end());
    require(*lo >= 0, "svm: negative class label");
    const int k = *hi + 1;
    std::vector<bool> seen(static_cast<std::size_t>(k), false);
    for (const int l : labels) {
        seen[static_cast<std::size_t>(l)] = true;
    }
    require(std::all_of(seen.begin(), seen.end(), [](bool s) { return s; }), "svm: class labels must be contiguous from 0");
    require(k >= 2, "svm: at least two classes required");
    return k;
}

inline void check_dimensions(const LabeledSet &set, std::size_t dim) {
    require(set.features.size() == set.labels.size(), "svm: feature/label count mismatch");
    for (const auto &x : set.features) {
        require(x.size() == dim, "svm: inconsistent feature dimensions");
    }
}

/// Pairwise machines trained on normalised rows, with support vectors referenced by row index.
struct TrainedPairs {
    std::vector<KernelClassifier::PairMachine> pairs;
    std::vector<std::size_t> sv_rows;
};

[[nodiscard]] inline TrainedPairs train_pairs(const DistanceTable &dist, std::span<const int> labels, int k, double c, double gamma,
                                              const SmoOptions &options) {
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }

    struct RawPair {
        int a, b;
        double rho;
        std::vector<std::size_t> rows;
        std::vector<double> coef;
    };
    std::vector<RawPair> raw;
    std::set<std::size_t> used;
    for (int a = 0; a < k; ++a) {
        for (int b = a + 1; b < k; ++b) {
            std::vector<std::size_t> idx = by_class[static_cast<std::size_t>(a)];
            idx.insert(idx.end(), by_class[static_cast<std::size_t>(b)].begin(), by_class[static_cast<std::size_t>(b)].end());
            std::vector<std::int8_t> y(idx.size());
            for (std::size_t t = 0; t < idx.size(); ++t) {
                y[t] = labels[idx[t]] == a ? 1 : -1;
            }
            KernelRowCache cache{ idx.size(), options.cache_bytes,
                                  [&](std::size_t i, std::size_t j) { return std::exp(-gamma * dist(idx[i], idx[j])); } };
            const auto sol = solve_binary(y, c, cache, options);
            RawPair rp{ a, b, sol.rho, {}, {} };
            for (std::size_t t = 0; t < idx.size(); ++t) {
                if (sol.alpha[t] > 0.0) {
                    rp.rows.push_back(idx[t]);
                    rp.coef.push_back(y[t] * sol.alpha[t]);
                    used.insert(idx[t]);
                }
            }
            raw.push_back(std::move(rp));
        }
    }

    TrainedPairs out;
    out.sv_rows.assign(used.begin(), used.end());
    std::vector<std::uint32_t> slot(labels.size(), 0);
    for (std::size_t s = 0; s < out.sv_rows.size(); ++s) {
        slot[out.sv_rows[s]] = static_cast<std::uint32_t>(s);
    }
    for (auto &rp : raw) {
        KernelClassifier::PairMachine pm{ rp.a, rp.b, rp.rho, {}, std::move(rp.coef) };
        pm.support.reserve(rp.rows.size());
        for (const auto r : rp.rows) {
            pm.support.push_back(slot[r]);
        }
        out.pairs.push_back(std::move(pm));
    }
    return out;
}

[[nodiscard]] inline std::vector<std::vector<double>> normalize_rows(const LabeledSet &set, const NormalizationStats &stats) {
    std::vector<std::vector<double>> rows;
    rows.reserve(set.size());
    for (const auto &x : set.features) {
        rows.push_back(stats.apply(x));
    }
    return rows;
}

}  // namespace detail

/**
 * @brief Fit a one-vs-one Gaussian SVM with fixed (C, gamma). Normalisation is fitted on @p data.
 */
[[nodiscard]] inline KernelClassifier fit(const LabeledSet &data, double c, double gamma, const SmoOptions &options = {}) {
    const int k = detail::checked_class_count(data.labels);
    detail::check_dimensions(data, data.features.front().size());
    detail::require(c > 0.0 && gamma > 0.0, "fit: C and gamma must be positive");
    auto stats = NormalizationStats::fit(data.features);
    const auto rows = detail::normalize_rows(data, stats);
    const detail::DistanceTable dist{ rows };
    auto trained = detail::train_pairs(dist, data.labels, k, c, gamma, options);
    std::vector<std::vector<double>> svs;
    svs.reserve(trained.sv_rows.size());
    for (const auto r : trained.sv_rows) {
        svs.push_back(rows[r]);
    }
    return KernelClassifier{ k, c, gamma, std::move(stats), std::move(svs), std::move(trained.pairs) };
}

/// Fraction of @p data whose arg-max score equals its label.
[[nodiscard]] inline double accuracy(const KernelClassifier &model, const LabeledSet &data) {
    detail::require(!data.empty(), "accuracy: empty set");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        hits += model.classify(data.features[i]).argmax() == data.labels[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

struct GridCell {
    double c{ 0.0 };
    double gamma{ 0.0 };
    double accuracy{ 0.0 };
    std::uint64_t support_vectors{ 0 };
};

struct GridSearchResult {
    double c{ 0.0 };
    double gamma{ 0.0 };
    double accuracy{ -1.0 };
    std::vector<GridCell> cells;
};

/**
 * @brief Hold-out grid search: fit on @p train for every (C, gamma), score on @p validation.
 * @details Ties go to the smaller C, then the smaller gamma.
 */
[[nodiscard]] inline GridSearchResult grid_search(const LabeledSet &train, const LabeledSet &validation, const TrainOptions &options = {}) {
    const int k = detail::checked_class_count(train.labels);
    detail::require(!validation.empty(), "grid_search: empty validation set");
    const std::size_t dim = train.features.front().size();
    detail::check_dimensions(train, dim);
    detail::check_dimensions(validation, dim);
    detail::require(!options.grid_c.empty() && !options.grid_gamma.empty(), "grid_search: empty grid");

    auto grid_c = options.grid_c;
    auto grid_gamma = options.grid_gamma;
    std::sort(grid_c.begin(), grid_c.end());
    std::sort(grid_gamma.begin(), grid_gamma.end());
    grid_c.erase(std::unique(grid_c.begin(), grid_c.end()), grid_c.end());
    grid_gamma.erase(std::unique(grid_gamma.begin(), grid_gamma.end()), grid_gamma.end());

    const auto stats = NormalizationStats::fit(train.features);
    const auto rows = detail::normalize_rows(train, stats);
    const auto val_rows = detail::normalize_rows(validation, stats);
    const detail::DistanceTable dist{ rows };

    // train x validation squared distances, shared by every cell
    std::vector<double> cross(rows.size() * val_rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t v = 0; v < val_rows.size(); ++v) {
            cross[i * val_rows.size() + v] = detail::squared_distance(rows[i], val_rows[v]);
        }
    }

    GridSearchResult result;
    for (const double c : grid_c) {
        for (const double gamma : grid_gamma) {
            const auto trained = detail::train_pairs(dist, train.labels, k, c, gamma, options.smo);
            std::size_t hits = 0;
            std::vector<double> kvals(trained.sv_rows.size());
            for (std::size_t v = 0; v < val_rows.size(); ++v) {
                for (std::size_t s = 0; s < trained.sv_rows.size(); ++s) {
                    kvals[s] = std::exp(-gamma * cross[trained.sv_rows[s] * val_rows.size() + v]);
                }
                const auto votes = pairwise_votes(trained.pairs, k, kvals);
                const auto pred = KernelClassifier::votes_to_probability(votes).argmax();
                hits += pred == validation.labels[v] ? 1 : 0;
            }
            const double acc = static_cast<double>(hits) / static_cast<double>(val_rows.size());
            result.cells.push_back(GridCell{ c, gamma, acc, trained.sv_rows.size() });
            if (acc > result.accuracy) {
                result.accuracy = acc;
                result.c = c;
                result.gamma = gamma;
            }
        }
    }
    return result;
}

/**
 * @brief Grid-search (C, gamma) on train vs validation, then refit on train and validation together.
 */
[[nodiscard]] inline KernelClassifier train(const LabeledSet &train_set, const LabeledSet &validation, const TrainOptions &options = {}) {
    const auto search = grid_search(train_set, validation, options);
    return fit(LabeledSet::concat(train_set, validation), search.c, search.gamma, options.smo);
}

// ---------------------------------------------------------------------------------------------
// JSON model format
// ---------------------------------------------------------------------------------------------

[[nodiscard]] inline nlohmann::json to_json(const KernelClassifier &model) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto &p : model.pairs()) {
        pairs.push_back({ { "positive", p.positive }, { "negative", p.negative }, { "rho", p.rho }, { "support", p.support }, { "coef", p.coef } });
    }
    return {
        { "classes", model.class_count() },
        { "dimension", model.dimension() },
        { "c", model.c() },
        { "gamma", model.gamma() },
        { "norm_min", model.normalization().min },
        { "norm_max", model.normalization().max },
        { "support_vectors", model.support_vectors() },
        { "pairs", pairs },
        { "gamma_cost", model.gamma_cost() },
    };
}

[[nodiscard]] inline KernelClassifier classifier_from_json(const nlohmann::json &j) {
    try {
        NormalizationStats stats{ j.at("norm_min").get<std::vector<double>>(), j.at("norm_max").get<std::vector<double>>() };
        detail::require(stats.min.size() == stats.max.size(), "model: normalisation vectors differ in length");
        detail::require(stats.dimension() == j.at("dimension").get<std::size_t>(), "model: dimension field disagrees with normalisation");
        std::vector<KernelClassifier::PairMachine> pairs;
        for (const auto &p : j.at("pairs")) {
            pairs.push_back({ p.at("positive").get<int>(), p.at("negative").get<int>(), p.at("rho").get<double>(),
                              p.at("support").get<std::vector<std::uint32_t>>(), p.at("coef").get<std::vector<double>>() });
        }
        KernelClassifier model{ j.at("classes").get<int>(), j.at("c").get<double>(), j.at("gamma").get<double>(), std::move(stats),
                                j.at("support_vectors").get<std::vector<std::vector<double>>>(), std::move(pairs) };
        detail::require(model.gamma_cost() == j.at("gamma_cost").get<std::uint64_t>(), "model: gamma_cost disagrees with support vectors");
        return model;
    } catch (const nlohmann::json::exception &e) {
        throw error(std::string{ "model: malformed classifier: " } + e.what());
    }
}

}  // namespace texcost
