// Independent oracles and fixtures shared by the unit tests and the acceptance runner.
// Nothing here calls into the code it checks, except to read plain data types.
#pragma once

#include "texcost/texcost.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace texcost::oracle {

inline GrayImage random_image(std::size_t w, std::size_t h, std::mt19937_64 &rng, int lo = 0, int hi = 255) {
    std::uniform_int_distribution<int> dist(lo, hi);
    std::vector<std::uint8_t> px(w * h);
    for (auto &p : px) {
        p = static_cast<std::uint8_t>(dist(rng));
    }
    return GrayImage{ w, h, std::move(px) };
}

// ---- LBP ------------------------------------------------------------------------------------

/// Code built from an explicit neighbour walk: top-left, top, top-right, right, bottom-right, bottom, bottom-left, left.
inline int oracle_lbp_code(const GrayImage &img, std::size_t x, std::size_t y) {
    const int c = img.at(x, y);
    const int n[8] = {
        img.at(x - 1, y - 1), img.at(x, y - 1), img.at(x + 1, y - 1), img.at(x + 1, y),
        img.at(x + 1, y + 1), img.at(x, y + 1), img.at(x - 1, y + 1), img.at(x - 1, y),
    };
    int code = 0;
    for (int i = 0; i < 8; ++i) {
        if (n[i] >= c) {
            code += 1 << i;
        }
    }
    return code;
}

inline bool oracle_is_uniform(int code) {
    int changes = 0;
    for (int i = 0; i < 8; ++i) {
        const int a = (code >> i) & 1;
        const int b = (code >> ((i + 1) % 8)) & 1;
        changes += a != b ? 1 : 0;
    }
    return changes <= 2;
}

/// Bin of a code: rank among uniform codes, or 58 for the rest.
inline int oracle_lbp_bin(int code) {
    if (!oracle_is_uniform(code)) {
        return 58;
    }
    int rank = 0;
    for (int c = 0; c < code; ++c) {
        rank += oracle_is_uniform(c) ? 1 : 0;
    }
    return rank;
}

/// Raw bin counts over all interior pixels.
inline std::vector<long> oracle_lbp_counts(const GrayImage &img) {
    std::vector<long> counts(59, 0);
    for (std::size_t y = 1; y + 1 < img.height(); ++y) {
        for (std::size_t x = 1; x + 1 < img.width(); ++x) {
            ++counts[static_cast<std::size_t>(oracle_lbp_bin(oracle_lbp_code(img, x, y)))];
        }
    }
    return counts;
}

// ---- LPQ ------------------------------------------------------------------------------------

/// Code of the 7x7 window centred at (cx, cy) by explicit double summation of the complex exponentials.
inline int oracle_lpq_code(const GrayImage &img, std::size_t cx, std::size_t cy) {
    const double a = 1.0 / 7.0;
    const std::array<std::array<double, 2>, 4> freqs{ { { a, 0.0 }, { 0.0, a }, { a, a }, { a, -a } } };
    std::array<std::complex<double>, 4> f{};
    for (std::size_t u = 0; u < 4; ++u) {
        for (int dy = -3; dy <= 3; ++dy) {
            for (int dx = -3; dx <= 3; ++dx) {
                const double v = img.at(cx + static_cast<std::size_t>(dx + 3) - 3, cy + static_cast<std::size_t>(dy + 3) - 3);
                const double phase = -2.0 * std::numbers::pi * (freqs[u][0] * dx + freqs[u][1] * dy);
                f[u] += v * std::polar(1.0, phase);
            }
        }
    }
    int code = 0;
    for (int u = 0; u < 4; ++u) {
        if (f[static_cast<std::size_t>(u)].real() >= -lpq_zero_tolerance) {
            code |= 1 << u;
        }
        if (f[static_cast<std::size_t>(u)].imag() >= -lpq_zero_tolerance) {
            code |= 1 << (u + 4);
        }
    }
    return code;
}

inline std::vector<long> oracle_lpq_counts(const GrayImage &img) {
    std::vector<long> counts(256, 0);
    for (std::size_t y = 3; y + 3 < img.height(); ++y) {
        for (std::size_t x = 3; x + 3 < img.width(); ++x) {
            ++counts[static_cast<std::size_t>(oracle_lpq_code(img, x, y))];
        }
    }
    return counts;
}

/// Integer counts recovered from a normalised histogram.
inline std::vector<long> counts_of(const FeatureVector &fv, std::size_t total) {
    std::vector<long> out;
    for (const double v : fv.values) {
        out.push_back(std::lround(v * static_cast<double>(total)));
    }
    return out;
}

/// L1 distance between a histogram and counts normalised by plain division.
inline double l1_to_counts(const FeatureVector &fv, const std::vector<long> &counts) {
    long total = 0;
    for (const long c : counts) {
        total += c;
    }
    double d = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        d += std::abs(fv.values[i] - static_cast<double>(counts[i]) / static_cast<double>(total));
    }
    return d;
}

// ---- margins --------------------------------------------------------------------------------

inline double oracle_margin(std::vector<double> p) {
    std::sort(p.begin(), p.end(), std::greater<>{});
    return p[0] - p[1];
}

inline ProbabilityVector random_simplex(std::size_t k, std::mt19937_64 &rng) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> v(k);
    double s = 0.0;
    for (auto &x : v) {
        x = e(rng);
        s += x;
    }
    for (auto &x : v) {
        x /= s;
    }
    return ProbabilityVector{ std::move(v) };
}

/// Two-class probability vector with the requested margin, class @p winner on top.
inline ProbabilityVector with_margin(double m, int winner = 0) {
    const double hi = (1.0 + m) / 2.0;
    return winner == 0 ? ProbabilityVector{ { hi, 1.0 - hi } } : ProbabilityVector{ { 1.0 - hi, hi } };
}

// ---- stub classifier ------------------------------------------------------------------------

/// Fixed-output classifier with a declared Gamma.
struct StubClassifier {
    ProbabilityVector output;
    std::uint64_t gamma{ 1 };
    std::size_t dim{ 59 };

    [[nodiscard]] ProbabilityVector classify(const FeatureVector &) const { return output; }
    [[nodiscard]] std::uint64_t gamma_cost() const { return gamma; }
    [[nodiscard]] std::size_t dimension() const { return dim; }
    [[nodiscard]] int class_count() const { return static_cast<int>(output.size()); }
};

inline SlfLevelModel<StubClassifier> stub_level(int level, std::vector<FeatureSetId> sets, const ProbabilityVector &out,
                                                std::uint64_t gamma) {
    SlfLevelModel<StubClassifier> m{ level, sets, {} };
    for (const auto s : sets) {
        m.classifiers.push_back(StubClassifier{ out, gamma, descriptor(s).dimension });
    }
    return m;
}

// ---- reference SVM --------------------------------------------------------------------------

/// Result of the reference solver for one binary problem on already-normalised rows.
struct OracleSvm {
    std::vector<double> alpha;
    double b{ 0.0 };
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    double gamma{ 1.0 };

    [[nodiscard]] std::size_t support_count(double eps = 1e-8) const {
        return static_cast<std::size_t>(std::count_if(alpha.begin(), alpha.end(), [&](double a) { return a > eps; }));
    }

    [[nodiscard]] double decision(const std::vector<double> &p) const {
        double f = b;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double d = 0.0;
            for (std::size_t a = 0; a < p.size(); ++a) {
                d += (x[i][a] - p[a]) * (x[i][a] - p[a]);
            }
            f += alpha[i] * y[i] * std::exp(-gamma * d);
        }
        return f;
    }
};

/**
 * Platt-style SMO with first-order pair selection over all violating pairs, run to a tight
 * tolerance. Written independently of the library solver.
 */
inline OracleSvm oracle_smo(const std::vector<std::vector<double>> &x, const std::vector<int> &y, double c, double gamma) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> k(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double d = 0.0;
            for (std::size_t a = 0; a < x[i].size(); ++a) {
                d += (x[i][a] - x[j][a]) * (x[i][a] - x[j][a]);
            }
            k[i][j] = std::exp(-gamma * d);
        }
    }
    std::vector<double> alpha(n, 0.0);
    // gradient of the dual objective 1/2 a'Qa - e'a
    std::vector<double> g(n, -1.0);
    for (int iter = 0; iter < 1000000; ++iter) {
        // maximal violating pair
        double up = -1e300, low = 1e300;
        std::size_t i = n, j = n;
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -y[t] * g[t];
            const bool in_up = (y[t] == 1 && alpha[t] < c) || (y[t] == -1 && alpha[t] > 0);
            const bool in_low = (y[t] == 1 && alpha[t] > 0) || (y[t] == -1 && alpha[t] < c);
            if (in_up && v > up) {
                up = v;
                i = t;
            }
            if (in_low && v < low) {
                low = v;
                j = t;
            }
        }
        if (i == n || j == n || up - low < 1e-10) {
            break;
        }
        // move along y_i e_i - y_j e_j
        const double eta = std::max(k[i][i] + k[j][j] - 2.0 * k[i][j], 1e-12);
        double step = (up - low) / eta;
        // box limits for the step
        const double lim_i = y[i] == 1 ? c - alpha[i] : alpha[i];
        const double lim_j = y[j] == 1 ? alpha[j] : c - alpha[j];
        step = std::min({ step, lim_i, lim_j });
        alpha[i] += y[i] * step;
        alpha[j] -= y[j] * step;
        for (std::size_t t = 0; t < n; ++t) {
            g[t] += y[t] * step * (y[i] * y[i] * k[t][i] - y[j] * y[j] * k[t][j]);
        }
    }
    OracleSvm out{ alpha, 0.0, x, y, gamma };
    // offset from free vectors, else the midpoint of the feasible interval
    double sum = 0.0;
    int free_count = 0;
    double ub = 1e300, lb = -1e300;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * g[t];
        const bool at_lower = alpha[t] <= 1e-12;
        const bool at_upper = alpha[t] >= c - 1e-12;
        if (!at_lower && !at_upper) {
            sum += yg;
            ++free_count;
        } else if ((at_upper && y[t] == -1) || (at_lower && y[t] == 1)) {
            ub = std::min(ub, yg);
        } else {
            lb = std::max(lb, yg);
        }
    }
    out.b = -(free_count > 0 ? sum / free_count : (ub + lb) / 2.0);
    return out;
}

/// Min-max scaling to [-1, 1], written out longhand.
inline std::vector<std::vector<double>> oracle_minmax(const std::vector<std::vector<double>> &rows) {
    const std::size_t d = rows.front().size();
    std::vector<double> lo(d, 1e300), hi(d, -1e300);
    for (const auto &r : rows) {
        for (std::size_t a = 0; a < d; ++a) {
            lo[a] = std::min(lo[a], r[a]);
            hi[a] = std::max(hi[a], r[a]);
        }
    }
    auto out = rows;
    for (auto &r : out) {
        for (std::size_t a = 0; a < d; ++a) {
            r[a] = hi[a] > lo[a] ? -1.0 + 2.0 * (r[a] - lo[a]) / (hi[a] - lo[a]) : 0.0;
        }
    }
    return out;
}

/// Four Gaussian clusters in XOR layout, labels 0/1.
inline LabeledSet xor_clusters(int per_cluster, double spread, std::mt19937_64 &rng) {
    std::normal_distribution<double> n(0.0, spread);
    LabeledSet s;
    const double centres[4][2] = { { -1, -1 }, { 1, 1 }, { -1, 1 }, { 1, -1 } };
    for (int q = 0; q < 4; ++q) {
        for (int i = 0; i < per_cluster; ++i) {
            s.add({ centres[q][0] + n(rng), centres[q][1] + n(rng) }, q < 2 ? 0 : 1);
        }
    }
    return s;
}

// ---- cascade trace --------------------------------------------------------------------------

/// Exit level and cost by hand-tracing the gate: stop at the first margin reaching its threshold.
struct Trace {
    int exit_level;
    std::uint64_t cost;
};

inline Trace trace_cascade(const std::vector<double> &margins, const std::vector<double> &thresholds,
                           const std::vector<std::uint64_t> &level_cost) {
    const int lmax = static_cast<int>(margins.size());
    std::uint64_t cost = 0;
    for (int l = 1; l <= lmax; ++l) {
        cost += level_cost[static_cast<std::size_t>(l - 1)];
        if (l == lmax) {
            return { l, cost };
        }
        if (!(margins[static_cast<std::size_t>(l - 1)] < thresholds[static_cast<std::size_t>(l - 1)])) {
            return { l, cost };
        }
    }
    return { lmax, cost };
}

// ---- exhaustive calibration -----------------------------------------------------------------

struct BruteCalibration {
    std::vector<double> thresholds;
    std::size_t correct{ 0 };
    std::uint64_t cost{ 0 };
};

/// Every combination of per-level candidates, scored by replaying each sample; best by
/// (most correct, least cost, lexicographically largest thresholds).
inline BruteCalibration brute_calibrate(const ValidationCache &cache, int steps) {
    const int lmax = cache.max_level();
    std::vector<std::vector<double>> cand;
    for (int l = 1; l < lmax; ++l) {
        double lo = 1e300, hi = -1e300;
        for (const auto &s : cache.outcomes) {
            const double m = oracle_margin(s[static_cast<std::size_t>(l - 1)].probs.probs);
            lo = std::min(lo, m);
            hi = std::max(hi, m);
        }
        std::vector<double> c;
        if (lo == hi) {
            c.push_back(lo);
        } else {
            for (int s = 0; s < steps; ++s) {
                c.push_back(s == steps - 1 ? hi : lo + (hi - lo) * s / (steps - 1));
            }
        }
        cand.push_back(c);
    }
    std::vector<std::vector<double>> combos{ {} };
    for (const auto &c : cand) {
        std::vector<std::vector<double>> next;
        for (const auto &prefix : combos) {
            for (const double v : c) {
                auto p = prefix;
                p.push_back(v);
                next.push_back(p);
            }
        }
        combos = next;
    }
    BruteCalibration best;
    bool have = false;
    for (const auto &th : combos) {
        std::size_t correct = 0;
        std::uint64_t cost = 0;
        for (std::size_t s = 0; s < cache.size(); ++s) {
            std::vector<double> m;
            std::vector<std::uint64_t> lc;
            for (const auto &o : cache.outcomes[s]) {
                m.push_back(oracle_margin(o.probs.probs));
                lc.push_back(o.cost);
            }
            const auto t = trace_cascade(m, th, lc);
            cost += t.cost;
            const auto &p = cache.outcomes[s][static_cast<std::size_t>(t.exit_level - 1)].probs.probs;
            const int pred = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
            correct += pred == cache.labels[s] ? 1 : 0;
        }
        const bool better = !have || correct > best.correct || (correct == best.correct && cost < best.cost) ||
                            (correct == best.correct && cost == best.cost && th > best.thresholds);
        if (better) {
            best = { th, correct, cost };
            have = true;
        }
    }
    return best;
}

/// Random two-or-more-class validation cache with per-level costs growing like 4^(l-1).
inline ValidationCache random_cache(std::size_t samples, int lmax, int classes, std::mt19937_64 &rng) {
    ValidationCache cache;
    std::uniform_int_distribution<int> label(0, classes - 1);
    std::uniform_int_distribution<std::uint64_t> gamma(1, 50);
    std::vector<std::uint64_t> level_cost;
    for (int l = 1; l <= lmax; ++l) {
        level_cost.push_back(gamma(rng) << (2 * (l - 1)));
    }
    for (std::size_t s = 0; s < samples; ++s) {
        cache.labels.push_back(label(rng));
        std::vector<LevelOutcome> row;
        for (int l = 1; l <= lmax; ++l) {
            row.push_back(LevelOutcome{ random_simplex(static_cast<std::size_t>(classes), rng), level_cost[static_cast<std::size_t>(l - 1)] });
        }
        cache.outcomes.push_back(std::move(row));
    }
    return cache;
}

}  // namespace texcost::oracle
