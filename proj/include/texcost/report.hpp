/**
 * @file
 * @brief Report rows, CSV/JSON emission and per-system mean/stddev summaries.
 *
 * CSV column order is fixed:
 *
 *     system,replication,accuracy,measured_cost,analytic_cost,exit1..exitN,measured_global_cost,analytic_global_cost
 *
 * Exit columns are empty for SLF rows. Reals are written in shortest round-trip form.
 */
#pragma once

#include "texcost/config.hpp"
#include "texcost/dataset.hpp"
#include "texcost/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace texcost {

struct ReportRow {
    std::string system;
    int replication{ 1 };
    double accuracy{ 0.0 };
    /// Weighted classifier operations from the ledger.
    std::uint64_t measured_cost{ 0 };
    /// Closed-form classification cost of the same run.
    double analytic_cost{ 0.0 };
    /// Samples exiting at each level; empty for single-level systems.
    std::vector<std::uint64_t> exits;
    std::uint64_t measured_global_cost{ 0 };
    double analytic_global_cost{ 0.0 };

    friend bool operator==(const ReportRow &, const ReportRow &) = default;
};

enum class ReportFormat : std::uint8_t {
    csv,
    json,
};

/// csv unless the extension is .json
[[nodiscard]] inline ReportFormat format_for(const std::filesystem::path &path) {
    return path.extension() == ".json" ? ReportFormat::json : ReportFormat::csv;
}

namespace detail {

[[nodiscard]] inline std::string format_real(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    require(ec == std::errc{}, "format_real: conversion failed");
    return std::string{ buf, ptr };
}

[[nodiscard]] inline std::size_t exit_columns(const std::vector<ReportRow> &rows) {
    std::size_t n = 0;
    for (const auto &r : rows) {
        n = std::max(n, r.exits.size());
    }
    return n;
}

}  // namespace detail

[[nodiscard]] inline std::string to_csv(const std::vector<ReportRow> &rows) {
    const std::size_t nexit = detail::exit_columns(rows);
    std::ostringstream out;
    out << "system,replication,accuracy,measured_cost,analytic_cost";
    for (std::size_t l = 1; l <= nexit; ++l) {
        out << ",exit" << l;
    }
    out << ",measured_global_cost,analytic_global_cost\n";
    for (const auto &r : rows) {
        out << r.system << ',' << r.replication << ',' << detail::format_real(r.accuracy) << ',' << r.measured_cost << ','
            << detail::format_real(r.analytic_cost);
        for (std::size_t l = 0; l < nexit; ++l) {
            out << ',';
            if (l < r.exits.size()) {
                out << r.exits[l];
            }
        }
        out << ',' << r.measured_global_cost << ',' << detail::format_real(r.analytic_global_cost) << '\n';
    }
    return out.str();
}

[[nodiscard]] inline std::vector<ReportRow> rows_from_csv(std::string_view text) {
    std::istringstream in{ std::string{ text } };
    std::string line;
    detail::require(static_cast<bool>(std::getline(in, line)), "report: empty CSV");
    const auto header = detail::split_list(line);
    detail::require(header.size() >= 7 && header[0] == "system", "report: unexpected CSV header");
    const std::size_t nexit = header.size() - 7;
    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) {
            continue;
        }
        // keep empty fields, unlike split_list
        std::vector<std::string> f;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            f.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        detail::require(f.size() == header.size(), "report: ragged CSV row");
        ReportRow r;
        r.system = f[0];
        r.replication = detail::parse_number<int>(f[1], "replication");
        r.accuracy = detail::parse_number<double>(f[2], "accuracy");
        r.measured_cost = detail::parse_number<std::uint64_t>(f[3], "measured_cost");
        r.analytic_cost = detail::parse_number<double>(f[4], "analytic_cost");
        for (std::size_t l = 0; l < nexit; ++l) {
            if (!f[5 + l].empty()) {
                r.exits.push_back(detail::parse_number<std::uint64_t>(f[5 + l], "exit"));
            }
        }
        r.measured_global_cost = detail::parse_number<std::uint64_t>(f[5 + nexit], "measured_global_cost");
        r.analytic_global_cost = detail::parse_number<double>(f[6 + nexit], "analytic_global_cost");
        rows.push_back(std::move(r));
    }
    return rows;
}

[[nodiscard]] inline nlohmann::json to_json(const std::vector<ReportRow> &rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto &r : rows) {
        arr.push_back({ { "system", r.system },
                        { "replication", r.replication },
                        { "accuracy", r.accuracy },
                        { "measured_cost", r.measured_cost },
                        { "analytic_cost", r.analytic_cost },
                        { "exits", r.exits },
                        { "measured_global_cost", r.measured_global_cost },
                        { "analytic_global_cost", r.analytic_global_cost } });
    }
    return { { "rows", arr } };
}

[[nodiscard]] inline std::vector<ReportRow> rows_from_json(const nlohmann::json &j) {
    try {
        std::vector<ReportRow> rows;
        for (const auto &r : j.at("rows")) {
            rows.push_back(ReportRow{ r.at("system").get<std::string>(), r.at("replication").get<int>(), r.at("accuracy").get<double>(),
                                      r.at("measured_cost").get<std::uint64_t>(), r.at("analytic_cost").get<double>(),
                                      r.at("exits").get<std::vector<std::uint64_t>>(), r.at("measured_global_cost").get<std::uint64_t>(),
                                      r.at("analytic_global_cost").get<double>() });
        }
        return rows;
    } catch (const nlohmann::json::exception &e) {
        throw error(std::string{ "report: " } + e.what());
    }
}

inline void emit_report(const std::vector<ReportRow> &rows, ReportFormat format, const std::filesystem::path &path) {
    detail::require(!rows.empty(), "emit_report: no rows");
    if (format == ReportFormat::json) {
        save_json(to_json(rows), path);
        return;
    }
    std::ofstream out{ path };
    detail::require(static_cast<bool>(out), "emit_report: cannot write " + path.string());
    out << to_csv(rows);
    detail::require(static_cast<bool>(out), "emit_report: write failed for " + path.string());
}

[[nodiscard]] inline std::vector<ReportRow> read_report(const std::filesystem::path &path) {
    if (format_for(path) == ReportFormat::json) {
        return rows_from_json(load_json(path));
    }
    std::ifstream in{ path };
    detail::require(static_cast<bool>(in), "report: cannot open " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return rows_from_csv(text.str());
}

/// Mean and sample standard deviation (0 for a single value).
struct MeanStd {
    double mean{ 0.0 };
    double stddev{ 0.0 };
};

[[nodiscard]] inline MeanStd mean_std(const std::vector<double> &v) {
    detail::require(!v.empty(), "mean_std: no values");
    double sum = 0.0;
    for (const double x : v) {
        sum += x;
    }
    const double mean = sum / static_cast<double>(v.size());
    if (v.size() < 2) {
        return { mean, 0.0 };
    }
    double ss = 0.0;
    for (const double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return { mean, std::sqrt(ss / static_cast<double>(v.size() - 1)) };
}

struct SummaryRow {
    std::string system;
    std::size_t replications{ 0 };
    MeanStd accuracy;
    MeanStd measured_cost;
    MeanStd analytic_cost;
    MeanStd measured_global_cost;
    /// Mean percentage of test samples exiting at each level; empty for single-level systems.
    std::vector<double> exit_percent;
};

/// Per-system aggregates in order of first appearance.
[[nodiscard]] inline std::vector<SummaryRow> summarize(const std::vector<ReportRow> &rows) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<const ReportRow *>> groups;
    for (const auto &r : rows) {
        if (!groups.contains(r.system)) {
            order.push_back(r.system);
        }
        groups[r.system].push_back(&r);
    }
    std::vector<SummaryRow> out;
    for (const auto &name : order) {
        const auto &g = groups[name];
        std::vector<double> acc, meas, ana, glob;
        std::vector<double> pct(g.front()->exits.size(), 0.0);
        for (const auto *r : g) {
            acc.push_back(r->accuracy);
            meas.push_back(static_cast<double>(r->measured_cost));
            ana.push_back(r->analytic_cost);
            glob.push_back(static_cast<double>(r->measured_global_cost));
            std::uint64_t total = 0;
            for (const auto e : r->exits) {
                total += e;
            }
            for (std::size_t l = 0; l < pct.size() && l < r->exits.size() && total > 0; ++l) {
                pct[l] += 100.0 * static_cast<double>(r->exits[l]) / static_cast<double>(total);
            }
        }
        for (auto &p : pct) {
            p /= static_cast<double>(g.size());
        }
        out.push_back(SummaryRow{ name, g.size(), mean_std(acc), mean_std(meas), mean_std(ana), mean_std(glob), std::move(pct) });
    }
    return out;
}

[[nodiscard]] inline std::string summary_csv(const std::vector<SummaryRow> &summary) {
    std::size_t nexit = 0;
    for (const auto &s : summary) {
        nexit = std::max(nexit, s.exit_percent.size());
    }
    std::ostringstream out;
    out << "system,replications,accuracy_mean,accuracy_std,measured_cost_mean,measured_cost_std,analytic_cost_mean,analytic_cost_std,"
           "measured_global_cost_mean,measured_global_cost_std";
    for (std::size_t l = 1; l <= nexit; ++l) {
        out << ",exit" << l << "_pct";
    }
    out << '\n';
    using detail::format_real;
    for (const auto &s : summary) {
        out << s.system << ',' << s.replications << ',' << format_real(s.accuracy.mean) << ',' << format_real(s.accuracy.stddev) << ','
            << format_real(s.measured_cost.mean) << ',' << format_real(s.measured_cost.stddev) << ',' << format_real(s.analytic_cost.mean)
            << ',' << format_real(s.analytic_cost.stddev) << ',' << format_real(s.measured_global_cost.mean) << ','
            << format_real(s.measured_global_cost.stddev);
        for (std::size_t l = 0; l < nexit; ++l) {
            out << ',';
            if (l < s.exit_percent.size()) {
                out << format_real(s.exit_percent[l]);
            }
        }
        out << '\n';
    }
    return out.str();
}

[[nodiscard]] inline nlohmann::json to_json(const std::vector<SummaryRow> &summary) {
    nlohmann::json arr = nlohmann::json::array();
    const auto ms = [](const MeanStd &m) { return nlohmann::json{ { "mean", m.mean }, { "std", m.stddev } }; };
    for (const auto &s : summary) {
        arr.push_back({ { "system", s.system },
                        { "replications", s.replications },
                        { "accuracy", ms(s.accuracy) },
                        { "measured_cost", ms(s.measured_cost) },
                        { "analytic_cost", ms(s.analytic_cost) },
                        { "measured_global_cost", ms(s.measured_global_cost) },
                        { "exit_percent", s.exit_percent } });
    }
    return { { "summary", arr } };
}

inline void emit_summary(const std::vector<SummaryRow> &summary, ReportFormat format, const std::filesystem::path &path) {
    detail::require(!summary.empty(), "emit_summary: no rows");
    if (format == ReportFormat::json) {
        save_json(to_json(summary), path);
        return;
    }
    std::ofstream out{ path };
    detail::require(static_cast<bool>(out), "emit_summary: cannot write " + path.string());
    out << summary_csv(summary);
}

}  // namespace texcost
