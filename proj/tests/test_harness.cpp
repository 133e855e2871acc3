#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace texcost;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
    auto dir = fs::temp_directory_path() / ("texcost_harness_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path &p) {
    std::ifstream in{ p, std::ios::binary };
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

DatasetManifest manifest_with_counts(const std::vector<int> &counts) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t k = 0; k < counts.size(); ++k) {
        for (int i = 0; i < counts[k]; ++i) {
            j["c" + std::to_string(k) + "/" + std::to_string(i) + ".pgm"] = "class" + std::to_string(k);
        }
    }
    return manifest_from_json(j, "/nowhere");
}

ExperimentConfig small_config(const fs::path &out) {
    ExperimentConfig cfg;
    cfg.out = out;
    cfg.replications = 1;
    cfg.lmax = 2;
    cfg.grid_c = { 1.0, 32.0 };
    cfg.grid_gamma = { 0.0078125, 0.125 };
    cfg.grid_steps = 5;
    return cfg;
}

/// One trained system on a small synthetic set, shared across tests.
struct Trained {
    ExperimentConfig config;
    DatasetManifest manifest;
    SplitPlan plan;
    TrainedSystem system;
    std::vector<TaggedImage> test;
};

const Trained &trained() {
    static const Trained t = [] {
        Trained r;
        const auto dir = scratch("trained");
        r.config = small_config(dir);
        r.config.features = { FeatureSetId::lbp, FeatureSetId::lpq };
        r.manifest = synth_dataset(3, 10, 64, 7, dir / "synth");
        r.plan = make_splits(r.manifest, 7, 1).front();
        r.system = train_pipeline(r.config, r.manifest, r.plan);
        r.test = load_split(r.manifest, r.plan, SplitTag::test, r.config.scale);
        return r;
    }();
    return t;
}

}  // namespace

TEST(Splits, SizesPerClass) {
    const auto ten = split_sizes(10);
    EXPECT_EQ(ten.train, 5u);
    EXPECT_EQ(ten.validation, 2u);
    EXPECT_EQ(ten.test, 3u);
    const auto seven = split_sizes(7);
    EXPECT_EQ(seven.train, 3u);
    EXPECT_EQ(seven.validation, 1u);
    EXPECT_EQ(seven.test, 3u);
}

TEST(Splits, StratifiedDisjointAndComplete) {
    const auto m = manifest_with_counts({ 10, 7, 4 });
    const auto plans = make_splits(m, 99, 3);
    ASSERT_EQ(plans.size(), 3u);
    for (const auto &p : plans) {
        std::set<std::size_t> seen;
        std::map<int, std::array<int, 3>> per_class;
        const std::array<const std::vector<std::size_t> *, 3> parts{ &p.train, &p.validation, &p.test };
        for (std::size_t s = 0; s < 3; ++s) {
            for (const auto i : *parts[s]) {
                EXPECT_TRUE(seen.insert(i).second) << "index " << i << " appears twice";
                ++per_class[m.entries[i].label][s];
            }
        }
        EXPECT_EQ(seen.size(), m.size());
        EXPECT_EQ(per_class[0], (std::array<int, 3>{ 5, 2, 3 }));
        EXPECT_EQ(per_class[1], (std::array<int, 3>{ 3, 1, 3 }));
        EXPECT_EQ(per_class[2], (std::array<int, 3>{ 2, 0, 2 }));
    }
    EXPECT_NE(plans[0].train, plans[1].train);
}

TEST(Splits, DeterministicPerSeedAndReplication) {
    const auto m = manifest_with_counts({ 8, 8 });
    EXPECT_EQ(make_splits(m, 5, 4), make_splits(m, 5, 4));
    EXPECT_NE(make_splits(m, 5, 1).front().train, make_splits(m, 6, 1).front().train);
    // replication r does not depend on R
    EXPECT_EQ(make_splits(m, 5, 4)[1], make_splits(m, 5, 2)[1]);
}

TEST(Splits, JsonRoundTrip) {
    const auto m = manifest_with_counts({ 6, 6 });
    const auto plans = make_splits(m, 3, 2);
    EXPECT_EQ(splits_from_json(nlohmann::json::parse(to_json(plans).dump())), plans);
}

TEST(Manifest, AlphabeticalContiguousLabels) {
    nlohmann::json j = { { "a/1.pgm", "oak" }, { "a/2.pgm", "oak" }, { "a/3.pgm", "oak" }, { "a/4.pgm", "oak" },
                         { "b/1.pgm", "ash" }, { "b/2.pgm", "ash" }, { "b/3.pgm", "ash" }, { "b/4.pgm", "ash" } };
    const auto m = manifest_from_json(j, "/data");
    EXPECT_EQ(m.class_names, (std::vector<std::string>{ "ash", "oak" }));
    EXPECT_EQ(m.entries.front().label, 1);
    EXPECT_EQ(m.resolve(0), fs::path{ "/data/a/1.pgm" });
}

TEST(Manifest, RejectsSmallClassesAndBadLabels) {
    EXPECT_THROW((void)manifest_with_counts({ 4, 3 }), error);
    EXPECT_THROW((void)manifest_with_counts({ 6 }), error);
    nlohmann::json j = { { "x.pgm", 3 } };
    EXPECT_THROW((void)manifest_from_json(j, "/"), error);
}

TEST(Synth, CountsAndManifest) {
    const auto dir = scratch("synth_counts");
    const auto m = synth_dataset(2, 4, 32, 1, dir);
    EXPECT_EQ(m.size(), 8u);
    EXPECT_EQ(m.class_count(), 2);
    const auto loaded = load_manifest(dir / "manifest.json");
    EXPECT_EQ(loaded.class_names, m.class_names);
    ASSERT_EQ(loaded.size(), 8u);
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        EXPECT_EQ(loaded.entries[i].image, m.entries[i].image);
        EXPECT_EQ(loaded.entries[i].label, m.entries[i].label);
        EXPECT_EQ(load_image(loaded.resolve(i)).width(), 32u);
    }
}

TEST(Synth, SameSeedSameBytes) {
    const auto a = scratch("synth_a");
    const auto b = scratch("synth_b");
    const auto m = synth_dataset(3, 4, 32, 42, a);
    (void)synth_dataset(3, 4, 32, 42, b);
    for (const auto &e : m.entries) {
        EXPECT_EQ(slurp(a / e.image), slurp(b / e.image));
    }
    const auto c = scratch("synth_c");
    (void)synth_dataset(3, 4, 32, 43, c);
    EXPECT_NE(slurp(a / m.entries[0].image), slurp(c / m.entries[0].image));
}

TEST(Synth, RejectsBadArguments) {
    const auto dir = scratch("synth_bad");
    EXPECT_THROW((void)synth_dataset(1, 4, 32, 1, dir), error);
    EXPECT_THROW((void)synth_dataset(2, 3, 32, 1, dir), error);
    EXPECT_THROW((void)synth_dataset(2, 4, 16, 1, dir), error);
}

TEST(Config, ParsesKeysCommentsAndPowers) {
    std::istringstream in{ "# experiment\n"
                           "features = lbp, lpq\n"
                           "lmax=2   # shallow\n"
                           "scale = 0.4\n"
                           "fusion = product\n"
                           "grid_c = 2^-1, 2^3\n"
                           "grid_gamma = 0.5\n"
                           "replications = 3\n"
                           "seed = 18446744073709551615\n"
                           "\n"
                           "out = results\n" };
    const auto cfg = parse_config(in);
    EXPECT_EQ(cfg.features, (std::vector<FeatureSetId>{ FeatureSetId::lbp, FeatureSetId::lpq }));
    EXPECT_EQ(cfg.lmax, 2);
    EXPECT_DOUBLE_EQ(cfg.scale, 0.4);
    EXPECT_EQ(cfg.fusion, FusionRule::product);
    EXPECT_EQ(cfg.grid_c, (std::vector<double>{ 0.5, 8.0 }));
    EXPECT_EQ(cfg.grid_gamma, (std::vector<double>{ 0.5 }));
    EXPECT_EQ(cfg.replications, 3);
    EXPECT_EQ(cfg.seed, 18446744073709551615ull);
    EXPECT_EQ(cfg.out, fs::path{ "results" });
    EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    std::istringstream unknown{ "colour = blue\n" };
    EXPECT_THROW((void)parse_config(unknown), error);
    std::istringstream bad{ "lmax = two\n" };
    EXPECT_THROW((void)parse_config(bad), error);
    std::istringstream no_eq{ "lmax 2\n" };
    EXPECT_THROW((void)parse_config(no_eq), error);
    ExperimentConfig cfg;
    cfg.scale = 1.5;
    EXPECT_THROW(cfg.validate(), error);
}

TEST(Report, OneRowIsHeaderPlusOneLine) {
    const std::vector<ReportRow> rows{ { "B1", 1, 0.5, 10, 10.0, {}, 100, 100.0 } };
    const auto csv = to_csv(rows);
    EXPECT_EQ(csv, "system,replication,accuracy,measured_cost,analytic_cost,measured_global_cost,analytic_global_cost\n"
                   "B1,1,0.5,10,10,100,100\n");
}

TEST(Report, CsvAndJsonRoundTripLosslessly) {
    const std::vector<ReportRow> rows{
        { "BP1", 1, 2.0 / 3.0, 4200, 4200.0, {}, 7788540, 7788540.1 },
        { "BP*", 1, 0.9666666666666667, 5000, 5000.0, { 20, 7, 3 }, 9000000, 9000000.5 },
        { "BP*", 2, 1.0, 4200, 4200.0, { 30, 0, 0 }, 7788540, 1.0 / 3.0 },
    };
    EXPECT_EQ(rows_from_csv(to_csv(rows)), rows);
    EXPECT_EQ(rows_from_json(nlohmann::json::parse(to_json(rows).dump())), rows);
    const auto dir = scratch("report");
    emit_report(rows, ReportFormat::csv, dir / "r.csv");
    emit_report(rows, ReportFormat::json, dir / "r.json");
    EXPECT_EQ(read_report(dir / "r.csv"), read_report(dir / "r.json"));
    EXPECT_THROW(emit_report({}, ReportFormat::csv, dir / "empty.csv"), error);
}

TEST(Report, SummaryMatchesIndependentAggregation) {
    const std::vector<ReportRow> rows{
        { "B1", 1, 0.8, 100, 100.0, {}, 1, 1.0 },       { "B*", 1, 0.9, 40, 40.0, { 8, 2 }, 1, 1.0 },
        { "B1", 2, 0.6, 100, 100.0, {}, 1, 1.0 },       { "B*", 2, 0.7, 60, 60.0, { 5, 5 }, 1, 1.0 },
        { "B1", 3, 1.0, 100, 100.0, {}, 1, 1.0 },       { "B*", 3, 0.8, 50, 50.0, { 10, 0 }, 1, 1.0 },
    };
    const auto summary = summarize(rows);
    ASSERT_EQ(summary.size(), 2u);
    EXPECT_EQ(summary[0].system, "B1");
    EXPECT_EQ(summary[0].replications, 3u);
    EXPECT_NEAR(summary[0].accuracy.mean, 0.8, 1e-12);
    // sample stddev of {0.8, 0.6, 1.0} = 0.2
    EXPECT_NEAR(summary[0].accuracy.stddev, 0.2, 1e-12);
    EXPECT_EQ(summary[0].measured_cost.stddev, 0.0);
    EXPECT_NEAR(summary[1].measured_cost.mean, 50.0, 1e-12);
    EXPECT_NEAR(summary[1].measured_cost.stddev, 10.0, 1e-12);
    ASSERT_EQ(summary[1].exit_percent.size(), 2u);
    EXPECT_NEAR(summary[1].exit_percent[0], (80.0 + 50.0 + 100.0) / 3.0, 1e-12);
    EXPECT_NEAR(summary[1].exit_percent[0] + summary[1].exit_percent[1], 100.0, 1e-9);
    EXPECT_TRUE(summary[0].exit_percent.empty());
}

TEST(Pipeline, TestSamplesNeverReachTraining) {
    const auto &t = trained();
    EXPECT_THROW((void)level_features(t.test, 1, FeatureSetId::lbp), error);
    const auto train = load_split(t.manifest, t.plan, SplitTag::train, 1.0);
    const auto val = load_split(t.manifest, t.plan, SplitTag::validation, 1.0);
    EXPECT_THROW((void)train_stage(t.config, t.test, val), error);
    EXPECT_THROW((void)train_stage(t.config, train, t.test), error);
    const auto staged = train_stage(t.config, train, val);
    EXPECT_FALSE(staged.calibrated);
    EXPECT_THROW((void)calibrate_and_refit(t.config, staged, train, t.test), error);
}

TEST(Pipeline, ModelShapeAndThresholds) {
    const auto &t = trained();
    const auto &model = t.system.model;
    EXPECT_TRUE(model.calibrated);
    EXPECT_EQ(model.model.max_level(), 2);
    EXPECT_EQ(model.model.thresholds.size(), 1u);
    EXPECT_EQ(model.model.ranges.size(), 1u);
    EXPECT_EQ(t.system.searches.size(), 4u);
    for (const auto &level : model.model.levels) {
        ASSERT_EQ(level.classifiers.size(), 2u);
        EXPECT_EQ(level.classifiers[0].dimension(), 59u);
        EXPECT_EQ(level.classifiers[1].dimension(), 256u);
    }
}

TEST(Pipeline, SingleLevelHasNoThresholds) {
    const auto &t = trained();
    auto cfg = t.config;
    cfg.lmax = 1;
    cfg.features = { FeatureSetId::lbp };
    const auto sys = train_pipeline(cfg, t.manifest, t.plan);
    EXPECT_TRUE(sys.model.model.thresholds.empty());
    EXPECT_EQ(sys.model.model.max_level(), 1);
}

TEST(Pipeline, DeterministicRetraining) {
    const auto &t = trained();
    const auto again = train_pipeline(t.config, t.manifest, t.plan);
    EXPECT_EQ(to_json(again.model).dump(), to_json(t.system.model).dump());
}

TEST(Pipeline, ModelFileRoundTripKeepsPredictions) {
    const auto &t = trained();
    const auto path = scratch("model") / "model.json";
    save_model(t.system.model, path);
    const auto back = load_model(path);
    EXPECT_EQ(to_json(back).dump(), to_json(t.system.model).dump());
    const auto a = evaluate(t.system.model, t.test, true, 0, 1);
    const auto b = evaluate(back, t.test, true, 0, 1);
    EXPECT_EQ(a.predictions, b.predictions);
    EXPECT_EQ(a.row, b.row);
}

TEST(Pipeline, ModelFileRejectsWrongFormat) {
    auto j = to_json(trained().system.model);
    j["version"] = 2;
    EXPECT_THROW((void)model_from_json(j), error);
    j["version"] = 1;
    j["format"] = "other";
    EXPECT_THROW((void)model_from_json(j), error);
}

TEST(Evaluate, EmptyTestSetIsAnError) {
    EXPECT_THROW((void)evaluate(trained().system.model, std::vector<TaggedImage>{}, false, 1, 1), error);
}

TEST(Evaluate, SlfRowsMatchFormulas) {
    const auto &t = trained();
    const auto ne = t.test.size();
    for (int level = 1; level <= 2; ++level) {
        const auto ev = evaluate(t.system.model, t.test, false, level, 1);
        EXPECT_EQ(ev.row.system, "BP" + std::to_string(level));
        EXPECT_EQ(ev.ledger.classifier_calls, ne * grid_count(level) * 2);
        EXPECT_EQ(ev.ledger.sample_count, ne);
        EXPECT_EQ(static_cast<double>(ev.row.measured_cost), ev.row.analytic_cost);
        EXPECT_TRUE(ev.row.exits.empty());
        // 64x64 splits evenly at these levels, so measured and analytic global costs agree exactly
        EXPECT_EQ(static_cast<double>(ev.row.measured_global_cost), ev.row.analytic_global_cost);
    }
}

TEST(Evaluate, CascadeRowMatchesFormulaAndHistogram) {
    const auto &t = trained();
    const auto ev = evaluate(t.system.model, t.test, true, 0, 1);
    EXPECT_EQ(ev.row.system, "BP*");
    ASSERT_EQ(ev.row.exits.size(), 2u);
    EXPECT_EQ(ev.row.exits[0] + ev.row.exits[1], t.test.size());
    EXPECT_EQ(static_cast<double>(ev.row.measured_cost), ev.row.analytic_cost);
    EXPECT_EQ(static_cast<double>(ev.row.measured_global_cost), ev.row.analytic_global_cost);
    std::uint64_t sum_slf = 0;
    for (int l = 1; l <= 2; ++l) {
        sum_slf += evaluate(t.system.model, t.test, false, l, 1).row.measured_cost;
    }
    EXPECT_LE(ev.row.measured_cost, sum_slf);
}

TEST(Evaluate, ZeroThresholdCascadeEqualsLevelOne) {
    const auto &t = trained();
    auto model = t.system.model;
    model.model.thresholds.assign(model.model.thresholds.size(), 0.0);
    const auto cascade = evaluate(model, t.test, true, 0, 1);
    const auto slf = evaluate(model, t.test, false, 1, 1);
    EXPECT_EQ(cascade.row.accuracy, slf.row.accuracy);
    EXPECT_EQ(cascade.predictions, slf.predictions);
    EXPECT_EQ(cascade.row.measured_cost, slf.row.measured_cost);
}

TEST(Experiment, SyntheticLevelOneLbpAccuracy) {
    auto cfg = small_config(scratch("lbp_accuracy"));
    cfg.lmax = 1;
    cfg.grid_c = default_grid_c();
    cfg.grid_gamma = default_grid_gamma();
    const auto rows = run_experiment(cfg);
    ASSERT_EQ(rows.front().system, "B1");
    EXPECT_GT(rows.front().accuracy, 0.8);
    EXPECT_TRUE(fs::exists(cfg.out / "report.json"));
    EXPECT_TRUE(fs::exists(cfg.out / "summary.csv"));
    EXPECT_EQ(read_report(cfg.out / "report.csv"), rows);
}
