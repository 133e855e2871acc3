// texcost: batch command-line front end for the cost-instrumented texture classifier.
//
//   texcost synth     --out DIR [--classes K --per-class N --size S --seed X]
//   texcost prepare   --manifest M --out splits.json [--seed X --replications R]
//   texcost train     --manifest M --splits F --replication r --out staged.json [experiment flags]
//   texcost calibrate --manifest M --splits F --replication r --model staged.json --out model.json [--grid-steps G]
//   texcost eval      --manifest M --splits F --replication r --model model.json --mode slf --level L | --mode amlf --out rows.csv
//   texcost report    --in rows.csv [--in more.csv ...] --out summary.csv|json
//   texcost run       --config cfg.txt [experiment flags]

#include "texcost/texcost.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct ExperimentFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<double> scale;
    std::optional<int> lmax;
    std::optional<std::string> features;
    std::optional<std::string> fusion;
    std::optional<int> replications;
    std::optional<int> grid_steps;
    std::optional<std::string> grid_c;
    std::optional<std::string> grid_gamma;
    std::optional<std::string> manifest;

    void attach(CLI::App *app, bool with_manifest) {
        app->add_option("--config", config, "key = value experiment config file");
        app->add_option("--seed", seed, "random seed");
        app->add_option("--scale", scale, "area scale factor S in (0, 1]");
        app->add_option("--lmax", lmax, "cascade depth L_max");
        app->add_option("--features", features, "comma list: lbp,lpq");
        app->add_option("--fusion", fusion, "mean | product | max");
        app->add_option("--replications", replications, "number of split replications");
        app->add_option("--grid-steps", grid_steps, "threshold candidates per cascade level");
        app->add_option("--grid-c", grid_c, "comma list of SVM C values (2^e accepted)");
        app->add_option("--grid-gamma", grid_gamma, "comma list of SVM gamma values (2^e accepted)");
        if (with_manifest) {
            app->add_option("--manifest", manifest, "dataset manifest JSON");
        }
    }

    [[nodiscard]] texcost::ExperimentConfig resolve(const std::optional<std::string> &out) const {
        texcost::ExperimentConfig cfg = config.empty() ? texcost::ExperimentConfig{} : texcost::load_config(config);
        if (seed) cfg.seed = *seed;
        if (scale) cfg.scale = *scale;
        if (lmax) cfg.lmax = *lmax;
        if (features) texcost::set_config_value(cfg, "features", *features);
        if (fusion) cfg.fusion = texcost::parse_fusion(*fusion);
        if (replications) cfg.replications = *replications;
        if (grid_steps) cfg.grid_steps = *grid_steps;
        if (grid_c) texcost::set_config_value(cfg, "grid_c", *grid_c);
        if (grid_gamma) texcost::set_config_value(cfg, "grid_gamma", *grid_gamma);
        if (manifest) cfg.manifest = *manifest;
        if (out) cfg.out = *out;
        cfg.validate();
        return cfg;
    }
};

struct SplitSelection {
    std::string manifest;
    std::string splits;
    int replication{ 1 };

    void attach(CLI::App *app) {
        app->add_option("--manifest", manifest, "dataset manifest JSON")->required();
        app->add_option("--splits", splits, "splits JSON written by `prepare`")->required();
        app->add_option("--replication", replication, "replication id (1-based)");
    }

    [[nodiscard]] texcost::SplitPlan plan() const {
        const auto plans = texcost::splits_from_json(texcost::load_json(splits));
        for (const auto &p : plans) {
            if (p.replication == replication) {
                return p;
            }
        }
        throw texcost::error("no replication " + std::to_string(replication) + " in " + splits);
    }
};

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{ "Cost-instrumented texture classification: single-level and cascaded SVM pipelines" };
    app.require_subcommand(1);

    // synth
    auto *synth = app.add_subcommand("synth", "write a synthetic grating dataset and its manifest");
    std::string synth_out;
    int synth_classes = 5;
    int synth_per_class = 20;
    std::size_t synth_size = 64;
    std::uint64_t synth_seed = 1;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--classes", synth_classes, "number of classes K");
    synth->add_option("--per-class", synth_per_class, "images per class");
    synth->add_option("--size", synth_size, "image side in pixels");
    synth->add_option("--seed", synth_seed, "random seed");

    // prepare
    auto *prepare = app.add_subcommand("prepare", "validate a manifest and write seeded 50/20/30 split replications");
    std::string prep_manifest;
    std::string prep_out;
    std::uint64_t prep_seed = 1;
    int prep_reps = 10;
    prepare->add_option("--manifest", prep_manifest, "dataset manifest JSON")->required();
    prepare->add_option("--out", prep_out, "splits JSON to write")->required();
    prepare->add_option("--seed", prep_seed, "random seed");
    prepare->add_option("--replications", prep_reps, "number of replications R");

    // train
    auto *train = app.add_subcommand("train", "grid-search and fit per-level classifiers on the training split");
    SplitSelection train_sel;
    ExperimentFlags train_flags;
    std::string train_out;
    train_sel.attach(train);
    train_flags.attach(train, false);
    train->add_option("--out", train_out, "staged model JSON to write")->required();

    // calibrate
    auto *calibrate = app.add_subcommand("calibrate", "calibrate cascade thresholds on validation, then refit on train+validation");
    SplitSelection cal_sel;
    std::string cal_model;
    std::string cal_out;
    int cal_steps = 10;
    cal_sel.attach(calibrate);
    calibrate->add_option("--model", cal_model, "staged model from `train`")->required();
    calibrate->add_option("--out", cal_out, "calibrated model JSON to write")->required();
    calibrate->add_option("--grid-steps", cal_steps, "threshold candidates per level");

    // eval
    auto *eval = app.add_subcommand("eval", "classify the test split and write report rows");
    SplitSelection eval_sel;
    std::string eval_model;
    std::string eval_mode = "amlf";
    int eval_level = 1;
    std::string eval_out;
    std::optional<std::string> eval_fusion;
    eval_sel.attach(eval);
    eval->add_option("--model", eval_model, "calibrated model JSON")->required();
    eval->add_option("--mode", eval_mode, "slf | amlf")->check(CLI::IsMember({ "slf", "amlf" }));
    eval->add_option("--level", eval_level, "SLF level L");
    eval->add_option("--fusion", eval_fusion, "override the model's fusion rule");
    eval->add_option("--out", eval_out, "report file (.csv or .json)")->required();

    // report
    auto *report = app.add_subcommand("report", "aggregate report rows into per-system mean/stddev");
    std::vector<std::string> report_in;
    std::string report_out;
    report->add_option("--in", report_in, "report CSV/JSON files")->required();
    report->add_option("--out", report_out, "summary file (.csv or .json)")->required();

    // run
    auto *run = app.add_subcommand("run", "full replicated experiment: synth or load, split, train, calibrate, evaluate, report");
    ExperimentFlags run_flags;
    std::optional<std::string> run_out;
    run_flags.attach(run, true);
    run->add_option("--out", run_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            const auto m = texcost::synth_dataset(synth_classes, synth_per_class, synth_size, synth_seed, synth_out);
            std::cout << "wrote " << m.size() << " images in " << m.class_count() << " classes to " << synth_out << "/manifest.json\n";
        } else if (*prepare) {
            const auto m = texcost::load_manifest(prep_manifest);
            const auto plans = texcost::make_splits(m, prep_seed, prep_reps);
            texcost::save_json(texcost::to_json(plans), prep_out);
            std::cout << "wrote " << plans.size() << " replications to " << prep_out << '\n';
        } else if (*train) {
            const auto cfg = train_flags.resolve(std::nullopt);
            const auto m = texcost::load_manifest(train_sel.manifest);
            const auto plan = train_sel.plan();
            const auto tr = texcost::load_split(m, plan, texcost::SplitTag::train, cfg.scale);
            const auto va = texcost::load_split(m, plan, texcost::SplitTag::validation, cfg.scale);
            std::vector<texcost::LevelSearch> searches;
            const auto staged = texcost::train_stage(cfg, tr, va, &searches);
            texcost::save_model(staged, train_out);
            for (const auto &s : searches) {
                std::cerr << "level " << s.level << ' ' << texcost::to_string(s.set) << ": C=" << s.search.c << " gamma=" << s.search.gamma
                          << " validation accuracy=" << s.search.accuracy << '\n';
            }
        } else if (*calibrate) {
            const auto staged = texcost::load_model(cal_model);
            texcost::ExperimentConfig cfg;
            cfg.grid_steps = cal_steps;
            cfg.features = staged.features;
            cfg.scale = staged.scale;
            cfg.fusion = staged.fusion;
            cfg.lmax = staged.model.max_level();
            const auto m = texcost::load_manifest(cal_sel.manifest);
            const auto plan = cal_sel.plan();
            const auto tr = texcost::load_split(m, plan, texcost::SplitTag::train, cfg.scale);
            const auto va = texcost::load_split(m, plan, texcost::SplitTag::validation, cfg.scale);
            texcost::CalibrationResult cal;
            const auto model = texcost::calibrate_and_refit(cfg, staged, tr, va, &cal);
            texcost::save_model(model, cal_out);
            std::cerr << "validation accuracy " << cal.accuracy << ", thresholds:";
            for (const double t : cal.thresholds) {
                std::cerr << ' ' << t;
            }
            std::cerr << '\n';
        } else if (*eval) {
            auto file = texcost::load_model(eval_model);
            if (eval_fusion) {
                file.fusion = texcost::parse_fusion(*eval_fusion);
            }
            const auto m = texcost::load_manifest(eval_sel.manifest);
            const auto plan = eval_sel.plan();
            const auto test = texcost::load_split(m, plan, texcost::SplitTag::test, file.scale);
            const auto start = std::chrono::steady_clock::now();
            const auto ev = texcost::evaluate(file, test, eval_mode == "amlf", eval_level, plan.replication);
            const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
            texcost::emit_report({ ev.row }, texcost::format_for(eval_out), eval_out);
            std::cerr << ev.row.system << ": accuracy " << ev.row.accuracy << ", cost " << ev.row.measured_cost << " (wall " << wall.count()
                      << " s, informational)\n";
        } else if (*report) {
            std::vector<texcost::ReportRow> rows;
            for (const auto &p : report_in) {
                auto r = texcost::read_report(p);
                rows.insert(rows.end(), r.begin(), r.end());
            }
            texcost::emit_summary(texcost::summarize(rows), texcost::format_for(report_out), report_out);
        } else if (*run) {
            const auto cfg = run_flags.resolve(run_out);
            const auto start = std::chrono::steady_clock::now();
            const auto rows = texcost::run_experiment(cfg);
            const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
            std::cout << texcost::summary_csv(texcost::summarize(rows));
            std::cerr << "wrote " << (cfg.out / "report.csv").string() << " (wall " << wall.count() << " s, informational)\n";
        }
    } catch (const std::exception &e) {
        std::cerr << "texcost: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
