#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "gcd/data.hpp"
#include "gcd/errors.hpp"
#include "gcd/harness.hpp"
#include "gcd/rng.hpp"
#include "gcd/sensitivity.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool out_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config (JSON)");
    cmd->add_option("--out", opts.out_dir, "output directory override")
        ->each([&](const std::string&) { opts.out_set = true; });
    cmd->add_option("--seed", opts.seed, "seed override")
        ->each([&](const std::string&) { opts.seed_set = true; });
}

gcd::harness::ExperimentConfig resolve_config(const CommonOpts& opts, bool config_required = true) {
    gcd::harness::ExperimentConfig config;
    if (!opts.config_path.empty())
        config = gcd::harness::load_config(opts.config_path);
    else if (config_required)
        throw gcd::ConfigError("this subcommand needs --config <path>");
    else
        config = gcd::harness::default_config();
    if (opts.seed_set) config.seed = opts.seed;
    if (opts.out_set) config.out_dir = opts.out_dir;
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale adversarial robustness laboratory: gradient attacks, an "
                 "entropy-gated detector pair, and a saliency-guided rectifier"};
    app.require_subcommand(1);

    CommonOpts train_o, attack_o, detect_o, grey_o, white_o, sweep_o, toy_o, report_o, make_o;

    auto* cmd_train = app.add_subcommand("train", "train the base classifier");
    add_common(cmd_train, train_o);
    auto* cmd_attack = app.add_subcommand("attack", "run the configured attack matrix");
    add_common(cmd_attack, attack_o);
    auto* cmd_detect = app.add_subcommand("detect-train", "build the detector dataset and fit both detectors");
    add_common(cmd_detect, detect_o);
    auto* cmd_grey = app.add_subcommand("eval-greybox", "full grey-box pipeline: attacks, detection AUC, rectification");
    add_common(cmd_grey, grey_o);
    auto* cmd_white = app.add_subcommand("eval-whitebox", "combined-loss attacks against the built defense");
    add_common(cmd_white, white_o);
    auto* cmd_sweep = app.add_subcommand("alpha-sweep", "recovered accuracy across masking rates");
    add_common(cmd_sweep, sweep_o);
    auto* cmd_toy = app.add_subcommand("toy-study", "2-d boundary-distance vs sensitivity study");
    add_common(cmd_toy, toy_o);
    auto* cmd_report = app.add_subcommand("report", "regenerate CSV tables from stored records");
    add_common(cmd_report, report_o);

    auto* cmd_make = app.add_subcommand("make-dataset", "write a synthetic desk-scale digit dataset as IDX files");
    add_common(cmd_make, make_o);
    int make_train = 2600, make_test = 600;
    cmd_make->add_option("--train", make_train, "training images to generate");
    cmd_make->add_option("--test", make_test, "test images to generate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*cmd_train) {
            gcd::harness::run_train(resolve_config(train_o));
        } else if (*cmd_attack) {
            gcd::harness::run_attack_stage(resolve_config(attack_o));
        } else if (*cmd_detect) {
            gcd::harness::run_detect_train(resolve_config(detect_o));
        } else if (*cmd_grey) {
            auto bundle = gcd::harness::run_greybox_eval(resolve_config(grey_o));
            std::printf("clean accuracy: base %.4f  gcd %.4f\n", bundle.clean_base_accuracy,
                        bundle.clean_gcd_accuracy);
            for (const auto& row : bundle.auc_table)
                std::printf("auc %-12s org %.4f  is %.4f  ensemble %.4f\n", row.attack.c_str(),
                            row.det_org, row.det_is, row.ensemble);
            std::printf("tables written to %s\n", bundle.out_dir.c_str());
        } else if (*cmd_white) {
            auto bundle = gcd::harness::run_whitebox_eval(resolve_config(white_o));
            for (const auto& row : bundle.rows)
                std::printf("%-10s %-10s beta %-6g success %.3f  mean L2 %.3f\n", row.attack.c_str(),
                            row.defended ? "defended" : "undefended", row.beta, row.success_rate,
                            row.mean_l2_success);
        } else if (*cmd_sweep) {
            auto bundle = gcd::harness::run_alpha_sweep(resolve_config(sweep_o));
            for (const auto& row : bundle.rows)
                std::printf("%-12s alpha %.2f  recovered %.4f (n=%d)\n", row.suite.c_str(), row.alpha,
                            row.recovered_accuracy, row.n);
        } else if (*cmd_toy) {
            auto config = resolve_config(toy_o, /*config_required=*/false);
            const fs::path out = toy_o.out_set ? fs::path(config.out_dir) : fs::path(".");
            fs::create_directories(out);
            const auto csv = (out / "toy_study.csv").string();
            auto report = gcd::sensitivity::toy_boundary_study(config.seed, csv);
            std::printf("toy accuracy %.4f  spearman(dist_z, insen) %.4f  -> %s\n",
                        report.toy_accuracy, report.spearman_dist_insen, csv.c_str());
        } else if (*cmd_report) {
            auto config = resolve_config(report_o, /*config_required=*/false);
            const std::string dir = report_o.out_set ? config.out_dir
                                   : !config.out_dir.empty() ? config.out_dir
                                                             : ".";
            gcd::harness::regenerate_reports(dir);
            std::printf("tables regenerated in %s\n", dir.c_str());
        } else if (*cmd_make) {
            auto config = resolve_config(make_o, /*config_required=*/false);
            const fs::path out = make_o.out_set ? fs::path(config.out_dir) : fs::path("data");
            fs::create_directories(out);
            auto train = gcd::data::generate_digit_dataset(make_train, gcd::derive_seed(config.seed, 1));
            auto test = gcd::data::generate_digit_dataset(make_test, gcd::derive_seed(config.seed, 2));
            gcd::data::write_mnist_idx(train, (out / "train-images.idx").string(),
                                       (out / "train-labels.idx").string());
            gcd::data::write_mnist_idx(test, (out / "test-images.idx").string(),
                                       (out / "test-labels.idx").string());
            std::printf("wrote %d train / %d test images under %s\n", make_train, make_test,
                        out.string().c_str());
        }
    } catch (const gcd::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
