// Command-line front end: runs halting-time experiments, analyzes stored
// records, and compares normalized samples across ensembles.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "halting/csv.hpp"
#include "halting/digit_gen.hpp"
#include "halting/harness.hpp"
#include "halting/presets.hpp"
#include "halting/stats.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::optional<int> trials;
    std::optional<int> n;
    std::optional<int> m;
    std::optional<double> eps;
    std::optional<std::string> ensemble;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string out = ".";
    bool timing = false;
};

void add_common_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--preset", o.preset, "named experiment preset");
    cmd->add_option("--trials", o.trials, "number of trials");
    cmd->add_option("--n", o.n, "dimension N");
    cmd->add_option("--m", o.m, "inner dimension M (cg)");
    cmd->add_option("--eps", o.eps, "halting threshold");
    cmd->add_option("--ensemble", o.ensemble, "input ensemble");
    cmd->add_option("--seed", o.seed, "experiment seed");
    cmd->add_option("--threads", o.threads, "worker threads (0 = auto)");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_flag("--timing", o.timing, "record per-trial wall time in records.csv");
}

json build_config_json(const CommonOpts& o, const std::string& algorithm) {
    json j;
    if (!o.preset.empty()) j = halting::presets::get(o.preset);
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) throw halting::harness::ConfigError("cannot open config: " + o.config_path);
        json file_cfg = json::parse(in, nullptr, true, true);
        j.merge_patch(file_cfg);
    }
    j["algorithm"] = algorithm;
    if (o.trials) j["trials"] = *o.trials;
    if (o.n) j["n"] = *o.n;
    if (o.m) j["m"] = *o.m;
    if (o.eps) j["eps"] = *o.eps;
    if (o.ensemble) j["ensemble"] = *o.ensemble;
    if (o.seed) j["seed"] = *o.seed;
    if (o.threads) j["threads"] = *o.threads;
    if (o.timing) j["record_wall_time"] = true;
    if (!j.contains("ensemble"))
        throw halting::harness::ConfigError("no ensemble given (use --ensemble, --preset or --config)");
    return j;
}

void write_experiment_outputs(const halting::harness::ExperimentConfig& cfg,
                              const std::vector<halting::harness::TrialRecord>& records,
                              const fs::path& out_dir) {
    namespace hh = halting::harness;
    namespace hs = halting::stats;
    fs::create_directories(out_dir);
    halting::csv::write_file((out_dir / "records.csv").string(),
                             halting::csv::emit_records(records));
    const auto report = hh::summarize(records);
    std::string summary = halting::csv::summary_header();
    summary += halting::csv::emit_summary_row(hh::to_string(cfg.algorithm), cfg.ensemble,
                                              report.moments);
    halting::csv::write_file((out_dir / "summary.csv").string(), summary);
    hs::HistogramSpec hspec;
    hspec.bin_count = 40;
    hspec.auto_range = false;
    hspec.lo = -4.0;
    hspec.hi = 4.0;
    halting::csv::write_file((out_dir / "hist.csv").string(),
                             halting::csv::emit_histogram(
                                 hs::histogram(report.normalized.values, hspec)));
    halting::csv::write_file((out_dir / "normalized.csv").string(),
                             halting::csv::emit_normalized(report.normalized));
    std::cout << cfg.experiment_id << ": " << records.size() << " trials, mean "
              << report.moments.mean << ", std " << report.moments.std << ", skewness "
              << report.moments.skewness << ", kurtosis " << report.moments.kurtosis
              << ", flagged " << report.flagged_fraction << "\n";
}

int run_algorithm(const CommonOpts& o, const std::string& algorithm) {
    json j = build_config_json(o, algorithm);
    auto cfg = halting::harness::config_from_json(j);
    if (cfg.experiment_id == "experiment") cfg.experiment_id = algorithm + "-" + cfg.ensemble;
    cfg.validate();
    // From here on errors are runtime failures, not configuration mistakes
    // (e.g. a degenerate halting-time sample has no summary moments).
    std::vector<halting::harness::TrialRecord> records;
    try {
        records = halting::harness::run_experiment(cfg);
        write_experiment_outputs(cfg, records, o.out);
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(e.what());
    }
    if (halting::harness::flagged_fraction(records) > cfg.max_flagged_fraction) {
        std::cerr << "error: flagged-trial fraction "
                  << halting::harness::flagged_fraction(records) << " exceeds limit "
                  << cfg.max_flagged_fraction << "\n";
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Halting-time distribution laboratory"};
    app.require_subcommand(1);

    CommonOpts cg_opts, sg_opts, dn_opts;
    auto* run_cg = app.add_subcommand("run-cg", "conjugate gradient on random linear systems");
    add_common_flags(run_cg, cg_opts);
    auto* run_sg = app.add_subcommand("run-spinglass", "gradient descent on 3-spin spherical glasses");
    add_common_flags(run_sg, sg_opts);
    auto* run_dn = app.add_subcommand("run-deepnet", "minibatch SGD on a fully connected net");
    add_common_flags(run_dn, dn_opts);

    std::string records_path, analyze_out = ".";
    auto* analyze = app.add_subcommand("analyze", "summarize a records.csv file");
    analyze->add_option("--records", records_path, "records.csv to analyze")->required();
    analyze->add_option("--out", analyze_out, "output directory");

    std::string cmp_a, cmp_b;
    double cmp_alpha = 0.01;
    auto* compare = app.add_subcommand("compare", "compare two normalized samples");
    compare->add_option("--a", cmp_a, "first normalized.csv")->required();
    compare->add_option("--b", cmp_b, "second normalized.csv")->required();
    compare->add_option("--alpha", cmp_alpha, "KS significance level");

    std::string gen_out = "data";
    int gen_train = 12000, gen_test = 2000;
    std::uint64_t gen_seed = 7;
    auto* gen = app.add_subcommand("gen-data",
                                   "generate synthetic digit IDX files (MNIST stand-in)");
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--train", gen_train, "training sample count");
    gen->add_option("--test", gen_test, "test sample count");
    gen->add_option("--seed", gen_seed, "generator seed");

    std::string list_dummy;
    auto* presets_cmd = app.add_subcommand("presets", "list named presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cg->parsed()) return run_algorithm(cg_opts, "cg");
        if (run_sg->parsed()) return run_algorithm(sg_opts, "spin_glass");
        if (run_dn->parsed()) return run_algorithm(dn_opts, "deep_net");
        if (analyze->parsed()) {
            const auto records =
                halting::csv::parse_records(halting::csv::read_file(records_path));
            if (records.empty()) throw halting::harness::ConfigError("no records in file");
            halting::harness::ExperimentConfig cfg;
            cfg.experiment_id = records.front().experiment_id;
            cfg.ensemble = "unknown";
            write_experiment_outputs(cfg, records, analyze_out);
            return 0;
        }
        if (compare->parsed()) {
            const auto a = halting::csv::parse_normalized(halting::csv::read_file(cmp_a));
            const auto b = halting::csv::parse_normalized(halting::csv::read_file(cmp_b));
            const auto rep = halting::harness::compare_ensembles(a, b, cmp_alpha);
            std::cout << "ks_distance " << rep.ks_distance << "\nks_threshold "
                      << rep.ks_threshold << "\nd_skewness " << rep.d_skewness
                      << "\nd_kurtosis " << rep.d_kurtosis << "\nverdict "
                      << (rep.universal ? "universal" : "non-universal") << "\n";
            return 0;
        }
        if (gen->parsed()) {
            fs::create_directories(gen_out);
            const auto train = halting::digit_gen::make_dataset(gen_train, gen_seed);
            halting::deep_net::save_mnist_idx(
                train, 28, 28, (fs::path(gen_out) / "train-images-idx3-ubyte").string(),
                (fs::path(gen_out) / "train-labels-idx1-ubyte").string());
            const auto test = halting::digit_gen::make_dataset(gen_test, gen_seed + 1);
            halting::deep_net::save_mnist_idx(
                test, 28, 28, (fs::path(gen_out) / "t10k-images-idx3-ubyte").string(),
                (fs::path(gen_out) / "t10k-labels-idx1-ubyte").string());
            std::cout << "wrote " << gen_train << " train / " << gen_test << " test images to "
                      << gen_out << "\n";
            return 0;
        }
        if (presets_cmd->parsed()) {
            for (const auto& name : halting::presets::names()) std::cout << name << "\n";
            return 0;
        }
    } catch (const halting::harness::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
