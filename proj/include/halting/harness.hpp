#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "halting/cg.hpp"
#include "halting/deep_net.hpp"
#include "halting/ensembles.hpp"
#include "halting/spin_glass.hpp"
#include "halting/stats.hpp"

namespace halting::harness {

enum class Algorithm { Cg, SpinGlass, DeepNet };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string experiment_id;
    Algorithm algorithm = Algorithm::Cg;
    std::string ensemble;  // loe|lue|pbe, gaussian|bernoulli|uniform, mnist|noise

    // cg
    int n = 500;
    int m = 544;
    double eps = 1e-10;
    int max_iter = 0;  // 0: 10*n for cg, 10000 for spin glass

    // spin glass
    double eta = 0.01;
    std::string stop_norm = "tangential";

    // deep net
    std::vector<int> arch = {784, 50, 30, 10};
    int sample_size = 3000;
    int batch_size = 100;
    double learning_rate = 0.1;
    std::string stop_kind = "avg_cost_diff";
    double stop_threshold = 1e-3;
    int stop_window = 25;
    bool stop_full_cost = false;
    int train_cap = 20000;
    std::string images_path;
    std::string labels_path;

    int trials = 100;
    std::uint64_t seed = 1;
    int threads = 0;  // 0 = hardware concurrency
    std::string out_dir;
    double max_flagged_fraction = 0.05;
    bool record_wall_time = false;

    void validate() const;
};

inline Algorithm algorithm_from_string(const std::string& s) {
    if (s == "cg") return Algorithm::Cg;
    if (s == "spin_glass" || s == "spinglass") return Algorithm::SpinGlass;
    if (s == "deep_net" || s == "deepnet") return Algorithm::DeepNet;
    throw ConfigError("unknown algorithm: " + s);
}

inline std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::Cg: return "cg";
        case Algorithm::SpinGlass: return "spin_glass";
        default: return "deep_net";
    }
}

inline void ExperimentConfig::validate() const {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
    switch (algorithm) {
        case Algorithm::Cg:
            if (ensemble != "loe" && ensemble != "lue" && ensemble != "pbe")
                throw ConfigError("cg ensemble must be loe, lue or pbe");
            if (n < 1 || m < n) throw ConfigError("cg requires 1 <= n <= m");
            break;
        case Algorithm::SpinGlass:
            if (ensemble != "gaussian" && ensemble != "bernoulli" && ensemble != "uniform")
                throw ConfigError("spin glass ensemble must be gaussian, bernoulli or uniform");
            if (n < 2) throw ConfigError("spin glass requires n >= 2");
            if (!(eta > 0.0)) throw ConfigError("eta must be positive");
            if (stop_norm != "tangential" && stop_norm != "ambient")
                throw ConfigError("stop_norm must be tangential or ambient");
            break;
        case Algorithm::DeepNet:
            if (ensemble != "mnist" && ensemble != "noise")
                throw ConfigError("deep net ensemble must be mnist or noise");
            if (arch.size() < 2) throw ConfigError("arch needs at least 2 layers");
            if (sample_size < batch_size) throw ConfigError("sample_size must be >= batch_size");
            if (stop_kind != "avg_cost_diff" && stop_kind != "grad_norm")
                throw ConfigError("stop kind must be avg_cost_diff or grad_norm");
            if (!(stop_threshold > 0.0)) throw ConfigError("stop threshold must be positive");
            if (images_path.empty() || labels_path.empty())
                throw ConfigError("deep net requires images/labels paths");
            break;
    }
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    try {
        c.experiment_id = j.value("experiment_id", std::string("experiment"));
        c.algorithm = algorithm_from_string(j.at("algorithm").get<std::string>());
        c.ensemble = j.at("ensemble").get<std::string>();
        c.n = j.value("n", c.n);
        c.m = j.value("m", c.m);
        c.eps = j.value("eps", c.eps);
        c.max_iter = j.value("max_iter", c.max_iter);
        c.eta = j.value("eta", c.eta);
        c.stop_norm = j.value("stop_norm", c.stop_norm);
        if (j.contains("arch")) c.arch = j.at("arch").get<std::vector<int>>();
        c.sample_size = j.value("sample_size", c.sample_size);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        if (j.contains("stop")) {
            const auto& s = j.at("stop");
            c.stop_kind = s.value("kind", c.stop_kind);
            c.stop_threshold = s.value("threshold", c.stop_threshold);
            c.stop_window = s.value("window", c.stop_window);
            c.stop_full_cost = s.value("full_cost", c.stop_full_cost);
        }
        c.train_cap = j.value("train_cap", c.train_cap);
        c.images_path = j.value("images", c.images_path);
        c.labels_path = j.value("labels", c.labels_path);
        c.trials = j.value("trials", c.trials);
        c.seed = j.value("seed", c.seed);
        c.threads = j.value("threads", c.threads);
        c.out_dir = j.value("out", c.out_dir);
        c.max_flagged_fraction = j.value("max_flagged_fraction", c.max_flagged_fraction);
        c.record_wall_time = j.value("record_wall_time", c.record_wall_time);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
    return c;
}

struct TrialRecord {
    std::string experiment_id;
    int trial_index = 0;
    int halting_time = 0;
    bool converged = false;
    double final_value = 0.0;  // residual norm / energy per spin / training cost
    std::int64_t wall_time_ms = 0;
    double aux = 0.0;  // in-memory diagnostic (deep net: accuracy); not serialized
};

namespace detail {

inline ensembles::MatrixKind matrix_kind(const std::string& s) {
    if (s == "loe") return ensembles::MatrixKind::LOE;
    if (s == "lue") return ensembles::MatrixKind::LUE;
    return ensembles::MatrixKind::PBE;
}

inline ensembles::CouplingKind coupling_kind(const std::string& s) {
    if (s == "gaussian") return ensembles::CouplingKind::Gaussian;
    if (s == "bernoulli") return ensembles::CouplingKind::Bernoulli;
    return ensembles::CouplingKind::Uniform;
}

inline TrialRecord run_cg_trial(const ExperimentConfig& cfg, int index) {
    RandomStream rng = RandomStream::for_trial(cfg.seed, static_cast<std::uint64_t>(index));
    const ensembles::MatrixEnsemble spec(matrix_kind(cfg.ensemble), cfg.n, cfg.m);
    const auto a = ensembles::sample_wishart(spec, rng);
    const auto b = ensembles::sample_rhs(cfg.n, rng);
    cg::CgConfig ccfg;
    ccfg.eps = cfg.eps;
    ccfg.max_iter = cfg.max_iter > 0 ? cfg.max_iter : cg::default_max_iter(cfg.n);
    const auto res = cg::cg_halting_time(a, b, ccfg);
    TrialRecord rec;
    rec.halting_time = res.halting_time;
    rec.converged = res.converged;
    rec.final_value = res.recursive_residual_norm;
    return rec;
}

inline TrialRecord run_spin_glass_trial(const ExperimentConfig& cfg, int index) {
    RandomStream rng = RandomStream::for_trial(cfg.seed, static_cast<std::uint64_t>(index));
    const ensembles::CouplingEnsemble spec(coupling_kind(cfg.ensemble), cfg.n);
    const auto x = ensembles::sample_coupling_tensor(spec, rng);
    const auto w0 = ensembles::sample_sphere_point(cfg.n, rng);
    spin_glass::SpinGlassConfig scfg;
    scfg.eta = cfg.eta;
    scfg.eps = cfg.eps;
    scfg.max_iter = cfg.max_iter > 0 ? cfg.max_iter : 10000;
    scfg.stop_norm = cfg.stop_norm == "ambient" ? spin_glass::StopNorm::Ambient
                                                : spin_glass::StopNorm::Tangential;
    const auto res = spin_glass::gradient_descent_halting(x, w0, scfg);
    TrialRecord rec;
    rec.halting_time = res.halting_time;
    rec.converged = res.converged;
    rec.final_value = res.final_energy_per_spin;
    return rec;
}

inline TrialRecord run_deep_net_trial(const ExperimentConfig& cfg,
                                      const deep_net::MnistDataset& pool, int index) {
    RandomStream rng = RandomStream::for_trial(cfg.seed, static_cast<std::uint64_t>(index));
    deep_net::MnistDataset train = deep_net::subsample(pool, cfg.sample_size, rng);
    if (cfg.ensemble == "noise") train = deep_net::make_noise_inputs(train, rng);

    deep_net::MlpArchitecture arch{cfg.arch};
    deep_net::SgdConfig scfg;
    scfg.batch_size = cfg.batch_size;
    scfg.learning_rate = cfg.learning_rate;
    scfg.cap = cfg.train_cap;
    scfg.stop.kind = cfg.stop_kind == "grad_norm" ? deep_net::StopKind::GradNorm
                                                  : deep_net::StopKind::AvgCostDiff;
    scfg.stop.threshold = cfg.stop_threshold;
    scfg.stop.window = cfg.stop_window;
    scfg.stop.full_cost = cfg.stop_full_cost;
    const auto res = deep_net::sgd_train_halting(arch, train, scfg, rng);

    TrialRecord rec;
    rec.halting_time = res.halting_time;
    rec.converged = res.converged;
    rec.final_value = res.final_train_cost;
    if (cfg.ensemble == "noise") {
        // The model cannot carry over to fresh noise; score it there.
        deep_net::MnistDataset heldout = deep_net::make_noise_inputs(train, rng);
        rec.aux = deep_net::accuracy(res.params, heldout);
    } else {
        rec.aux = res.train_accuracy;
    }
    return rec;
}

}  // namespace detail

// Runs `trials` independent trials on a small work pool. Trial i derives
// its stream from (seed, i), so results do not depend on the thread count
// or the scheduling order.
inline std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();

    std::optional<deep_net::MnistDataset> pool;
    if (cfg.algorithm == Algorithm::DeepNet)
        pool = deep_net::load_mnist_idx(cfg.images_path, cfg.labels_path);

    std::vector<TrialRecord> records(static_cast<std::size_t>(cfg.trials));
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::string failure_message;
    std::mutex failure_mutex;

    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= cfg.trials || failed.load()) break;
            const auto start = std::chrono::steady_clock::now();
            try {
                TrialRecord rec;
                switch (cfg.algorithm) {
                    case Algorithm::Cg: rec = detail::run_cg_trial(cfg, i); break;
                    case Algorithm::SpinGlass: rec = detail::run_spin_glass_trial(cfg, i); break;
                    case Algorithm::DeepNet: rec = detail::run_deep_net_trial(cfg, *pool, i); break;
                }
                rec.experiment_id = cfg.experiment_id;
                rec.trial_index = i;
                if (cfg.record_wall_time) {
                    const auto end = std::chrono::steady_clock::now();
                    rec.wall_time_ms =
                        std::chrono::duration_cast<std::chrono::milliseconds>(end - start).count();
                }
                records[static_cast<std::size_t>(i)] = std::move(rec);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                failure_message = e.what();
                failed.store(true);
                break;
            }
        }
    };

    int nthreads = cfg.threads > 0 ? cfg.threads
                                   : static_cast<int>(std::thread::hardware_concurrency());
    if (nthreads < 1) nthreads = 1;
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(nthreads));
        for (int i = 0; i < nthreads; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (failed.load()) throw std::runtime_error("run_experiment: trial failed: " + failure_message);
    return records;
}

// Converged halting times only; flagged trials stay in the raw records but
// are excluded from statistics.
inline std::vector<double> converged_halting_times(const std::vector<TrialRecord>& records) {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records)
        if (r.converged) out.push_back(static_cast<double>(r.halting_time));
    return out;
}

inline double flagged_fraction(const std::vector<TrialRecord>& records) {
    if (records.empty()) return 0.0;
    std::size_t bad = 0;
    for (const auto& r : records)
        if (!r.converged) ++bad;
    return static_cast<double>(bad) / static_cast<double>(records.size());
}

struct SummaryReport {
    stats::MomentSummary moments;
    stats::NormalizedSample normalized;
    double flagged_fraction = 0.0;
    // Deltas against a reference row, when one was supplied.
    bool has_reference = false;
    double d_mean = 0.0, d_std = 0.0, d_skewness = 0.0, d_kurtosis = 0.0;
};

struct ReferenceRow {
    double mean, std, skewness, kurtosis;
};

inline SummaryReport summarize(const std::vector<TrialRecord>& records,
                               std::optional<ReferenceRow> reference = std::nullopt) {
    const auto times = converged_halting_times(records);
    if (times.size() < 4)
        throw std::runtime_error("summarize: need at least 4 converged trials");
    SummaryReport rep;
    rep.moments = stats::moments(times);
    rep.normalized = stats::normalize_fluctuations(times);
    rep.flagged_fraction = flagged_fraction(records);
    if (reference) {
        rep.has_reference = true;
        rep.d_mean = rep.moments.mean - reference->mean;
        rep.d_std = rep.moments.std - reference->std;
        rep.d_skewness = rep.moments.skewness - reference->skewness;
        rep.d_kurtosis = rep.moments.kurtosis - reference->kurtosis;
    }
    return rep;
}

struct ComparisonReport {
    double ks_distance = 0.0;
    double ks_threshold = 0.0;
    double d_skewness = 0.0;
    double d_kurtosis = 0.0;
    bool universal = false;
};

// KS distance plus moment deltas between two normalized samples; the
// verdict is "universal" iff the KS distance is below the two-sample
// critical value at alpha = 0.01 for the given sizes.
inline ComparisonReport compare_ensembles(const stats::NormalizedSample& a,
                                          const stats::NormalizedSample& b,
                                          double alpha = 0.01) {
    if (a.values.empty() || b.values.empty())
        throw std::invalid_argument("compare_ensembles: empty sample");
    ComparisonReport rep;
    rep.ks_distance = stats::ks_distance(a, b);
    rep.ks_threshold = stats::ks_critical_value(a.values.size(), b.values.size(), alpha);
    const auto ma = stats::moments(a.values);
    const auto mb = stats::moments(b.values);
    rep.d_skewness = std::abs(ma.skewness - mb.skewness);
    rep.d_kurtosis = std::abs(ma.kurtosis - mb.kurtosis);
    rep.universal = rep.ks_distance <= rep.ks_threshold;
    return rep;
}

}  // namespace halting::harness
