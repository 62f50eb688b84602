#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "halting/harness.hpp"

namespace halting::presets {

// Named experiment profiles. The plain names are desk/CI scale; the
// "-full" variants are the full reproduction profiles (hours of CPU).
//
// Spin-glass eta/eps and the deep-net stopping thresholds are calibrated
// defaults: pilot runs at N = 100 (resp. the desk-scale net) chosen so the
// mean halting time lands in the regime of the reference experiments.
inline nlohmann::json get(const std::string& name) {
    using nlohmann::json;

    auto cg = [](const std::string& ensemble, int trials, bool critical) {
        json j;
        j["algorithm"] = "cg";
        j["ensemble"] = ensemble;
        j["n"] = 500;
        j["m"] = critical ? 500 : 544;  // M = N vs M = N + 2*floor(sqrt(N))
        j["eps"] = 1e-10;
        j["max_iter"] = 5000;
        j["trials"] = trials;
        j["seed"] = 12345;
        return j;
    };
    auto spin = [](const std::string& ensemble, int trials) {
        json j;
        j["algorithm"] = "spin_glass";
        j["ensemble"] = ensemble;
        j["n"] = 100;
        j["eta"] = 0.1;
        // The landscape scale is proportional to the coupling standard
        // deviation (1, 1/sqrt(2), sqrt((3/2)^(2/3)/3)), so the gradient
        // threshold is 0.2 times that scale; a single absolute threshold
        // would stop the three ensembles at different relative depths.
        j["eps"] = ensemble == "bernoulli"  ? 0.2 * 0.70710678118654752
                   : ensemble == "uniform" ? 0.2 * 0.66084283155628098
                                           : 0.2;
        j["max_iter"] = 20000;
        j["trials"] = trials;
        j["seed"] = 12345;
        return j;
    };
    auto deep = [](const std::string& ensemble, bool full) {
        json j;
        j["algorithm"] = "deep_net";
        j["ensemble"] = ensemble;
        j["arch"] = full ? std::vector<int>{784, 500, 300, 10}
                         : std::vector<int>{784, 50, 30, 10};
        j["sample_size"] = full ? 30000 : 3000;
        j["batch_size"] = 100;
        j["learning_rate"] = full ? 0.05 : 0.1;
        // Thresholds sit between the initial cost plateau (average
        // successive difference a few times 1e-2, where stopping would be
        // premature) and the late-training noise floor (a few times 1e-4).
        j["stop"] = {{"kind", "avg_cost_diff"},
                     {"threshold", ensemble == "noise" ? (full ? 0.003 : 0.006) : (full ? 0.005 : 0.01)},
                     {"window", 25}};
        j["train_cap"] = full ? 40000 : 20000;
        j["trials"] = full ? 1000 : 200;
        j["images"] = "data/train-images-idx3-ubyte";
        j["labels"] = "data/train-labels-idx1-ubyte";
        j["seed"] = 12345;
        return j;
    };

    json j;
    if (name == "cg-universal-loe") j = cg("loe", 1000, false);
    else if (name == "cg-universal-lue") j = cg("lue", 1000, false);
    else if (name == "cg-universal-pbe") j = cg("pbe", 1000, false);
    else if (name == "cg-critical-loe") j = cg("loe", 1000, true);
    else if (name == "cg-critical-lue") j = cg("lue", 1000, true);
    else if (name == "cg-universal-loe-full") j = cg("loe", 10000, false);
    else if (name == "cg-universal-lue-full") j = cg("lue", 10000, false);
    else if (name == "cg-universal-pbe-full") j = cg("pbe", 10000, false);
    else if (name == "cg-critical-loe-full") j = cg("loe", 10000, true);
    else if (name == "cg-critical-lue-full") j = cg("lue", 10000, true);
    else if (name == "spinglass-gaussian") j = spin("gaussian", 1000);
    else if (name == "spinglass-bernoulli") j = spin("bernoulli", 1000);
    else if (name == "spinglass-uniform") j = spin("uniform", 1000);
    else if (name == "spinglass-gaussian-full") j = spin("gaussian", 10000);
    else if (name == "spinglass-bernoulli-full") j = spin("bernoulli", 10000);
    else if (name == "spinglass-uniform-full") j = spin("uniform", 10000);
    else if (name == "deepnet-mnist") j = deep("mnist", false);
    else if (name == "deepnet-noise") j = deep("noise", false);
    else if (name == "deepnet-mnist-full") j = deep("mnist", true);
    else if (name == "deepnet-noise-full") j = deep("noise", true);
    else throw harness::ConfigError("unknown preset: " + name);

    j["experiment_id"] = name;
    return j;
}

inline std::vector<std::string> names() {
    return {"cg-universal-loe",      "cg-universal-lue",      "cg-universal-pbe",
            "cg-critical-loe",       "cg-critical-lue",       "cg-universal-loe-full",
            "cg-universal-lue-full", "cg-universal-pbe-full", "cg-critical-loe-full",
            "cg-critical-lue-full",  "spinglass-gaussian",    "spinglass-bernoulli",
            "spinglass-uniform",     "spinglass-gaussian-full",
            "spinglass-bernoulli-full", "spinglass-uniform-full",
            "deepnet-mnist",         "deepnet-noise",
            "deepnet-mnist-full",    "deepnet-noise-full"};
}

}  // namespace halting::presets
