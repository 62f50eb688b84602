#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include <Eigen/Dense>

#include "halting/deep_net.hpp"
#include "halting/digit_gen.hpp"
#include "halting/mnist_io.hpp"
#include "halting/rng.hpp"

using namespace halting;
using namespace halting::deep_net;
using Catch::Approx;

namespace fs = std::filesystem;

namespace {

// Scalar-loop re-implementation of the forward cost, kept independent of
// the Eigen path it checks.
double scalar_forward_cost(const MlpParams& p, const Batch& batch) {
    double total = 0.0;
    for (Eigen::Index s = 0; s < batch.inputs.cols(); ++s) {
        std::vector<double> act(static_cast<std::size_t>(batch.inputs.rows()));
        for (Eigen::Index i = 0; i < batch.inputs.rows(); ++i)
            act[static_cast<std::size_t>(i)] = batch.inputs(i, s);
        for (std::size_t l = 0; l < p.weights.size(); ++l) {
            const auto& w = p.weights[l];
            std::vector<double> next(static_cast<std::size_t>(w.rows()));
            for (Eigen::Index i = 0; i < w.rows(); ++i) {
                double z = p.biases[l][i];
                for (Eigen::Index j = 0; j < w.cols(); ++j)
                    z += w(i, j) * act[static_cast<std::size_t>(j)];
                if (l + 1 < p.weights.size()) z = z > 0.0 ? z : 0.0;
                next[static_cast<std::size_t>(i)] = z;
            }
            act = std::move(next);
        }
        double mx = act[0];
        for (double v : act) mx = std::max(mx, v);
        double denom = 0.0;
        for (double v : act) denom += std::exp(v - mx);
        const int label = batch.labels[static_cast<std::size_t>(s)];
        total -= act[static_cast<std::size_t>(label)] - mx - std::log(denom);
    }
    return total / static_cast<double>(batch.inputs.cols());
}

MlpParams zero_params(const MlpArchitecture& arch) {
    MlpParams p;
    for (std::size_t l = 0; l + 1 < arch.layer_sizes.size(); ++l) {
        p.weights.push_back(
            Eigen::MatrixXd::Zero(arch.layer_sizes[l + 1], arch.layer_sizes[l]));
        p.biases.push_back(Eigen::VectorXd::Zero(arch.layer_sizes[l + 1]));
    }
    return p;
}

Batch random_batch(int dim, int bsz, int classes, RandomStream& rng) {
    Batch b;
    b.inputs.resize(dim, bsz);
    for (int c = 0; c < bsz; ++c)
        for (int i = 0; i < dim; ++i) b.inputs(i, c) = rng.normal();
    b.labels.resize(static_cast<std::size_t>(bsz));
    for (auto& l : b.labels) l = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    return b;
}

}  // namespace

TEST_CASE("forward_cost: zero parameters give ln(num classes)") {
    RandomStream rng(41);
    MlpArchitecture arch{{6, 4, 10}};
    const auto p = zero_params(arch);
    const auto batch = random_batch(6, 5, 10, rng);
    CHECK(forward_cost(p, batch) == Approx(std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("forward_cost: matches the scalar-loop oracle") {
    RandomStream rng(42);
    MlpArchitecture arch{{4, 3, 2}};
    const auto p = init_params(arch, rng);
    const auto batch = random_batch(4, 7, 2, rng);
    CHECK(forward_cost(p, batch) == Approx(scalar_forward_cost(p, batch)).epsilon(1e-12));
}

TEST_CASE("forward_cost: nonnegative") {
    RandomStream rng(43);
    for (int rep = 0; rep < 10; ++rep) {
        MlpArchitecture arch{{5, 8, 3}};
        const auto p = init_params(arch, rng);
        const auto batch = random_batch(5, 4, 3, rng);
        CHECK(forward_cost(p, batch) >= 0.0);
    }
}

TEST_CASE("backward: softmax-minus-onehot at zero parameters") {
    // [2,2] net, single sample, zero weights: probs are uniform (1/2), so the
    // output-layer bias gradient is softmax - onehot and the weight gradient
    // is its outer product with the input.
    MlpArchitecture arch{{2, 2}};
    const auto p = zero_params(arch);
    Batch batch;
    batch.inputs.resize(2, 1);
    batch.inputs << 0.3, -0.7;
    batch.labels = {1};
    const auto g = backward(p, batch);
    CHECK(g.biases[0][0] == Approx(0.5).epsilon(1e-12));
    CHECK(g.biases[0][1] == Approx(-0.5).epsilon(1e-12));
    CHECK(g.weights[0](0, 0) == Approx(0.5 * 0.3).epsilon(1e-12));
    CHECK(g.weights[0](1, 1) == Approx(-0.5 * -0.7).epsilon(1e-12));
}

namespace {

// The finite-difference oracle is only valid away from relu kinks: if any
// hidden preactivation sits within the step size of 0, the centered
// difference straddles two linear pieces. Recompute preactivations from the
// stored activations and report the smallest margin.
double min_kink_margin(const MlpParams& p, const Batch& batch) {
    double margin = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd act = batch.inputs;
    for (std::size_t l = 0; l + 1 < p.weights.size(); ++l) {
        Eigen::MatrixXd z = (p.weights[l] * act).colwise() + p.biases[l];
        margin = std::min(margin, z.cwiseAbs().minCoeff());
        act = z.cwiseMax(0.0);
    }
    return margin;
}

}  // namespace

TEST_CASE("backward: matches central finite differences on random shapes") {
    RandomStream rng(44);
    int checked_shapes = 0;
    while (checked_shapes < 20) {
        const int in = 2 + static_cast<int>(rng.below(5));
        const int h1 = 2 + static_cast<int>(rng.below(5));
        const int h2 = 2 + static_cast<int>(rng.below(4));
        const int out = 2 + static_cast<int>(rng.below(3));
        MlpArchitecture arch{{in, h1, h2, out}};
        auto p = init_params(arch, rng);
        const auto batch = random_batch(in, 3 + static_cast<int>(rng.below(5)), out, rng);
        if (min_kink_margin(p, batch) < 1e-2) continue;
        const auto g = backward(p, batch);

        const double h = 1e-5;
        double max_rel = 0.0;
        for (std::size_t l = 0; l < p.weights.size(); ++l) {
            for (Eigen::Index i = 0; i < p.weights[l].rows(); ++i)
                for (Eigen::Index j = 0; j < p.weights[l].cols(); ++j) {
                    const double save = p.weights[l](i, j);
                    p.weights[l](i, j) = save + h;
                    const double up = forward_cost(p, batch);
                    p.weights[l](i, j) = save - h;
                    const double dn = forward_cost(p, batch);
                    p.weights[l](i, j) = save;
                    const double fd = (up - dn) / (2.0 * h);
                    const double an = g.weights[l](i, j);
                    if (std::abs(an) > 1e-8)
                        max_rel = std::max(max_rel, std::abs(an - fd) / std::abs(an));
                }
            for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) {
                const double save = p.biases[l][i];
                p.biases[l][i] = save + h;
                const double up = forward_cost(p, batch);
                p.biases[l][i] = save - h;
                const double dn = forward_cost(p, batch);
                p.biases[l][i] = save;
                const double fd = (up - dn) / (2.0 * h);
                const double an = g.biases[l][i];
                if (std::abs(an) > 1e-8)
                    max_rel = std::max(max_rel, std::abs(an - fd) / std::abs(an));
            }
        }
        REQUIRE(max_rel < 1e-5);
        ++checked_shapes;
    }
    CHECK(checked_shapes == 20);
}

TEST_CASE("backward: zero input batch zeroes the input-layer weight gradient") {
    RandomStream rng(45);
    MlpArchitecture arch{{6, 5, 4, 3}};
    const auto p = init_params(arch, rng);
    Batch batch;
    batch.inputs = Eigen::MatrixXd::Zero(6, 4);
    batch.labels = {0, 1, 2, 0};
    const auto g = backward(p, batch);
    CHECK(g.weights[0].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("init_params: zero biases, 1/fan-in weight variance, distinct streams") {
    RandomStream rng(46);
    MlpArchitecture arch{{784, 50, 10}};
    const auto p = init_params(arch, rng);
    for (const auto& b : p.biases) CHECK(b.cwiseAbs().maxCoeff() == 0.0);
    const double var = p.weights[0].squaredNorm() /
                       static_cast<double>(p.weights[0].size());
    CHECK(var == Approx(1.0 / 784.0).epsilon(0.05));

    RandomStream rng2(47);
    const auto q = init_params(arch, rng2);
    CHECK(p.weights[0] != q.weights[0]);
}

TEST_CASE("idx round trip and error paths") {
    const fs::path dir = fs::temp_directory_path() / "halting_idx_test";
    fs::create_directories(dir);
    const auto ds = digit_gen::make_dataset(32, 123);
    const auto img = (dir / "img").string();
    const auto lab = (dir / "lab").string();
    save_mnist_idx(ds, 28, 28, img, lab);

    // Header bytes: 00 00 08 03 for images, 00 00 08 01 for labels.
    {
        std::ifstream in(img, std::ios::binary);
        unsigned char hdr[4];
        in.read(reinterpret_cast<char*>(hdr), 4);
        CHECK(hdr[0] == 0x00);
        CHECK(hdr[1] == 0x00);
        CHECK(hdr[2] == 0x08);
        CHECK(hdr[3] == 0x03);
    }
    {
        std::ifstream in(lab, std::ios::binary);
        unsigned char hdr[4];
        in.read(reinterpret_cast<char*>(hdr), 4);
        CHECK(hdr[3] == 0x01);
    }

    const auto back = load_mnist_idx(img, lab);
    REQUIRE(back.count() == 32);
    REQUIRE(back.dim() == 784);
    CHECK(back.labels == ds.labels);
    CHECK(back.images.minCoeff() >= 0.0);
    CHECK(back.images.maxCoeff() <= 1.0);
    // byte quantization only
    CHECK((back.images - ds.images).cwiseAbs().maxCoeff() <= 0.5 / 255.0 + 1e-12);

    SECTION("bad magic rejected") {
        const auto badpath = (dir / "bad").string();
        std::ofstream bad(badpath, std::ios::binary);
        const char junk[16] = {0, 0, 9, 9};
        bad.write(junk, 16);
        bad.close();
        CHECK_THROWS(load_mnist_idx(badpath, lab));
    }
    SECTION("truncated file rejected") {
        const auto shortpath = (dir / "short").string();
        std::ifstream in(img, std::ios::binary);
        std::vector<char> buf(200);
        in.read(buf.data(), 200);
        std::ofstream out(shortpath, std::ios::binary);
        out.write(buf.data(), 200);
        out.close();
        CHECK_THROWS(load_mnist_idx(shortpath, lab));
    }
    SECTION("count mismatch rejected") {
        const auto ds2 = digit_gen::make_dataset(16, 5);
        const auto lab2 = (dir / "lab2").string();
        save_mnist_idx(ds2, 28, 28, (dir / "img2").string(), lab2);
        CHECK_THROWS(load_mnist_idx(img, lab2));
    }
    fs::remove_all(dir);
}

TEST_CASE("subsample: exhaustive case is a permutation; s = 1 is a member") {
    RandomStream rng(48);
    const auto ds = digit_gen::make_dataset(20, 9);
    const auto all = subsample(ds, 20, rng);
    std::vector<int> histo(10, 0), histo2(10, 0);
    for (int l : ds.labels) ++histo[static_cast<std::size_t>(l)];
    for (int l : all.labels) ++histo2[static_cast<std::size_t>(l)];
    CHECK(histo == histo2);
    double total = ds.images.sum(), total2 = all.images.sum();
    CHECK(total == Approx(total2));

    const auto one = subsample(ds, 1, rng);
    bool found = false;
    for (Eigen::Index i = 0; i < ds.count(); ++i)
        if (ds.images.col(i) == one.images.col(0) && ds.labels[static_cast<std::size_t>(i)] == one.labels[0])
            found = true;
    CHECK(found);

    CHECK_THROWS(subsample(ds, 21, rng));
}

TEST_CASE("subsample: indices distinct at half the pool") {
    RandomStream rng(49);
    deep_net::MnistDataset ds;
    ds.images.resize(1, 600);
    ds.labels.resize(600);
    for (int i = 0; i < 600; ++i) {
        ds.images(0, i) = i;  // unique marker per sample
        ds.labels[static_cast<std::size_t>(i)] = i % 10;
    }
    const auto sub = subsample(ds, 300, rng);
    std::vector<bool> seen(600, false);
    for (Eigen::Index i = 0; i < sub.count(); ++i) {
        const int marker = static_cast<int>(sub.images(0, i));
        CHECK_FALSE(seen[static_cast<std::size_t>(marker)]);
        seen[static_cast<std::size_t>(marker)] = true;
    }
}

TEST_CASE("make_noise_inputs: labels preserved, Gaussian support") {
    RandomStream rng(50);
    const auto ds = digit_gen::make_dataset(50, 11);
    const auto noise = make_noise_inputs(ds, rng);
    CHECK(noise.labels == ds.labels);
    CHECK(noise.source == DataSource::GaussianNoise);
    CHECK(noise.images.minCoeff() < 0.0);  // not pixel-range constrained
}

TEST_CASE("accuracy: perfect and constant predictors") {
    // Identity-like net on one-hot inputs predicts its own labels.
    MlpArchitecture arch{{10, 10}};
    MlpParams perfect = zero_params(arch);
    perfect.weights[0] = 10.0 * Eigen::MatrixXd::Identity(10, 10);
    MnistDataset ds;
    ds.images = Eigen::MatrixXd::Identity(10, 10);
    ds.labels.resize(10);
    for (int i = 0; i < 10; ++i) ds.labels[static_cast<std::size_t>(i)] = i;
    CHECK(accuracy(perfect, ds) == 1.0);

    // All-zero net always predicts class 0 on a balanced set -> 0.1.
    const auto constant = zero_params(arch);
    CHECK(accuracy(constant, ds) == Approx(0.1));
}

TEST_CASE("sgd_train_halting: infinite threshold halts when the window fills") {
    RandomStream rng(51);
    const auto ds = digit_gen::make_dataset(300, 13);
    MlpArchitecture arch{{784, 8, 10}};
    SgdConfig cfg;
    cfg.batch_size = 50;
    cfg.stop.kind = StopKind::AvgCostDiff;
    cfg.stop.window = 12;
    cfg.stop.threshold = std::numeric_limits<double>::infinity();
    const auto res = sgd_train_halting(arch, ds, cfg, rng);
    CHECK(res.halting_time == 12);
    CHECK(res.converged);
}

TEST_CASE("sgd_train_halting: separable blobs reach perfect accuracy") {
    RandomStream rng(52);
    MnistDataset blobs;
    const int per_class = 60;
    blobs.images.resize(2, 2 * per_class);
    blobs.labels.resize(2 * per_class);
    for (int i = 0; i < per_class; ++i) {
        blobs.images(0, i) = 2.0 + 0.3 * rng.normal();
        blobs.images(1, i) = 2.0 + 0.3 * rng.normal();
        blobs.labels[static_cast<std::size_t>(i)] = 0;
        blobs.images(0, per_class + i) = -2.0 + 0.3 * rng.normal();
        blobs.images(1, per_class + i) = -2.0 + 0.3 * rng.normal();
        blobs.labels[static_cast<std::size_t>(per_class + i)] = 1;
    }
    MlpArchitecture arch{{2, 8, 2}};
    SgdConfig cfg;
    cfg.batch_size = 20;
    cfg.learning_rate = 0.2;
    cfg.cap = 2000;
    cfg.stop.kind = StopKind::GradNorm;
    cfg.stop.threshold = 1e-3;
    const auto res = sgd_train_halting(arch, blobs, cfg, rng);
    CHECK(res.train_accuracy == 1.0);
    CHECK(res.halting_time <= 2000);
}

TEST_CASE("sgd_train_halting: determinism for identical seeds") {
    const auto ds = digit_gen::make_dataset(200, 17);
    MlpArchitecture arch{{784, 10, 10}};
    SgdConfig cfg;
    cfg.batch_size = 50;
    cfg.cap = 60;
    cfg.stop.threshold = 1e-9;
    RandomStream r1 = RandomStream::for_trial(5, 0);
    RandomStream r2 = RandomStream::for_trial(5, 0);
    const auto a = sgd_train_halting(arch, ds, cfg, r1);
    const auto b = sgd_train_halting(arch, ds, cfg, r2);
    CHECK(a.halting_time == b.halting_time);
    CHECK(a.final_train_cost == b.final_train_cost);
    CHECK(a.train_accuracy == b.train_accuracy);
}
