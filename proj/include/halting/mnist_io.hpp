#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "halting/rng.hpp"

namespace halting::deep_net {

enum class DataSource { IdxFiles, GaussianNoise };

// Images live as columns of a 784 x S matrix, pixels in [0,1] for the IDX
// source. Labels are 0..9.
struct MnistDataset {
    Eigen::MatrixXd images;  // dim x count, one sample per column
    std::vector<int> labels;
    DataSource source = DataSource::IdxFiles;

    Eigen::Index count() const { return images.cols(); }
    Eigen::Index dim() const { return images.rows(); }
};

namespace idx {

inline constexpr std::uint32_t kImageMagic = 0x00000803;  // unsigned byte, rank 3
inline constexpr std::uint32_t kLabelMagic = 0x00000801;  // unsigned byte, rank 1

inline std::uint32_t read_be32(std::istream& in, const std::string& what) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4))
        throw std::runtime_error("idx: truncated file while reading " + what);
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

inline void write_be32(std::ostream& out, std::uint32_t v) {
    const unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(buf), 4);
}

}  // namespace idx

inline MnistDataset load_mnist_idx(const std::string& images_path,
                                   const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("load_mnist_idx: cannot open " + images_path);
    if (idx::read_be32(img, "image magic") != idx::kImageMagic)
        throw std::runtime_error("load_mnist_idx: bad magic number in " + images_path);
    const std::uint32_t count = idx::read_be32(img, "image count");
    const std::uint32_t rows = idx::read_be32(img, "rows");
    const std::uint32_t cols = idx::read_be32(img, "cols");
    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("load_mnist_idx: cannot open " + labels_path);
    if (idx::read_be32(lab, "label magic") != idx::kLabelMagic)
        throw std::runtime_error("load_mnist_idx: bad magic number in " + labels_path);
    const std::uint32_t label_count = idx::read_be32(lab, "label count");
    if (label_count != count)
        throw std::runtime_error("load_mnist_idx: image/label count mismatch");

    MnistDataset ds;
    ds.source = DataSource::IdxFiles;
    ds.images.resize(static_cast<Eigen::Index>(pixels), count);
    ds.labels.resize(count);
    std::vector<unsigned char> buf(pixels);
    for (std::uint32_t s = 0; s < count; ++s) {
        if (!img.read(reinterpret_cast<char*>(buf.data()),
                      static_cast<std::streamsize>(pixels)))
            throw std::runtime_error("load_mnist_idx: truncated image data in " + images_path);
        for (std::size_t p = 0; p < pixels; ++p)
            ds.images(static_cast<Eigen::Index>(p), s) = buf[p] / 255.0;
        char lb;
        if (!lab.read(&lb, 1))
            throw std::runtime_error("load_mnist_idx: truncated label data in " + labels_path);
        const int label = static_cast<unsigned char>(lb);
        if (label > 9)
            throw std::runtime_error("load_mnist_idx: label out of range 0..9");
        ds.labels[s] = label;
    }
    return ds;
}

// Writes a dataset back out in the same bit-exact IDX layout. Pixels are
// clamped to [0,1] and quantized to bytes.
inline void save_mnist_idx(const MnistDataset& ds, std::uint32_t rows, std::uint32_t cols,
                           const std::string& images_path, const std::string& labels_path) {
    if (static_cast<Eigen::Index>(rows) * cols != ds.dim())
        throw std::invalid_argument("save_mnist_idx: rows*cols must equal image dim");
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("save_mnist_idx: cannot open " + images_path);
    idx::write_be32(img, idx::kImageMagic);
    idx::write_be32(img, static_cast<std::uint32_t>(ds.count()));
    idx::write_be32(img, rows);
    idx::write_be32(img, cols);
    for (Eigen::Index s = 0; s < ds.count(); ++s) {
        for (Eigen::Index p = 0; p < ds.dim(); ++p) {
            double v = ds.images(p, s);
            v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
            const unsigned char byte = static_cast<unsigned char>(v * 255.0 + 0.5);
            img.write(reinterpret_cast<const char*>(&byte), 1);
        }
    }
    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("save_mnist_idx: cannot open " + labels_path);
    idx::write_be32(lab, idx::kLabelMagic);
    idx::write_be32(lab, static_cast<std::uint32_t>(ds.count()));
    for (int l : ds.labels) {
        const unsigned char byte = static_cast<unsigned char>(l);
        lab.write(reinterpret_cast<const char*>(&byte), 1);
    }
}

// Uniform subsample without replacement; fresh per trial.
inline MnistDataset subsample(const MnistDataset& ds, Eigen::Index s, RandomStream& rng) {
    if (s > ds.count()) throw std::invalid_argument("subsample: requested more items than available");
    // Partial Fisher-Yates over an index array.
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(ds.count()));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
    for (Eigen::Index i = 0; i < s; ++i) {
        const auto j = i + static_cast<Eigen::Index>(
                               rng.below(static_cast<std::uint64_t>(ds.count() - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    MnistDataset out;
    out.source = ds.source;
    out.images.resize(ds.dim(), s);
    out.labels.resize(static_cast<std::size_t>(s));
    for (Eigen::Index i = 0; i < s; ++i) {
        out.images.col(i) = ds.images.col(idx[static_cast<std::size_t>(i)]);
        out.labels[static_cast<std::size_t>(i)] =
            ds.labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    }
    return out;
}

// Same labels, images replaced by iid standard Gaussian noise.
inline MnistDataset make_noise_inputs(const MnistDataset& ds, RandomStream& rng) {
    if (ds.count() == 0) throw std::invalid_argument("make_noise_inputs: empty dataset");
    MnistDataset out;
    out.source = DataSource::GaussianNoise;
    out.labels = ds.labels;
    out.images.resize(ds.dim(), ds.count());
    for (Eigen::Index s = 0; s < ds.count(); ++s)
        for (Eigen::Index p = 0; p < ds.dim(); ++p) out.images(p, s) = rng.normal();
    return out;
}

}  // namespace halting::deep_net
