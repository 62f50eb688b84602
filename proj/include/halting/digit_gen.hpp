#pragma once

// Synthetic handwritten-style digit images in the 28x28 MNIST layout, for
// environments without the real dataset. Each sample is a 5x7 glyph pushed
// through a random affine warp (rotation, anisotropic scale, shear,
// translation) plus pixel noise, so the classes overlap but stay learnable.

#include <array>
#include <cmath>
#include <cstdint>

#include "halting/mnist_io.hpp"
#include "halting/rng.hpp"

namespace halting::digit_gen {

// 5x7 bitmap font, rows top to bottom, bit 4 is the left column.
inline constexpr std::array<std::array<std::uint8_t, 7>, 10> kGlyphs = {{
    {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e},  // 0
    {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e},  // 1
    {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f},  // 2
    {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e},  // 3
    {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02},  // 4
    {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e},  // 5
    {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e},  // 6
    {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
    {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e},  // 8
    {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c},  // 9
}};

inline constexpr int kImageSide = 28;

namespace detail {

// Glyph sampled at continuous coordinates with bilinear smoothing between
// cell centers.
inline double glyph_value(int digit, double gx, double gy) {
    const auto& glyph = kGlyphs[static_cast<std::size_t>(digit)];
    auto cell = [&](int cx, int cy) -> double {
        if (cx < 0 || cx >= 5 || cy < 0 || cy >= 7) return 0.0;
        return (glyph[static_cast<std::size_t>(cy)] >> (4 - cx)) & 1 ? 1.0 : 0.0;
    };
    const double fx = gx - 0.5, fy = gy - 0.5;
    const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
    const double tx = fx - x0, ty = fy - y0;
    const double top = cell(x0, y0) * (1 - tx) + cell(x0 + 1, y0) * tx;
    const double bot = cell(x0, y0 + 1) * (1 - tx) + cell(x0 + 1, y0 + 1) * tx;
    return top * (1 - ty) + bot * ty;
}

}  // namespace detail

// One 28x28 image of `digit`, written into the given column of `images`.
inline void render_digit(int digit, RandomStream& rng, Eigen::Ref<Eigen::VectorXd> out) {
    const double angle = rng.uniform_open(-0.3, 0.3);
    const double sx = rng.uniform_open(0.8, 1.25);
    const double sy = rng.uniform_open(0.8, 1.25);
    const double shear = rng.uniform_open(-0.2, 0.2);
    const double dx = rng.uniform_open(-2.5, 2.5);
    const double dy = rng.uniform_open(-2.5, 2.5);
    const double noise = rng.uniform_open(0.05, 0.15);
    const double ca = std::cos(angle), sa = std::sin(angle);

    // Output pixel -> glyph coordinates (inverse warp about the centers).
    const double cx_out = kImageSide / 2.0, cy_out = kImageSide / 2.0;
    const double px_per_cell_x = 3.2 / sx, px_per_cell_y = 3.2 / sy;

    for (int y = 0; y < kImageSide; ++y) {
        for (int x = 0; x < kImageSide; ++x) {
            const double ux = x + 0.5 - cx_out - dx;
            const double uy = y + 0.5 - cy_out - dy;
            double rx = ca * ux + sa * uy;
            double ry = -sa * ux + ca * uy;
            rx += shear * ry;
            const double gx = rx / px_per_cell_x + 2.5;
            const double gy = ry / px_per_cell_y + 3.5;
            double v = detail::glyph_value(digit, gx, gy);
            v += noise * rng.normal();
            out[y * kImageSide + x] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        }
    }
}

inline deep_net::MnistDataset make_dataset(int count, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("make_dataset: count must be positive");
    deep_net::MnistDataset ds;
    ds.source = deep_net::DataSource::IdxFiles;
    ds.images.resize(kImageSide * kImageSide, count);
    ds.labels.resize(static_cast<std::size_t>(count));
    RandomStream rng(mix64(seed));
    for (int i = 0; i < count; ++i) {
        const int digit = static_cast<int>(rng.below(10));
        ds.labels[static_cast<std::size_t>(i)] = digit;
        render_digit(digit, rng, ds.images.col(i));
    }
    return ds;
}

}  // namespace halting::digit_gen
