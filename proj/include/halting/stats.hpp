#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace halting::stats {

struct MomentSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double std = 0.0;       // population convention
    double skewness = 0.0;  // m3 / m2^{3/2}
    double kurtosis = 0.0;  // m4 / m2^2, non-excess
};

// Central moments with the population convention (divide by count).
inline MomentSummary moments(const std::vector<double>& sample) {
    if (sample.size() < 4)
        throw std::invalid_argument("moments: need at least 4 values");
    const double n = static_cast<double>(sample.size());
    double mean = 0.0;
    for (double v : sample) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : sample) {
        const double d = v - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 <= 0.0)
        throw std::invalid_argument("moments: degenerate sample (zero variance)");
    MomentSummary s;
    s.count = sample.size();
    s.mean = mean;
    s.std = std::sqrt(m2);
    s.skewness = m3 / (m2 * std::sqrt(m2));
    s.kurtosis = m4 / (m2 * m2);
    return s;
}

struct NormalizedSample {
    std::vector<double> values;
};

// Subtract the sample mean, divide by the population standard deviation.
inline NormalizedSample normalize_fluctuations(const std::vector<double>& sample) {
    if (sample.empty())
        throw std::invalid_argument("normalize_fluctuations: empty sample");
    const double n = static_cast<double>(sample.size());
    double mean = 0.0;
    for (double v : sample) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : sample) var += (v - mean) * (v - mean);
    var /= n;
    if (var <= 0.0)
        throw std::invalid_argument("normalize_fluctuations: zero variance");
    const double sd = std::sqrt(var);
    NormalizedSample out;
    out.values.reserve(sample.size());
    for (double v : sample) out.values.push_back((v - mean) / sd);
    return out;
}

// Two-sample Kolmogorov-Smirnov distance: sup over the merged support of
// |F_a - F_b| for the empirical CDFs.
inline double ks_distance(const NormalizedSample& a, const NormalizedSample& b) {
    if (a.values.empty() || b.values.empty())
        throw std::invalid_argument("ks_distance: empty sample");
    std::vector<double> sa = a.values, sb = b.values;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const double na = static_cast<double>(sa.size());
    const double nb = static_cast<double>(sb.size());
    std::size_t ia = 0, ib = 0;
    double d = 0.0;
    while (ia < sa.size() && ib < sb.size()) {
        const double x = std::min(sa[ia], sb[ib]);
        while (ia < sa.size() && sa[ia] <= x) ++ia;
        while (ib < sb.size() && sb[ib] <= x) ++ib;
        d = std::max(d, std::abs(static_cast<double>(ia) / na -
                                 static_cast<double>(ib) / nb));
    }
    return d;
}

// Two-sample KS critical value at level alpha:
// c(alpha) * sqrt((n+m)/(n*m)), c(alpha) = sqrt(-ln(alpha/2)/2).
inline double ks_critical_value(std::size_t n, std::size_t m, double alpha) {
    const double c = std::sqrt(-std::log(alpha / 2.0) / 2.0);
    const double dn = static_cast<double>(n), dm = static_cast<double>(m);
    return c * std::sqrt((dn + dm) / (dn * dm));
}

struct HistogramSpec {
    int bin_count = 40;
    bool auto_range = true;
    double lo = 0.0;
    double hi = 1.0;
};

struct HistogramBin {
    double center;
    double density;
};

// Density histogram; out-of-range values are clipped into the end bins so
// total mass stays 1.
inline std::vector<HistogramBin> histogram(const std::vector<double>& sample,
                                           HistogramSpec spec) {
    if (sample.empty())
        throw std::invalid_argument("histogram: empty sample");
    if (spec.bin_count < 1)
        throw std::invalid_argument("histogram: bin_count must be positive");
    double lo = spec.lo, hi = spec.hi;
    if (spec.auto_range) {
        lo = *std::min_element(sample.begin(), sample.end());
        hi = *std::max_element(sample.begin(), sample.end());
        if (lo == hi) {  // single point: unit-width bin around it
            lo -= 0.5;
            hi += 0.5;
        }
    }
    if (!(lo < hi)) throw std::invalid_argument("histogram: invalid range");
    const double width = (hi - lo) / spec.bin_count;
    std::vector<double> counts(static_cast<std::size_t>(spec.bin_count), 0.0);
    for (double v : sample) {
        int idx = static_cast<int>(std::floor((v - lo) * spec.bin_count / (hi - lo)));
        idx = std::clamp(idx, 0, spec.bin_count - 1);
        counts[static_cast<std::size_t>(idx)] += 1.0;
    }
    const double norm = 1.0 / (static_cast<double>(sample.size()) * width);
    std::vector<HistogramBin> bins;
    bins.reserve(counts.size());
    for (int i = 0; i < spec.bin_count; ++i)
        bins.push_back({lo + (i + 0.5) * width, counts[static_cast<std::size_t>(i)] * norm});
    return bins;
}

// Gaussian-kernel density estimate on a grid. bandwidth <= 0 selects the
// Silverman rule 1.06 * sigma * n^{-1/5}.
inline std::vector<double> kde(const std::vector<double>& sample, double bandwidth,
                               const std::vector<double>& grid) {
    if (sample.empty()) throw std::invalid_argument("kde: empty sample");
    double h = bandwidth;
    if (h <= 0.0) {
        const double n = static_cast<double>(sample.size());
        double mean = 0.0;
        for (double v : sample) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : sample) var += (v - mean) * (v - mean);
        var /= n;
        h = 1.06 * std::sqrt(var) * std::pow(n, -0.2);
        if (h <= 0.0) throw std::invalid_argument("kde: degenerate sample needs explicit bandwidth");
    }
    const double inv_sqrt2pi = 0.39894228040143267794;
    std::vector<double> out;
    out.reserve(grid.size());
    for (double g : grid) {
        double acc = 0.0;
        for (double v : sample) {
            const double z = (g - v) / h;
            acc += std::exp(-0.5 * z * z);
        }
        out.push_back(acc * inv_sqrt2pi / (h * static_cast<double>(sample.size())));
    }
    return out;
}

// Method-of-moments Gumbel fit: scale = std*sqrt(6)/pi,
// location = mean - gamma*scale.
inline std::pair<double, double> gumbel_fit(const std::vector<double>& sample) {
    constexpr double euler_gamma = 0.57721566490153286061;
    constexpr double pi = 3.14159265358979323846;
    const double n = static_cast<double>(sample.size());
    if (sample.empty()) throw std::invalid_argument("gumbel_fit: empty sample");
    double mean = 0.0;
    for (double v : sample) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : sample) var += (v - mean) * (v - mean);
    var /= n;
    if (var <= 0.0) throw std::invalid_argument("gumbel_fit: zero variance");
    const double scale = std::sqrt(var) * std::sqrt(6.0) / pi;
    const double location = mean - euler_gamma * scale;
    return {location, scale};
}

// Analytic shape constants of the Gumbel law, used to label samples as
// Gumbel-like. Skewness 12*sqrt(6)*zeta(3)/pi^3, kurtosis 27/5.
inline constexpr double gumbel_skewness = 1.13954709940464865749;
inline constexpr double gumbel_kurtosis = 5.4;

}  // namespace halting::stats
