// Test-only oracles: independent reference implementations the suites
// check the library against. Everything here is deliberately naive and
// kept free of the production code paths it verifies.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "simseg/embeddings.hpp"
#include "simseg/image.hpp"
#include "simseg/rvls2m.hpp"

namespace oracles {

// Patch statistics by direct pixel loop: (mean, variance, centroid-offset-y,
// centroid-offset-x) over the patch at tile (pr, pc).
inline std::array<double, 4> patch_stats(const simseg::Image& img, std::size_t patch,
                                         std::size_t pr, std::size_t pc) {
    const double count = static_cast<double>(patch * patch);
    double sum = 0.0;
    for (std::size_t i = 0; i < patch; ++i)
        for (std::size_t j = 0; j < patch; ++j) sum += img.at(pr * patch + i, pc * patch + j);
    const double mean = sum / count;
    double var = 0.0, wy = 0.0, wx = 0.0;
    for (std::size_t i = 0; i < patch; ++i)
        for (std::size_t j = 0; j < patch; ++j) {
            const double px = img.at(pr * patch + i, pc * patch + j);
            var += (px - mean) * (px - mean);
            wy += static_cast<double>(i) * px;
            wx += static_cast<double>(j) * px;
        }
    var /= count;
    const double center = (static_cast<double>(patch) - 1.0) / 2.0;
    double oy = 0.0, ox = 0.0;
    if (sum > 0.0) {
        oy = (wy / sum - center) / static_cast<double>(patch);
        ox = (wx / sum - center) / static_cast<double>(patch);
    }
    return {mean, var, oy, ox};
}

// Solve the square system A x = b by Gaussian elimination with partial
// pivoting in long double. Returns false on a (near-)singular matrix.
inline bool solve_dense(std::vector<long double> a, std::vector<long double> b,
                        std::size_t n, std::vector<long double>& x) {
    std::vector<std::size_t> piv(n);
    std::iota(piv.begin(), piv.end(), 0);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t best = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabsl(a[r * n + col]) > std::fabsl(a[best * n + col])) best = r;
        if (std::fabsl(a[best * n + col]) < 1e-18L) return false;
        for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[best * n + c]);
        std::swap(b[col], b[best]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const long double f = a[r * n + col] / a[col * n + col];
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    x.assign(n, 0.0L);
    for (std::size_t r = n; r-- > 0;) {
        long double acc = b[r];
        for (std::size_t c = r + 1; c < n; ++c) acc -= a[r * n + c] * x[c];
        x[r] = acc / a[r * n + r];
    }
    return true;
}

// Fit y ~ M x over observations via normal equations (long double).
// rows: observation count, in_dim: unknowns per output channel.
inline bool fit_linear_map(const std::vector<std::vector<double>>& inputs,
                           const std::vector<std::vector<double>>& outputs,
                           std::size_t in_dim, std::size_t out_dim,
                           std::vector<long double>& map) {
    std::vector<long double> gram(in_dim * in_dim, 0.0L);
    for (const auto& x : inputs)
        for (std::size_t i = 0; i < in_dim; ++i)
            for (std::size_t j = 0; j < in_dim; ++j)
                gram[i * in_dim + j] += static_cast<long double>(x[i]) * x[j];
    map.assign(out_dim * in_dim, 0.0L);
    for (std::size_t c = 0; c < out_dim; ++c) {
        std::vector<long double> rhs(in_dim, 0.0L);
        for (std::size_t r = 0; r < inputs.size(); ++r)
            for (std::size_t i = 0; i < in_dim; ++i)
                rhs[i] += static_cast<long double>(inputs[r][i]) * outputs[r][c];
        std::vector<long double> x;
        if (!solve_dense(gram, rhs, in_dim, x)) return false;
        for (std::size_t i = 0; i < in_dim; ++i) map[c * in_dim + i] = x[i];
    }
    return true;
}

// Two-layer head evaluation in long double from the head's raw weights.
inline std::vector<double> mlp_eval(const simseg::ProjectionHead& head,
                                    const std::vector<double>& input) {
    const std::size_t in = head.in_dim(), mid = head.mid_dim(), out = head.out_dim();
    std::vector<long double> hidden(mid, 0.0L);
    for (std::size_t r = 0; r < mid; ++r) {
        long double acc = head.b1()[r];
        for (std::size_t c = 0; c < in; ++c)
            acc += static_cast<long double>(head.w1()[r * in + c]) * input[c];
        hidden[r] = head.nonlinearity() == simseg::Nonlinearity::Relu
                        ? (acc > 0.0L ? acc : 0.0L)
                        : std::tanh(static_cast<double>(acc));
    }
    std::vector<double> result(out);
    for (std::size_t r = 0; r < out; ++r) {
        long double acc = head.b2()[r];
        for (std::size_t c = 0; c < mid; ++c)
            acc += static_cast<long double>(head.w2()[r * mid + c]) * hidden[c];
        result[r] = static_cast<double>(acc);
    }
    return result;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

// Extended-precision softmax, straight from the definition.
inline std::vector<double> softmax_ld(const std::vector<double>& values) {
    long double total = 0.0L;
    std::vector<long double> e(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        e[i] = std::expl(static_cast<long double>(values[i]));
        total += e[i];
    }
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        out[i] = static_cast<double>(e[i] / total);
    return out;
}

// Double-loop block means with the same summation order as the library.
inline std::vector<double> block_mean(const simseg::SimilarityMap& map, std::size_t grid) {
    const std::size_t block = std::min(map.height, map.width) / grid;
    std::vector<double> out(grid * grid);
    for (std::size_t k = 0; k < grid; ++k)
        for (std::size_t l = 0; l < grid; ++l) {
            double acc = 0.0;
            for (std::size_t i = block * k; i < block * (k + 1); ++i)
                for (std::size_t j = block * l; j < block * (l + 1); ++j)
                    acc += map.at(i, j);
            out[k * grid + l] = acc * (1.0 / static_cast<double>(block * block));
        }
    return out;
}

// Sort-based top-k selection with the (value desc, index asc) tie rule.
inline std::vector<std::uint8_t> topk_select(const std::vector<double>& values,
                                             std::size_t keep) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] > values[b];
        return a < b;
    });
    std::vector<std::uint8_t> bits(values.size(), 0);
    for (std::size_t i = 0; i < std::min(keep, values.size()); ++i) bits[order[i]] = 1;
    return bits;
}

// Full five-stage brute force: similarity, softmax, reshape, pooling,
// thresholding, written as plain loops over a given seg embedding.
inline simseg::RegionMask rvls2m_brute(const simseg::EmbeddingMatrix& tokens,
                                       const std::vector<double>& seg, std::size_t grid,
                                       std::size_t top_count) {
    const std::size_t n = tokens.rows;
    std::vector<double> sim(n);
    for (std::size_t r = 0; r < n; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < tokens.dim; ++c) acc += tokens.at(r, c) * seg[c];
        sim[r] = acc;
    }
    double mx = sim[0];
    for (double v : sim) mx = std::max(mx, v);
    std::vector<double> soft(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        soft[i] = std::exp(sim[i] - mx);
        total += soft[i];
    }
    for (double& v : soft) v /= total;

    std::size_t h = 0;
    while ((h + 1) * (h + 1) <= n) ++h;
    const std::size_t w = (n + h - 1) / h;
    simseg::SimilarityMap map;
    map.height = h;
    map.width = w;
    map.pad_count = h * w - n;
    map.values.assign(h * w, 0.0);
    std::copy(soft.begin(), soft.end(), map.values.begin());

    const std::vector<double> pooled = block_mean(map, grid);
    simseg::RegionMask mask(grid);
    mask.bits = topk_select(pooled, std::min(top_count, grid * grid));
    return mask;
}

// Central finite differences of a scalar function of one logit vector.
template <typename F>
std::vector<double> finite_difference(F&& value_at, std::vector<double> logits,
                                      double step = 1e-4) {
    std::vector<double> grad(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double keep = logits[i];
        logits[i] = keep + step;
        const double hi = value_at(logits);
        logits[i] = keep - step;
        const double lo = value_at(logits);
        logits[i] = keep;
        grad[i] = (hi - lo) / (2.0 * step);
    }
    return grad;
}

// Exact pixel counting.
inline std::pair<std::size_t, std::size_t> pixel_counts(const simseg::BitMask& a,
                                                        const simseg::BitMask& b) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t y = 0; y < a.height; ++y)
        for (std::size_t x = 0; x < a.width; ++x) {
            const bool pa = a.at(y, x) != 0;
            const bool pb = b.at(y, x) != 0;
            if (pa && pb) ++inter;
            if (pa || pb) ++uni;
        }
    return {inter, uni};
}

inline double pixel_iou(const simseg::BitMask& a, const simseg::BitMask& b) {
    const auto [inter, uni] = pixel_counts(a, b);
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace oracles
