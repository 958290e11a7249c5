#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "simseg/embeddings.hpp"
#include "simseg/image.hpp"
#include "simseg/rvls2m.hpp"

namespace simseg {

/// Per-pixel visual features, (y, x, channel) row-major.
struct VisualFeatures {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t dim = 0;
    std::vector<double> values;

    const double* at(std::size_t y, std::size_t x) const {
        return values.data() + (y * width + x) * dim;
    }
};

struct DecoderConfig {
    double prompt_gain = 4.0;  // beta
    double threshold = 0.6;    // scores at the zero-logit level stay below it
};

/// Pixel-level prediction: logistic scores plus the thresholded bits.
struct PredictedMask {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> scores;
    BitMask bits;
    double threshold = 0.6;
};

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Seeded convolution-like local statistics per pixel: (value, 3x3 mean,
/// 3x3 variance, central x/y gradients) with replicate borders, mapped
/// through one fixed linear map. Constant images give constant features.
VisualFeatures extract_features(const Image& image, std::size_t dim, std::uint64_t seed);

/// Nearest-neighbor upsample of the region prompt to h x w.
BitMask upsample_nearest(const RegionMask& region, std::size_t height, std::size_t width);

/// scores[p] = logistic(dot(feats[p], seg) + gain * upsampled(region)[p]);
/// bits by scores >= threshold.
PredictedMask decode(const VisualFeatures& feats, const SegEmbedding& seg,
                     const RegionMask& region, const DecoderConfig& cfg);

void save_pbm(const PredictedMask& mask, const std::filesystem::path& path);
/// 8-bit PGM of the score map scaled to 0..255.
void save_pgm_scores(const PredictedMask& mask, const std::filesystem::path& path);

}  // namespace simseg
