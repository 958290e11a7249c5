#include "simseg/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "simseg/errors.hpp"
#include "simseg/rng.hpp"

namespace simseg {

VisualFeatures extract_features(const Image& image, std::size_t dim, std::uint64_t seed) {
    if (image.height == 0 || image.width == 0) throw InvalidInput("empty image");
    if (dim == 0) throw InvalidInput("feature dim must be >= 1");

    Rng rng(seed);
    std::vector<double> map(dim * 5);
    for (double& v : map) v = rng.normal() / std::sqrt(5.0);

    VisualFeatures out;
    out.height = image.height;
    out.width = image.width;
    out.dim = dim;
    out.values.resize(image.height * image.width * dim);

    const auto h = static_cast<long>(image.height);
    const auto w = static_cast<long>(image.width);
    auto clamped = [&](long y, long x) {
        y = std::clamp<long>(y, 0, h - 1);
        x = std::clamp<long>(x, 0, w - 1);
        return image.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
    };

    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x) {
            double sum = 0.0;
            for (long dy = -1; dy <= 1; ++dy)
                for (long dx = -1; dx <= 1; ++dx) sum += clamped(y + dy, x + dx);
            const double mean = sum / 9.0;
            double var = 0.0;
            for (long dy = -1; dy <= 1; ++dy)
                for (long dx = -1; dx <= 1; ++dx) {
                    const double d = clamped(y + dy, x + dx) - mean;
                    var += d * d;
                }
            var /= 9.0;
            const double gx = (clamped(y, x + 1) - clamped(y, x - 1)) / 2.0;
            const double gy = (clamped(y + 1, x) - clamped(y - 1, x)) / 2.0;
            const double stats[5] = {clamped(y, x), mean, var, gx, gy};

            double* f = out.values.data() +
                        (static_cast<std::size_t>(y) * image.width +
                         static_cast<std::size_t>(x)) *
                            dim;
            for (std::size_t r = 0; r < dim; ++r) {
                double acc = 0.0;
                for (std::size_t c = 0; c < 5; ++c) acc += map[r * 5 + c] * stats[c];
                f[r] = acc;
            }
        }
    return out;
}

BitMask upsample_nearest(const RegionMask& region, std::size_t height, std::size_t width) {
    if (region.grid == 0) throw InvalidInput("empty region mask");
    if (region.grid > height || region.grid > width)
        throw InvalidInput("region grid exceeds the target resolution");
    BitMask out(height, width);
    for (std::size_t y = 0; y < height; ++y) {
        const std::size_t k = std::min(region.grid - 1, y * region.grid / height);
        for (std::size_t x = 0; x < width; ++x) {
            const std::size_t l = std::min(region.grid - 1, x * region.grid / width);
            out.at(y, x) = region.at(k, l);
        }
    }
    return out;
}

PredictedMask decode(const VisualFeatures& feats, const SegEmbedding& seg,
                     const RegionMask& region, const DecoderConfig& cfg) {
    if (feats.dim != seg.values.size())
        throw InvalidInput("feature dim does not match seg embedding dim");
    if (region.grid > std::min(feats.height, feats.width))
        throw InvalidInput("region grid exceeds the feature resolution");
    if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0))
        throw InvalidInput("decision threshold must lie in (0, 1)");
    if (cfg.prompt_gain < 0.0) throw InvalidInput("prompt gain must be >= 0");

    const BitMask up = upsample_nearest(region, feats.height, feats.width);

    PredictedMask out;
    out.height = feats.height;
    out.width = feats.width;
    out.threshold = cfg.threshold;
    out.scores.resize(feats.height * feats.width);
    out.bits = BitMask(feats.height, feats.width);
    for (std::size_t y = 0; y < feats.height; ++y)
        for (std::size_t x = 0; x < feats.width; ++x) {
            const double* f = feats.at(y, x);
            double acc = 0.0;
            for (std::size_t c = 0; c < feats.dim; ++c) acc += f[c] * seg.values[c];
            if (up.at(y, x)) acc += cfg.prompt_gain;
            const double s = logistic(acc);
            const std::size_t i = y * feats.width + x;
            out.scores[i] = s;
            out.bits.bits[i] = s >= cfg.threshold ? 1 : 0;
        }
    return out;
}

void save_pbm(const PredictedMask& mask, const std::filesystem::path& path) {
    save_pbm(mask.bits, path);
}

void save_pgm_scores(const PredictedMask& mask, const std::filesystem::path& path) {
    Image img(mask.height, mask.width);
    img.pixels = mask.scores;
    save_pgm(img, path);
}

}  // namespace simseg
