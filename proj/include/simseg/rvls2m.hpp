#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "simseg/embeddings.hpp"
#include "simseg/image.hpp"

namespace simseg {

/// Token-level similarity scores. `normalized` flips once softmax ran.
struct SimilarityVector {
    std::vector<double> values;
    bool normalized = false;
};

/// Row-major 2D arrangement of a normalized similarity vector.
/// height = floor(sqrt(n)), width = ceil(n / height); trailing
/// pad_count cells are exactly zero.
struct SimilarityMap {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values;
    std::size_t pad_count = 0;

    double at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
};

/// g x g average-pooled region similarities; block is the pooling window
/// side length b = floor(min(h, w) / g).
struct RegionMatrix {
    std::size_t grid = 0;
    std::vector<double> values;
    std::size_t block = 0;

    double at(std::size_t k, std::size_t l) const { return values[k * grid + l]; }
};

/// Binary region prompt.
struct RegionMask {
    std::size_t grid = 0;
    std::vector<std::uint8_t> bits;

    RegionMask() = default;
    explicit RegionMask(std::size_t g, std::uint8_t fill = 0) : grid(g), bits(g * g, fill) {}

    std::uint8_t at(std::size_t k, std::size_t l) const { return bits[k * grid + l]; }
    std::uint8_t& at(std::size_t k, std::size_t l) { return bits[k * grid + l]; }
    std::size_t popcount() const {
        std::size_t c = 0;
        for (std::uint8_t b : bits) c += b;
        return c;
    }
    bool operator==(const RegionMask&) const = default;
};

/// Keep the k highest cells (counts above g*g keep everything).
struct TopK {
    std::size_t k = 36;
};
/// Keep cells with value >= threshold.
struct AbsoluteThreshold {
    double threshold = 0.0;
};
/// TopK with k = max(1, ceil(fraction * g * g)).
struct TopFraction {
    double fraction = 1.0;
};
using TauStrategy = std::variant<TopK, AbsoluteThreshold, TopFraction>;

/// Cell count a TopK/TopFraction strategy selects on a g x g grid.
std::size_t resolve_top_count(const TauStrategy& strategy, std::size_t grid);

/// Parse "topk:36", "abs:0.25" or "frac:0.14".
TauStrategy parse_tau(const std::string& text);
std::string tau_to_string(const TauStrategy& strategy);

/// Dot product of every image token against the seg embedding.
SimilarityVector similarity(const EmbeddingMatrix& tokens, const SegEmbedding& seg);

/// Max-subtracted softmax; preserves argmax, output sums to one.
SimilarityVector normalize(const SimilarityVector& sim);

/// Reshape to the 2D map, zero-filling the trailing surplus cells.
SimilarityMap to_map(const SimilarityVector& sim);

/// Average pooling per Eq. block index ranges; rows/columns past b*g are
/// ignored. Summation is plain row-major accumulation so an independent
/// double-loop reproduces it bit-for-bit.
RegionMatrix pool_regions(const SimilarityMap& map, std::size_t grid);

/// Adaptive thresholding. TopK ties break toward the smallest row-major
/// index so outputs are total-order reproducible.
RegionMask apply_tau(const RegionMatrix& regions, const TauStrategy& strategy);

/// Full region-aware vision-language similarity-to-mask pipeline:
/// project -> similarity -> softmax -> 2D map -> region pooling ->
/// adaptive thresholding.
RegionMask rvls2m(const EmbeddingMatrix& tokens, const SegTokenRaw& raw,
                  const ProjectionHead& head, std::size_t grid,
                  const TauStrategy& strategy);

BitMask region_to_bitmask(const RegionMask& mask);
void save_pbm(const RegionMask& mask, const std::filesystem::path& path);
RegionMask region_mask_from_pbm(const std::filesystem::path& path);

/// JSON array of row bitstrings, e.g. ["0110", "1001", ...].
std::string region_mask_to_json(const RegionMask& mask);
RegionMask region_mask_from_json(const std::string& text);

}  // namespace simseg
