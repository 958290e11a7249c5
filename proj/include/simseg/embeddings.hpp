#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "simseg/image.hpp"

namespace simseg {

/// Image-token embeddings, one row per token, row-major.
struct EmbeddingMatrix {
    std::size_t rows = 0;
    std::size_t dim = 0;
    std::vector<double> values;

    double at(std::size_t r, std::size_t c) const { return values[r * dim + c]; }
    const double* row(std::size_t r) const { return values.data() + r * dim; }
};

/// Raw hidden state of the segmentation token (pre-projection).
struct SegTokenRaw {
    std::vector<double> values;
};

/// Projected segmentation embedding, lives in image-token space.
struct SegEmbedding {
    std::vector<double> values;
};

enum class Nonlinearity { Relu, Tanh };

/// Two-layer projection: affine2(sigma(affine1(x))). Weights are a pure
/// function of (widths, nonlinearity, seed).
class ProjectionHead {
  public:
    ProjectionHead(std::size_t in_dim, std::size_t mid_dim, std::size_t out_dim,
                   Nonlinearity nl, std::uint64_t seed);

    /// Spec defaults: 32 -> 64 -> 16, relu.
    static ProjectionHead with_defaults(std::uint64_t seed);

    /// Square head with identity weights and zero biases; applies only the
    /// nonlinearity. Useful as a gentle near-linear projection.
    static ProjectionHead identity(std::size_t width, Nonlinearity nl);

    SegEmbedding apply(const SegTokenRaw& raw) const;

    std::size_t in_dim() const { return in_; }
    std::size_t mid_dim() const { return mid_; }
    std::size_t out_dim() const { return out_; }
    Nonlinearity nonlinearity() const { return nl_; }

    // Row-major weight access (w1 is mid x in, w2 is out x mid).
    const std::vector<double>& w1() const { return w1_; }
    const std::vector<double>& b1() const { return b1_; }
    const std::vector<double>& w2() const { return w2_; }
    const std::vector<double>& b2() const { return b2_; }

    /// Upper bound B on the Lipschitz constant: product of Frobenius norms
    /// (both supported nonlinearities are 1-Lipschitz).
    double lipschitz_bound() const;

  private:
    ProjectionHead() = default;

    std::size_t in_ = 0, mid_ = 0, out_ = 0;
    Nonlinearity nl_ = Nonlinearity::Relu;
    std::vector<double> w1_, b1_, w2_, b2_;
};

/// Deterministic stand-in for the patch encoder. The image is cut into
/// non-overlapping patch x patch tiles (row-major, truncating ragged
/// edges); each tile is summarized by (mean, variance, centroid-offset-y,
/// centroid-offset-x) and mapped through one seeded linear map shared by
/// all tiles.
EmbeddingMatrix toy_encode(const Image& image, std::size_t patch, std::size_t dim,
                           std::uint64_t seed);

/// Hidden vector at the LAST occurrence of seg_id. Throws NoSegToken when
/// the id never occurs.
SegTokenRaw extract_seg_token(const std::vector<std::vector<double>>& hidden_states,
                              const std::vector<int>& token_ids, int seg_id);

SegEmbedding project(const SegTokenRaw& raw, const ProjectionHead& head);

/// Deterministic stand-in for the seg token's last hidden state: pools the
/// patch embeddings with attention weights softmax(gain * patch mean
/// intensity), then rescales to max-abs state_scale. Saliency-driven; the
/// query text at desk scale always asks for the one salient region.
SegTokenRaw toy_seg_state(const Image& image, std::size_t patch,
                          const EmbeddingMatrix& tokens, double attention_gain,
                          double state_scale);

// Binary serialization: 8-byte header (rows, dim as uint32 little-endian)
// followed by row-major float32 little-endian values.
void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
void save_embeddings_csv(const EmbeddingMatrix& m, const std::filesystem::path& path);

}  // namespace simseg
