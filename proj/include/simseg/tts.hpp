#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "simseg/decoder.hpp"
#include "simseg/embeddings.hpp"
#include "simseg/image.hpp"
#include "simseg/rvls2m.hpp"

namespace simseg {

/// One sampled reasoning path: generated text (exactly one "[SEG]"), the
/// jittered seg-token state, and the seed that produced both.
struct ReasoningPath {
    std::size_t index = 0;
    std::string text;
    SegTokenRaw seg_state;
    std::uint64_t seed = 0;
    double noise_scale = 0.0;
};

/// Knobs for the toy path sampler.
struct PathConfig {
    std::size_t patch = 2;
    std::size_t dim = 16;
    std::uint64_t encoder_seed = 0;
    double attention_gain = 12.0;
    double state_scale = 0.4;
    double noise_scale = 0.0;  // seg-state jitter, also scales the vote jitter
    std::vector<std::string> labels{"benign", "malignant"};
    double diagnosis_cutoff = 0.085;  // on the irregularity-estimate scale
    double diagnosis_jitter = 0.25;   // vote jitter = noise_scale * this
};

/// Path i draws from seed base_seed + i: the pooled seg state plus
/// Gaussian jitter scaled by noise_scale, and a diagnosis phrase voted
/// from the image's irregularity estimate plus jitter. Zero noise with
/// m = 1 reproduces the deterministic single-pass inference.
/// `tokens` may pass a precomputed toy_encode result for the same
/// (image, patch, dim, encoder_seed); omit it to encode internally.
std::vector<ReasoningPath> sample_paths(const Image& image, const std::string& query,
                                        std::size_t m, std::uint64_t base_seed,
                                        const PathConfig& config,
                                        const EmbeddingMatrix* tokens = nullptr);

/// Boundary-radius spread (std / mean) of the thresholded raster; 0 when
/// nothing exceeds the threshold. Monotone proxy for lesion irregularity.
double estimate_irregularity(const Image& image, double intensity_threshold = 0.5);

struct PerturbationParams {
    std::size_t flip_budget = 0;
    int dilation_radius = 0;  // 0 or 1
    std::uint64_t seed = 0;
};

/// The perturbation distribution: flip budget ~ U{0..max_flips},
/// radius ~ U{0..max_radius}, drawn independently per perturbation index.
struct PerturbationFamily {
    std::size_t max_flips = 4;
    int max_radius = 1;
};

PerturbationParams draw_perturbation(const PerturbationFamily& family, std::uint64_t seed);

/// Dilate active cells (8-neighborhood, given radius), then toggle
/// flip_budget distinct uniformly chosen cells.
RegionMask perturb(const RegionMask& region, const PerturbationParams& params);

struct Candidate {
    std::size_t path_index = 0;
    std::size_t perturb_index = 0;
    PredictedMask mask;
    double quality = 0.0;
};

struct CandidateSet {
    std::size_t paths = 0;          // m
    std::size_t perturbations = 0;  // n
    std::vector<Candidate> items;   // (i, j) lexicographic
};

/// Candidate (i, j) decodes path i's seg embedding with region i perturbed
/// by the j-th draw from the family; the j-th draw is shared across paths.
CandidateSet generate_candidates(const std::vector<ReasoningPath>& paths, std::size_t n,
                                 const std::vector<RegionMask>& regions,
                                 const VisualFeatures& feats, const ProjectionHead& head,
                                 const DecoderConfig& cfg, const PerturbationFamily& family,
                                 std::uint64_t seed);

/// Score against the ground truth.
struct OracleSelection {
    BitMask reference;
};
/// Score against the per-pixel strict-majority vote over the candidates.
struct ReferenceFreeSelection {};
using SelectionMode = std::variant<OracleSelection, ReferenceFreeSelection>;

struct Selected {
    PredictedMask mask;
    std::size_t path_index = 0;
    std::size_t perturb_index = 0;
    double score = 0.0;
};

/// Pixel is set iff strictly more than half of the candidates set it.
BitMask majority_reference(const CandidateSet& candidates);

/// Fills every candidate's quality, then returns the argmax; ties break
/// toward the smallest (path, perturbation) pair.
Selected select(CandidateSet& candidates, const SelectionMode& mode);

/// Majority vote over per-path diagnoses; ties break toward the label
/// first produced by the lowest-index path. Absent votes never win.
std::optional<std::string> vote_diagnosis(
    const std::vector<std::optional<std::string>>& votes);

}  // namespace simseg
