#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "simseg/decoder.hpp"
#include "simseg/losses.hpp"
#include "simseg/metrics.hpp"
#include "simseg/rvls2m.hpp"
#include "simseg/synthdata.hpp"
#include "simseg/tts.hpp"

namespace simseg {

struct TtsRunConfig {
    std::size_t paths = 1;  // m
    std::size_t masks = 1;  // n
    double noise = 0.0;
    PerturbationFamily family;
    bool reference_free = false;  // default: oracle selection
};

/// Everything one run needs; reports are reproducible from this plus the
/// master seed it contains.
struct RunConfig {
    std::string dataset_dir;  // load when nonempty, otherwise synthesize
    SceneSpec scene;
    std::size_t samples = 200;

    std::size_t patch = 2;
    std::size_t dim = 16;
    double attention_gain = 12.0;
    double state_scale = 0.4;
    double feature_scale = 0.12;

    std::size_t grid = 16;
    TauStrategy tau = TopK{36};
    DecoderConfig decoder;
    LossWeights weights;
    TtsRunConfig tts;

    std::vector<std::string> labels{"benign", "malignant"};
    double diagnosis_cutoff = 0.085;
    double diagnosis_jitter = 0.25;

    std::string output_dir;
    std::uint64_t master_seed = 42;
    std::size_t threads = 0;  // 0 = hardware concurrency
};

/// Parse a key = value config file ('#' comments, blank lines ignored).
RunConfig load_run_config(const std::filesystem::path& path);
/// Apply one key/value pair (same keys as the config file); unknown keys throw.
void set_config_key(RunConfig& config, const std::string& key, const std::string& value);
/// The resolved configuration in config-file syntax.
std::string config_to_string(const RunConfig& config);

struct SweepResult {
    std::string axis;  // "topk", "grid" or "tts"
    struct Row {
        double axis_value = 0.0;  // k or g for tau sweeps
        std::size_t paths = 0;    // tts rows
        std::size_t masks = 0;
        double noise = 0.0;
        double giou = 0.0;
        double ciou = 0.0;
        double acc = 0.0;
        double mean_q = 0.0;
        std::size_t trials = 1;
        std::size_t samples = 0;
    };
    std::vector<Row> rows;
};

/// Full evaluation: encode -> region mask -> decode (TTS when m or n > 1)
/// -> metrics. Writes report.csv/report.json, per_sample.csv and
/// masks/NNNNN.pbm under output_dir when it is nonempty.
EvalReport run_eval(const RunConfig& config);

/// One evaluation per setting on the fixed seeded dataset. The k axis
/// varies TopK at the configured grid; the g axis varies the grid holding
/// the selected-area fraction of the base strategy fixed. Invalid
/// settings are rejected before any evaluation runs.
std::vector<SweepResult> sweep_tau(const RunConfig& config,
                                   const std::vector<std::size_t>& top_counts,
                                   const std::vector<std::size_t>& grids);

/// Mean selected quality and majority-vote accuracy per (m, n) over
/// seeded trials; always runs the candidate machinery, including (1, 1).
SweepResult sweep_tts(const RunConfig& config, const std::vector<std::size_t>& path_counts,
                      const std::vector<std::size_t>& mask_counts, std::size_t trials);

/// Table-shaped CSV: axis,value,giou,ciou,acc,mean_q,samples.
std::string tau_sweep_csv(const SweepResult& result);
/// CSV with columns m,n,noise,mean_Q,accuracy,trials.
std::string tts_sweep_csv(const SweepResult& result);

/// Deterministic SVG grid; fill is grayscale, linear between the value
/// extremes (uniform gray for a constant map).
void emit_heatmap(const SimilarityMap& map, const std::filesystem::path& path);
void emit_heatmap(const RegionMatrix& regions, const std::filesystem::path& path);

}  // namespace simseg
