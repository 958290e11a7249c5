#include "simseg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "simseg/errors.hpp"
#include "simseg/rng.hpp"

namespace simseg {

namespace {

constexpr std::uint64_t kEncoderStream = 0xe0c0de;
constexpr std::uint64_t kFeatureStream = 0xfea75;
constexpr std::uint64_t kTrialStream = 0x7a1a1;
constexpr std::uint64_t kPathStream = 0x7a7b5;
constexpr std::uint64_t kThetaStream = 0xca9d;

// Cache per-pixel features only while they stay reasonably small.
constexpr std::size_t kFeatureCacheBytes = 1 << 20;

struct Backbone {
    ProjectionHead head;
    std::uint64_t encoder_seed;
    std::uint64_t feature_seed;
};

Backbone make_backbone(const RunConfig& cfg) {
    return {ProjectionHead::identity(cfg.dim, Nonlinearity::Tanh),
            seed_mix(cfg.master_seed, kEncoderStream),
            seed_mix(cfg.master_seed, kFeatureStream)};
}

struct SampleContext {
    const Sample* sample = nullptr;
    EmbeddingMatrix tokens;
    VisualFeatures feats;  // scaled; empty when too large to cache
    bool feats_cached = false;
};

VisualFeatures scaled_features(const Image& image, const RunConfig& cfg,
                               const Backbone& backbone) {
    VisualFeatures f = extract_features(image, cfg.dim, backbone.feature_seed);
    for (double& v : f.values) v *= cfg.feature_scale;
    return f;
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(1, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < count; i += threads) body(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    for (std::thread& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::vector<SampleContext> build_contexts(const std::vector<Sample>& samples,
                                          const RunConfig& cfg, const Backbone& backbone) {
    std::vector<SampleContext> contexts(samples.size());
    const bool cache_feats =
        samples.empty() ||
        samples.front().image.height * samples.front().image.width * cfg.dim *
                sizeof(double) <=
            kFeatureCacheBytes;
    parallel_for(samples.size(), cfg.threads, [&](std::size_t i) {
        SampleContext& ctx = contexts[i];
        ctx.sample = &samples[i];
        ctx.tokens = toy_encode(samples[i].image, cfg.patch, cfg.dim, backbone.encoder_seed);
        if (cache_feats) {
            ctx.feats = scaled_features(samples[i].image, cfg, backbone);
            ctx.feats_cached = true;
        }
    });
    return contexts;
}

struct Outcome {
    std::string subset;
    std::size_t intersection = 0;
    std::size_t union_size = 0;
    double iou_value = 0.0;
    double q = 0.0;
    std::optional<std::string> predicted;
    std::string truth;
    bool correct = false;
    PredictedMask mask;
};

Outcome eval_sample(const SampleContext& ctx, const RunConfig& cfg,
                    const Backbone& backbone, std::uint64_t trial_seed, std::size_t index,
                    bool force_tts, bool keep_mask) {
    const Sample& sample = *ctx.sample;

    PathConfig pc;
    pc.patch = cfg.patch;
    pc.dim = cfg.dim;
    pc.encoder_seed = backbone.encoder_seed;
    pc.attention_gain = cfg.attention_gain;
    pc.state_scale = cfg.state_scale;
    pc.noise_scale = cfg.tts.noise;
    pc.labels = cfg.labels;
    pc.diagnosis_cutoff = cfg.diagnosis_cutoff;
    pc.diagnosis_jitter = cfg.diagnosis_jitter;

    const std::uint64_t path_base = seed_mix(trial_seed, index, kPathStream);
    const auto paths = sample_paths(sample.image, sample.query, cfg.tts.paths, path_base,
                                    pc, &ctx.tokens);

    std::vector<std::optional<std::string>> votes;
    votes.reserve(paths.size());
    for (const ReasoningPath& p : paths)
        votes.push_back(extract_diagnosis(p.text, cfg.labels));

    const VisualFeatures feats_local =
        ctx.feats_cached ? VisualFeatures{} : scaled_features(sample.image, cfg, backbone);
    const VisualFeatures& feats = ctx.feats_cached ? ctx.feats : feats_local;

    Outcome out;
    out.subset = sample.subset;
    out.truth = sample.label;
    out.predicted = vote_diagnosis(votes);
    out.correct = out.predicted.has_value() && *out.predicted == sample.label;

    PredictedMask mask;
    if (cfg.tts.paths == 1 && cfg.tts.masks == 1 && !force_tts) {
        const RegionMask region =
            rvls2m(ctx.tokens, paths[0].seg_state, backbone.head, cfg.grid, cfg.tau);
        const SegEmbedding seg = project(paths[0].seg_state, backbone.head);
        mask = decode(feats, seg, region, cfg.decoder);
        out.q = quality(MaskPair(mask.bits, sample.mask));
    } else {
        std::vector<RegionMask> regions;
        regions.reserve(paths.size());
        for (const ReasoningPath& p : paths)
            regions.push_back(
                rvls2m(ctx.tokens, p.seg_state, backbone.head, cfg.grid, cfg.tau));
        CandidateSet candidates = generate_candidates(
            paths, cfg.tts.masks, regions, feats, backbone.head, cfg.decoder,
            cfg.tts.family, seed_mix(trial_seed, index, kThetaStream));
        SelectionMode mode = cfg.tts.reference_free
                                 ? SelectionMode{ReferenceFreeSelection{}}
                                 : SelectionMode{OracleSelection{sample.mask}};
        Selected sel = select(candidates, mode);
        mask = std::move(sel.mask);
        out.q = sel.score;
    }

    const auto [inter, uni] = intersection_union(mask.bits, sample.mask);
    out.intersection = inter;
    out.union_size = uni;
    out.iou_value = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    if (keep_mask) out.mask = std::move(mask);
    return out;
}

std::vector<Outcome> run_trial(const std::vector<SampleContext>& contexts,
                               const RunConfig& cfg, const Backbone& backbone,
                               std::size_t trial, bool force_tts, bool keep_masks) {
    const std::uint64_t trial_seed = seed_mix(cfg.master_seed, kTrialStream, trial);
    std::vector<Outcome> outcomes(contexts.size());
    parallel_for(contexts.size(), cfg.threads, [&](std::size_t i) {
        try {
            outcomes[i] =
                eval_sample(contexts[i], cfg, backbone, trial_seed, i, force_tts, keep_masks);
        } catch (const std::exception& e) {
            throw Error("sample " + std::to_string(i) + ": " + e.what());
        }
    });
    return outcomes;
}

EvalRow aggregate_rows(const std::string& name, const std::vector<const Outcome*>& chunk) {
    EvalRow row;
    row.subset = name;
    row.count = chunk.size();
    if (chunk.empty()) return row;
    double iou_sum = 0.0;
    std::size_t inter = 0, uni = 0, hits = 0;
    for (const Outcome* o : chunk) {
        iou_sum += o->iou_value;
        inter += o->intersection;
        uni += o->union_size;
        hits += o->correct ? 1 : 0;
    }
    row.giou = iou_sum / static_cast<double>(chunk.size());
    row.ciou = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    row.acc = static_cast<double>(hits) / static_cast<double>(chunk.size());
    return row;
}

EvalReport aggregate_report(const std::vector<Outcome>& outcomes) {
    EvalReport report;
    std::vector<std::string> order;
    for (const Outcome& o : outcomes)
        if (std::find(order.begin(), order.end(), o.subset) == order.end())
            order.push_back(o.subset);
    std::vector<const Outcome*> all;
    all.reserve(outcomes.size());
    for (const Outcome& o : outcomes) all.push_back(&o);
    for (const std::string& subset : order) {
        std::vector<const Outcome*> chunk;
        for (const Outcome& o : outcomes)
            if (o.subset == subset) chunk.push_back(&o);
        report.subsets.push_back(aggregate_rows(subset, chunk));
    }
    report.overall = aggregate_rows("overall", all);
    return report;
}

std::vector<Sample> resolve_dataset(const RunConfig& cfg) {
    if (!cfg.dataset_dir.empty()) return load_dataset(cfg.dataset_dir);
    return generate(cfg.scene, cfg.samples);
}

SweepResult::Row evaluate_setting(const std::vector<SampleContext>& contexts,
                                  const RunConfig& cfg, const Backbone& backbone,
                                  std::size_t trials, bool force_tts) {
    SweepResult::Row row;
    row.paths = cfg.tts.paths;
    row.masks = cfg.tts.masks;
    row.noise = cfg.tts.noise;
    row.trials = trials;
    row.samples = contexts.size();
    for (std::size_t t = 0; t < trials; ++t) {
        const auto outcomes = run_trial(contexts, cfg, backbone, t, force_tts, false);
        double q_sum = 0.0, iou_sum = 0.0;
        std::size_t inter = 0, uni = 0, hits = 0;
        for (const Outcome& o : outcomes) {
            q_sum += o.q;
            iou_sum += o.iou_value;
            inter += o.intersection;
            uni += o.union_size;
            hits += o.correct ? 1 : 0;
        }
        const auto n = static_cast<double>(outcomes.size());
        row.mean_q += q_sum / n;
        row.giou += iou_sum / n;
        row.ciou += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
        row.acc += static_cast<double>(hits) / n;
    }
    const auto t = static_cast<double>(trials);
    row.mean_q /= t;
    row.giou /= t;
    row.ciou /= t;
    row.acc /= t;
    return row;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw IoError("short write: " + path.string());
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

EvalReport run_eval(const RunConfig& cfg) {
    const std::vector<Sample> samples = resolve_dataset(cfg);
    const Backbone backbone = make_backbone(cfg);
    const auto contexts = build_contexts(samples, cfg, backbone);
    const bool keep_masks = !cfg.output_dir.empty();
    const auto outcomes = run_trial(contexts, cfg, backbone, 0, false, keep_masks);
    const EvalReport report = aggregate_report(outcomes);

    if (!cfg.output_dir.empty()) {
        const std::filesystem::path dir(cfg.output_dir);
        std::filesystem::create_directories(dir / "masks");
        write_text(dir / "report.csv", report_csv(report));
        write_text(dir / "report.json", report_json(report) + "\n");
        write_text(dir / "config.txt", config_to_string(cfg));

        std::ostringstream per;
        per << "index,subset,intersection,union,iou,quality,predicted,truth,correct\n";
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            const Outcome& o = outcomes[i];
            per << i << ',' << o.subset << ',' << o.intersection << ',' << o.union_size
                << ',' << format_double(o.iou_value) << ',' << format_double(o.q) << ','
                << (o.predicted ? *o.predicted : "none") << ',' << o.truth << ','
                << (o.correct ? 1 : 0) << '\n';
        }
        write_text(dir / "per_sample.csv", per.str());

        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "%05zu.pbm", i);
            save_pbm(outcomes[i].mask.bits, dir / "masks" / name);
        }
    }
    return report;
}

std::vector<SweepResult> sweep_tau(const RunConfig& cfg,
                                   const std::vector<std::size_t>& top_counts,
                                   const std::vector<std::size_t>& grids) {
    if (top_counts.empty() && grids.empty())
        throw InvalidInput("tau sweep needs at least one axis value");

    const std::vector<Sample> samples = resolve_dataset(cfg);
    const Backbone backbone = make_backbone(cfg);

    // Reject invalid settings before any evaluation.
    if (cfg.patch == 0) throw InvalidInput("patch must be >= 1");
    const std::size_t tokens =
        (samples.front().image.height / cfg.patch) * (samples.front().image.width / cfg.patch);
    std::size_t map_h = 0;
    while ((map_h + 1) * (map_h + 1) <= tokens) ++map_h;
    const std::size_t map_w = (tokens + map_h - 1) / map_h;
    const std::size_t side = std::min(map_h, map_w);
    for (std::size_t k : top_counts)
        if (k == 0) throw InvalidInput("topk value 0 is invalid");
    for (std::size_t g : grids)
        if (g == 0 || g > side)
            throw GridTooFine("grid " + std::to_string(g) +
                              " is invalid for similarity maps of side " +
                              std::to_string(side));

    double base_fraction = 0.0;
    const bool fraction_axis = !std::holds_alternative<AbsoluteThreshold>(cfg.tau);
    if (fraction_axis)
        base_fraction = static_cast<double>(resolve_top_count(cfg.tau, cfg.grid)) /
                        static_cast<double>(cfg.grid * cfg.grid);

    const auto contexts = build_contexts(samples, cfg, backbone);

    std::vector<SweepResult> results;
    if (!top_counts.empty()) {
        SweepResult res;
        res.axis = "topk";
        for (std::size_t k : top_counts) {
            RunConfig setting = cfg;
            setting.tau = TopK{k};
            auto row = evaluate_setting(contexts, setting, backbone, 1, false);
            row.axis_value = static_cast<double>(k);
            res.rows.push_back(row);
        }
        results.push_back(std::move(res));
    }
    if (!grids.empty()) {
        SweepResult res;
        res.axis = "grid";
        for (std::size_t g : grids) {
            RunConfig setting = cfg;
            setting.grid = g;
            if (fraction_axis) setting.tau = TopFraction{base_fraction};
            auto row = evaluate_setting(contexts, setting, backbone, 1, false);
            row.axis_value = static_cast<double>(g);
            res.rows.push_back(row);
        }
        results.push_back(std::move(res));
    }
    return results;
}

SweepResult sweep_tts(const RunConfig& cfg, const std::vector<std::size_t>& path_counts,
                      const std::vector<std::size_t>& mask_counts, std::size_t trials) {
    if (trials == 0) throw InvalidInput("trials must be >= 1");
    if (path_counts.empty() || mask_counts.empty())
        throw InvalidInput("tts sweep needs m and n values");
    for (std::size_t v : path_counts)
        if (v == 0) throw InvalidInput("m values must be >= 1");
    for (std::size_t v : mask_counts)
        if (v == 0) throw InvalidInput("n values must be >= 1");

    const std::vector<Sample> samples = resolve_dataset(cfg);
    const Backbone backbone = make_backbone(cfg);
    const auto contexts = build_contexts(samples, cfg, backbone);

    SweepResult res;
    res.axis = "tts";
    for (std::size_t m : path_counts)
        for (std::size_t n : mask_counts) {
            RunConfig setting = cfg;
            setting.tts.paths = m;
            setting.tts.masks = n;
            res.rows.push_back(evaluate_setting(contexts, setting, backbone, trials, true));
        }
    return res;
}

std::string tau_sweep_csv(const SweepResult& result) {
    std::ostringstream out;
    out << "axis,value,giou,ciou,acc,mean_q,samples\n";
    for (const auto& row : result.rows)
        out << result.axis << ',' << row.axis_value << ',' << format_double(row.giou) << ','
            << format_double(row.ciou) << ',' << format_double(row.acc) << ','
            << format_double(row.mean_q) << ',' << row.samples << '\n';
    return out.str();
}

std::string tts_sweep_csv(const SweepResult& result) {
    std::ostringstream out;
    out << "m,n,noise,mean_Q,accuracy,trials\n";
    for (const auto& row : result.rows)
        out << row.paths << ',' << row.masks << ',' << format_double(row.noise) << ','
            << format_double(row.mean_q) << ',' << format_double(row.acc) << ','
            << row.trials << '\n';
    return out.str();
}

namespace {

void emit_heatmap_grid(std::size_t height, std::size_t width,
                       const std::vector<double>& values,
                       const std::filesystem::path& path) {
    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo;
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width * 8
        << "\" height=\"" << height * 8 << "\" viewBox=\"0 0 " << width << ' ' << height
        << "\" shape-rendering=\"crispEdges\">\n";
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            const double v = values[y * width + x];
            const double t = span > 0.0 ? (v - lo) / span : 0.5;
            const int level = static_cast<int>(std::lround(255.0 * t));
            char fill[8];
            std::snprintf(fill, sizeof fill, "#%02x%02x%02x", level, level, level);
            out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"1\" height=\"1\" fill=\""
                << fill << "\"/>\n";
        }
    out << "</svg>\n";
    write_text(path, out.str());
}

}  // namespace

void emit_heatmap(const SimilarityMap& map, const std::filesystem::path& path) {
    if (map.values.empty()) throw InvalidInput("empty similarity map");
    emit_heatmap_grid(map.height, map.width, map.values, path);
}

void emit_heatmap(const RegionMatrix& regions, const std::filesystem::path& path) {
    if (regions.values.empty()) throw InvalidInput("empty region matrix");
    emit_heatmap_grid(regions.grid, regions.grid, regions.values, path);
}

namespace {

std::size_t to_size(const std::string& value) {
    try {
        const long long v = std::stoll(value);
        if (v < 0) throw InvalidInput("expected a nonnegative integer, got " + value);
        return static_cast<std::size_t>(v);
    } catch (const std::logic_error&) {
        throw InvalidInput("expected an integer, got " + value);
    }
}

std::uint64_t to_u64(const std::string& value) {
    try {
        return std::stoull(value);
    } catch (const std::logic_error&) {
        throw InvalidInput("expected an unsigned integer, got " + value);
    }
}

double to_double(const std::string& value) {
    try {
        return std::stod(value);
    } catch (const std::logic_error&) {
        throw InvalidInput("expected a number, got " + value);
    }
}

std::vector<std::string> split_csv(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace

void set_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "dataset") cfg.dataset_dir = value;
    else if (key == "samples") cfg.samples = to_size(value);
    else if (key == "image-height") cfg.scene.height = to_size(value);
    else if (key == "image-width") cfg.scene.width = to_size(value);
    else if (key == "shape") {
        if (value == "ellipse") cfg.scene.shape = LesionShape::Ellipse;
        else if (value == "polygon") cfg.scene.shape = LesionShape::Polygon;
        else throw InvalidInput("shape must be ellipse or polygon");
    } else if (key == "min-area-frac") cfg.scene.min_area_fraction = to_double(value);
    else if (key == "max-area-frac") cfg.scene.max_area_fraction = to_double(value);
    else if (key == "irregularity-strength") cfg.scene.irregularity_strength = to_double(value);
    else if (key == "texture-noise") cfg.scene.texture_noise = to_double(value);
    else if (key == "speckle-density") cfg.scene.speckle_density = to_double(value);
    else if (key == "malignant-cutoff") cfg.scene.malignant_cutoff = to_double(value);
    else if (key == "scene-seed") cfg.scene.seed = to_u64(value);
    else if (key == "subset-tag") cfg.scene.tag = value;
    else if (key == "patch") cfg.patch = to_size(value);
    else if (key == "dim") cfg.dim = to_size(value);
    else if (key == "attention-gain") cfg.attention_gain = to_double(value);
    else if (key == "state-scale") cfg.state_scale = to_double(value);
    else if (key == "feature-scale") cfg.feature_scale = to_double(value);
    else if (key == "grid") cfg.grid = to_size(value);
    else if (key == "tau") cfg.tau = parse_tau(value);
    else if (key == "prompt-gain") cfg.decoder.prompt_gain = to_double(value);
    else if (key == "threshold") cfg.decoder.threshold = to_double(value);
    else if (key == "lambda-txt") cfg.weights.txt = to_double(value);
    else if (key == "lambda-mask") cfg.weights.mask = to_double(value);
    else if (key == "lambda-bce") cfg.weights.bce = to_double(value);
    else if (key == "lambda-dice") cfg.weights.dice = to_double(value);
    else if (key == "m") cfg.tts.paths = to_size(value);
    else if (key == "n") cfg.tts.masks = to_size(value);
    else if (key == "noise") cfg.tts.noise = to_double(value);
    else if (key == "max-flips") cfg.tts.family.max_flips = to_size(value);
    else if (key == "max-radius") cfg.tts.family.max_radius = static_cast<int>(to_size(value));
    else if (key == "selection") {
        if (value == "oracle") cfg.tts.reference_free = false;
        else if (value == "reference-free") cfg.tts.reference_free = true;
        else throw InvalidInput("selection must be oracle or reference-free");
    } else if (key == "labels") {
        const auto labels = split_csv(value);
        if (labels.size() < 2) throw InvalidInput("labels needs at least two entries");
        cfg.labels = labels;
    } else if (key == "diagnosis-cutoff") cfg.diagnosis_cutoff = to_double(value);
    else if (key == "diagnosis-jitter") cfg.diagnosis_jitter = to_double(value);
    else if (key == "output") cfg.output_dir = value;
    else if (key == "seed") cfg.master_seed = to_u64(value);
    else if (key == "threads") cfg.threads = to_size(value);
    else throw InvalidInput("unknown config key: " + key);
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path.string());
    RunConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidInput("config line " + std::to_string(lineno) +
                               " is not key = value");
        try {
            set_config_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const InvalidInput& e) {
            throw InvalidInput("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

std::string config_to_string(const RunConfig& cfg) {
    std::ostringstream out;
    out << "dataset = " << cfg.dataset_dir << '\n';
    out << "samples = " << cfg.samples << '\n';
    out << "image-height = " << cfg.scene.height << '\n';
    out << "image-width = " << cfg.scene.width << '\n';
    out << "shape = " << (cfg.scene.shape == LesionShape::Ellipse ? "ellipse" : "polygon")
        << '\n';
    out << "min-area-frac = " << format_double(cfg.scene.min_area_fraction) << '\n';
    out << "max-area-frac = " << format_double(cfg.scene.max_area_fraction) << '\n';
    out << "irregularity-strength = " << format_double(cfg.scene.irregularity_strength)
        << '\n';
    out << "texture-noise = " << format_double(cfg.scene.texture_noise) << '\n';
    out << "speckle-density = " << format_double(cfg.scene.speckle_density) << '\n';
    out << "malignant-cutoff = " << format_double(cfg.scene.malignant_cutoff) << '\n';
    out << "scene-seed = " << cfg.scene.seed << '\n';
    out << "subset-tag = " << cfg.scene.tag << '\n';
    out << "patch = " << cfg.patch << '\n';
    out << "dim = " << cfg.dim << '\n';
    out << "attention-gain = " << format_double(cfg.attention_gain) << '\n';
    out << "state-scale = " << format_double(cfg.state_scale) << '\n';
    out << "feature-scale = " << format_double(cfg.feature_scale) << '\n';
    out << "grid = " << cfg.grid << '\n';
    out << "tau = " << tau_to_string(cfg.tau) << '\n';
    out << "prompt-gain = " << format_double(cfg.decoder.prompt_gain) << '\n';
    out << "threshold = " << format_double(cfg.decoder.threshold) << '\n';
    out << "lambda-txt = " << format_double(cfg.weights.txt) << '\n';
    out << "lambda-mask = " << format_double(cfg.weights.mask) << '\n';
    out << "lambda-bce = " << format_double(cfg.weights.bce) << '\n';
    out << "lambda-dice = " << format_double(cfg.weights.dice) << '\n';
    out << "m = " << cfg.tts.paths << '\n';
    out << "n = " << cfg.tts.masks << '\n';
    out << "noise = " << format_double(cfg.tts.noise) << '\n';
    out << "max-flips = " << cfg.tts.family.max_flips << '\n';
    out << "max-radius = " << cfg.tts.family.max_radius << '\n';
    out << "selection = " << (cfg.tts.reference_free ? "reference-free" : "oracle") << '\n';
    out << "labels = ";
    for (std::size_t i = 0; i < cfg.labels.size(); ++i)
        out << (i ? "," : "") << cfg.labels[i];
    out << '\n';
    out << "diagnosis-cutoff = " << format_double(cfg.diagnosis_cutoff) << '\n';
    out << "diagnosis-jitter = " << format_double(cfg.diagnosis_jitter) << '\n';
    out << "output = " << cfg.output_dir << '\n';
    out << "seed = " << cfg.master_seed << '\n';
    out << "threads = " << cfg.threads << '\n';
    return out.str();
}

}  // namespace simseg
