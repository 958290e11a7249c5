#include "simseg/tts.hpp"

#include <algorithm>
#include <cmath>

#include "simseg/errors.hpp"
#include "simseg/metrics.hpp"
#include "simseg/rng.hpp"

namespace simseg {

namespace {

const char* kPhrases[4] = {
    "It is [SEG]. Step-by-step review of the scan suggests a %s lesion.",
    "It is [SEG]. The margins and internal texture indicate a %s finding.",
    "It is [SEG]. Overall morphology is most consistent with a %s process.",
    "It is [SEG]. The signal pattern points toward a %s abnormality.",
};

std::string render_phrase(std::size_t index, const std::string& label) {
    char buf[160];
    std::snprintf(buf, sizeof buf, kPhrases[index % 4], label.c_str());
    return buf;
}

}  // namespace

double estimate_irregularity(const Image& image, double intensity_threshold) {
    const std::size_t h = image.height, w = image.width;
    auto raw_lit = [&](std::size_t y, std::size_t x) {
        return image.at(y, x) >= intensity_threshold;
    };
    // One erosion pass: structures thinner than 3px are point artifacts,
    // not findings, and must not attach to the lesion boundary.
    auto lit = [&](std::size_t y, std::size_t x) {
        return y > 0 && x > 0 && y + 1 < h && x + 1 < w && raw_lit(y, x) &&
               raw_lit(y - 1, x) && raw_lit(y + 1, x) && raw_lit(y, x - 1) &&
               raw_lit(y, x + 1);
    };

    // Largest 4-connected bright component: the dominant finding.
    std::vector<std::uint32_t> component(h * w, 0);
    std::uint32_t next_id = 0, best_id = 0;
    std::size_t best_size = 0;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < h * w; ++start) {
        if (component[start] || !lit(start / w, start % w)) continue;
        const std::uint32_t id = ++next_id;
        std::size_t size = 0;
        stack.assign(1, start);
        component[start] = id;
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            ++size;
            const std::size_t y = p / w, x = p % w;
            const std::size_t neighbors[4][2] = {
                {y > 0 ? y - 1 : y, x}, {y + 1 < h ? y + 1 : y, x},
                {y, x > 0 ? x - 1 : x}, {y, x + 1 < w ? x + 1 : x}};
            for (const auto& nb : neighbors) {
                const std::size_t q = nb[0] * w + nb[1];
                if (q == p || component[q] || !lit(nb[0], nb[1])) continue;
                component[q] = id;
                stack.push_back(q);
            }
        }
        if (size > best_size) {
            best_size = size;
            best_id = id;
        }
    }
    if (best_size == 0) return 0.0;

    std::vector<std::pair<std::size_t, std::size_t>> boundary;
    double cy = 0.0, cx = 0.0;
    std::size_t count = 0;
    auto in_blob = [&](std::size_t y, std::size_t x) {
        return component[y * w + x] == best_id;
    };
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            if (!in_blob(y, x)) continue;
            ++count;
            cy += static_cast<double>(y) + 0.5;
            cx += static_cast<double>(x) + 0.5;
            const bool edge = y == 0 || x == 0 || y + 1 == h || x + 1 == w ||
                              !in_blob(y - 1, x) || !in_blob(y + 1, x) ||
                              !in_blob(y, x - 1) || !in_blob(y, x + 1);
            if (edge) boundary.emplace_back(y, x);
        }
    if (count == 0 || boundary.empty()) return 0.0;
    cy /= static_cast<double>(count);
    cx /= static_cast<double>(count);

    double mean = 0.0;
    std::vector<double> radii;
    radii.reserve(boundary.size());
    for (const auto& [y, x] : boundary) {
        const double r = std::hypot(static_cast<double>(y) + 0.5 - cy,
                                    static_cast<double>(x) + 0.5 - cx);
        radii.push_back(r);
        mean += r;
    }
    mean /= static_cast<double>(radii.size());
    if (mean <= 0.0) return 0.0;
    double var = 0.0;
    for (double r : radii) var += (r - mean) * (r - mean);
    var /= static_cast<double>(radii.size());
    return std::sqrt(var) / mean;
}

std::vector<ReasoningPath> sample_paths(const Image& image, const std::string& query,
                                        std::size_t m, std::uint64_t base_seed,
                                        const PathConfig& config,
                                        const EmbeddingMatrix* tokens) {
    if (m == 0) throw InvalidInput("path count m must be >= 1");
    if (config.labels.size() < 2) throw InvalidInput("need at least two diagnosis labels");
    (void)query;  // desk-scale queries all ask for the one salient region

    EmbeddingMatrix local;
    if (!tokens) {
        local = toy_encode(image, config.patch, config.dim, config.encoder_seed);
        tokens = &local;
    }
    const SegTokenRaw base = toy_seg_state(image, config.patch, *tokens,
                                           config.attention_gain, config.state_scale);
    const double estimate = estimate_irregularity(image);

    std::vector<ReasoningPath> paths;
    paths.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        ReasoningPath p;
        p.index = i;
        p.seed = base_seed + i;
        p.noise_scale = config.noise_scale;
        p.seg_state = base;
        Rng rng(seed_mix(p.seed, 0x70a7));
        if (config.noise_scale > 0.0)
            for (double& v : p.seg_state.values) v += config.noise_scale * rng.normal();
        double vote = estimate;
        if (config.noise_scale > 0.0)
            vote += config.noise_scale * config.diagnosis_jitter * rng.normal();
        const std::string& label =
            vote > config.diagnosis_cutoff ? config.labels[1] : config.labels[0];
        p.text = render_phrase(i, label);
        paths.push_back(std::move(p));
    }
    return paths;
}

PerturbationParams draw_perturbation(const PerturbationFamily& family, std::uint64_t seed) {
    Rng rng(seed);
    PerturbationParams params;
    params.flip_budget = rng.below(family.max_flips + 1);
    params.dilation_radius =
        family.max_radius > 0 ? static_cast<int>(rng.below(
                                    static_cast<std::size_t>(family.max_radius) + 1))
                              : 0;
    params.seed = seed_mix(seed, 0xf11b);
    return params;
}

RegionMask perturb(const RegionMask& region, const PerturbationParams& params) {
    if (params.dilation_radius < 0 || params.dilation_radius > 1)
        throw InvalidInput("dilation radius must be 0 or 1");
    const std::size_t g = region.grid;
    const std::size_t cells = g * g;
    if (params.flip_budget > cells)
        throw InvalidInput("flip budget exceeds the cell count");

    RegionMask out = region;
    if (params.dilation_radius == 1) {
        const auto side = static_cast<long>(g);
        for (long k = 0; k < side; ++k)
            for (long l = 0; l < side; ++l) {
                if (out.at(static_cast<std::size_t>(k), static_cast<std::size_t>(l)))
                    continue;
                bool active_neighbor = false;
                for (long dk = -1; dk <= 1 && !active_neighbor; ++dk)
                    for (long dl = -1; dl <= 1; ++dl) {
                        if (dk == 0 && dl == 0) continue;
                        const long nk = k + dk, nl = l + dl;
                        if (nk < 0 || nl < 0 || nk >= side || nl >= side) continue;
                        if (region.at(static_cast<std::size_t>(nk),
                                      static_cast<std::size_t>(nl))) {
                            active_neighbor = true;
                            break;
                        }
                    }
                if (active_neighbor)
                    out.at(static_cast<std::size_t>(k), static_cast<std::size_t>(l)) = 1;
            }
    }

    if (params.flip_budget > 0) {
        // Partial Fisher-Yates: flip_budget distinct cells, order-stable.
        Rng rng(params.seed);
        std::vector<std::size_t> idx(cells);
        for (std::size_t i = 0; i < cells; ++i) idx[i] = i;
        for (std::size_t t = 0; t < params.flip_budget; ++t) {
            const std::size_t j = t + rng.below(cells - t);
            std::swap(idx[t], idx[j]);
            out.bits[idx[t]] ^= 1;
        }
    }
    return out;
}

CandidateSet generate_candidates(const std::vector<ReasoningPath>& paths, std::size_t n,
                                 const std::vector<RegionMask>& regions,
                                 const VisualFeatures& feats, const ProjectionHead& head,
                                 const DecoderConfig& cfg, const PerturbationFamily& family,
                                 std::uint64_t seed) {
    if (paths.empty()) throw InvalidInput("need at least one reasoning path");
    if (n == 0) throw InvalidInput("perturbation count n must be >= 1");
    if (regions.size() != paths.size())
        throw InvalidInput("need exactly one region mask per path");

    std::vector<PerturbationParams> thetas;
    thetas.reserve(n);
    for (std::size_t j = 0; j < n; ++j)
        thetas.push_back(draw_perturbation(family, seed_mix(seed, j)));

    CandidateSet set;
    set.paths = paths.size();
    set.perturbations = n;
    set.items.reserve(paths.size() * n);
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const SegEmbedding seg = project(paths[i].seg_state, head);
        for (std::size_t j = 0; j < n; ++j) {
            Candidate c;
            c.path_index = i;
            c.perturb_index = j;
            c.mask = decode(feats, seg, perturb(regions[i], thetas[j]), cfg);
            set.items.push_back(std::move(c));
        }
    }
    return set;
}

BitMask majority_reference(const CandidateSet& candidates) {
    if (candidates.items.empty()) throw InvalidInput("empty candidate set");
    const PredictedMask& first = candidates.items.front().mask;
    std::vector<std::size_t> counts(first.height * first.width, 0);
    for (const Candidate& c : candidates.items) {
        if (c.mask.height != first.height || c.mask.width != first.width)
            throw InvalidInput("candidate mask shapes differ");
        for (std::size_t p = 0; p < counts.size(); ++p) counts[p] += c.mask.bits.bits[p];
    }
    BitMask out(first.height, first.width);
    const std::size_t total = candidates.items.size();
    for (std::size_t p = 0; p < counts.size(); ++p)
        out.bits[p] = 2 * counts[p] > total ? 1 : 0;
    return out;
}

Selected select(CandidateSet& candidates, const SelectionMode& mode) {
    if (candidates.items.empty()) throw InvalidInput("empty candidate set");
    const BitMask reference = std::holds_alternative<OracleSelection>(mode)
                                  ? std::get<OracleSelection>(mode).reference
                                  : majority_reference(candidates);

    std::size_t best = 0;
    for (std::size_t idx = 0; idx < candidates.items.size(); ++idx) {
        Candidate& c = candidates.items[idx];
        c.quality = quality(MaskPair(c.mask.bits, reference));
        // Items are (i, j) lexicographic, so strict > keeps the smallest pair.
        if (c.quality > candidates.items[best].quality) best = idx;
    }
    const Candidate& win = candidates.items[best];
    return Selected{win.mask, win.path_index, win.perturb_index, win.quality};
}

std::optional<std::string> vote_diagnosis(
    const std::vector<std::optional<std::string>>& votes) {
    std::vector<std::pair<std::string, std::size_t>> tally;  // first-seen order
    for (const auto& v : votes) {
        if (!v) continue;
        auto it = std::find_if(tally.begin(), tally.end(),
                               [&](const auto& kv) { return kv.first == *v; });
        if (it == tally.end())
            tally.emplace_back(*v, 1);
        else
            ++it->second;
    }
    if (tally.empty()) return std::nullopt;
    std::size_t best = 0;
    for (std::size_t i = 1; i < tally.size(); ++i)
        if (tally[i].second > tally[best].second) best = i;
    return tally[best].first;
}

}  // namespace simseg
