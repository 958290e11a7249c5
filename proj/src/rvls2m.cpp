#include "simseg/rvls2m.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "simseg/errors.hpp"

namespace simseg {

std::size_t resolve_top_count(const TauStrategy& strategy, std::size_t grid) {
    const std::size_t cells = grid * grid;
    if (const auto* topk = std::get_if<TopK>(&strategy))
        return std::min(topk->k, cells);
    if (const auto* frac = std::get_if<TopFraction>(&strategy)) {
        if (!(frac->fraction > 0.0 && frac->fraction <= 1.0))
            throw InvalidInput("fraction must be in (0, 1]");
        // Tolerance before ceil keeps intents like 0.3 * 100 at 30, not 31.
        const double raw = frac->fraction * static_cast<double>(cells);
        const auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
        return std::min(std::max<std::size_t>(1, k), cells);
    }
    throw InvalidInput("absolute-threshold strategies select by value, not count");
}

TauStrategy parse_tau(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        throw InvalidInput("tau strategy must look like topk:36, abs:0.25 or frac:0.14");
    const std::string kind = text.substr(0, colon);
    const std::string arg = text.substr(colon + 1);
    try {
        if (kind == "topk") {
            const long long k = std::stoll(arg);
            if (k < 1) throw InvalidInput("topk count must be >= 1");
            return TopK{static_cast<std::size_t>(k)};
        }
        if (kind == "abs") return AbsoluteThreshold{std::stod(arg)};
        if (kind == "frac") {
            const double f = std::stod(arg);
            if (!(f > 0.0 && f <= 1.0)) throw InvalidInput("fraction must be in (0, 1]");
            return TopFraction{f};
        }
    } catch (const std::invalid_argument&) {
        throw InvalidInput("bad tau strategy argument: " + arg);
    } catch (const std::out_of_range&) {
        throw InvalidInput("bad tau strategy argument: " + arg);
    }
    throw InvalidInput("unknown tau strategy kind: " + kind);
}

std::string tau_to_string(const TauStrategy& strategy) {
    if (const auto* topk = std::get_if<TopK>(&strategy))
        return "topk:" + std::to_string(topk->k);
    if (const auto* abs = std::get_if<AbsoluteThreshold>(&strategy))
        return "abs:" + std::to_string(abs->threshold);
    return "frac:" + std::to_string(std::get<TopFraction>(strategy).fraction);
}

SimilarityVector similarity(const EmbeddingMatrix& tokens, const SegEmbedding& seg) {
    if (tokens.dim != seg.values.size())
        throw InvalidInput("embedding dim " + std::to_string(tokens.dim) +
                           " does not match seg embedding dim " +
                           std::to_string(seg.values.size()));
    if (tokens.rows == 0) throw InvalidInput("empty embedding matrix");
    SimilarityVector out;
    out.values.resize(tokens.rows);
    for (std::size_t r = 0; r < tokens.rows; ++r) {
        const double* row = tokens.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < tokens.dim; ++c) acc += row[c] * seg.values[c];
        out.values[r] = acc;
    }
    return out;
}

SimilarityVector normalize(const SimilarityVector& sim) {
    if (sim.normalized) throw InvalidInput("similarity vector is already normalized");
    if (sim.values.empty()) throw InvalidInput("empty similarity vector");
    for (double v : sim.values)
        if (!std::isfinite(v)) throw InvalidInput("similarity score is not finite");

    double mx = sim.values[0];
    for (double v : sim.values) mx = std::max(mx, v);

    SimilarityVector out;
    out.values.resize(sim.values.size());
    double total = 0.0;
    for (std::size_t i = 0; i < sim.values.size(); ++i) {
        out.values[i] = std::exp(sim.values[i] - mx);
        total += out.values[i];
    }
    for (double& v : out.values) v /= total;
    out.normalized = true;
    return out;
}

SimilarityMap to_map(const SimilarityVector& sim) {
    if (!sim.normalized) throw InvalidInput("to_map requires a normalized similarity vector");
    const std::size_t n = sim.values.size();
    std::size_t h = 0;
    while ((h + 1) * (h + 1) <= n) ++h;  // floor(sqrt(n)) in exact integers
    const std::size_t w = (n + h - 1) / h;

    SimilarityMap map;
    map.height = h;
    map.width = w;
    map.pad_count = h * w - n;
    map.values.assign(h * w, 0.0);
    std::copy(sim.values.begin(), sim.values.end(), map.values.begin());
    return map;
}

RegionMatrix pool_regions(const SimilarityMap& map, std::size_t grid) {
    if (grid == 0) throw InvalidInput("grid must be >= 1");
    const std::size_t side = std::min(map.height, map.width);
    const std::size_t block = side / grid;
    if (block == 0)
        throw GridTooFine("grid " + std::to_string(grid) +
                          " exceeds the similarity map side " + std::to_string(side));

    RegionMatrix regions;
    regions.grid = grid;
    regions.block = block;
    regions.values.resize(grid * grid);
    const double inv = 1.0 / static_cast<double>(block * block);
    for (std::size_t k = 0; k < grid; ++k)
        for (std::size_t l = 0; l < grid; ++l) {
            double acc = 0.0;
            for (std::size_t i = block * k; i < block * (k + 1); ++i)
                for (std::size_t j = block * l; j < block * (l + 1); ++j)
                    acc += map.at(i, j);
            regions.values[k * grid + l] = acc * inv;
        }
    return regions;
}

RegionMask apply_tau(const RegionMatrix& regions, const TauStrategy& strategy) {
    const std::size_t cells = regions.grid * regions.grid;
    RegionMask mask(regions.grid);

    if (const auto* abs = std::get_if<AbsoluteThreshold>(&strategy)) {
        if (!std::isfinite(abs->threshold)) throw InvalidInput("threshold must be finite");
        for (std::size_t i = 0; i < cells; ++i)
            mask.bits[i] = regions.values[i] >= abs->threshold ? 1 : 0;
        return mask;
    }

    if (const auto* topk = std::get_if<TopK>(&strategy); topk && topk->k == 0)
        throw InvalidInput("topk count must be >= 1");
    const std::size_t keep = resolve_top_count(strategy, regions.grid);

    std::vector<std::size_t> order(cells);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (regions.values[a] != regions.values[b])
            return regions.values[a] > regions.values[b];
        return a < b;
    });
    for (std::size_t i = 0; i < keep; ++i) mask.bits[order[i]] = 1;
    return mask;
}

RegionMask rvls2m(const EmbeddingMatrix& tokens, const SegTokenRaw& raw,
                  const ProjectionHead& head, std::size_t grid,
                  const TauStrategy& strategy) {
    const SegEmbedding seg = project(raw, head);
    return apply_tau(pool_regions(to_map(normalize(similarity(tokens, seg))), grid),
                     strategy);
}

BitMask region_to_bitmask(const RegionMask& mask) {
    BitMask out(mask.grid, mask.grid);
    out.bits = mask.bits;
    return out;
}

void save_pbm(const RegionMask& mask, const std::filesystem::path& path) {
    save_pbm(region_to_bitmask(mask), path);
}

RegionMask region_mask_from_pbm(const std::filesystem::path& path) {
    const BitMask bm = load_pbm(path);
    if (bm.height != bm.width) throw IoError("region mask PBM must be square");
    RegionMask mask(bm.height);
    mask.bits = bm.bits;
    return mask;
}

std::string region_mask_to_json(const RegionMask& mask) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t k = 0; k < mask.grid; ++k) {
        std::string row(mask.grid, '0');
        for (std::size_t l = 0; l < mask.grid; ++l)
            if (mask.at(k, l)) row[l] = '1';
        rows.push_back(row);
    }
    return rows.dump();
}

RegionMask region_mask_from_json(const std::string& text) {
    nlohmann::json rows;
    try {
        rows = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(std::string("bad region mask JSON: ") + e.what());
    }
    if (!rows.is_array() || rows.empty()) throw IoError("region mask JSON must be a non-empty array");
    const std::size_t g = rows.size();
    RegionMask mask(g);
    for (std::size_t k = 0; k < g; ++k) {
        const std::string row = rows[k].get<std::string>();
        if (row.size() != g) throw IoError("region mask JSON rows must form a square");
        for (std::size_t l = 0; l < g; ++l) {
            if (row[l] != '0' && row[l] != '1') throw IoError("region mask rows must be bitstrings");
            mask.at(k, l) = row[l] == '1';
        }
    }
    return mask;
}

}  // namespace simseg
