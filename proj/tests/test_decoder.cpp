#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "simseg/decoder.hpp"
#include "simseg/errors.hpp"
#include "simseg/rng.hpp"

using namespace simseg;

namespace {

Image random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
    Rng rng(seed);
    Image img(h, w);
    for (double& p : img.pixels) p = rng.next_double();
    return img;
}

VisualFeatures zero_features(std::size_t h, std::size_t w, std::size_t dim) {
    VisualFeatures f;
    f.height = h;
    f.width = w;
    f.dim = dim;
    f.values.assign(h * w * dim, 0.0);
    return f;
}

RegionMask random_region(std::size_t g, std::uint64_t seed, double density = 0.3) {
    Rng rng(seed);
    RegionMask r(g);
    for (auto& b : r.bits) b = rng.next_double() < density ? 1 : 0;
    return r;
}

std::vector<double> random_seg(std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(dim);
    for (double& x : v) x = rng.normal() * 0.3;
    return v;
}

}  // namespace

TEST_CASE("extract_features: constant image gives spatially constant features") {
    const Image img(9, 7, 0.42);
    const VisualFeatures f = extract_features(img, 6, 17);
    for (std::size_t y = 0; y < f.height; ++y)
        for (std::size_t x = 0; x < f.width; ++x)
            for (std::size_t c = 0; c < f.dim; ++c) CHECK(f.at(y, x)[c] == f.at(0, 0)[c]);
}

TEST_CASE("extract_features: deterministic across calls") {
    const Image img = random_image(10, 12, 5);
    const VisualFeatures a = extract_features(img, 8, 21);
    const VisualFeatures b = extract_features(img, 8, 21);
    CHECK(a.values == b.values);
    CHECK_THROWS_AS(extract_features(Image(), 8, 21), InvalidInput);
}

TEST_CASE("extract_features: per-pixel local statistics recomputed independently") {
    const Image img = random_image(12, 10, 33);
    const std::size_t dim = 5;
    const VisualFeatures f = extract_features(img, dim, 71);

    // Oracle statistics per pixel with replicate borders.
    auto clamped = [&](long y, long x) {
        y = std::clamp<long>(y, 0, static_cast<long>(img.height) - 1);
        x = std::clamp<long>(x, 0, static_cast<long>(img.width) - 1);
        return img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
    };
    std::vector<std::vector<double>> stats, rows;
    for (long y = 0; y < static_cast<long>(img.height); ++y)
        for (long x = 0; x < static_cast<long>(img.width); ++x) {
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
            stats.push_back({clamped(y, x), mean, var,
                             (clamped(y, x + 1) - clamped(y, x - 1)) / 2.0,
                             (clamped(y + 1, x) - clamped(y - 1, x)) / 2.0});
            const double* row = f.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
            rows.push_back(std::vector<double>(row, row + dim));
        }
    std::vector<long double> map;
    REQUIRE(oracles::fit_linear_map(stats, rows, 5, dim, map));
    for (std::size_t r = 0; r < stats.size(); ++r)
        for (std::size_t c = 0; c < dim; ++c) {
            long double acc = 0.0L;
            for (std::size_t k = 0; k < 5; ++k) acc += map[c * 5 + k] * stats[r][k];
            CHECK(std::fabs(rows[r][c] - static_cast<double>(acc)) < 1e-9);
        }
}

TEST_CASE("upsample_nearest: block structure") {
    RegionMask r(2);
    r.at(0, 0) = 1;
    r.at(1, 1) = 1;
    const BitMask up = upsample_nearest(r, 4, 4);
    for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t x = 0; x < 4; ++x)
            CHECK(up.at(y, x) == ((y < 2) == (x < 2) ? 1 : 0));
    CHECK_THROWS_AS(upsample_nearest(r, 1, 4), InvalidInput);
}

TEST_CASE("decode: zero gain makes the prompt irrelevant") {
    const Image img = random_image(12, 12, 8);
    VisualFeatures f = extract_features(img, 4, 3);
    for (double& v : f.values) v *= 0.1;
    const SegEmbedding seg{random_seg(4, 9)};
    const DecoderConfig cfg{0.0, 0.6};
    const PredictedMask a = decode(f, seg, random_region(3, 1), cfg);
    const PredictedMask b = decode(f, seg, random_region(3, 2), cfg);
    CHECK(a.scores == b.scores);
    CHECK(a.bits == b.bits);
}

TEST_CASE("decode: zero features turn the mask into the upsampled prompt") {
    const VisualFeatures f = zero_features(12, 12, 4);
    const SegEmbedding seg{{0.0, 0.0, 0.0, 0.0}};
    const RegionMask region = random_region(4, 77, 0.4);
    const PredictedMask out = decode(f, seg, region, DecoderConfig{4.0, 0.6});
    const BitMask up = upsample_nearest(region, 12, 12);
    CHECK(out.bits == up);

    // Exactly two score levels: logistic(0) on inactive, logistic(4) on active.
    for (std::size_t i = 0; i < out.scores.size(); ++i) {
        if (up.bits[i])
            CHECK(out.scores[i] == logistic(4.0));
        else
            CHECK(out.scores[i] == 0.5);
    }
}

TEST_CASE("decode: adding an active region cell never clears a bit") {
    const Image img = random_image(16, 16, 12);
    VisualFeatures f = extract_features(img, 4, 5);
    for (double& v : f.values) v *= 0.1;
    const SegEmbedding seg{random_seg(4, 6)};
    const DecoderConfig cfg{4.0, 0.6};
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        RegionMask base = random_region(4, 100 + trial, 0.25);
        RegionMask plus = base;
        std::vector<std::size_t> zeros;
        for (std::size_t i = 0; i < plus.bits.size(); ++i)
            if (!plus.bits[i]) zeros.push_back(i);
        if (zeros.empty()) continue;
        plus.bits[zeros[rng.below(zeros.size())]] = 1;
        const PredictedMask lo = decode(f, seg, base, cfg);
        const PredictedMask hi = decode(f, seg, plus, cfg);
        for (std::size_t i = 0; i < lo.bits.bits.size(); ++i)
            if (lo.bits.bits[i]) CHECK(hi.bits.bits[i] == 1);
    }
}

TEST_CASE("decode: prompt monotonicity on nested region pairs") {
    const Image img = random_image(20, 20, 21);
    VisualFeatures f = extract_features(img, 6, 22);
    for (double& v : f.values) v *= 0.1;
    const SegEmbedding seg{random_seg(6, 23)};
    const DecoderConfig cfg{4.0, 0.6};
    Rng rng(24);
    for (int trial = 0; trial < 50; ++trial) {
        const RegionMask small = random_region(5, 300 + trial, 0.3);
        RegionMask large = small;
        for (auto& b : large.bits)
            if (!b && rng.next_double() < 0.3) b = 1;
        const PredictedMask lo = decode(f, seg, small, cfg);
        const PredictedMask hi = decode(f, seg, large, cfg);
        for (std::size_t i = 0; i < lo.bits.bits.size(); ++i)
            if (lo.bits.bits[i]) CHECK(hi.bits.bits[i] == 1);
    }
}

TEST_CASE("decode: score shift is bounded by gain delta over four") {
    const Image img = random_image(10, 10, 31);
    const VisualFeatures f = extract_features(img, 4, 32);
    const SegEmbedding seg{random_seg(4, 33)};
    const RegionMask region = random_region(5, 34, 0.5);
    for (const double delta : {0.125, 0.5, 2.0}) {
        const PredictedMask a = decode(f, seg, region, DecoderConfig{4.0, 0.6});
        const PredictedMask b = decode(f, seg, region, DecoderConfig{4.0 + delta, 0.6});
        for (std::size_t i = 0; i < a.scores.size(); ++i)
            CHECK(std::fabs(a.scores[i] - b.scores[i]) <= delta / 4.0 + 1e-12);
    }
}

TEST_CASE("decode: shape checks and bits/scores consistency") {
    const Image img = random_image(8, 6, 41);
    const VisualFeatures f = extract_features(img, 4, 42);
    const RegionMask region = random_region(3, 43);
    const PredictedMask out = decode(f, SegEmbedding{random_seg(4, 44)}, region, {});
    CHECK(out.height == 8);
    CHECK(out.width == 6);
    for (std::size_t i = 0; i < out.scores.size(); ++i) {
        CHECK(out.scores[i] > 0.0);
        CHECK(out.scores[i] < 1.0);
        CHECK(out.bits.bits[i] == (out.scores[i] >= out.threshold ? 1 : 0));
    }

    CHECK_THROWS_AS(decode(f, SegEmbedding{{1.0}}, region, {}), InvalidInput);
    CHECK_THROWS_AS(decode(f, SegEmbedding{random_seg(4, 45)}, random_region(9, 46), {}),
                    InvalidInput);
    CHECK_THROWS_AS(decode(f, SegEmbedding{random_seg(4, 47)}, region,
                           DecoderConfig{4.0, 1.5}),
                    InvalidInput);
}

TEST_CASE("predicted mask serialization") {
    const Image img = random_image(8, 8, 51);
    const VisualFeatures f = extract_features(img, 4, 52);
    const PredictedMask out =
        decode(f, SegEmbedding{random_seg(4, 53)}, random_region(4, 54), {});
    const auto dir = std::filesystem::temp_directory_path() / "simseg_decoder_test";
    std::filesystem::create_directories(dir);
    save_pbm(out, dir / "mask.pbm");
    save_pgm_scores(out, dir / "scores.pgm");
    CHECK(load_pbm(dir / "mask.pbm") == out.bits);
    const Image scores = load_pgm(dir / "scores.pgm");
    CHECK(scores.height == out.height);
    std::filesystem::remove_all(dir);
}
