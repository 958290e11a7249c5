#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "simseg/errors.hpp"
#include "simseg/synthdata.hpp"

using namespace simseg;

TEST_CASE("generate: zero-strength ellipses rasterize as discs") {
    SceneSpec spec;
    spec.shape = LesionShape::Ellipse;
    spec.irregularity_strength = 0.0;
    spec.seed = 9;
    const auto samples = generate(spec, 8);
    for (const Sample& s : samples) {
        REQUIRE(s.mask.popcount() >= 1);
        // Recover the integer center the generator snapped to.
        double cy = 0.0, cx = 0.0;
        for (std::size_t y = 0; y < s.mask.height; ++y)
            for (std::size_t x = 0; x < s.mask.width; ++x)
                if (s.mask.at(y, x)) {
                    cy += static_cast<double>(y);
                    cx += static_cast<double>(x);
                }
        const auto iy = static_cast<long>(std::lround(cy / static_cast<double>(s.mask.popcount())));
        const auto ix = static_cast<long>(std::lround(cx / static_cast<double>(s.mask.popcount())));

        // A disc about a pixel center is exactly 90-degree symmetric.
        for (long y = 0; y < static_cast<long>(s.mask.height); ++y)
            for (long x = 0; x < static_cast<long>(s.mask.width); ++x) {
                const long ry = iy + (x - ix);
                const long rx = ix - (y - iy);
                REQUIRE(ry >= 0);
                REQUIRE(rx >= 0);
                REQUIRE(ry < static_cast<long>(s.mask.height));
                REQUIRE(rx < static_cast<long>(s.mask.width));
                CHECK(s.mask.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) ==
                      s.mask.at(static_cast<std::size_t>(ry), static_cast<std::size_t>(rx)));
            }
    }
}

TEST_CASE("generate: deterministic given the spec seed") {
    SceneSpec spec;
    spec.seed = 31;
    const auto a = generate(spec, 6);
    const auto b = generate(spec, 6);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].image.pixels == b[i].image.pixels);
        CHECK(a[i].mask == b[i].mask);
        CHECK(a[i].label == b[i].label);
        CHECK(a[i].irregularity == b[i].irregularity);
    }
}

TEST_CASE("generate: labels follow the irregularity cutoff rule") {
    SceneSpec spec;
    spec.seed = 17;
    spec.malignant_cutoff = 0.35;
    for (const Sample& s : generate(spec, 200)) {
        if (s.irregularity > 0.35)
            CHECK(s.label == "malignant");
        else
            CHECK(s.label == "benign");
        CHECK(s.query == "Can you segment the lesion and give the diagnosis?");
        CHECK(s.subset == "synthetic");
    }
}

TEST_CASE("generate: rasterized area stays within the analytic bound") {
    for (const LesionShape shape : {LesionShape::Ellipse, LesionShape::Polygon}) {
        SceneSpec spec;
        spec.shape = shape;
        spec.seed = 23;
        for (const Sample& s : generate(spec, 60)) {
            const double count = static_cast<double>(s.mask.popcount());
            CHECK(std::fabs(count - s.geometry.area) <= 2.0 * s.geometry.perimeter);
        }
    }
}

TEST_CASE("generate: label frequencies match the cutoff within binomial 3 sigma") {
    SceneSpec spec;
    spec.seed = 41;
    spec.malignant_cutoff = 0.5;
    const auto samples = generate(spec, 1200);
    std::size_t malignant = 0;
    for (const Sample& s : samples)
        if (s.label == "malignant") ++malignant;
    const double expected = 0.5 * 1200.0;
    const double sigma = std::sqrt(1200.0 * 0.5 * 0.5);
    CHECK(std::fabs(static_cast<double>(malignant) - expected) <= 3.0 * sigma);
}

TEST_CASE("generate: infeasible specs rejected") {
    SceneSpec spec;
    spec.height = 16;
    spec.width = 16;
    spec.min_area_fraction = 0.45;
    spec.max_area_fraction = 0.5;
    spec.irregularity_strength = 0.9;
    CHECK_THROWS_AS(generate(spec, 1), InvalidInput);
    CHECK_THROWS_AS(generate(SceneSpec{}, 0), InvalidInput);

    SceneSpec bad;
    bad.min_area_fraction = 0.0;
    CHECK_THROWS_AS(generate(bad, 1), InvalidInput);
    SceneSpec cutoff;
    cutoff.malignant_cutoff = 1.0;
    CHECK_THROWS_AS(generate(cutoff, 1), InvalidInput);
}

TEST_CASE("generate: speckles stay out of the ground-truth mask") {
    SceneSpec spec;
    spec.seed = 7;
    spec.speckle_density = 0.02;
    for (const Sample& s : generate(spec, 5)) {
        // The mask is the exact shape rasterization regardless of artifacts.
        std::size_t bright_outside = 0;
        for (std::size_t i = 0; i < s.image.pixels.size(); ++i)
            if (s.image.pixels[i] > 0.6 && !s.mask.bits[i]) ++bright_outside;
        CHECK(bright_outside > 0);  // distractors exist
        CHECK(s.mask.popcount() >= 1);
    }
}

TEST_CASE("dataset round-trip through PGM/PBM/manifest") {
    SceneSpec spec;
    spec.seed = 3;
    const auto samples = generate(spec, 5);
    const auto dir = std::filesystem::temp_directory_path() / "simseg_synth_test";
    std::filesystem::remove_all(dir);
    save_dataset(samples, dir);
    const auto back = load_dataset(dir);
    REQUIRE(back.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(back[i].mask == samples[i].mask);
        CHECK(back[i].label == samples[i].label);
        CHECK(back[i].subset == samples[i].subset);
        CHECK(back[i].query == samples[i].query);
        // PGM quantizes to 8 bits.
        for (std::size_t p = 0; p < samples[i].image.pixels.size(); ++p)
            CHECK(std::fabs(back[i].image.pixels[p] - samples[i].image.pixels[p]) <=
                  0.5 / 255.0 + 1e-12);
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("rasterizers: pixel-center membership") {
    const BitMask disc = rasterize_ellipse(9, 9, 4.5, 4.5, 2.0, 2.0, 0.0);
    CHECK(disc.at(4, 4) == 1);
    CHECK(disc.at(0, 0) == 0);
    CHECK(disc.popcount() == doctest::Approx(M_PI * 4.0).epsilon(0.5));

    const std::vector<std::pair<double, double>> square{{2, 2}, {7, 2}, {7, 7}, {2, 7}};
    const BitMask sq = rasterize_polygon(9, 9, square);
    CHECK(sq.popcount() == 25);  // pixel centers 2.5..6.5 in both axes
    CHECK_THROWS_AS(rasterize_polygon(4, 4, {{0, 0}, {1, 1}}), InvalidInput);
    CHECK_THROWS_AS(rasterize_ellipse(4, 4, 2, 2, 0.0, 1.0, 0.0), InvalidInput);
}
