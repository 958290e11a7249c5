#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "simseg/embeddings.hpp"
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

}  // namespace

TEST_CASE("toy_encode: constant image gives identical rows") {
    const Image zeros(8, 8, 0.0);
    const EmbeddingMatrix m = toy_encode(zeros, 4, 8, 123);
    REQUIRE(m.rows == 4);
    REQUIRE(m.dim == 8);
    for (std::size_t r = 1; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.dim; ++c) CHECK(m.at(r, c) == m.at(0, c));

    const Image gray(8, 8, 0.37);
    const EmbeddingMatrix g = toy_encode(gray, 4, 8, 123);
    for (std::size_t r = 1; r < g.rows; ++r)
        for (std::size_t c = 0; c < g.dim; ++c) CHECK(g.at(r, c) == g.at(0, c));
}

TEST_CASE("toy_encode: bit-identical across repeated calls") {
    const Image img = random_image(12, 20, 99);
    const EmbeddingMatrix a = toy_encode(img, 4, 16, 7);
    const EmbeddingMatrix b = toy_encode(img, 4, 16, 7);
    CHECK(a.values == b.values);
}

TEST_CASE("toy_encode: rows are one fixed linear map of the patch statistics") {
    const Image img = random_image(16, 16, 2024);
    const std::size_t patch = 4, dim = 6;
    const EmbeddingMatrix m = toy_encode(img, patch, dim, 55);
    REQUIRE(m.rows == 16);

    // Recover the map from oracle-computed statistics, then check every row.
    std::vector<std::vector<double>> stats, rows;
    for (std::size_t pr = 0; pr < 4; ++pr)
        for (std::size_t pc = 0; pc < 4; ++pc) {
            const auto s = oracles::patch_stats(img, patch, pr, pc);
            stats.push_back({s[0], s[1], s[2], s[3]});
            std::vector<double> row(dim);
            for (std::size_t c = 0; c < dim; ++c) row[c] = m.at(pr * 4 + pc, c);
            rows.push_back(row);
        }
    std::vector<long double> map;
    REQUIRE(oracles::fit_linear_map(stats, rows, 4, dim, map));
    for (std::size_t r = 0; r < stats.size(); ++r)
        for (std::size_t c = 0; c < dim; ++c) {
            long double acc = 0.0L;
            for (std::size_t k = 0; k < 4; ++k) acc += map[c * 4 + k] * stats[r][k];
            CHECK(std::fabs(rows[r][c] - static_cast<double>(acc)) < 1e-9);
        }
}

TEST_CASE("toy_encode: ragged edges truncate, undersized image rejected") {
    const Image img = random_image(10, 13, 5);
    const EmbeddingMatrix m = toy_encode(img, 4, 3, 1);
    CHECK(m.rows == 2 * 3);
    CHECK_THROWS_AS(toy_encode(Image(3, 3, 0.0), 4, 3, 1), InvalidInput);
}

TEST_CASE("extract_seg_token: positional rules") {
    const std::vector<std::vector<double>> states = {{1, 2}, {3, 4}, {5, 6}};
    CHECK(extract_seg_token(states, {10, 77, 11}, 77).values == std::vector<double>{3, 4});
    CHECK(extract_seg_token(states, {77, 10, 77}, 77).values == std::vector<double>{5, 6});
    CHECK_THROWS_AS(extract_seg_token(states, {10, 11, 12}, 77), NoSegToken);
}

TEST_CASE("extract_seg_token: result is literally one of the hidden states") {
    Rng rng(31);
    std::vector<std::vector<double>> states;
    std::vector<int> ids;
    for (int i = 0; i < 12; ++i) {
        states.push_back({rng.normal(), rng.normal(), rng.normal()});
        ids.push_back(static_cast<int>(rng.below(5)));
    }
    ids[7] = 99;
    const SegTokenRaw tok = extract_seg_token(states, ids, 99);
    CHECK(tok.values == states[7]);
}

TEST_CASE("project: zero and identity cases") {
    const ProjectionHead id_relu = ProjectionHead::identity(4, Nonlinearity::Relu);
    CHECK(project(SegTokenRaw{{0, 0, 0, 0}}, id_relu).values ==
          std::vector<double>{0, 0, 0, 0});
    CHECK(project(SegTokenRaw{{0.5, 1.0, 0.0, 2.5}}, id_relu).values ==
          std::vector<double>{0.5, 1.0, 0.0, 2.5});
}

TEST_CASE("project: matches the hand-rolled two-layer oracle") {
    Rng rng(404);
    for (int trial = 0; trial < 20; ++trial) {
        const auto nl = trial % 2 ? Nonlinearity::Relu : Nonlinearity::Tanh;
        const ProjectionHead head(5, 9, 4, nl, 1000 + static_cast<std::uint64_t>(trial));
        std::vector<double> input(5);
        for (double& v : input) v = rng.normal();
        const SegEmbedding got = project(SegTokenRaw{input}, head);
        const std::vector<double> expected = oracles::mlp_eval(head, input);
        for (std::size_t i = 0; i < 4; ++i)
            CHECK(std::fabs(got.values[i] - expected[i]) < 1e-9);
    }
}

TEST_CASE("project: dimension mismatch and non-finite input rejected") {
    const ProjectionHead head = ProjectionHead::with_defaults(3);
    CHECK(head.in_dim() == 32);
    CHECK(head.mid_dim() == 64);
    CHECK(head.out_dim() == 16);
    CHECK_THROWS_AS(project(SegTokenRaw{{1.0, 2.0}}, head), InvalidInput);
    std::vector<double> bad(32, 0.0);
    bad[4] = std::nan("");
    CHECK_THROWS_AS(project(SegTokenRaw{bad}, head), InvalidInput);
}

TEST_CASE("projection head: weights are a pure function of (widths, nl, seed)") {
    const ProjectionHead a(6, 10, 4, Nonlinearity::Relu, 77);
    const ProjectionHead b(6, 10, 4, Nonlinearity::Relu, 77);
    CHECK(a.w1() == b.w1());
    CHECK(a.b1() == b.b1());
    CHECK(a.w2() == b.w2());
    CHECK(a.b2() == b.b2());
    const ProjectionHead c(6, 10, 4, Nonlinearity::Relu, 78);
    CHECK(a.w1() != c.w1());
}

TEST_CASE("project: Lipschitz bound holds on sampled pairs") {
    const ProjectionHead head(8, 12, 6, Nonlinearity::Tanh, 2025);
    const double bound = head.lipschitz_bound();
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(8), y(8);
        for (std::size_t i = 0; i < 8; ++i) {
            x[i] = rng.normal();
            y[i] = rng.normal();
        }
        const auto fx = project(SegTokenRaw{x}, head).values;
        const auto fy = project(SegTokenRaw{y}, head).values;
        double dist_out = 0.0, dist_in = 0.0;
        for (std::size_t i = 0; i < fx.size(); ++i)
            dist_out += (fx[i] - fy[i]) * (fx[i] - fy[i]);
        for (std::size_t i = 0; i < x.size(); ++i)
            dist_in += (x[i] - y[i]) * (x[i] - y[i]);
        CHECK(std::sqrt(dist_out) <= bound * std::sqrt(dist_in) + 1e-12);
    }
}

TEST_CASE("toy_seg_state: pooled state tracks the bright region") {
    Image img(16, 16, 0.2);
    for (std::size_t y = 4; y < 10; ++y)
        for (std::size_t x = 6; x < 12; ++x) img.at(y, x) = 0.8;
    const EmbeddingMatrix tokens = toy_encode(img, 2, 8, 11);
    const SegTokenRaw raw = toy_seg_state(img, 2, tokens, 12.0, 0.4);
    REQUIRE(raw.values.size() == 8);
    double amax = 0.0;
    for (double v : raw.values) amax = std::max(amax, std::fabs(v));
    CHECK(amax == doctest::Approx(0.4).epsilon(1e-12));

    // The similarity against the pooled state must rank a bright patch
    // above a background patch.
    const SegEmbedding seg =
        project(raw, ProjectionHead::identity(8, Nonlinearity::Tanh));
    const double bright = oracles::dot(
        std::vector<double>(tokens.row(3 * 8 + 4), tokens.row(3 * 8 + 4) + 8), seg.values);
    const double dark = oracles::dot(std::vector<double>(tokens.row(0), tokens.row(0) + 8),
                                     seg.values);
    CHECK(bright > dark);
}

TEST_CASE("embedding serialization: binary header and float32 round-trip") {
    const Image img = random_image(8, 8, 17);
    const EmbeddingMatrix m = toy_encode(img, 2, 5, 3);
    const auto dir = std::filesystem::temp_directory_path() / "simseg_embed_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "tokens.bin";
    save_embeddings(m, path);
    CHECK(std::filesystem::file_size(path) == 8 + m.rows * m.dim * 4);

    const EmbeddingMatrix back = load_embeddings(path);
    REQUIRE(back.rows == m.rows);
    REQUIRE(back.dim == m.dim);
    for (std::size_t i = 0; i < m.values.size(); ++i)
        CHECK(back.values[i] == static_cast<double>(static_cast<float>(m.values[i])));

    save_embeddings_csv(m, dir / "tokens.csv");
    CHECK(std::filesystem::file_size(dir / "tokens.csv") > 0);
    std::filesystem::remove_all(dir);
}
