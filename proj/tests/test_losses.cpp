#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "simseg/errors.hpp"
#include "simseg/losses.hpp"
#include "simseg/rng.hpp"

using namespace simseg;

namespace {

BitMask random_bits(std::size_t h, std::size_t w, std::uint64_t seed) {
    Rng rng(seed);
    BitMask m(h, w);
    for (auto& b : m.bits) b = rng.next_double() < 0.5 ? 1 : 0;
    return m;
}

std::vector<double> random_logits(std::size_t count, std::uint64_t seed, double scale = 2.0) {
    Rng rng(seed);
    std::vector<double> z(count);
    for (double& v : z) v = rng.uniform(-scale, scale);
    return z;
}

double relative_error(double a, double b) {
    const double denom = std::max({std::fabs(a), std::fabs(b), 1e-12});
    return std::fabs(a - b) / denom;
}

}  // namespace

TEST_CASE("bce_loss: half probabilities give ln 2") {
    const SoftMask pred(4, 4, std::vector<double>(16, 0.0));
    const LossResult r = bce_loss(pred, random_bits(4, 4, 1));
    CHECK(std::fabs(r.value - std::log(2.0)) < 1e-12);
}

TEST_CASE("bce_loss: perfect predictions drive the loss to zero monotonically") {
    const BitMask gt = random_bits(6, 6, 2);
    double previous = 1e300;
    for (const double margin : {3.0, 6.0, 12.0, 24.0}) {
        std::vector<double> z(36);
        for (std::size_t i = 0; i < 36; ++i) z[i] = gt.bits[i] ? margin : -margin;
        const LossResult r = bce_loss(SoftMask(6, 6, z), gt);
        CHECK(r.value >= 0.0);
        CHECK(r.value < previous);
        previous = r.value;
    }
    CHECK(previous < 1e-9);
}

TEST_CASE("bce_loss: analytic gradient matches central finite differences") {
    for (int trial = 0; trial < 10; ++trial) {
        const BitMask gt = random_bits(8, 8, 100 + trial);
        const std::vector<double> z = random_logits(64, 200 + trial);
        const LossResult r = bce_loss(SoftMask(8, 8, z), gt);
        const auto fd = oracles::finite_difference(
            [&](const std::vector<double>& logits) {
                return bce_loss(SoftMask(8, 8, logits), gt).value;
            },
            z);
        for (std::size_t i = 0; i < 64; ++i) CHECK(relative_error(r.grad[i], fd[i]) < 1e-4);
    }
}

TEST_CASE("bce_loss: shape mismatch rejected") {
    CHECK_THROWS_AS(bce_loss(SoftMask(2, 2, {0, 0, 0, 0}), BitMask(2, 3)), InvalidInput);
}

TEST_CASE("dice_loss: exact-match and empty-vs-empty anchors") {
    const BitMask gt = random_bits(5, 5, 3);
    std::vector<double> z(25);
    for (std::size_t i = 0; i < 25; ++i) z[i] = gt.bits[i] ? 40.0 : -40.0;
    CHECK(std::fabs(dice_loss(SoftMask(5, 5, z), gt).value) < 1e-12);

    const BitMask empty(5, 5);
    CHECK(std::fabs(dice_loss(SoftMask(5, 5, std::vector<double>(25, -40.0)), empty).value) <
          1e-12);
}

TEST_CASE("dice_loss: analytic gradient matches central finite differences") {
    for (int trial = 0; trial < 10; ++trial) {
        const BitMask gt = random_bits(8, 8, 300 + trial);
        const std::vector<double> z = random_logits(64, 400 + trial);
        const LossResult r = dice_loss(SoftMask(8, 8, z), gt);
        const auto fd = oracles::finite_difference(
            [&](const std::vector<double>& logits) {
                return dice_loss(SoftMask(8, 8, logits), gt).value;
            },
            z);
        for (std::size_t i = 0; i < 64; ++i) CHECK(relative_error(r.grad[i], fd[i]) < 1e-4);
    }
}

TEST_CASE("dice_loss: not symmetric under simultaneous complementation") {
    // Guards against implementations that silently operate on complements.
    const BitMask gt = random_bits(6, 6, 5);
    BitMask flipped(6, 6);
    for (std::size_t i = 0; i < 36; ++i) flipped.bits[i] = gt.bits[i] ? 0 : 1;
    const std::vector<double> z = random_logits(36, 6);
    std::vector<double> negz(z);
    for (double& v : negz) v = -v;
    const double direct = dice_loss(SoftMask(6, 6, z), gt).value;
    const double complemented = dice_loss(SoftMask(6, 6, negz), flipped).value;
    CHECK(std::fabs(direct - complemented) > 1e-3);
}

TEST_CASE("dice_loss: smoothing validation and range") {
    const BitMask gt = random_bits(4, 4, 7);
    const SoftMask pred(4, 4, random_logits(16, 8));
    CHECK_THROWS_AS(dice_loss(pred, gt, 0.0), InvalidInput);
    const double v = dice_loss(pred, gt).value;
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
}

TEST_CASE("text_ce_loss: uniform logits give ln V") {
    TokenLogits logits;
    logits.steps = 3;
    logits.vocab = 4;
    logits.values.assign(12, 0.7);
    CHECK(std::fabs(text_ce_loss(logits, {0, 3, 1}) - std::log(4.0)) < 1e-12);
}

TEST_CASE("text_ce_loss: confident correct logits drive the loss to zero") {
    double previous = 1e300;
    for (const double margin : {2.0, 5.0, 10.0, 20.0}) {
        TokenLogits logits;
        logits.steps = 4;
        logits.vocab = 5;
        logits.values.assign(20, 0.0);
        const std::vector<std::size_t> targets = {1, 0, 4, 2};
        for (std::size_t t = 0; t < 4; ++t) logits.values[t * 5 + targets[t]] = margin;
        const double v = text_ce_loss(logits, targets);
        CHECK(v < previous);
        previous = v;
    }
    CHECK(previous < 1e-7);
}

TEST_CASE("text_ce_loss: matches the extended-precision oracle") {
    Rng rng(9);
    TokenLogits logits;
    logits.steps = 5;
    logits.vocab = 7;
    logits.values.resize(35);
    for (double& v : logits.values) v = rng.uniform(-5.0, 5.0);
    std::vector<std::size_t> targets(5);
    for (auto& t : targets) t = rng.below(7);

    long double acc = 0.0L;
    for (std::size_t t = 0; t < 5; ++t) {
        long double total = 0.0L;
        for (std::size_t v = 0; v < 7; ++v)
            total += std::expl(static_cast<long double>(logits.at(t, v)));
        acc += std::logl(total) - static_cast<long double>(logits.at(t, targets[t]));
    }
    CHECK(std::fabs(text_ce_loss(logits, targets) - static_cast<double>(acc / 5.0L)) < 1e-10);

    CHECK_THROWS_AS(text_ce_loss(logits, {0, 1, 2, 3, 9}), InvalidInput);
    CHECK_THROWS_AS(text_ce_loss(logits, {0, 1}), InvalidInput);
}

TEST_CASE("mask_loss and total_loss: weighted sums with the default weights") {
    const LossWeights defaults;
    CHECK(defaults.txt == 1.0);
    CHECK(defaults.mask == 1.0);
    CHECK(defaults.bce == 2.0);
    CHECK(defaults.dice == 0.5);

    const double mask = mask_loss(0.693147, 0.2, defaults);
    CHECK(mask == 2.0 * 0.693147 + 0.5 * 0.2);
    CHECK(mask == doctest::Approx(1.486294).epsilon(1e-9));
    CHECK(total_loss(1.0, mask, defaults) == doctest::Approx(2.486294).epsilon(1e-9));

    LossWeights zero;
    zero.bce = zero.dice = 0.0;
    CHECK(mask_loss(3.0, 4.0, zero) == 0.0);
    LossWeights proj;
    proj.bce = 1.0;
    proj.dice = 0.0;
    CHECK(mask_loss(0.37, 5.0, proj) == 0.37);

    LossWeights no_mask;
    no_mask.mask = 0.0;
    CHECK(total_loss(0.9, 100.0, no_mask) == 0.9);
}

TEST_CASE("total_loss: linear in its components") {
    const LossWeights w{0.7, 1.3, 2.0, 0.5};
    Rng rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        const double t1 = rng.normal(), m1 = rng.normal();
        const double t2 = rng.normal(), m2 = rng.normal();
        CHECK(std::fabs(total_loss(t1 + t2, m1 + m2, w) -
                        (total_loss(t1, m1, w) + total_loss(t2, m2, w))) < 1e-12);
    }
    CHECK_THROWS_AS(total_loss(std::nan(""), 0.0, w), InvalidInput);
}

TEST_CASE("loss values stay finite and nonnegative on random instances") {
    for (int trial = 0; trial < 30; ++trial) {
        const BitMask gt = random_bits(8, 8, 600 + trial);
        const std::vector<double> z = random_logits(64, 700 + trial, 8.0);
        const double bce = bce_loss(SoftMask(8, 8, z), gt).value;
        const double dice = dice_loss(SoftMask(8, 8, z), gt).value;
        CHECK(std::isfinite(bce));
        CHECK(bce >= 0.0);
        CHECK(std::isfinite(dice));
        CHECK(dice >= 0.0);
        CHECK(dice < 1.0);
        CHECK(std::isfinite(total_loss(1.0, mask_loss(bce, dice, {}), {})));
    }
}
