#include "simseg/losses.hpp"

#include <cmath>

#include "simseg/decoder.hpp"
#include "simseg/errors.hpp"

namespace simseg {

SoftMask::SoftMask(std::size_t h, std::size_t w, std::vector<double> z)
    : height(h), width(w), logits(std::move(z)) {
    if (logits.size() != height * width)
        throw InvalidInput("logit count does not match the mask shape");
    for (double v : logits)
        if (!std::isfinite(v)) throw InvalidInput("logits must be finite");
}

double SoftMask::probability(std::size_t i) const { return logistic(logits[i]); }

namespace {

void check_shapes(const SoftMask& pred, const BitMask& truth) {
    if (pred.height != truth.height || pred.width != truth.width)
        throw InvalidInput("prediction and ground-truth shapes differ");
}

}  // namespace

LossResult bce_loss(const SoftMask& pred, const BitMask& truth) {
    check_shapes(pred, truth);
    const std::size_t n = pred.size();
    LossResult out;
    out.grad.resize(n);
    const double inv_n = 1.0 / static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = pred.logits[i];
        const double g = truth.bits[i] ? 1.0 : 0.0;
        // max(z,0) - z*g + log(1 + exp(-|z|)): stable for all z.
        acc += (z > 0.0 ? z : 0.0) - z * g + std::log1p(std::exp(-std::fabs(z)));
        out.grad[i] = (logistic(z) - g) * inv_n;
    }
    out.value = acc * inv_n;
    return out;
}

LossResult dice_loss(const SoftMask& pred, const BitMask& truth, double smoothing) {
    check_shapes(pred, truth);
    if (!(smoothing > 0.0)) throw InvalidInput("dice smoothing must be > 0");
    const std::size_t n = pred.size();

    double overlap = 0.0;  // sum p*g
    double mass = 0.0;     // sum p + sum g
    for (std::size_t i = 0; i < n; ++i) {
        const double p = pred.probability(i);
        const double g = truth.bits[i] ? 1.0 : 0.0;
        overlap += p * g;
        mass += p + g;
    }
    const double num = 2.0 * overlap + smoothing;
    const double den = mass + smoothing;

    LossResult out;
    out.value = 1.0 - num / den;
    out.grad.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = pred.probability(i);
        const double g = truth.bits[i] ? 1.0 : 0.0;
        // d value / dp = -(2 g den - num) / den^2, chained through p(1-p).
        const double dvdp = -(2.0 * g * den - num) / (den * den);
        out.grad[i] = dvdp * p * (1.0 - p);
    }
    return out;
}

double text_ce_loss(const TokenLogits& logits, const std::vector<std::size_t>& targets) {
    if (logits.steps == 0 || logits.vocab == 0) throw InvalidInput("empty token logits");
    if (targets.size() != logits.steps)
        throw InvalidInput("target count does not match logit steps");
    double acc = 0.0;
    for (std::size_t t = 0; t < logits.steps; ++t) {
        if (targets[t] >= logits.vocab)
            throw InvalidInput("target id " + std::to_string(targets[t]) +
                               " out of vocabulary range");
        double mx = logits.at(t, 0);
        for (std::size_t v = 1; v < logits.vocab; ++v) mx = std::max(mx, logits.at(t, v));
        double sum = 0.0;
        for (std::size_t v = 0; v < logits.vocab; ++v) sum += std::exp(logits.at(t, v) - mx);
        acc += mx + std::log(sum) - logits.at(t, targets[t]);
    }
    return acc / static_cast<double>(logits.steps);
}

double mask_loss(double bce, double dice, const LossWeights& w) {
    if (!std::isfinite(bce) || !std::isfinite(dice))
        throw InvalidInput("loss terms must be finite");
    return w.bce * bce + w.dice * dice;
}

double total_loss(double txt, double mask, const LossWeights& w) {
    if (!std::isfinite(txt) || !std::isfinite(mask))
        throw InvalidInput("loss terms must be finite");
    return w.txt * txt + w.mask * mask;
}

}  // namespace simseg
