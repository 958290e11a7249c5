#pragma once

#include <cstddef>
#include <vector>

#include "simseg/image.hpp"

namespace simseg {

struct LossWeights {
    double txt = 1.0;
    double mask = 1.0;
    double bce = 2.0;
    double dice = 0.5;
};

/// Soft prediction carried as logits; probabilities are logistic(logits).
struct SoftMask {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> logits;

    SoftMask() = default;
    SoftMask(std::size_t h, std::size_t w, std::vector<double> z);

    double probability(std::size_t i) const;
    std::size_t size() const { return logits.size(); }
};

struct LossResult {
    double value = 0.0;
    std::vector<double> grad;  // d value / d logit
};

/// Mean binary cross-entropy, evaluated stably from logits.
/// grad[i] = (p_i - g_i) / N.
LossResult bce_loss(const SoftMask& pred, const BitMask& truth);

/// 1 - (2*sum(p*g) + eps) / (sum(p) + sum(g) + eps), gradient through the
/// logistic via the quotient rule.
LossResult dice_loss(const SoftMask& pred, const BitMask& truth, double smoothing = 1.0);

/// Per-step token logits, steps x vocab row-major.
struct TokenLogits {
    std::size_t steps = 0;
    std::size_t vocab = 0;
    std::vector<double> values;

    double at(std::size_t t, std::size_t v) const { return values[t * vocab + v]; }
};

/// Mean negative log-softmax of the target entry per step.
double text_ce_loss(const TokenLogits& logits, const std::vector<std::size_t>& targets);

/// lambda_bce * bce + lambda_dice * dice.
double mask_loss(double bce, double dice, const LossWeights& w);

/// lambda_txt * txt + lambda_mask * mask.
double total_loss(double txt, double mask, const LossWeights& w);

}  // namespace simseg
