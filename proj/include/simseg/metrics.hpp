#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "simseg/image.hpp"

namespace simseg {

/// Prediction / ground-truth pairing; shapes must agree.
struct MaskPair {
    BitMask predicted;
    BitMask truth;

    MaskPair(BitMask pred, BitMask gt);
};

/// (|P ∩ G|, |P ∪ G|) as exact pixel counts.
std::pair<std::size_t, std::size_t> intersection_union(const BitMask& a, const BitMask& b);

/// Intersection over union; 1.0 when both masks are empty.
double iou(const MaskPair& pair);

/// Mean of per-pair IoU.
double giou_dataset(const std::vector<MaskPair>& pairs);

/// Cumulative intersection over cumulative union; 1.0 when the total
/// union is empty.
double ciou_dataset(const std::vector<MaskPair>& pairs);

/// Candidate quality Q: average of gIoU and cIoU of the single pair,
/// which collapses to plain IoU.
double quality(const MaskPair& pair);

/// Earliest case-insensitive vocabulary hit after the "[SEG]" marker
/// (whole text when the marker is absent); ties break by vocabulary
/// order. Returns the canonical vocabulary spelling.
std::optional<std::string> extract_diagnosis(const std::string& text,
                                             const std::vector<std::string>& vocabulary);

/// Fraction of exact prediction/truth matches; absent predictions never match.
double accuracy(const std::vector<std::optional<std::string>>& predictions,
                const std::vector<std::string>& truths);

struct EvalRow {
    std::string subset;
    double giou = 0.0;
    double ciou = 0.0;
    double acc = 0.0;
    std::size_t count = 0;
};

/// Table-shaped report; metric fields are fractions in [0, 1] and are
/// emitted as percentages.
struct EvalReport {
    std::vector<EvalRow> subsets;
    EvalRow overall;
};

/// CSV with header subset,giou,ciou,acc,n; metrics as percentages.
std::string report_csv(const EvalReport& report);
/// JSON mirroring the same layout.
std::string report_json(const EvalReport& report);

}  // namespace simseg
