#include "simseg/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <nlohmann/json.hpp>

#include "simseg/errors.hpp"

namespace simseg {

MaskPair::MaskPair(BitMask pred, BitMask gt)
    : predicted(std::move(pred)), truth(std::move(gt)) {
    if (predicted.height != truth.height || predicted.width != truth.width)
        throw InvalidInput("mask pair shapes differ");
}

std::pair<std::size_t, std::size_t> intersection_union(const BitMask& a, const BitMask& b) {
    if (a.height != b.height || a.width != b.width)
        throw InvalidInput("mask shapes differ");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        const bool pa = a.bits[i] != 0;
        const bool pb = b.bits[i] != 0;
        inter += pa && pb;
        uni += pa || pb;
    }
    return {inter, uni};
}

double iou(const MaskPair& pair) {
    const auto [inter, uni] = intersection_union(pair.predicted, pair.truth);
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double giou_dataset(const std::vector<MaskPair>& pairs) {
    if (pairs.empty()) throw InvalidInput("empty mask pair list");
    double acc = 0.0;
    for (const MaskPair& p : pairs) acc += iou(p);
    return acc / static_cast<double>(pairs.size());
}

double ciou_dataset(const std::vector<MaskPair>& pairs) {
    if (pairs.empty()) throw InvalidInput("empty mask pair list");
    std::size_t inter_total = 0, union_total = 0;
    for (const MaskPair& p : pairs) {
        const auto [inter, uni] = intersection_union(p.predicted, p.truth);
        inter_total += inter;
        union_total += uni;
    }
    if (union_total == 0) return 1.0;
    return static_cast<double>(inter_total) / static_cast<double>(union_total);
}

double quality(const MaskPair& pair) {
    const std::vector<MaskPair> one{pair};
    return (giou_dataset(one) + ciou_dataset(one)) / 2.0;
}

namespace {

std::string lowered(const std::string& s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

std::optional<std::string> extract_diagnosis(const std::string& text,
                                             const std::vector<std::string>& vocabulary) {
    if (vocabulary.empty()) throw InvalidInput("empty diagnosis vocabulary");
    const std::string haystack = lowered(text);
    std::size_t start = 0;
    if (const auto marker = haystack.find("[seg]"); marker != std::string::npos)
        start = marker + 5;

    std::optional<std::string> best;
    std::size_t best_pos = std::string::npos;
    for (const std::string& label : vocabulary) {
        const auto pos = haystack.find(lowered(label), start);
        if (pos == std::string::npos) continue;
        if (pos < best_pos) {  // strict: same-position ties keep vocabulary order
            best_pos = pos;
            best = label;
        }
    }
    return best;
}

double accuracy(const std::vector<std::optional<std::string>>& predictions,
                const std::vector<std::string>& truths) {
    if (predictions.size() != truths.size())
        throw InvalidInput("prediction and truth counts differ");
    if (predictions.empty()) throw InvalidInput("empty prediction list");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i].has_value() && *predictions[i] == truths[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

namespace {

void emit_row(std::ostringstream& out, const EvalRow& row) {
    out.precision(17);
    out << row.subset << ',' << row.giou * 100.0 << ',' << row.ciou * 100.0 << ','
        << row.acc * 100.0 << ',' << row.count << '\n';
}

nlohmann::json row_json(const EvalRow& row) {
    return {{"subset", row.subset},
            {"giou", row.giou * 100.0},
            {"ciou", row.ciou * 100.0},
            {"acc", row.acc * 100.0},
            {"n", row.count}};
}

}  // namespace

std::string report_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "subset,giou,ciou,acc,n\n";
    for (const EvalRow& row : report.subsets) emit_row(out, row);
    emit_row(out, report.overall);
    return out.str();
}

std::string report_json(const EvalReport& report) {
    nlohmann::json subsets = nlohmann::json::array();
    for (const EvalRow& row : report.subsets) subsets.push_back(row_json(row));
    const nlohmann::json doc{{"subsets", subsets}, {"overall", row_json(report.overall)}};
    return doc.dump(2);
}

}  // namespace simseg
