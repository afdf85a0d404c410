#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "codelens/error.hpp"
#include "codelens/scorer.hpp"

namespace codelens {

// Oriented so that higher score = more likely LLM-generated; raw keeps the
// unoriented statistic for reporting.
struct DetectorScore {
    double score = 0.0;
    double raw = 0.0;
    std::string detector_id;
};

enum class Label { human, llm };

struct Verdict {
    Label label = Label::human;
    DetectorScore score;
    double threshold = 0.0;
};

// Mean token log probability. LLM-generated code typically yields higher
// values, so the oriented score is the raw mean.
inline DetectorScore mean_logp(const ScoredSeq& scored) {
    if (scored.empty()) throw DetectorError("mean_logp: empty sequence");
    double s = 0.0;
    for (const auto& t : scored.tokens) s += t.logprob;
    double raw = s / static_cast<double>(scored.size());
    return {raw, raw, "logp"};
}

// Mean entropy of the renormalized top-k alternative distribution. Lower
// entropy signals machine generation, so the oriented score is negated.
inline DetectorScore mean_entropy(const ScoredSeq& scored) {
    if (scored.empty()) throw DetectorError("mean_entropy: empty sequence");
    double total = 0.0;
    for (const auto& t : scored.tokens) {
        if (t.alternatives.empty())
            throw DetectorError("mean_entropy: token without alternatives");
        double mass = 0.0;
        for (const auto& [text, lp] : t.alternatives) mass += std::exp(lp);
        double h = 0.0;
        for (const auto& [text, lp] : t.alternatives) {
            double q = std::exp(lp) / mass; // renormalize the top-k tail away
            if (q > 0.0) h -= q * std::log(q);
        }
        total += h;
    }
    double raw = total / static_cast<double>(scored.size());
    return {-raw, raw, "entropy"};
}

// Mean candidate rank; LLM text sits at lower ranks, so score is negated.
inline DetectorScore mean_rank(const ScoredSeq& scored) {
    if (scored.empty()) throw DetectorError("mean_rank: empty sequence");
    double s = 0.0;
    for (const auto& t : scored.tokens) s += static_cast<double>(t.rank);
    double raw = s / static_cast<double>(scored.size());
    return {-raw, raw, "rank"};
}

inline DetectorScore mean_log_rank(const ScoredSeq& scored) {
    if (scored.empty()) throw DetectorError("mean_log_rank: empty sequence");
    double s = 0.0;
    for (const auto& t : scored.tokens) s += std::log(static_cast<double>(t.rank));
    double raw = s / static_cast<double>(scored.size());
    return {-raw, raw, "logrank"};
}

// Log-Likelihood Log-Rank Ratio: |sum log p| / sum ln rank. Higher raw is
// more LLM-like. Degenerate when every rank is 1.
inline DetectorScore lrr(const ScoredSeq& scored) {
    if (scored.empty()) throw DetectorError("lrr: empty sequence");
    double num = 0.0, den = 0.0;
    for (const auto& t : scored.tokens) {
        num += t.logprob;
        den += std::log(static_cast<double>(t.rank));
    }
    if (den == 0.0)
        throw DetectorError("lrr: degenerate denominator (every rank is 1)");
    double raw = std::abs(num) / den;
    return {raw, raw, "lrr"};
}

// Deterministic thresholding at >= (boundary counts as llm).
inline Verdict classify(const DetectorScore& score, double threshold) {
    Verdict v;
    v.score = score;
    v.threshold = threshold;
    v.label = score.score >= threshold ? Label::llm : Label::human;
    return v;
}

inline const std::vector<std::string>& zero_shot_detector_ids() {
    static const std::vector<std::string> ids = {"logp", "entropy", "rank", "logrank", "lrr"};
    return ids;
}

inline const std::vector<std::string>& model_detector_ids() {
    static const std::vector<std::string> ids = {"vit", "resnet", "seq"};
    return ids;
}

inline bool is_zero_shot_detector(const std::string& id) {
    for (const auto& d : zero_shot_detector_ids())
        if (d == id) return true;
    return false;
}

inline bool is_model_detector(const std::string& id) {
    for (const auto& d : model_detector_ids())
        if (d == id) return true;
    return false;
}

inline DetectorScore zero_shot_score(const std::string& id, const ScoredSeq& scored) {
    if (id == "logp") return mean_logp(scored);
    if (id == "entropy") return mean_entropy(scored);
    if (id == "rank") return mean_rank(scored);
    if (id == "logrank") return mean_log_rank(scored);
    if (id == "lrr") return lrr(scored);
    throw DetectorError("unknown zero-shot detector: " + id);
}

} // namespace codelens
