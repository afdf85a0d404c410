#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "codelens/error.hpp"

namespace codelens {

struct Confusion {
    long tp = 0, fp = 0, tn = 0, fn = 0;
};

// Rank-based AUC in the Mann-Whitney form: P(score_pos > score_neg) plus half
// the tie probability, via average ranks.
inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw Error("auc: size mismatch");
    long n_pos = 0, n_neg = 0;
    for (int y : labels) (y == 1 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw Error("auc: both classes must be present");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // average ranks over tie groups, 1-based
    std::vector<double> rank(scores.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }
    double rank_sum_pos = 0.0;
    for (std::size_t k = 0; k < scores.size(); ++k)
        if (labels[k] == 1) rank_sum_pos += rank[k];
    double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// Confusion counts at a >= threshold (ties flagged as llm).
inline Confusion confusion_at(const std::vector<double>& scores, const std::vector<int>& labels,
                              double threshold) {
    Confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        bool flagged = scores[i] >= threshold;
        if (labels[i] == 1)
            (flagged ? c.tp : c.fn)++;
        else
            (flagged ? c.fp : c.tn)++;
    }
    return c;
}

struct FprFnr {
    double fpr = 0.0;
    double fnr = 0.0;
    Confusion confusion;
};

inline FprFnr fpr_fnr(const std::vector<double>& scores, const std::vector<int>& labels,
                      double threshold) {
    long n_pos = 0, n_neg = 0;
    for (int y : labels) (y == 1 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw Error("fpr_fnr: both classes must be present");
    FprFnr r;
    r.confusion = confusion_at(scores, labels, threshold);
    r.fpr = static_cast<double>(r.confusion.fp) / static_cast<double>(r.confusion.fp + r.confusion.tn);
    r.fnr = static_cast<double>(r.confusion.fn) / static_cast<double>(r.confusion.fn + r.confusion.tp);
    return r;
}

// Threshold maximizing Youden's J = TPR - FPR over the candidate set of all
// observed scores (each candidate flags everything at or above it). Ties take
// the smallest threshold. Frozen on validation data before touching test.
inline double youden_threshold(const std::vector<double>& scores, const std::vector<int>& labels) {
    long n_pos = 0, n_neg = 0;
    for (int y : labels) (y == 1 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw Error("youden_threshold: both classes must be present");
    std::vector<double> cand = scores;
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

    double best_j = -2.0, best_t = cand.front();
    for (double t : cand) {
        auto c = confusion_at(scores, labels, t);
        double tpr = static_cast<double>(c.tp) / static_cast<double>(n_pos);
        double fpr = static_cast<double>(c.fp) / static_cast<double>(n_neg);
        double j = tpr - fpr;
        if (j > best_j + 1e-15) {
            best_j = j;
            best_t = t;
        }
    }
    return best_t;
}

// One detector on one split.
struct EvalReport {
    std::string detector_id;
    std::string split_id;
    double auc = 0.0;
    double fpr = 0.0;
    double fnr = 0.0;
    double threshold = 0.0;
    Confusion confusion;
    std::uint64_t flops = 0;
    double mean_latency_s = 0.0; // 0 unless latency measurement was requested

    nlohmann::json to_json() const {
        return {{"detector_id", detector_id},
                {"split_id", split_id},
                {"auc", auc},
                {"fpr", fpr},
                {"fnr", fnr},
                {"threshold", threshold},
                {"tp", confusion.tp},
                {"fp", confusion.fp},
                {"tn", confusion.tn},
                {"fn", confusion.fn},
                {"flops", flops},
                {"mean_latency_s", mean_latency_s}};
    }

    static EvalReport from_json(const nlohmann::json& j) {
        EvalReport r;
        r.detector_id = j.at("detector_id");
        r.split_id = j.at("split_id");
        r.auc = j.at("auc");
        r.fpr = j.at("fpr");
        r.fnr = j.at("fnr");
        r.threshold = j.at("threshold");
        r.confusion.tp = j.at("tp");
        r.confusion.fp = j.at("fp");
        r.confusion.tn = j.at("tn");
        r.confusion.fn = j.at("fn");
        r.flops = j.at("flops");
        r.mean_latency_s = j.at("mean_latency_s");
        return r;
    }
};

} // namespace codelens
