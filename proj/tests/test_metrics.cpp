#include <catch2/catch_amalgamated.hpp>

#include "codelens/metrics.hpp"
#include "codelens/rng.hpp"

using namespace codelens;

namespace {

// brute-force pairwise AUC: mean over all (pos, neg) pairs of
// [score_pos > score_neg] + 0.5 [tie]
double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    long pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

} // namespace

TEST_CASE("auc on pinned cases", "[metrics]") {
    CHECK(auc({0.9, 0.8, 0.3, 0.1}, {1, 1, 0, 0}) == 1.0);
    CHECK(auc({0.9, 0.3, 0.5, 0.1}, {1, 1, 0, 0}) == Catch::Approx(0.75).epsilon(1e-12));
    CHECK(auc({0.4, 0.4, 0.4, 0.4}, {1, 1, 0, 0}) == Catch::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(auc({0.1, 0.2}, {1, 1}), Error);
}

TEST_CASE("rank-based auc equals brute-force pairwise auc", "[metrics][acceptance5]") {
    Rng rng(1001);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 10 + rng.below(191); // up to 200
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool has_pos = false, has_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            // quantized so ties actually occur
            scores[i] = std::floor(rng.uniform(-2.0, 2.0) * 8.0) / 8.0;
            labels[i] = rng.bernoulli(0.5) ? 1 : 0;
            (labels[i] ? has_pos : has_neg) = true;
        }
        if (!has_pos) labels[0] = 1;
        if (!has_neg) labels[n - 1] = 0;
        double fast = auc(scores, labels);
        double slow = pairwise_auc(scores, labels);
        REQUIRE(std::abs(fast - slow) < 1e-9);
    }
}

TEST_CASE("fpr and fnr at thresholds", "[metrics]") {
    std::vector<double> scores = {0.9, 0.8, 0.3, 0.1};
    std::vector<int> labels = {1, 1, 0, 0};
    double t = youden_threshold(scores, labels);
    auto perfect = fpr_fnr(scores, labels, t);
    CHECK(perfect.fpr == 0.0);
    CHECK(perfect.fnr == 0.0);

    auto all_flagged = fpr_fnr(scores, labels, -5.0);
    CHECK(all_flagged.fpr == 1.0);
    CHECK(all_flagged.fnr == 0.0);

    // mixed fixture vs a direct recount
    std::vector<double> s2 = {0.9, 0.2, 0.6, 0.4, 0.55, 0.3};
    std::vector<int> l2 = {1, 1, 1, 0, 0, 0};
    auto r = fpr_fnr(s2, l2, 0.5);
    // flagged: 0.9 (tp), 0.6 (tp), 0.55 (fp); unflagged: 0.2 (fn), 0.4 (tn), 0.3 (tn)
    CHECK(r.confusion.tp == 2);
    CHECK(r.confusion.fn == 1);
    CHECK(r.confusion.fp == 1);
    CHECK(r.confusion.tn == 2);
    CHECK(r.fpr == Catch::Approx(1.0 / 3.0));
    CHECK(r.fnr == Catch::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(fpr_fnr(s2, {1, 1, 1, 1, 1, 1}, 0.5), Error);
}

TEST_CASE("threshold sweep monotonicity", "[metrics]") {
    Rng rng(1002);
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < 200; ++i) {
        scores.push_back(rng.normal(labels.size() % 2 == 0 ? 0.2 : -0.2, 1.0));
        labels.push_back(i % 2);
    }
    double prev_fpr = 1.1, prev_fnr = -0.1;
    for (double t = -4.0; t <= 4.0; t += 0.1) {
        auto r = fpr_fnr(scores, labels, t);
        CHECK(r.fpr <= prev_fpr + 1e-12);  // non-increasing
        CHECK(r.fnr >= prev_fnr - 1e-12);  // non-decreasing
        prev_fpr = r.fpr;
        prev_fnr = r.fnr;
    }
}

TEST_CASE("youden threshold maximizes J", "[metrics]") {
    std::vector<double> scores = {0.1, 0.2, 0.6, 0.7, 0.8};
    std::vector<int> labels = {0, 0, 0, 1, 1};
    double t = youden_threshold(scores, labels);
    CHECK(t == 0.7); // flags exactly the two positives
    auto r = fpr_fnr(scores, labels, t);
    CHECK(r.fpr == 0.0);
    CHECK(r.fnr == 0.0);
}

TEST_CASE("eval report json round-trip", "[metrics]") {
    EvalReport r;
    r.detector_id = "vit";
    r.split_id = "test";
    r.auc = 0.97;
    r.fpr = 0.04;
    r.fnr = 0.08;
    r.threshold = 0.31;
    r.confusion = {45, 2, 48, 5};
    r.flops = 57918722ull;
    r.mean_latency_s = 0.0123;
    auto back = EvalReport::from_json(r.to_json());
    CHECK(back.detector_id == r.detector_id);
    CHECK(back.auc == r.auc);
    CHECK(back.confusion.tp == 45);
    CHECK(back.flops == r.flops);
}
