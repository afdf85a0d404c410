#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "codelens/checkpoint.hpp"
#include "codelens/dataset.hpp"
#include "codelens/detect.hpp"
#include "codelens/metrics.hpp"
#include "codelens/models.hpp"
#include "codelens/optim.hpp"

namespace codelens {

struct TrainConfig {
    std::size_t batch_size = 32;
    std::size_t max_epochs = 100;
    std::size_t patience = 5; // epochs without validation AUC improvement
    double lr = 1e-4;
    std::uint64_t seed = 0;
    std::size_t canvas = 64; // vision models; must match the model config
    double clamp_lo = -20.0;
    bool verbose = false;
    // A perfect validation AUC cannot improve, so waiting out the patience
    // window would return the same checkpoint; stopping immediately is an
    // optimization with identical results.
    bool stop_on_perfect = true;
};

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_auc = 0.0;
};

struct TrainResult {
    double best_val_auc = 0.0;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
    double threshold = 0.0; // Youden point on validation scores of the best model
    std::vector<EpochStats> history;
};

namespace detail_train {

inline Canvas sample_canvas(const CodeSample& s, std::size_t size, double clamp_lo) {
    if (!s.grid) throw MissingArtifactError("sample " + s.id + " carries no grid");
    return to_canvas(*s.grid, size, size, clamp_lo);
}

inline const std::vector<double>& sample_seq(const CodeSample& s) {
    if (!s.seq) throw MissingArtifactError("sample " + s.id + " carries no 1D vector");
    return s.seq->values;
}

} // namespace detail_train

// Margin score z1 - z0 (monotone in P(llm)) for a batch of samples.
inline std::vector<double> model_scores(nn::Model& model, const std::vector<CodeSample>& samples,
                                        const std::vector<std::size_t>& idx, std::size_t canvas,
                                        double clamp_lo, std::size_t batch_size = 32) {
    model.set_training(false);
    std::vector<double> scores(idx.size(), 0.0);
    if (model.is_vision()) {
        std::vector<Canvas> canvases;
        for (std::size_t start = 0; start < idx.size(); start += batch_size) {
            std::size_t n = std::min(batch_size, idx.size() - start);
            canvases.clear();
            std::vector<const Canvas*> ptrs;
            for (std::size_t k = 0; k < n; ++k)
                canvases.push_back(detail_train::sample_canvas(samples[idx[start + k]], canvas,
                                                               clamp_lo));
            for (const auto& c : canvases) ptrs.push_back(&c);
            auto logits = model.forward_canvases(nn::canvas_batch(ptrs));
            for (std::size_t k = 0; k < n; ++k)
                scores[start + k] = logits.data()[k * 2 + 1] - logits.data()[k * 2];
        }
    } else {
        for (std::size_t k = 0; k < idx.size(); ++k) {
            auto logits = model.forward_sequence(detail_train::sample_seq(samples[idx[k]]));
            scores[k] = logits.data()[1] - logits.data()[0];
        }
    }
    return scores;
}

// Mini-batch training with cross-entropy, Adam and early stopping on
// validation AUC; returns with the best-validation weights restored.
inline TrainResult train_model(nn::Model& model, const std::vector<CodeSample>& samples,
                               const DatasetSplit& split, const TrainConfig& cfg) {
    auto train_idx = indices_of(samples, split.train);
    auto val_idx = indices_of(samples, split.validation);
    if (train_idx.empty() || val_idx.empty())
        throw Error("train: empty train or validation split");

    nn::Adam adam({cfg.lr, 0.9, 0.999, 1e-8});
    auto params = model.parameters();
    Rng rng(cfg.seed ^ 0x7247A11ULL);

    TrainResult result;
    std::vector<std::vector<double>> best_params;
    std::vector<std::pair<std::vector<double>, std::vector<double>>> best_bn;
    auto snapshot = [&] {
        best_params.clear();
        for (auto& [name, p] : params) best_params.push_back(p.data());
        best_bn.clear();
        for (auto& [name, st] : model.bn_states())
            best_bn.emplace_back(st->running_mean, st->running_var);
    };
    auto restore = [&] {
        if (best_params.empty()) return;
        std::size_t i = 0;
        for (auto& [name, p] : params) p.data() = best_params[i++];
        std::size_t b = 0;
        for (auto& [name, st] : model.bn_states()) {
            st->running_mean = best_bn[b].first;
            st->running_var = best_bn[b].second;
            ++b;
        }
    };
    snapshot(); // epoch-0 checkpoint: the initialization

    {
        auto val_scores = model_scores(model, samples, val_idx, cfg.canvas, cfg.clamp_lo,
                                       cfg.batch_size);
        std::vector<int> val_labels;
        for (auto i : val_idx) val_labels.push_back(samples[i].label);
        result.best_val_auc = auc(val_scores, val_labels);
        result.threshold = youden_threshold(val_scores, val_labels);
    }

    std::size_t since_best = 0;
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        model.set_training(true);
        auto order = train_idx;
        rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t n = std::min(cfg.batch_size, order.size() - start);
            std::vector<int> labels;
            nn::Tensor loss;
            if (model.is_vision()) {
                std::vector<Canvas> canvases;
                std::vector<const Canvas*> ptrs;
                for (std::size_t k = 0; k < n; ++k) {
                    const auto& s = samples[order[start + k]];
                    canvases.push_back(detail_train::sample_canvas(s, cfg.canvas, cfg.clamp_lo));
                    labels.push_back(s.label);
                }
                for (const auto& c : canvases) ptrs.push_back(&c);
                auto logits = model.forward_canvases(nn::canvas_batch(ptrs));
                loss = nn::cross_entropy(logits, labels);
            } else {
                // sequence inputs are variable-length; accumulate per sample
                nn::Tensor total = nn::Tensor::scalar(0.0);
                for (std::size_t k = 0; k < n; ++k) {
                    const auto& s = samples[order[start + k]];
                    auto logits = model.forward_sequence(detail_train::sample_seq(s));
                    total = nn::add(total, nn::cross_entropy(logits, {s.label}));
                }
                loss = nn::scale(total, 1.0 / static_cast<double>(n));
            }
            if (!std::isfinite(loss.value()))
                throw DivergenceError("training loss became non-finite at epoch " +
                                      std::to_string(epoch));
            adam.zero_grad(params);
            loss.backward();
            adam.step(params);
            loss_sum += loss.value();
            ++batches;
        }

        auto val_scores = model_scores(model, samples, val_idx, cfg.canvas, cfg.clamp_lo,
                                       cfg.batch_size);
        std::vector<int> val_labels;
        for (auto i : val_idx) val_labels.push_back(samples[i].label);
        double val_auc = auc(val_scores, val_labels);

        result.history.push_back({epoch, loss_sum / std::max<std::size_t>(1, batches), val_auc});
        result.epochs_run = epoch;
        if (cfg.verbose)
            std::fprintf(stderr, "epoch %zu loss %.4f val_auc %.4f\n", epoch,
                         result.history.back().train_loss, val_auc);

        if (val_auc > result.best_val_auc + 1e-12) {
            result.best_val_auc = val_auc;
            result.best_epoch = epoch;
            since_best = 0;
            snapshot();
            result.threshold = youden_threshold(val_scores, val_labels);
        } else {
            ++since_best;
        }
        if (since_best >= cfg.patience) break;
        if (cfg.stop_on_perfect && result.best_val_auc >= 1.0) break;
    }
    restore();
    model.set_training(false);
    return result;
}

struct EvalOptions {
    std::size_t canvas = 64;
    double clamp_lo = -20.0;
    bool measure_latency = false; // wall-clock varies run to run; off by default
    std::string split_id = "test";
    double threshold = 0.0;
    bool threshold_set = false; // when false, tune Youden on the given validation part
};

// Evaluates one detector over the chosen sample indices. Zero-shot detectors
// tune their threshold on the validation part unless one is supplied.
inline EvalReport evaluate_detector(const std::string& detector_id,
                                    const std::vector<CodeSample>& samples,
                                    const std::vector<std::size_t>& eval_idx,
                                    const std::vector<std::size_t>& val_idx, nn::Model* model,
                                    const EvalOptions& opts) {
    EvalReport report;
    report.detector_id = detector_id;
    report.split_id = opts.split_id;

    auto score_of = [&](const std::vector<std::size_t>& idx) {
        std::vector<double> scores;
        if (is_model_detector(detector_id)) {
            if (!model) throw MissingArtifactError("detector " + detector_id + " needs a checkpoint");
            scores = model_scores(*model, samples, idx, opts.canvas, opts.clamp_lo);
        } else {
            for (auto i : idx) {
                if (!samples[i].scored)
                    throw MissingArtifactError("sample " + samples[i].id + " carries no scores");
                scores.push_back(zero_shot_score(detector_id, *samples[i].scored).score);
            }
        }
        return scores;
    };

    std::vector<double> scores;
    if (opts.measure_latency && is_model_detector(detector_id)) {
        auto t0 = std::chrono::steady_clock::now();
        scores = score_of(eval_idx);
        auto t1 = std::chrono::steady_clock::now();
        report.mean_latency_s =
            std::chrono::duration<double>(t1 - t0).count() / static_cast<double>(eval_idx.size());
    } else {
        scores = score_of(eval_idx);
        if (opts.measure_latency) {
            auto t0 = std::chrono::steady_clock::now();
            score_of(eval_idx);
            auto t1 = std::chrono::steady_clock::now();
            report.mean_latency_s = std::chrono::duration<double>(t1 - t0).count() /
                                    static_cast<double>(eval_idx.size());
        }
    }

    std::vector<int> labels;
    for (auto i : eval_idx) labels.push_back(samples[i].label);

    double threshold = opts.threshold;
    if (!opts.threshold_set) {
        auto val_scores = score_of(val_idx);
        std::vector<int> val_labels;
        for (auto i : val_idx) val_labels.push_back(samples[i].label);
        threshold = youden_threshold(val_scores, val_labels);
    }

    report.auc = auc(scores, labels);
    auto fr = fpr_fnr(scores, labels, threshold);
    report.fpr = fr.fpr;
    report.fnr = fr.fnr;
    report.confusion = fr.confusion;
    report.threshold = threshold;
    if (model) report.flops = model->flops();
    return report;
}

} // namespace codelens
