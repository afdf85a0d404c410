#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "codelens/dataset.hpp"
#include "codelens/train.hpp"

namespace codelens {

// Renders the human-readable report table.
inline std::string report_table(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    out << std::left << std::setw(24) << "detector" << std::setw(26) << "split" << std::right
        << std::setw(8) << "auc" << std::setw(8) << "fpr" << std::setw(8) << "fnr" << std::setw(14)
        << "flops" << std::setw(12) << "latency_s" << "\n";
    out << std::string(100, '-') << "\n";
    for (const auto& r : reports) {
        out << std::left << std::setw(24) << r.detector_id << std::setw(26) << r.split_id
            << std::right << std::fixed << std::setprecision(4) << std::setw(8) << r.auc
            << std::setw(8) << r.fpr << std::setw(8) << r.fnr << std::setw(14) << r.flops
            << std::setw(12) << std::setprecision(6) << r.mean_latency_s << "\n";
    }
    return out.str();
}

inline void write_reports(const std::string& path, const std::vector<EvalReport>& reports,
                          const nlohmann::json& provenance) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw Error("cannot write reports: " + path);
    for (const auto& r : reports) {
        auto j = r.to_json();
        j["provenance"] = provenance;
        out << j.dump() << "\n";
    }
}

struct ExperimentContext {
    const Tokenizer* tokenizer = nullptr; // needed by the attack grid
    std::string out_dir;                  // reports and checkpoints land here
    bool quiet = false;
};

namespace detail_exp {

inline TrainConfig train_config_from(const nlohmann::json& spec, std::size_t canvas,
                                     std::uint64_t seed) {
    TrainConfig cfg;
    cfg.canvas = canvas;
    cfg.seed = seed;
    if (spec.contains("train")) {
        const auto& t = spec["train"];
        cfg.batch_size = t.value("batch_size", cfg.batch_size);
        cfg.max_epochs = t.value("max_epochs", cfg.max_epochs);
        cfg.patience = t.value("patience", cfg.patience);
        cfg.lr = t.value("lr", cfg.lr);
    }
    return cfg;
}

inline std::vector<CodeSample> dataset_for(const nlohmann::json& spec,
                                           const ExperimentContext& ctx) {
    if (spec.contains("dataset")) {
        std::string path = spec["dataset"];
        if (!std::filesystem::exists(path))
            throw MissingArtifactError("experiment dataset not found: " + path);
        return ingest(path);
    }
    std::uint64_t seed = spec.value("seed", 1u);
    std::size_t n = spec.value("n", 400u);
    if (spec.value("style", "grid") == "python") {
        if (!ctx.tokenizer) throw Error("python-style dataset needs a tokenizer");
        return synthesize_python_dataset(n, seed, *ctx.tokenizer);
    }
    return synthesize_dataset(n, spec.value("separability", 1.0), seed);
}

} // namespace detail_exp

// Scaling sweep: a size ladder per architecture; reports AUC and FLOPs per
// size on the test split.
inline std::vector<EvalReport> run_scaling_experiment(const nlohmann::json& spec,
                                                      const ExperimentContext& ctx) {
    std::uint64_t seed = spec.value("seed", 1u);
    std::size_t canvas = spec.value("canvas", 32u);
    auto samples = detail_exp::dataset_for(spec, ctx);
    auto split = split_dataset(samples, seed);
    auto test_idx = indices_of(samples, split.test);
    auto val_idx = indices_of(samples, split.validation);

    std::string arch = spec.value("arch", "resnet");
    std::vector<std::string> sizes = spec.value("sizes",
        std::vector<std::string>{"tiny", "small", "medium", "default"});

    std::vector<EvalReport> reports;
    for (const auto& size : sizes) {
        auto model = nn::Model::create(nn::Model::kind_from_string(arch),
                                       nn::preset_config(arch, size, canvas), seed + 17);
        auto cfg = detail_exp::train_config_from(spec, canvas, seed);
        auto tr = train_model(model, samples, split, cfg);
        EvalOptions opts;
        opts.canvas = canvas;
        opts.split_id = "test";
        opts.threshold = tr.threshold;
        opts.threshold_set = true;
        auto rep = evaluate_detector(arch, samples, test_idx, val_idx, &model, opts);
        rep.detector_id = arch + "-" + size;
        reports.push_back(rep);
        if (!ctx.quiet)
            std::cerr << "scaling " << rep.detector_id << " auc " << rep.auc << " flops "
                      << rep.flops << "\n";
    }
    return reports;
}

// Length study: evaluates detectors on test samples bucketed by token count.
inline std::vector<EvalReport> run_length_experiment(const nlohmann::json& spec,
                                                     const ExperimentContext& ctx) {
    std::uint64_t seed = spec.value("seed", 2u);
    std::size_t canvas = spec.value("canvas", 64u);
    auto samples = detail_exp::dataset_for(spec, ctx);
    auto split = split_dataset(samples, seed);
    auto test_idx = indices_of(samples, split.test);
    auto val_idx = indices_of(samples, split.validation);

    std::vector<std::size_t> edges = spec.value("buckets", std::vector<std::size_t>{100, 200, 400});

    std::vector<EvalReport> reports;
    std::vector<std::string> detectors = spec.value("detectors",
        std::vector<std::string>{"logp", "vit", "resnet"});

    std::map<std::string, std::unique_ptr<nn::Model>> models;
    for (const auto& d : detectors) {
        if (!is_model_detector(d)) continue;
        auto model = std::make_unique<nn::Model>(nn::Model::create(
            nn::Model::kind_from_string(d), nn::preset_config(d, spec.value("size", "small"), canvas),
            seed + 23));
        auto cfg = detail_exp::train_config_from(spec, canvas, seed);
        train_model(*model, samples, split, cfg);
        models.emplace(d, std::move(model));
    }

    auto bucket_name = [&](std::size_t lo, std::size_t hi) {
        if (hi == 0) return "test:len(" + std::to_string(lo) + ",inf)";
        return "test:len(" + std::to_string(lo) + "," + std::to_string(hi) + "]";
    };

    for (std::size_t b = 0; b <= edges.size(); ++b) {
        std::size_t lo = b == 0 ? 0 : edges[b - 1];
        std::size_t hi = b == edges.size() ? 0 : edges[b];
        std::vector<std::size_t> bucket;
        for (auto i : test_idx) {
            std::size_t len = samples[i].token_count();
            if (len > lo && (hi == 0 || len <= hi)) bucket.push_back(i);
        }
        // a usable bucket needs both classes
        int pos = 0, neg = 0;
        for (auto i : bucket) (samples[i].label ? pos : neg)++;
        if (pos == 0 || neg == 0) continue;
        for (const auto& d : detectors) {
            EvalOptions opts;
            opts.canvas = canvas;
            opts.split_id = bucket_name(lo, hi);
            auto rep = evaluate_detector(d, samples, bucket, val_idx,
                                         models.count(d) ? models[d].get() : nullptr, opts);
            reports.push_back(rep);
        }
    }
    return reports;
}

// Attack grid: trains a detector on clean oracle-scored python programs, then
// re-scores attacked copies of the LLM-labeled test samples.
inline std::vector<EvalReport> run_attack_experiment(const nlohmann::json& spec,
                                                     const ExperimentContext& ctx) {
    if (!ctx.tokenizer) throw Error("attack experiment needs a tokenizer");
    std::uint64_t seed = spec.value("seed", 3u);
    std::size_t canvas = spec.value("canvas", 32u);

    nlohmann::json ds_spec = spec;
    ds_spec["style"] = "python";
    auto samples = detail_exp::dataset_for(ds_spec, ctx);
    auto split = split_dataset(samples, seed);
    auto test_idx = indices_of(samples, split.test);
    auto val_idx = indices_of(samples, split.validation);

    OracleProvider provider(seed * 31 + 7); // same oracle the generator used

    std::vector<std::string> detectors = spec.value("detectors",
        std::vector<std::string>{"logp", "vit"});
    std::map<std::string, std::unique_ptr<nn::Model>> models;
    for (const auto& d : detectors) {
        if (!is_model_detector(d)) continue;
        auto model = std::make_unique<nn::Model>(nn::Model::create(
            nn::Model::kind_from_string(d), nn::preset_config(d, spec.value("size", "small"), canvas),
            seed + 29));
        auto cfg = detail_exp::train_config_from(spec, canvas, seed);
        train_model(*model, samples, split, cfg);
        models.emplace(d, std::move(model));
    }

    std::vector<EvalReport> reports;
    auto eval_on = [&](const std::vector<CodeSample>& data, const std::string& split_id) {
        auto idx = indices_of(data, split.test);
        auto vidx = indices_of(data, split.validation);
        for (const auto& d : detectors) {
            EvalOptions opts;
            opts.canvas = canvas;
            opts.split_id = split_id;
            auto rep = evaluate_detector(d, data, idx, vidx,
                                         models.count(d) ? models[d].get() : nullptr, opts);
            reports.push_back(rep);
            if (!ctx.quiet)
                std::cerr << "attack " << split_id << " " << d << " auc " << rep.auc << "\n";
        }
    };

    eval_on(samples, "test:clean");

    nlohmann::json attacks_spec = spec.value("attacks", nlohmann::json::array());
    if (attacks_spec.empty()) {
        attacks_spec = nlohmann::json::array();
        for (double r : {0.1, 0.3, 0.5})
            attacks_spec.push_back({{"kind", "mix"}, {"ratio", r}});
        for (const char* k : {"rename", "dead_code", "insert_print", "wrap_try_catch"})
            attacks_spec.push_back({{"kind", k}});
    }
    for (const auto& a : attacks_spec) {
        attacks::AttackSpec s;
        s.kind = a.at("kind");
        s.ratio = a.value("ratio", 0.3);
        s.seed = seed + 101;
        auto attacked = attack_dataset(samples, s, *ctx.tokenizer, provider);
        std::string tag = "test:attack:" + s.kind;
        if (s.kind == "mix") {
            std::ostringstream r;
            r << std::fixed << std::setprecision(2) << s.ratio;
            tag += ":" + r.str();
        }
        eval_on(attacked, tag);
    }
    return reports;
}

// Timing study: mean wall-clock forward latency per sample, scoring excluded.
inline std::vector<EvalReport> run_timing_experiment(const nlohmann::json& spec,
                                                     const ExperimentContext& ctx) {
    std::uint64_t seed = spec.value("seed", 4u);
    std::size_t canvas = spec.value("canvas", 64u);
    auto samples = detail_exp::dataset_for(spec, ctx);
    auto split = split_dataset(samples, seed);
    auto test_idx = indices_of(samples, split.test);
    auto val_idx = indices_of(samples, split.validation);

    std::vector<EvalReport> reports;
    for (const auto& d : spec.value("detectors", std::vector<std::string>{"resnet", "vit"})) {
        auto model = nn::Model::create(nn::Model::kind_from_string(d),
                                       nn::preset_config(d, spec.value("size", "small"), canvas),
                                       seed + 41);
        auto cfg = detail_exp::train_config_from(spec, canvas, seed);
        cfg.max_epochs = spec.value("timing_epochs", 1u); // timing needs a trained-shape model
        train_model(model, samples, split, cfg);
        EvalOptions opts;
        opts.canvas = canvas;
        opts.split_id = "test:timing";
        opts.measure_latency = true;
        reports.push_back(evaluate_detector(d, samples, test_idx, val_idx, &model, opts));
    }
    return reports;
}

inline std::vector<EvalReport> run_experiment(const nlohmann::json& spec,
                                              const ExperimentContext& ctx) {
    std::string kind = spec.at("kind");
    std::vector<EvalReport> reports;
    if (kind == "scaling")
        reports = run_scaling_experiment(spec, ctx);
    else if (kind == "length_buckets")
        reports = run_length_experiment(spec, ctx);
    else if (kind == "attack_grid")
        reports = run_attack_experiment(spec, ctx);
    else if (kind == "timing")
        reports = run_timing_experiment(spec, ctx);
    else
        throw Error("unknown experiment kind: " + kind);

    if (!ctx.out_dir.empty()) {
        std::filesystem::create_directories(ctx.out_dir);
        write_reports((std::filesystem::path(ctx.out_dir) / (kind + "_reports.jsonl")).string(),
                      reports, spec);
    }
    return reports;
}

} // namespace codelens
