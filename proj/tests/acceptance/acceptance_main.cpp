// Acceptance suite: runs every criterion end to end and prints one PASS/FAIL
// line per criterion. Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "codelens/attacks.hpp"
#include "codelens/checkpoint.hpp"
#include "codelens/dataset.hpp"
#include "codelens/detect.hpp"
#include "codelens/experiments.hpp"
#include "codelens/flops.hpp"
#include "codelens/metrics.hpp"
#include "codelens/tokenizer.hpp"
#include "codelens/train.hpp"

#include "../support/gradcheck.hpp"
#include "../support/helpers.hpp"

using namespace codelens;
namespace fs = std::filesystem;

namespace {

struct CriterionResult {
    int number = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

std::vector<CriterionResult> g_results;

void record(int number, const std::string& name, bool pass, const std::string& detail) {
    g_results.push_back({number, name, pass, detail});
    std::fprintf(stderr, "[criterion %d] %s: %s (%s)\n", number, name.c_str(),
                 pass ? "pass" : "FAIL", detail.c_str());
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream ss;
    ss.precision(prec);
    ss << std::fixed << v;
    return ss.str();
}

const Tokenizer& tok() {
    static Tokenizer t(
        BpeVocab::from_file((testutil::data_dir() / "cl100k_base.tiktoken").string()));
    return t;
}

struct TrainedPair {
    std::unique_ptr<nn::Model> resnet;
    std::unique_ptr<nn::Model> vit;
    double resnet_auc = 0.0;
    double vit_auc = 0.0;
    std::size_t canvas = 32;
};

TrainedPair g_c1_models; // reused by the latency criterion

double eval_auc(nn::Model& model, const std::vector<CodeSample>& samples,
                const std::vector<std::size_t>& idx, std::size_t canvas) {
    auto scores = model_scores(model, samples, idx, canvas, -20.0);
    std::vector<int> labels;
    for (auto i : idx) labels.push_back(samples[i].label);
    return auc(scores, labels);
}

// ---------------------------------------------------------------------------

// Criterion 1: synthetic end-to-end detection. Small ResNet and ViT reach
// test AUC >= 0.95 on the separability-1.0 dataset (n=2000) with the Adam
// lr 1e-4 + early stopping recipe, inside 15 minutes.
void criterion1() {
    auto t0 = std::chrono::steady_clock::now();
    const std::size_t canvas = 32;
    auto samples = synthesize_dataset(2000, 1.0, 20240901);
    auto split = split_dataset(samples, 20240901);
    auto test_idx = indices_of(samples, split.test);

    TrainConfig cfg;
    cfg.canvas = canvas;
    cfg.seed = 11;
    cfg.lr = 1e-4;
    cfg.max_epochs = 60;
    cfg.patience = 12;

    auto resnet = std::make_unique<nn::Model>(
        nn::Model::create(nn::Model::Kind::resnet, nn::preset_config("resnet", "small", canvas), 101));
    train_model(*resnet, samples, split, cfg);
    double resnet_auc = eval_auc(*resnet, samples, test_idx, canvas);

    auto vit = std::make_unique<nn::Model>(
        nn::Model::create(nn::Model::Kind::vit, nn::preset_config("vit", "small", canvas), 102));
    train_model(*vit, samples, split, cfg);
    double vit_auc = eval_auc(*vit, samples, test_idx, canvas);

    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = resnet_auc >= 0.95 && vit_auc >= 0.95 && elapsed < 900.0;
    record(1, "synthetic end-to-end detection", pass,
           "resnet auc " + fmt(resnet_auc) + ", vit auc " + fmt(vit_auc) + ", runtime " +
               fmt(elapsed, 1) + "s < 900s");

    g_c1_models.resnet = std::move(resnet);
    g_c1_models.vit = std::move(vit);
    g_c1_models.resnet_auc = resnet_auc;
    g_c1_models.vit_auc = vit_auc;
    g_c1_models.canvas = canvas;
}

// Criterion 2: trained models beat every zero-shot baseline by >= 0.03 AUC at
// separability 0.6.
void criterion2() {
    const std::size_t canvas = 32;
    auto samples = synthesize_dataset(1200, 0.6, 20240902);
    auto split = split_dataset(samples, 20240902);
    auto test_idx = indices_of(samples, split.test);
    auto val_idx = indices_of(samples, split.validation);

    TrainConfig cfg;
    cfg.canvas = canvas;
    cfg.seed = 21;
    cfg.lr = 1e-4;
    cfg.max_epochs = 80;
    cfg.patience = 12;

    auto resnet = nn::Model::create(nn::Model::Kind::resnet,
                                    nn::preset_config("resnet", "small", canvas), 201);
    train_model(resnet, samples, split, cfg);
    double resnet_auc = eval_auc(resnet, samples, test_idx, canvas);

    auto vit = nn::Model::create(nn::Model::Kind::vit, nn::preset_config("vit", "small", canvas),
                                 202);
    train_model(vit, samples, split, cfg);
    double vit_auc = eval_auc(vit, samples, test_idx, canvas);

    double best_baseline = 0.0;
    std::string best_id;
    for (const auto& id : zero_shot_detector_ids()) {
        EvalOptions opts;
        auto rep = evaluate_detector(id, samples, test_idx, val_idx, nullptr, opts);
        if (rep.auc > best_baseline) {
            best_baseline = rep.auc;
            best_id = id;
        }
    }
    bool pass = resnet_auc >= best_baseline + 0.03 && vit_auc >= best_baseline + 0.03;
    record(2, "model-vs-baseline ordering", pass,
           "resnet " + fmt(resnet_auc) + ", vit " + fmt(vit_auc) + ", best baseline " + best_id +
               " " + fmt(best_baseline) + " (margin 0.03)");
}

// Criterion 3: every attack reduces or preserves AUC within a +0.02 band and
// code mixing degrades monotonically in the ratio.
void criterion3() {
    const std::size_t canvas = 32;
    const std::uint64_t seed = 20240903;
    auto samples = synthesize_python_dataset(1000, seed, tok());
    auto split = split_dataset(samples, seed);

    TrainConfig cfg;
    cfg.canvas = canvas;
    cfg.seed = 31;
    cfg.lr = 1e-4;
    cfg.max_epochs = 80;
    cfg.patience = 12;
    auto vit = nn::Model::create(nn::Model::Kind::vit, nn::preset_config("vit", "small", canvas),
                                 301);
    train_model(vit, samples, split, cfg);

    // evaluate over the full sample set: attacks touch every llm-labeled
    // sample and the wider pool keeps AUC noise well inside the 0.02 band
    std::vector<std::size_t> all_idx(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) all_idx[i] = i;
    double clean = eval_auc(vit, samples, all_idx, canvas);

    OracleProvider provider(seed * 31 + 7); // the generator's oracle
    auto attacked_auc = [&](const std::string& kind, double ratio) {
        attacks::AttackSpec spec;
        spec.kind = kind;
        spec.ratio = ratio;
        spec.seed = seed + 5;
        auto attacked = attack_dataset(samples, spec, tok(), provider);
        return eval_auc(vit, attacked, all_idx, canvas);
    };

    double mix10 = attacked_auc("mix", 0.10);
    double mix30 = attacked_auc("mix", 0.30);
    double mix50 = attacked_auc("mix", 0.50);
    double rename = attacked_auc("rename", 0.0);
    double dead = attacked_auc("dead_code", 0.0);
    double iprint = attacked_auc("insert_print", 0.0);
    double wrap = attacked_auc("wrap_try_catch", 0.0);

    const double band = 0.02;
    bool within_band = mix10 <= clean + band && mix30 <= clean + band && mix50 <= clean + band &&
                       rename <= clean + band && dead <= clean + band && iprint <= clean + band &&
                       wrap <= clean + band;
    bool monotone = mix30 <= mix10 + band && mix50 <= mix30 + band;
    record(3, "attack direction", within_band && monotone,
           "clean " + fmt(clean) + " | mix " + fmt(mix10) + "/" + fmt(mix30) + "/" + fmt(mix50) +
               " | rename " + fmt(rename) + " dead " + fmt(dead) + " print " + fmt(iprint) +
               " wrap " + fmt(wrap));
}

// Criterion 4: finite-difference gradient checks for every differentiable
// layer, 10 seeded shapes each, max relative error < 1e-4, under 2 minutes.
void criterion4() {
    using namespace codelens::nn;
    using testutil::fill_uniform;
    using testutil::gradcheck;
    auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    auto track = [&](double err) { worst = std::max(worst, err); };

    Rng rng(40);
    for (int trial = 0; trial < 10; ++trial) {
        // linear
        {
            std::size_t n = 1 + rng.below(4), k = 1 + rng.below(5), m = 1 + rng.below(4);
            auto x = Tensor::zeros({n, k}, true);
            auto w = Tensor::zeros({k, m}, true);
            auto b = Tensor::zeros({m}, true);
            fill_uniform(x, rng, -1.0, 1.0);
            fill_uniform(w, rng, -1.0, 1.0);
            fill_uniform(b, rng, -0.5, 0.5);
            track(gradcheck({&x, &w, &b},
                            [&] { return sum(mul(linear(x, w, b), linear(x, w, b))); }));
        }
        // conv
        {
            std::size_t B = 1 + rng.below(2), Cin = 1 + rng.below(2), Cout = 1 + rng.below(2);
            std::size_t H = 3 + rng.below(3), W = 3 + rng.below(3);
            std::size_t stride = 1 + rng.below(2);
            auto x = Tensor::zeros({B, Cin, H, W}, true);
            auto w = Tensor::zeros({Cout, Cin, 3, 3}, true);
            fill_uniform(x, rng, -1.0, 1.0);
            fill_uniform(w, rng, -1.0, 1.0);
            track(gradcheck({&x, &w}, [&] {
                return sum(mul(conv2d(x, w, stride, 1), conv2d(x, w, stride, 1)));
            }));
        }
        // layer norm
        {
            std::size_t rows = 1 + rng.below(4), cols = 2 + rng.below(6);
            auto x = Tensor::zeros({rows, cols}, true);
            auto g = Tensor::zeros({cols}, true);
            auto b = Tensor::zeros({cols}, true);
            fill_uniform(x, rng, -2.0, 2.0);
            fill_uniform(g, rng, 0.5, 1.5);
            fill_uniform(b, rng, -0.5, 0.5);
            auto w = Tensor::zeros({rows, cols});
            fill_uniform(w, rng, -1.0, 1.0);
            track(gradcheck({&x, &g, &b}, [&] { return sum(mul(layer_norm(x, g, b), w)); }));
        }
        // batch norm (evaluation mode)
        {
            std::size_t B = 1 + rng.below(3), C = 1 + rng.below(3);
            std::size_t H = 2 + rng.below(3), W = 2 + rng.below(3);
            auto x = Tensor::zeros({B, C, H, W}, true);
            auto g = Tensor::zeros({C}, true);
            auto b = Tensor::zeros({C}, true);
            fill_uniform(x, rng, -2.0, 2.0);
            fill_uniform(g, rng, 0.5, 1.5);
            fill_uniform(b, rng, -0.5, 0.5);
            BatchNormState st(C);
            for (auto& v : st.running_mean) v = rng.uniform(-0.5, 0.5);
            for (auto& v : st.running_var) v = rng.uniform(0.5, 2.0);
            auto w = Tensor::zeros({B, C, H, W});
            fill_uniform(w, rng, -1.0, 1.0);
            track(gradcheck({&x, &g, &b},
                            [&] { return sum(mul(batch_norm2d(x, g, b, st, false), w)); }));
        }
        // softmax attention
        {
            std::size_t B = 1 + rng.below(2), N = 2 + rng.below(3), D = 4;
            std::size_t heads = trial % 2 ? 2 : 1;
            auto x = Tensor::zeros({B, N, D}, true);
            fill_uniform(x, rng, -1.0, 1.0);
            std::vector<Tensor> w(4), b(4);
            std::vector<Tensor*> all = {&x};
            for (int i = 0; i < 4; ++i) {
                w[i] = Tensor::zeros({D, D}, true);
                b[i] = Tensor::zeros({D}, true);
                fill_uniform(w[i], rng, -0.7, 0.7);
                fill_uniform(b[i], rng, -0.2, 0.2);
                all.push_back(&w[i]);
                all.push_back(&b[i]);
            }
            track(gradcheck(all, [&] {
                auto y = multi_head_attention(x, x, w[0], b[0], w[1], b[1], w[2], b[2], w[3], b[3],
                                              heads);
                return sum(mul(y, y));
            }));
        }
        // global average pooling (2d and token axis)
        {
            std::size_t B = 1 + rng.below(3), C = 1 + rng.below(4);
            std::size_t H = 2 + rng.below(3), W = 2 + rng.below(3);
            auto x = Tensor::zeros({B, C, H, W}, true);
            fill_uniform(x, rng, -1.0, 1.0);
            track(gradcheck({&x}, [&] { return sum(mul(gap2d(x), gap2d(x))); }));
            auto t = Tensor::zeros({B, H, C}, true);
            fill_uniform(t, rng, -1.0, 1.0);
            track(gradcheck({&t}, [&] { return sum(mul(gap_tokens(t), gap_tokens(t))); }));
        }
        // cross entropy
        {
            std::size_t B = 1 + rng.below(6);
            auto logits = Tensor::zeros({B, 2}, true);
            fill_uniform(logits, rng, -2.0, 2.0);
            std::vector<int> labels(B);
            for (auto& y : labels) y = rng.bernoulli(0.5) ? 1 : 0;
            track(gradcheck({&logits}, [&] { return cross_entropy(logits, labels); }));
        }
    }
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = worst < 1e-4 && elapsed < 120.0;
    record(4, "gradient correctness", pass,
           "max relative error " + fmt(worst, 8) + " < 1e-4, runtime " + fmt(elapsed, 1) + "s");
}

// Criterion 5: rank-based AUC equals brute-force pairwise AUC within 1e-9.
void criterion5() {
    Rng rng(50);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 10 + rng.below(191);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool pos = false, neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = std::floor(rng.uniform(-2.0, 2.0) * 8.0) / 8.0;
            labels[i] = rng.bernoulli(0.5) ? 1 : 0;
            (labels[i] ? pos : neg) = true;
        }
        if (!pos) labels[0] = 1;
        if (!neg) labels[n - 1] = 0;

        double fast = auc(scores, labels);
        double wins = 0.0;
        long pairs = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (labels[i] != 1) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (labels[j] != 0) continue;
                ++pairs;
                if (scores[i] > scores[j])
                    wins += 1.0;
                else if (scores[i] == scores[j])
                    wins += 0.5;
            }
        }
        worst = std::max(worst, std::abs(fast - wins / static_cast<double>(pairs)));
    }
    record(5, "auc oracle equivalence", worst < 1e-9,
           "max |rank-based - pairwise| = " + fmt(worst, 12));
}

// Criterion 6: grid fidelity over the real-code corpus in six languages.
void criterion6() {
    auto corpus = testutil::fixtures_dir() / "code_corpus";
    OracleProvider provider(60);
    int files = 0, failures = 0;
    std::string first_failure;
    for (const auto& e : fs::recursive_directory_iterator(corpus)) {
        if (!e.is_regular_file()) continue;
        ++files;
        std::string text = testutil::read_file(e.path());
        auto seq = tok().encode(text);
        auto scored = score_sequence(seq, provider);
        auto grid = build_grid(scored);
        auto runs = tok().split_lines(seq);

        bool ok = grid.n == runs.size();
        // non-pad cells flatten to the scored sequence
        auto flat = grid_non_pad_values(grid);
        ok = ok && flat.values.size() == scored.size();
        for (std::size_t i = 0; ok && i < scored.size(); ++i)
            ok = flat.values[i] == scored.tokens[i].logprob;
        // pads are exactly -100
        for (std::size_t i = 0; ok && i < grid.values.size(); ++i)
            if (grid.tokens[i].empty()) ok = grid.values[i] == -100.0;
        if (!ok) {
            ++failures;
            if (first_failure.empty()) first_failure = e.path().filename().string();
        }
    }
    bool pass = files >= 50 && failures == 0;
    record(6, "grid fidelity", pass,
           std::to_string(files) + " files, " + std::to_string(failures) + " failures" +
               (first_failure.empty() ? "" : " (first: " + first_failure + ")"));
}

// Criterion 7: trained small models average < 50 ms/sample forward on CPU.
void criterion7() {
    if (!g_c1_models.resnet || !g_c1_models.vit) {
        record(7, "inference latency", false, "criterion 1 models unavailable");
        return;
    }
    auto samples = synthesize_dataset(128, 1.0, 70);
    std::vector<std::size_t> idx(samples.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;

    auto measure = [&](nn::Model& m) {
        model_scores(m, samples, idx, g_c1_models.canvas, -20.0); // warm-up
        auto t0 = std::chrono::steady_clock::now();
        model_scores(m, samples, idx, g_c1_models.canvas, -20.0);
        auto t1 = std::chrono::steady_clock::now();
        return std::chrono::duration<double>(t1 - t0).count() / static_cast<double>(idx.size());
    };
    double resnet_ms = measure(*g_c1_models.resnet) * 1e3;
    double vit_ms = measure(*g_c1_models.vit) * 1e3;
    bool pass = resnet_ms < 50.0 && vit_ms < 50.0;
    record(7, "inference latency", pass,
           "resnet " + fmt(resnet_ms, 2) + " ms, vit " + fmt(vit_ms, 2) + " ms (< 50 ms)");
}

// Criterion 8: 4-point model ladder; smallest size within 0.02 AUC of best.
void criterion8() {
    const std::size_t canvas = 32;
    nlohmann::json train_cfg = {{"max_epochs", 60}, {"patience", 12}};
    ExperimentContext ctx;
    ctx.quiet = true;

    bool pass = true;
    std::string detail;
    for (const std::string arch : {"resnet", "vit"}) {
        nlohmann::json spec = {{"kind", "scaling"},
                               {"arch", arch},
                               {"sizes", {"tiny", "small", "medium", "large"}},
                               {"n", 700},
                               {"separability", 1.0},
                               {"seed", 80},
                               {"canvas", canvas},
                               {"train", train_cfg}};
        auto reports = run_scaling_experiment(spec, ctx);
        double smallest = reports.front().auc;
        double best = 0.0;
        std::uint64_t prev_flops = 0;
        bool flops_monotone = true;
        for (const auto& r : reports) {
            best = std::max(best, r.auc);
            if (r.flops <= prev_flops) flops_monotone = false;
            prev_flops = r.flops;
        }
        bool arch_ok = smallest + 0.02 >= best && flops_monotone;
        pass = pass && arch_ok;
        detail += arch + " smallest " + fmt(smallest) + " best " + fmt(best) + "; ";
    }
    record(8, "scaling plateau", pass, detail);
}

// Criterion 9: attack semantic preservation over the runnable fixtures.
void criterion9() {
    auto dir = testutil::fixtures_dir() / "python_runnable";
    std::vector<fs::path> fixtures;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".py") fixtures.push_back(e.path());
    std::sort(fixtures.begin(), fixtures.end());

    auto tmp = fs::temp_directory_path() / "codelens_acceptance_py";
    fs::create_directories(tmp);

    // stdout only: traceback paths and line numbers legitimately shift
    auto run_py = [&](const fs::path& p) {
        return testutil::run_command("timeout 10 python3 '" + p.string() + "' 2>/dev/null");
    };
    auto parses = [&](const std::string& text, const std::string& tag) {
        auto p = tmp / (tag + ".py");
        std::ofstream out(p, std::ios::trunc);
        out << text;
        out.close();
        return testutil::run_command("python3 -c \"import ast; ast.parse(open('" + p.string() +
                                     "').read())\" 2>&1")
                   .status == 0;
    };
    auto filter_marker = [](const std::string& out, const std::string& marker) {
        std::string result;
        std::istringstream ss(out);
        std::string line;
        while (std::getline(ss, line))
            if (line.find(marker) == std::string::npos) result += line + "\n";
        return result;
    };

    const std::uint64_t seed = 90;
    int checked = 0, failures = 0;
    std::string first_failure;
    for (const auto& path : fixtures) {
        std::string src = testutil::read_file(path);
        auto base = run_py(path);
        ++checked;
        for (const std::string kind : {"rename", "dead_code", "wrap_try_catch", "insert_print"}) {
            attacks::AttackSpec spec;
            spec.kind = kind;
            spec.seed = seed;
            std::string attacked = attacks::apply_attack(spec, src);
            bool ok = parses(attacked, path.stem().string() + "_" + kind);
            if (ok) {
                auto p = tmp / (path.stem().string() + "_" + kind + "_run.py");
                std::ofstream out(p, std::ios::trunc);
                out << attacked;
                out.close();
                auto r = run_py(p);
                if (kind == "insert_print") {
                    ok = filter_marker(r.out, attacks::print_marker(seed)) ==
                         filter_marker(base.out, attacks::print_marker(seed));
                } else {
                    ok = r.out == base.out && (r.status == 0) == (base.status == 0);
                }
            }
            if (!ok) {
                ++failures;
                if (first_failure.empty())
                    first_failure = path.filename().string() + ":" + kind;
            }
        }
    }
    bool pass = checked >= 20 && failures == 0;
    record(9, "attack semantic preservation", pass,
           std::to_string(checked) + " fixtures x 4 attacks, " + std::to_string(failures) +
               " failures" + (first_failure.empty() ? "" : " (first: " + first_failure + ")"));
    fs::remove_all(tmp);
}

// Criterion 10: determinism of the CLI dataset/train/eval path.
void criterion10() {
    const std::string cli = CODELENS_CLI_PATH;
    auto dir = fs::temp_directory_path() / "codelens_acceptance_cli";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto p = [&](const std::string& name) { return (dir / name).string(); };

    auto run = [&](const std::string& args) {
        auto r = testutil::run_command(cli + " " + args + " 2>/dev/null");
        return r.status == 0;
    };

    bool ok = true;
    std::string detail;

    // datasets: byte-identical
    ok = ok && run("--seed 42 dataset synthesize --n 80 --separability 0.8 --output " + p("d1.jsonl"));
    ok = ok && run("--seed 42 dataset synthesize --n 80 --separability 0.8 --output " + p("d2.jsonl"));
    bool ds_same = ok && testutil::read_file(p("d1.jsonl")) == testutil::read_file(p("d2.jsonl"));
    detail += std::string("dataset bytes ") + (ds_same ? "identical" : "DIFFER");

    // splits: byte-identical
    ok = ok && run("--seed 7 dataset split --input " + p("d1.jsonl") + " --output " + p("s1.json"));
    ok = ok && run("--seed 7 dataset split --input " + p("d1.jsonl") + " --output " + p("s2.json"));
    bool sp_same = ok && testutil::read_file(p("s1.json")) == testutil::read_file(p("s2.json"));
    detail += std::string(", split ") + (sp_same ? "identical" : "DIFFER");

    // train twice (single-threaded), eval twice: value-identical reports
    std::string train_args = "--seed 13 --canvas 32x32 --threads 1 train --data " + p("d1.jsonl") +
                             " --split " + p("s1.json") +
                             " --model resnet --size tiny --epochs 2 --patience 2";
    ok = ok && run(train_args + " --output " + p("m1.ck"));
    ok = ok && run(train_args + " --output " + p("m2.ck"));
    bool ck_same = ok && testutil::read_file(p("m1.ck")) == testutil::read_file(p("m2.ck"));
    detail += std::string(", checkpoint ") + (ck_same ? "identical" : "DIFFER");

    std::string eval_args = "--seed 13 --canvas 32x32 --format json eval --data " + p("d1.jsonl") +
                            " --split " + p("s1.json") + " --detector all --checkpoint ";
    ok = ok && run(eval_args + p("m1.ck") + " --output " + p("r1.jsonl"));
    ok = ok && run(eval_args + p("m2.ck") + " --output " + p("r2.jsonl"));
    bool rep_same = ok && testutil::read_file(p("r1.jsonl")) == testutil::read_file(p("r2.jsonl")) &&
                    !testutil::read_file(p("r1.jsonl")).empty();
    detail += std::string(", reports ") + (rep_same ? "identical" : "DIFFER");

    record(10, "cli determinism", ok && ds_same && sp_same && ck_same && rep_same, detail);
    fs::remove_all(dir);
}

} // namespace

int main(int argc, char** argv) {
    unsigned hw = std::thread::hardware_concurrency();
    codelens::nn::set_num_threads(static_cast<int>(std::min(4u, hw ? hw : 1u)));

    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
    auto wanted = [&](int n) {
        return only.empty() || std::find(only.begin(), only.end(), n) != only.end();
    };

    // cheap criteria first; criterion 7 reuses the models trained in 1
    if (wanted(4)) criterion4();
    if (wanted(5)) criterion5();
    if (wanted(6)) criterion6();
    if (wanted(9)) criterion9();
    if (wanted(10)) criterion10();
    if (wanted(2)) criterion2();
    if (wanted(3)) criterion3();
    if (wanted(8)) criterion8();
    if (wanted(1)) criterion1();
    if (wanted(7)) criterion7();

    std::sort(g_results.begin(), g_results.end(),
              [](const CriterionResult& a, const CriterionResult& b) { return a.number < b.number; });
    bool all_pass = true;
    for (const auto& r : g_results) {
        std::printf("%s criterion %d: %s (%s)\n", r.pass ? "PASS" : "FAIL", r.number,
                    r.name.c_str(), r.detail.c_str());
        all_pass = all_pass && r.pass;
    }
    return all_pass ? 0 : 1;
}
