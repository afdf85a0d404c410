#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "codelens/attacks.hpp"
#include "codelens/checkpoint.hpp"
#include "codelens/dataset.hpp"
#include "codelens/detect.hpp"
#include "codelens/experiments.hpp"
#include "codelens/grid.hpp"
#include "codelens/scorer.hpp"
#include "codelens/scorer_remote.hpp"
#include "codelens/tokenizer.hpp"
#include "codelens/train.hpp"
#include "codelens/vocab_embedded.hpp"

namespace {

using namespace codelens;
using nlohmann::json;

struct GlobalOpts {
    std::string provider = "oracle";
    std::string endpoint = "http://127.0.0.1:8080";
    std::string model_name = "gpt-3.5-turbo-instruct";
    std::string cache_dir;
    std::string vocab_path;
    std::string canvas = "64x64";
    std::uint64_t seed = 1;
    std::string format = "table";
    int threads = 1;

    std::size_t canvas_h() const { return parse_canvas().first; }

    std::pair<std::size_t, std::size_t> parse_canvas() const {
        auto x = canvas.find('x');
        if (x == std::string::npos)
            throw Error("bad --canvas, expected HxW: " + canvas);
        return {std::stoul(canvas.substr(0, x)), std::stoul(canvas.substr(x + 1))};
    }
};

Tokenizer load_tokenizer(const GlobalOpts& g) {
    if (!g.vocab_path.empty()) return Tokenizer(BpeVocab::from_file(g.vocab_path));
    if (const char* env = std::getenv("CODELENS_VOCAB_PATH"))
        return Tokenizer(BpeVocab::from_file(env));
    return Tokenizer(BpeVocab::from_string(embedded_cl100k_vocab()));
}

std::unique_ptr<ScoringProvider> make_provider(const GlobalOpts& g) {
    if (g.provider == "oracle") return std::make_unique<OracleProvider>(g.seed);
    if (g.provider == "remote") {
        RemoteSettings st;
        st.endpoint = g.endpoint;
        st.model = g.model_name;
        return std::make_unique<RemoteProvider>(st);
    }
    throw Error("unknown provider: " + g.provider + " (expected oracle or remote)");
}

std::string read_input(const std::string& path) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read input: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool is_jsonl(const std::string& path) {
    return path.size() > 6 && path.substr(path.size() - 6) == ".jsonl";
}

void score_sample_into(CodeSample& s, const Tokenizer& tok, ScoringProvider& provider,
                       ScoreCache* cache) {
    auto toks = tok.encode(s.source);
    ScoreOptions opts;
    opts.cache = cache;
    auto scored = score_sequence(toks, provider, opts);
    s.grid = build_grid(scored);
    s.seq = to_seq_vector(scored);
    s.scored = std::move(scored);
}

int cmd_score(const GlobalOpts& g, const std::string& input, const std::string& output,
              const std::string& language, const std::string& id) {
    auto tok = load_tokenizer(g);
    auto provider = make_provider(g);
    std::unique_ptr<ScoreCache> cache;
    if (!g.cache_dir.empty()) cache = std::make_unique<ScoreCache>(g.cache_dir);

    std::vector<CodeSample> samples;
    if (is_jsonl(input)) {
        samples = ingest(input);
    } else {
        CodeSample s;
        s.id = id.empty() ? (input == "-" ? "stdin" : std::filesystem::path(input).stem().string())
                          : id;
        s.source = read_input(input);
        s.language = language;
        s.label = 0;
        samples.push_back(std::move(s));
    }
    for (auto& s : samples) score_sample_into(s, tok, *provider, cache.get());

    if (output.empty() || output == "-") {
        for (const auto& s : samples) std::cout << sample_to_json(s).dump() << "\n";
    } else {
        write_jsonl(output, samples);
    }
    return 0;
}

int cmd_detect(const GlobalOpts& g, const std::string& input, const std::string& detector,
               const std::string& checkpoint, double threshold, bool threshold_given) {
    auto samples = ingest(input);
    std::unique_ptr<nn::Model> model;
    double default_threshold = 0.0;
    if (is_model_detector(detector)) {
        if (checkpoint.empty())
            throw MissingArtifactError("detector '" + detector + "' requires --checkpoint");
        auto loaded = nn::load_checkpoint(checkpoint);
        model = std::make_unique<nn::Model>(std::move(loaded.model));
        if (nn::Model::kind_to_string(model->kind()) != detector)
            throw Error("checkpoint holds a " + nn::Model::kind_to_string(model->kind()) +
                        " model, not " + detector);
        default_threshold = loaded.metadata.value("threshold", 0.0);
    } else if (!is_zero_shot_detector(detector)) {
        throw Error("unknown detector: " + detector);
    }
    double t = threshold_given ? threshold : default_threshold;

    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        DetectorScore score;
        if (model) {
            std::vector<std::size_t> one = {i};
            std::size_t canvas = model->canvas_size() ? model->canvas_size() : g.canvas_h();
            auto sc = model_scores(*model, samples, one, canvas, -20.0);
            score = {sc[0], sc[0], detector};
        } else {
            if (!s.scored)
                throw MissingArtifactError("sample " + s.id + " has no scores; run score first");
            score = zero_shot_score(detector, *s.scored);
        }
        auto verdict = classify(score, t);
        if (g.format == "json") {
            json j = {{"id", s.id},
                      {"score", score.score},
                      {"raw", score.raw},
                      {"detector", detector},
                      {"threshold", t},
                      {"label", verdict.label == Label::llm ? "llm" : "human"}};
            std::cout << j.dump() << "\n";
        } else {
            std::cout << s.id << "\t" << score.score << "\t"
                      << (verdict.label == Label::llm ? "llm" : "human") << "\t" << detector
                      << "\n";
        }
    }
    return 0;
}

int cmd_dataset_synthesize(const GlobalOpts& g, std::size_t n, double separability,
                           const std::string& style, const std::string& output) {
    std::vector<CodeSample> samples;
    if (style == "python") {
        auto tok = load_tokenizer(g);
        samples = synthesize_python_dataset(n, g.seed, tok);
    } else if (style == "grid") {
        samples = synthesize_dataset(n, separability, g.seed);
    } else {
        throw Error("unknown dataset style: " + style);
    }
    write_jsonl(output, samples);
    std::cerr << "wrote " << samples.size() << " samples to " << output << "\n";
    return 0;
}

int cmd_dataset_split(const GlobalOpts& g, const std::string& input, const std::string& output,
                      const std::string& ratios) {
    auto samples = ingest(input);
    double r[3] = {0.8, 0.1, 0.1};
    if (!ratios.empty()) {
        std::istringstream ss(ratios);
        std::string part;
        int i = 0;
        while (std::getline(ss, part, ',') && i < 3) r[i++] = std::stod(part);
        if (i != 3) throw Error("--ratios expects three comma-separated numbers");
    }
    auto split = split_dataset(samples, g.seed, r[0], r[1], r[2]);
    std::ofstream out(output, std::ios::trunc | std::ios::binary);
    if (!out) throw Error("cannot write split: " + output);
    out << split.to_json().dump(1) << "\n";
    std::cerr << "split " << samples.size() << " samples " << split.train.size() << "/"
              << split.validation.size() << "/" << split.test.size() << "\n";
    return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& data, const std::string& split_path,
              const std::string& kind, const std::string& size, const std::string& output,
              TrainConfig cfg) {
    auto samples = ingest(data);
    DatasetSplit split;
    if (!split_path.empty()) {
        std::ifstream in(split_path);
        if (!in) throw MissingArtifactError("cannot open split: " + split_path);
        split = DatasetSplit::from_json(json::parse(in));
    } else {
        split = split_dataset(samples, g.seed);
    }
    cfg.seed = g.seed;
    cfg.canvas = g.canvas_h();
    auto model = nn::Model::create(nn::Model::kind_from_string(kind),
                                   nn::preset_config(kind, size, cfg.canvas), g.seed + 17);
    auto result = train_model(model, samples, split, cfg);

    json meta = {{"threshold", result.threshold},
                 {"best_val_auc", result.best_val_auc},
                 {"best_epoch", result.best_epoch},
                 {"epochs_run", result.epochs_run},
                 {"seed", g.seed},
                 {"size", size},
                 {"dataset", data}};
    nn::save_checkpoint(output, model, meta);
    std::cerr << "trained " << kind << "-" << size << ": best val auc " << result.best_val_auc
              << " after " << result.epochs_run << " epochs; checkpoint " << output << "\n";
    return 0;
}

int cmd_eval(const GlobalOpts& g, const std::string& data, const std::string& split_path,
             const std::string& detector, const std::vector<std::string>& checkpoints,
             const std::string& output, const std::string& experiment,
             const std::string& out_dir, bool latency) {
    if (!experiment.empty()) {
        std::ifstream in(experiment);
        if (!in) throw MissingArtifactError("cannot open experiment spec: " + experiment);
        json spec = json::parse(in);
        auto tok = load_tokenizer(g);
        ExperimentContext ctx;
        ctx.tokenizer = &tok;
        ctx.out_dir = out_dir;
        auto reports = run_experiment(spec, ctx);
        if (g.format == "json")
            for (const auto& r : reports) std::cout << r.to_json().dump() << "\n";
        else
            std::cout << report_table(reports);
        return 0;
    }
    if (data.empty()) throw Error("eval requires --data or --experiment");

    auto samples = ingest(data);
    DatasetSplit split;
    if (!split_path.empty()) {
        std::ifstream in(split_path);
        if (!in) throw MissingArtifactError("cannot open split: " + split_path);
        split = DatasetSplit::from_json(json::parse(in));
    } else {
        split = split_dataset(samples, g.seed);
    }
    auto test_idx = indices_of(samples, split.test);
    auto val_idx = indices_of(samples, split.validation);

    std::map<std::string, std::unique_ptr<nn::Model>> models;
    std::map<std::string, double> thresholds;
    for (const auto& path : checkpoints) {
        auto loaded = nn::load_checkpoint(path);
        std::string kind = nn::Model::kind_to_string(loaded.model.kind());
        thresholds[kind] = loaded.metadata.value("threshold", 0.0);
        models.emplace(kind, std::make_unique<nn::Model>(std::move(loaded.model)));
    }

    std::vector<std::string> detectors;
    if (detector == "all") {
        detectors = zero_shot_detector_ids();
        for (auto& [kind, m] : models) detectors.push_back(kind);
    } else {
        std::istringstream ss(detector);
        std::string part;
        while (std::getline(ss, part, ',')) detectors.push_back(part);
    }

    std::vector<EvalReport> reports;
    for (const auto& d : detectors) {
        EvalOptions opts;
        opts.canvas = g.canvas_h();
        opts.measure_latency = latency;
        nn::Model* m = nullptr;
        if (is_model_detector(d)) {
            auto it = models.find(d);
            if (it == models.end())
                throw MissingArtifactError("detector '" + d + "' requires a --checkpoint");
            m = it->second.get();
            if (m->canvas_size()) opts.canvas = m->canvas_size();
            opts.threshold = thresholds[d];
            opts.threshold_set = true;
        }
        reports.push_back(evaluate_detector(d, samples, test_idx, val_idx, m, opts));
    }

    if (!output.empty()) write_reports(output, reports, {{"data", data}, {"seed", g.seed}});
    if (g.format == "json")
        for (const auto& r : reports) std::cout << r.to_json().dump() << "\n";
    else
        std::cout << report_table(reports);
    return 0;
}

int cmd_attack(const GlobalOpts& g, const std::string& kind, const std::string& input,
               const std::string& output, double ratio, const std::string& donor_path,
               const std::string& language) {
    attacks::AttackSpec spec;
    spec.kind = kind;
    spec.ratio = ratio;
    spec.seed = g.seed;
    spec.language = language;

    if (is_jsonl(input)) {
        // batch mode over a dataset: attack llm-labeled samples, rescore
        auto samples = ingest(input);
        auto tok = load_tokenizer(g);
        auto provider = make_provider(g);
        auto attacked = attack_dataset(samples, spec, tok, *provider);
        if (output.empty()) throw Error("batch attack requires --output");
        write_jsonl(output, attacked);
        std::cerr << "attacked dataset written to " << output << "\n";
        return 0;
    }
    std::string source = read_input(input);
    std::string donor;
    if (spec.kind == "mix") {
        if (donor_path.empty()) throw Error("mix attack requires --donor");
        donor = read_input(donor_path);
    }
    auto result = attacks::apply_attack(spec, source, donor);
    if (output.empty() || output == "-") {
        std::cout << result;
    } else {
        std::ofstream out(output, std::ios::trunc | std::ios::binary);
        out << result;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    GlobalOpts g;
    CLI::App app{"codelens: LLM-generated code detection via token log-probability maps"};
    app.require_subcommand(1);
    app.add_option("--provider", g.provider, "scoring provider: oracle | remote");
    app.add_option("--endpoint", g.endpoint, "remote provider endpoint URL");
    app.add_option("--model", g.model_name, "remote provider model name");
    app.add_option("--cache-dir", g.cache_dir, "score cache directory");
    app.add_option("--vocab", g.vocab_path,
                   "vocabulary file (default: CODELENS_VOCAB_PATH or embedded)");
    app.add_option("--canvas", g.canvas, "canvas size HxW (default 64x64)");
    app.add_option("--seed", g.seed, "random seed");
    app.add_option("--format", g.format, "output format: table | json");
    app.add_option("--threads", g.threads, "intra-op worker threads (results identical)");

    std::string in_path = "-", out_path, language = "python", sample_id;
    auto* score = app.add_subcommand("score", "score code into log-probability records");
    score->add_option("--input", in_path, "source file, dataset .jsonl, or - for stdin");
    score->add_option("--output", out_path, "output JSONL (default stdout)");
    score->add_option("--language", language, "language tag for raw source input");
    score->add_option("--id", sample_id, "sample id for raw source input");

    std::string det_input, det_id = "logp", det_ckpt;
    double det_threshold = 0.0;
    auto* detect = app.add_subcommand("detect", "classify scored samples");
    detect->add_option("--input", det_input, "scored dataset JSONL")->required();
    detect->add_option("--detector", det_id,
                       "detector id (logp, entropy, rank, logrank, lrr, vit, resnet, seq)");
    detect->add_option("--checkpoint", det_ckpt, "model checkpoint for model detectors");
    auto* thr_opt = detect->add_option("--threshold", det_threshold, "decision threshold");

    auto* dataset = app.add_subcommand("dataset", "synthesize or split datasets");
    dataset->require_subcommand(1);
    std::size_t ds_n = 200;
    double ds_sep = 1.0;
    std::string ds_style = "grid", ds_out = "dataset.jsonl";
    auto* synth = dataset->add_subcommand("synthesize", "generate a synthetic dataset");
    synth->add_option("--n", ds_n, "sample count");
    synth->add_option("--separability", ds_sep, "class separability in [0,1] (grid style)");
    synth->add_option("--style", ds_style, "grid | python");
    synth->add_option("--output", ds_out, "output JSONL")->required();
    std::string sp_in, sp_out = "split.json", sp_ratios;
    auto* splitcmd = dataset->add_subcommand("split", "stratified train/validation/test split");
    splitcmd->add_option("--input", sp_in, "dataset JSONL")->required();
    splitcmd->add_option("--output", sp_out, "output split JSON")->required();
    splitcmd->add_option("--ratios", sp_ratios, "comma-separated ratios (default 0.8,0.1,0.1)");

    std::string tr_data, tr_split, tr_kind = "resnet", tr_size = "small", tr_out = "model.ck";
    TrainConfig tr_cfg;
    auto* train = app.add_subcommand("train", "train a classifier");
    train->add_option("--data", tr_data, "dataset JSONL")->required();
    train->add_option("--split", tr_split, "split JSON (default: fresh split from --seed)");
    train->add_option("--model", tr_kind, "vit | resnet | seq");
    train->add_option("--size", tr_size, "tiny | small | medium | default");
    train->add_option("--output", tr_out, "checkpoint path")->required();
    train->add_option("--epochs", tr_cfg.max_epochs, "max epochs");
    train->add_option("--patience", tr_cfg.patience, "early stopping patience");
    train->add_option("--batch-size", tr_cfg.batch_size, "mini-batch size");
    train->add_option("--lr", tr_cfg.lr, "Adam learning rate");

    std::string ev_data, ev_split, ev_detector = "all", ev_out, ev_exp, ev_outdir = "reports";
    std::vector<std::string> ev_ckpts;
    bool ev_latency = false;
    auto* eval = app.add_subcommand("eval", "evaluate detectors or run an experiment");
    eval->add_option("--data", ev_data, "dataset JSONL");
    eval->add_option("--split", ev_split, "split JSON");
    eval->add_option("--detector", ev_detector, "all or comma-separated detector ids");
    eval->add_option("--checkpoint", ev_ckpts, "model checkpoint (repeatable)");
    eval->add_option("--output", ev_out, "write EvalReport JSONL here");
    eval->add_option("--experiment", ev_exp,
                     "experiment spec JSON (scaling, length_buckets, attack_grid, timing)");
    eval->add_option("--out-dir", ev_outdir, "experiment artifact directory");
    eval->add_flag("--latency", ev_latency, "measure mean per-sample latency");

    std::string at_kind = "mix", at_in, at_out, at_donor, at_lang = "python";
    double at_ratio = 0.3;
    auto* attack = app.add_subcommand("attack", "apply an evasion transformation");
    attack->add_option("--kind", at_kind,
                       "mix | rename | dead_code | insert_print | wrap_try_catch");
    attack->add_option("--input", at_in, "source file or dataset .jsonl")->required();
    attack->add_option("--output", at_out, "output path (default stdout)");
    attack->add_option("--ratio", at_ratio, "mix ratio");
    attack->add_option("--donor", at_donor, "human donor file for mix");
    attack->add_option("--language", at_lang, "source language");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        codelens::nn::set_num_threads(g.threads);
        if (*score) return cmd_score(g, in_path, out_path, language, sample_id);
        if (*detect)
            return cmd_detect(g, det_input, det_id, det_ckpt, det_threshold, thr_opt->count() > 0);
        if (*dataset) {
            if (*synth) return cmd_dataset_synthesize(g, ds_n, ds_sep, ds_style, ds_out);
            if (*splitcmd) return cmd_dataset_split(g, sp_in, sp_out, sp_ratios);
        }
        if (*train) return cmd_train(g, tr_data, tr_split, tr_kind, tr_size, tr_out, tr_cfg);
        if (*eval)
            return cmd_eval(g, ev_data, ev_split, ev_detector, ev_ckpts, ev_out, ev_exp, ev_outdir,
                            ev_latency);
        if (*attack) return cmd_attack(g, at_kind, at_in, at_out, at_ratio, at_donor, at_lang);
        std::cerr << "no subcommand\n";
        return 1;
    } catch (const ProviderError& e) {
        std::cerr << "provider error: " << e.what() << "\n";
        return 3;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return 2;
    } catch (const MissingArtifactError& e) {
        std::cerr << "missing artifact: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
