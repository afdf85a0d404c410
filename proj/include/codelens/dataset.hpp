#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "codelens/attacks.hpp"
#include "codelens/error.hpp"
#include "codelens/grid.hpp"
#include "codelens/rng.hpp"
#include "codelens/scorer.hpp"
#include "codelens/tokenizer.hpp"

namespace codelens {

struct CodeSample {
    std::string id;
    std::string source;
    std::string language; // c, cpp, go, java, python, ruby or "synthetic"
    int label = 0;        // 1 llm-generated, 0 human-written
    std::string generator;
    std::optional<ScoredSeq> scored;
    std::optional<LogProbGrid> grid;
    std::optional<SeqVector> seq;
    nlohmann::json extra = nlohmann::json::object(); // provenance (attack fields etc.)

    std::size_t token_count() const {
        if (scored) return scored->size();
        if (seq) return seq->size();
        if (grid) {
            std::size_t c = 0;
            for (std::size_t i = 0; i < grid->values.size(); ++i)
                if (grid->values[i] != grid->pad_value) ++c;
            return c;
        }
        return 0;
    }
};

// ---------------------------------------------------------------------------
// JSONL serialization
// ---------------------------------------------------------------------------

inline nlohmann::json sample_to_json(const CodeSample& s) {
    nlohmann::json j;
    j["id"] = s.id;
    j["source"] = s.source;
    j["language"] = s.language;
    j["label"] = s.label;
    if (!s.generator.empty()) j["generator"] = s.generator;
    if (s.scored) {
        nlohmann::json sc;
        auto logprobs = nlohmann::json::array();
        auto ranks = nlohmann::json::array();
        auto alternatives = nlohmann::json::array();
        auto texts = nlohmann::json::array();
        auto ids = nlohmann::json::array();
        for (const auto& t : s.scored->tokens) {
            logprobs.push_back(t.logprob);
            ranks.push_back(t.rank);
            auto alts = nlohmann::json::array();
            for (const auto& [text, lp] : t.alternatives) alts.push_back({text, lp});
            alternatives.push_back(std::move(alts));
            texts.push_back(t.text);
            ids.push_back(t.id);
        }
        sc["logprobs"] = std::move(logprobs);
        sc["ranks"] = std::move(ranks);
        sc["alternatives"] = std::move(alternatives);
        sc["texts"] = std::move(texts);
        sc["ids"] = std::move(ids);
        sc["provider_id"] = s.scored->provider_id;
        j["scored"] = std::move(sc);
    }
    if (s.grid) {
        nlohmann::json g;
        g["n"] = s.grid->n;
        g["m"] = s.grid->m;
        g["pad_value"] = s.grid->pad_value;
        auto rows = nlohmann::json::array();
        auto trows = nlohmann::json::array();
        for (std::size_t r = 0; r < s.grid->n; ++r) {
            auto row = nlohmann::json::array();
            auto trow = nlohmann::json::array();
            for (std::size_t c = 0; c < s.grid->m; ++c) {
                row.push_back(s.grid->values[r * s.grid->m + c]);
                trow.push_back(s.grid->tokens[r * s.grid->m + c]);
            }
            rows.push_back(std::move(row));
            trows.push_back(std::move(trow));
        }
        g["values"] = std::move(rows);
        g["tokens"] = std::move(trows);
        j["grid"] = std::move(g);
    }
    if (s.seq) j["seq"] = s.seq->values;
    if (!s.extra.empty()) j["extra"] = s.extra;
    return j;
}

inline CodeSample sample_from_json(const nlohmann::json& j, long line_no = -1) {
    auto fail = [line_no](const std::string& msg) -> SchemaError {
        std::string where = line_no >= 0 ? "line " + std::to_string(line_no) + ": " : "";
        return SchemaError(where + msg);
    };
    CodeSample s;
    if (!j.is_object()) throw fail("record is not a JSON object");
    for (const char* field : {"id", "source", "language", "label"})
        if (!j.contains(field)) throw fail(std::string("missing required field '") + field + "'");
    if (!j["id"].is_string() || !j["source"].is_string() || !j["language"].is_string())
        throw fail("id, source and language must be strings");
    s.id = j["id"];
    s.source = j["source"];
    s.language = j["language"];
    if (!j["label"].is_number_integer()) throw fail("label must be an integer");
    int label = j["label"];
    if (label != 0 && label != 1) throw fail("label must be 0 or 1, got " + std::to_string(label));
    s.label = label;
    s.generator = j.value("generator", "");
    if (j.contains("scored")) {
        const auto& sc = j["scored"];
        ScoredSeq seq;
        seq.provider_id = sc.value("provider_id", "");
        const auto& lps = sc.at("logprobs");
        const auto& ranks = sc.at("ranks");
        if (lps.size() != ranks.size()) throw fail("scored.logprobs and scored.ranks differ in length");
        bool has_alts = sc.contains("alternatives");
        if (has_alts && sc["alternatives"].size() != lps.size())
            throw fail("scored.alternatives length mismatch");
        for (std::size_t i = 0; i < lps.size(); ++i) {
            ScoredToken t;
            t.logprob = lps[i].get<double>();
            if (t.logprob > 0.0) throw fail("log probability above zero at token " + std::to_string(i));
            t.rank = ranks[i].get<int>();
            if (t.rank < 1) throw fail("rank below 1 at token " + std::to_string(i));
            if (has_alts)
                for (const auto& a : sc["alternatives"][i])
                    t.alternatives.emplace_back(a.at(0).get<std::string>(), a.at(1).get<double>());
            if (sc.contains("texts")) t.text = sc["texts"][i].get<std::string>();
            if (sc.contains("ids")) t.id = sc["ids"][i].get<int>();
            seq.tokens.push_back(std::move(t));
        }
        s.scored = std::move(seq);
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        LogProbGrid grid;
        grid.n = g.at("n").get<std::size_t>();
        grid.m = g.at("m").get<std::size_t>();
        grid.pad_value = g.at("pad_value").get<double>();
        const auto& rows = g.at("values");
        if (rows.size() != grid.n) throw fail("grid.values row count != n");
        grid.values.reserve(grid.n * grid.m);
        for (const auto& row : rows) {
            if (row.size() != grid.m) throw fail("grid row width != m");
            for (const auto& v : row) grid.values.push_back(v.get<double>());
        }
        if (g.contains("tokens")) {
            for (const auto& row : g["tokens"])
                for (const auto& t : row) grid.tokens.push_back(t.get<std::string>());
        } else {
            grid.tokens.assign(grid.n * grid.m, std::string());
        }
        s.grid = std::move(grid);
    }
    if (j.contains("seq")) {
        SeqVector v;
        for (const auto& e : j["seq"]) {
            double d = e.get<double>();
            if (d > 0.0) throw fail("seq entry above zero");
            v.values.push_back(d);
        }
        s.seq = std::move(v);
    }
    if (j.contains("extra")) s.extra = j["extra"];
    // cross-field consistency
    if (s.scored && s.seq && s.scored->size() != s.seq->size())
        throw fail("seq length inconsistent with scored length");
    return s;
}

inline std::vector<CodeSample> ingest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open dataset: " + path);
    std::vector<CodeSample> samples;
    std::vector<std::string> errors;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            samples.push_back(sample_from_json(j, line_no));
        } catch (const SchemaError& e) {
            errors.push_back(e.what());
        } catch (const std::exception& e) {
            errors.push_back("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
        }
    }
    if (!errors.empty()) {
        std::string msg = std::to_string(errors.size()) + " malformed record(s) in " + path;
        for (std::size_t i = 0; i < errors.size() && i < 5; ++i) msg += "\n  " + errors[i];
        throw SchemaError(msg);
    }
    return samples;
}

inline void write_jsonl(const std::string& path, const std::vector<CodeSample>& samples) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write dataset: " + path);
    for (const auto& s : samples) out << sample_to_json(s).dump() << "\n";
}

// ---------------------------------------------------------------------------
// synthetic dataset: grid-level class-conditional generator
// ---------------------------------------------------------------------------

// Class-1 samples draw per-token log probabilities from a higher-mean,
// lower-variance distribution than class-0, plus a spatial signature that is
// invisible to order-free statistics; separability 0 makes the classes
// identical, 1 maximally distinct. Line-length structure comes from seeded
// templates shared by both classes.
inline std::vector<CodeSample> synthesize_dataset(std::size_t n, double separability,
                                                  std::uint64_t seed) {
    if (n < 2) throw Error("synthesize_dataset: need at least 2 samples");
    if (separability < 0.0 || separability > 1.0)
        throw Error("synthesize_dataset: separability must be in [0, 1]");
    const double s = separability;
    std::vector<CodeSample> out;
    out.reserve(n);
    Rng master(seed);
    static const char* kWords[] = {"ld", "st", "mv", "add", "mul", "cmp", "jmp", "ret"};

    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = master.fork(i);
        CodeSample sample;
        sample.id = "syn-" + std::to_string(seed) + "-" + std::to_string(i);
        sample.language = "synthetic";
        sample.label = static_cast<int>(i % 2);
        sample.generator = sample.label ? "synthetic-llm" : "synthetic-human";

        // per-sample random effects keep the sample-level statistics from
        // concentrating; class effects ride on top of them
        const double base = rng.normal(-2.5, 0.30);          // shifts both classes
        const double class_shift = sample.label ? 0.85 * s : 0.0;
        const double amp = 0.9 * s;                          // spatial signature amplitude
        const double noise_sd = sample.label ? 0.55 - 0.10 * s : 0.55;
        const double p_rank1 =
            std::clamp(0.45 + (sample.label ? 0.18 * s : -0.10 * s) + rng.normal(0.0, 0.10),
                       0.05, 0.95);
        const double temp = std::max(
            0.35, 1.2 - (sample.label ? 0.18 * s : -0.08 * s) + rng.normal(0.0, 0.12));

        std::size_t lines = 8 + rng.below(25);
        ScoredSeq scored;
        scored.provider_id = "synthetic:seed=" + std::to_string(seed) +
                             ":sep=" + std::to_string(s);
        std::string source;
        for (std::size_t row = 0; row < lines; ++row) {
            std::size_t indent = rng.below(4);
            std::size_t content = 2 + rng.below(22);
            std::size_t cols = indent + content;
            for (std::size_t col = 0; col < cols; ++col) {
                ScoredToken t;
                t.id = static_cast<int>(rng.below(50000));
                if (col < indent)
                    t.text = "    ";
                else if (col + 1 == cols)
                    t.text = "\n";
                else
                    t.text = std::string(col == indent ? "" : " ") + kWords[rng.below(8)];
                source += t.text;

                double pattern;
                if (sample.label)
                    pattern = amp * (col % 2 == 0 ? 1.0 : -1.0); // structured alternation
                else
                    pattern = amp * (rng.bernoulli(0.5) ? 1.0 : -1.0); // same variance, no layout
                double v = base + class_shift + pattern + rng.normal(0.0, noise_sd);
                t.logprob = std::min(v, -0.01);

                t.rank = rng.bernoulli(p_rank1) ? 1 : 2 + static_cast<int>(rng.below(10));
                // top-10 alternatives from a temperature-scaled energy draw
                std::vector<double> e(10);
                for (auto& x : e) x = rng.uniform(0.0, 4.0) / temp;
                std::sort(e.begin(), e.end(), std::greater<>());
                double z = 0.0;
                for (double x : e) z += std::exp(x);
                for (int k = 0; k < 10; ++k)
                    t.alternatives.emplace_back("~" + std::to_string(k),
                                                e[static_cast<std::size_t>(k)] - std::log(z) +
                                                    std::log(0.98));
                scored.tokens.push_back(std::move(t));
            }
        }
        sample.source = source;
        sample.grid = build_grid(scored);
        sample.seq = to_seq_vector(scored);
        sample.scored = std::move(scored);
        out.push_back(std::move(sample));
    }
    return out;
}

// ---------------------------------------------------------------------------
// synthetic dataset: oracle-guided python programs (attackable)
// ---------------------------------------------------------------------------

namespace detail {

// Builds the program strictly left to right: every slot choice is scored
// against the exact text that precedes it, so the greedy policy maximizes the
// same conditional likelihood the final scoring pass measures.
struct PyProgramBuilder {
    const OracleProvider& oracle;
    const Tokenizer* tokenizer;
    bool greedy; // class 1: pick the oracle-likeliest candidate per slot
    Rng& rng;
    std::string text;
    std::vector<std::string> vars;

    // oracle log-likelihood of appending `candidate` to the current text
    double continuation_score(const std::string& candidate) const {
        std::string context = text.size() > 160 ? text.substr(text.size() - 160) : text;
        auto ctx_ids = tokenizer->encode(context).ids;
        auto full_ids = tokenizer->encode(context + candidate).ids;
        std::size_t shared = 0;
        while (shared < ctx_ids.size() && shared < full_ids.size() &&
               ctx_ids[shared] == full_ids[shared])
            ++shared;
        double score = 0.0;
        for (std::size_t i = shared; i < full_ids.size(); ++i)
            score += oracle.score_ids(full_ids, i).logprob;
        return score;
    }

    // appends the chosen candidate and returns it
    std::string put_choice(const std::vector<std::string>& candidates) {
        std::string chosen;
        if (!greedy || !tokenizer) {
            chosen = candidates[rng.below(candidates.size())];
        } else {
            double best = -1e300;
            std::size_t best_i = 0;
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                double sc = continuation_score(candidates[i]);
                if (sc > best) {
                    best = sc;
                    best_i = i;
                }
            }
            chosen = candidates[best_i];
        }
        text += chosen;
        return chosen;
    }

    void put(const std::string& s) { text += s; }

    std::string put_fresh_var() {
        static const char* pool[] = {"a", "b", "c", "n", "x", "y", "total", "count", "value",
                                     "result", "acc", "item"};
        std::vector<std::string> cands;
        for (const char* v : pool)
            if (std::find(vars.begin(), vars.end(), v) == vars.end()) cands.push_back(v);
        if (cands.empty()) cands.push_back("z" + std::to_string(vars.size()));
        auto name = put_choice(cands);
        vars.push_back(name);
        return name;
    }

    std::string put_known_var() { return put_choice(vars); }
    void put_int() { put_choice({"1", "2", "3", "4", "5", "6", "7", "8"}); }
    void put_op() { put_choice({"+", "-", "*"}); }

    void build(std::size_t statements) {
        if (vars.empty()) {
            put_fresh_var();
            put(" = ");
            put_int();
            put("\n");
        }
        while (statements-- > 0) {
            switch (rng.below(6)) {
                case 0:
                    put_fresh_var();
                    put(" = ");
                    put_int();
                    put("\n");
                    break;
                case 1:
                    put_known_var();
                    put(" = ");
                    put_known_var();
                    put(" ");
                    put_op();
                    put(" ");
                    put_int();
                    put("\n");
                    break;
                case 2:
                    put_fresh_var();
                    put(" = [");
                    put_int();
                    put(", ");
                    put_int();
                    put(", ");
                    put_int();
                    put("]\n");
                    break;
                case 3: {
                    put("for ");
                    std::string loop_var = put_fresh_var();
                    put(" in range(");
                    put_int();
                    put("):\n    ");
                    std::string target = put_known_var();
                    put(" = " + target + " ");
                    put_op();
                    put(" " + loop_var + "\n");
                    break;
                }
                case 4: {
                    put("if ");
                    put_known_var();
                    put(" ");
                    put_choice({"<", ">", "=="});
                    put(" ");
                    put_int();
                    put(":\n    ");
                    std::string target = put_known_var();
                    put(" = " + target + " ");
                    put_op();
                    put(" ");
                    put_int();
                    put("\n");
                    break;
                }
                default:
                    put("print(");
                    put_known_var();
                    put(")\n");
                    break;
            }
        }
    }
};

} // namespace detail

// Valid flat Python programs from a shared statement grammar. Class-1 samples
// pick template fills greedily by oracle likelihood; class-0 picks uniformly.
// Scoring the result with the same oracle separates the classes the same way
// a code LLM separates its own output from human code.
inline std::vector<CodeSample> synthesize_python_dataset(std::size_t n, std::uint64_t seed,
                                                         const Tokenizer& tokenizer,
                                                         std::uint64_t oracle_seed = 0) {
    if (n < 2) throw Error("synthesize_python_dataset: need at least 2 samples");
    OracleProvider oracle(oracle_seed ? oracle_seed : seed * 31 + 7);
    std::vector<CodeSample> out;
    out.reserve(n);
    Rng master(seed ^ 0xB00B1E5ULL);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = master.fork(i);
        CodeSample s;
        s.id = "pysyn-" + std::to_string(seed) + "-" + std::to_string(i);
        s.language = "python";
        s.label = static_cast<int>(i % 2);
        s.generator = s.label ? "oracle-greedy" : "template-random";

        detail::PyProgramBuilder b{oracle, &tokenizer, s.label == 1, rng, "", {}};
        b.build(10 + rng.below(10));
        s.source = b.text;

        auto toks = tokenizer.encode(s.source);
        auto scored = score_sequence(toks, oracle);
        s.grid = build_grid(scored);
        s.seq = to_seq_vector(scored);
        s.scored = std::move(scored);
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// stratified split
// ---------------------------------------------------------------------------

struct DatasetSplit {
    std::vector<std::string> train, validation, test;
    double ratios[3] = {0.8, 0.1, 0.1};
    std::uint64_t seed = 0;

    nlohmann::json to_json() const {
        return {{"train", train},
                {"validation", validation},
                {"test", test},
                {"ratios", {ratios[0], ratios[1], ratios[2]}},
                {"seed", seed}};
    }
    static DatasetSplit from_json(const nlohmann::json& j) {
        DatasetSplit s;
        s.train = j.at("train").get<std::vector<std::string>>();
        s.validation = j.at("validation").get<std::vector<std::string>>();
        s.test = j.at("test").get<std::vector<std::string>>();
        for (int i = 0; i < 3; ++i) s.ratios[i] = j.at("ratios")[i].get<double>();
        s.seed = j.at("seed").get<std::uint64_t>();
        return s;
    }
};

// Deterministic stratified split: per-label shuffle, then largest-remainder
// allocation so per-split label ratios track the global ratio.
inline DatasetSplit split_dataset(const std::vector<CodeSample>& samples,
                                  std::uint64_t seed, double train_ratio = 0.8,
                                  double val_ratio = 0.1, double test_ratio = 0.1) {
    if (samples.size() < 10) throw Error("split: need at least 10 samples");
    double sum = train_ratio + val_ratio + test_ratio;
    if (std::abs(sum - 1.0) > 1e-9) throw Error("split: ratios must sum to 1");

    DatasetSplit split;
    split.seed = seed;
    split.ratios[0] = train_ratio;
    split.ratios[1] = val_ratio;
    split.ratios[2] = test_ratio;

    Rng rng(seed ^ 0x5917D5EEDULL);
    for (int label = 0; label <= 1; ++label) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < samples.size(); ++i)
            if (samples[i].label == label) idx.push_back(i);
        if (idx.empty()) continue;
        rng.shuffle(idx);

        double want[3] = {train_ratio * idx.size(), val_ratio * idx.size(),
                          test_ratio * idx.size()};
        std::size_t take[3];
        double rem[3];
        std::size_t assigned = 0;
        for (int k = 0; k < 3; ++k) {
            take[k] = static_cast<std::size_t>(std::floor(want[k]));
            rem[k] = want[k] - static_cast<double>(take[k]);
            assigned += take[k];
        }
        while (assigned < idx.size()) {
            int best = 0;
            for (int k = 1; k < 3; ++k)
                if (rem[k] > rem[best] + 1e-12) best = k;
            ++take[best];
            rem[best] = -1.0;
            ++assigned;
        }
        std::size_t pos = 0;
        for (int k = 0; k < 3; ++k) {
            auto* dst = k == 0 ? &split.train : k == 1 ? &split.validation : &split.test;
            for (std::size_t c = 0; c < take[k]; ++c) dst->push_back(samples[idx[pos++]].id);
        }
    }
    // deterministic order within each part
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

inline std::vector<std::size_t> indices_of(const std::vector<CodeSample>& samples,
                                           const std::vector<std::string>& ids) {
    std::unordered_map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < samples.size(); ++i) by_id[samples[i].id] = i;
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw MissingArtifactError("split references unknown sample id: " + id);
        out.push_back(it->second);
    }
    return out;
}

// ---------------------------------------------------------------------------
// batch attack application (bench provenance mode)
// ---------------------------------------------------------------------------

// Applies an attack to every LLM-labeled python sample, re-scores the result
// and stamps provenance fields. Human-labeled samples pass through. For the
// mix attack, donors are drawn from the human samples' sources.
inline std::vector<CodeSample> attack_dataset(const std::vector<CodeSample>& samples,
                                              const attacks::AttackSpec& spec,
                                              const Tokenizer& tokenizer,
                                              ScoringProvider& provider) {
    std::vector<std::string> donors;
    for (const auto& s : samples)
        if (s.label == 0) donors.push_back(s.source);

    std::vector<CodeSample> out;
    out.reserve(samples.size());
    Rng rng(spec.seed ^ 0xA77AC4EDULL);
    for (const auto& s : samples) {
        if (s.label != 1) {
            out.push_back(s);
            continue;
        }
        CodeSample a = s;
        std::string donor;
        if (spec.kind == "mix") {
            if (donors.empty()) throw InsufficientDonorError("mix attack: no human samples to draw from");
            donor = donors[rng.below(donors.size())];
        }
        attacks::AttackSpec per = spec;
        std::uint64_t h = spec.seed ^ 0xCBF29CE484222325ULL;
        for (unsigned char c : s.id) h = (h ^ c) * 0x100000001B3ULL; // fnv-1a
        per.seed = h;
        a.source = attacks::apply_attack(per, s.source, donor);
        auto toks = tokenizer.encode(a.source);
        auto scored = score_sequence(toks, provider);
        a.grid = build_grid(scored);
        a.seq = to_seq_vector(scored);
        a.scored = std::move(scored);
        a.extra["attack"] = spec.kind;
        a.extra["attack_seed"] = spec.seed;
        if (spec.kind == "mix") a.extra["attack_ratio"] = spec.ratio;
        out.push_back(std::move(a));
    }
    return out;
}

} // namespace codelens
