#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "codelens/error.hpp"
#include "codelens/rng.hpp"
#include "codelens/sha256.hpp"
#include "codelens/tokenizer.hpp"

namespace codelens {

// Assigned when the actual token is missing from the provider's top-k list
// and no exact value is available; keeps matrices bounded.
inline constexpr double kLogProbFloor = -23.025850929940457; // log(1e-10)
inline constexpr int kTopK = 10;

struct ScoredToken {
    int id = 0;
    std::string text;
    double logprob = 0.0; // natural log, <= 0
    int rank = 1;         // 1-based position in the provider's candidate ordering
    std::vector<std::pair<std::string, double>> alternatives; // sorted by descending logprob
};

struct ScoredSeq {
    std::vector<ScoredToken> tokens;
    std::string provider_id;

    std::size_t size() const { return tokens.size(); }
    bool empty() const { return tokens.empty(); }
};

struct ScoreResult {
    double logprob = 0.0;
    int rank = 1;
    std::vector<std::pair<std::string, double>> alternatives;
};

// A scoring provider sees the full token sequence and the position to score;
// the score must be conditioned on tokens [0, pos) only.
class ScoringProvider {
public:
    virtual ~ScoringProvider() = default;
    virtual ScoreResult score(const TokenSeq& seq, std::size_t pos) = 0;
    virtual std::string provider_id() const = 0;
    // true when identical inputs always produce identical outputs
    virtual bool deterministic() const { return true; }
};

// Deterministic hash-based provider: a fixed synthetic language model over a
// window of the last `window` prefix ids. Used for hermetic tests and
// synthetic experiments.
class OracleProvider final : public ScoringProvider {
public:
    explicit OracleProvider(std::uint64_t seed, int window = 3, int k = kTopK)
        : seed_(seed), window_(window), k_(k) {}

    ScoreResult score(const TokenSeq& seq, std::size_t pos) override {
        if (pos >= seq.size())
            throw Error("oracle score position out of range");
        return score_ids(seq.ids, pos);
    }

    ScoreResult score_ids(const std::vector<int>& ids, std::size_t pos) const {
        std::uint64_t h = context_hash(ids, pos);
        return score_context(h, ids[pos]);
    }

    // Total ordering over candidate continuations of a context; used by the
    // synthetic code generator to sample "model-likely" token choices.
    double continuation_logprob(const std::vector<int>& prefix, int next_id) const {
        std::uint64_t h = context_hash_of_prefix(prefix);
        return score_context(h, next_id).logprob;
    }

    std::string provider_id() const override {
        return "oracle:seed=" + std::to_string(seed_) + ":w=" + std::to_string(window_) +
               ":k=" + std::to_string(k_) + ":empty-prefix";
    }

private:
    std::uint64_t context_hash(const std::vector<int>& ids, std::size_t pos) const {
        std::uint64_t h = seed_ ^ 0x5851F42D4C957F2DULL;
        std::size_t start = pos > static_cast<std::size_t>(window_) ? pos - window_ : 0;
        for (std::size_t i = start; i < pos; ++i) {
            h ^= static_cast<std::uint64_t>(ids[i]) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
            splitmix64(h);
        }
        return h;
    }

    std::uint64_t context_hash_of_prefix(const std::vector<int>& prefix) const {
        std::uint64_t h = seed_ ^ 0x5851F42D4C957F2DULL;
        std::size_t start = prefix.size() > static_cast<std::size_t>(window_)
                                ? prefix.size() - window_ : 0;
        for (std::size_t i = start; i < prefix.size(); ++i) {
            h ^= static_cast<std::uint64_t>(prefix[i]) + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
            splitmix64(h);
        }
        return h;
    }

    ScoreResult score_context(std::uint64_t ctx, int next_id) const {
        // candidate energies: pseudo-random, sorted descending
        std::uint64_t s = ctx;
        std::vector<double> energies(static_cast<std::size_t>(k_));
        for (auto& e : energies)
            e = 4.0 * (static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53);
        std::sort(energies.begin(), energies.end(), std::greater<>());

        double z = 0.0;
        for (double e : energies) z += std::exp(e);
        const double log_z = std::log(z);
        // top-k covers 98% of the mass; the rest is below the floor
        const double log_cover = std::log(0.98);

        // where the actual token lands is itself a hash draw; slots past the
        // candidate list model "not in top-k"
        std::uint64_t t = ctx ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(next_id)) *
                                 0xC2B2AE3D27D4EB4FULL);
        int slot = static_cast<int>(splitmix64(t) % static_cast<std::uint64_t>(k_ + 2));

        ScoreResult r;
        r.alternatives.reserve(static_cast<std::size_t>(k_));
        std::uint64_t c = ctx + 0x632BE59BD9B4E019ULL;
        for (int j = 0; j < k_; ++j) {
            std::string text = (j == slot) ? "~" + std::to_string(next_id)
                                           : "~c" + std::to_string(splitmix64(c) % 99991);
            r.alternatives.emplace_back(std::move(text),
                                        energies[static_cast<std::size_t>(j)] - log_z + log_cover);
        }
        if (slot < k_) {
            r.logprob = r.alternatives[static_cast<std::size_t>(slot)].second;
            r.rank = slot + 1;
        } else {
            r.logprob = kLogProbFloor;
            r.rank = k_ + 1;
        }
        return r;
    }

    std::uint64_t seed_;
    int window_;
    int k_;
};

// Content-addressed, append-only score cache: one JSON file per entry under
// a two-level shard layout. Corrupt entries read as misses.
class ScoreCache {
public:
    explicit ScoreCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    static std::string key(const std::string& provider_id, const std::vector<int>& prefix_ids,
                           int next_id) {
        Sha256 h;
        h.update(provider_id);
        h.update("\0", 1);
        for (int id : prefix_ids) {
            unsigned char b[4] = {static_cast<unsigned char>(id), static_cast<unsigned char>(id >> 8),
                                  static_cast<unsigned char>(id >> 16), static_cast<unsigned char>(id >> 24)};
            h.update(b, 4);
        }
        h.update("\0", 1);
        unsigned char b[4] = {static_cast<unsigned char>(next_id), static_cast<unsigned char>(next_id >> 8),
                              static_cast<unsigned char>(next_id >> 16), static_cast<unsigned char>(next_id >> 24)};
        h.update(b, 4);
        auto d = h.digest();
        static const char* k = "0123456789abcdef";
        std::string out;
        out.reserve(64);
        for (unsigned char byte : d) {
            out.push_back(k[byte >> 4]);
            out.push_back(k[byte & 0xF]);
        }
        return out;
    }

    std::optional<ScoreResult> get(const std::string& key) const {
        auto p = path_for(key);
        std::ifstream in(p, std::ios::binary);
        if (!in) return std::nullopt;
        try {
            nlohmann::json j = nlohmann::json::parse(in);
            ScoreResult r;
            r.logprob = j.at("logprob").get<double>();
            r.rank = j.at("rank").get<int>();
            for (const auto& a : j.at("alternatives"))
                r.alternatives.emplace_back(a.at(0).get<std::string>(), a.at(1).get<double>());
            return r;
        } catch (const std::exception&) {
            return std::nullopt; // corrupt entry: recompute
        }
    }

    void put(const std::string& key, const ScoreResult& r) {
        nlohmann::json j;
        j["v"] = 1;
        j["logprob"] = r.logprob;
        j["rank"] = r.rank;
        auto alts = nlohmann::json::array();
        for (const auto& [text, lp] : r.alternatives) alts.push_back({text, lp});
        j["alternatives"] = std::move(alts);

        std::lock_guard<std::mutex> lock(write_mutex_);
        auto p = path_for(key);
        std::filesystem::create_directories(p.parent_path());
        auto tmp = p;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out << j.dump();
        }
        std::filesystem::rename(tmp, p);
    }

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path path_for(const std::string& key) const {
        return dir_ / key.substr(0, 2) / (key.substr(2) + ".json");
    }

    std::filesystem::path dir_;
    mutable std::mutex write_mutex_;
};

struct ScoreOptions {
    ScoreCache* cache = nullptr;
    int workers = 1; // positions are independent; conditioning is unchanged
};

// Scores every position of a token sequence. Provider failures surface as
// ProviderError carrying the failing position; partial results are never
// returned.
inline ScoredSeq score_sequence(const TokenSeq& seq, ScoringProvider& provider,
                                const ScoreOptions& opts = {}) {
    if (seq.empty())
        throw Error("score_sequence requires a non-empty token sequence");

    ScoredSeq out;
    out.provider_id = provider.provider_id();
    out.tokens.resize(seq.size());

    auto score_one = [&](std::size_t i) {
        std::vector<int> prefix(seq.ids.begin(), seq.ids.begin() + static_cast<std::ptrdiff_t>(i));
        std::string key;
        ScoreResult r;
        bool have = false;
        if (opts.cache) {
            key = ScoreCache::key(out.provider_id, prefix, seq.ids[i]);
            if (auto hit = opts.cache->get(key)) {
                r = std::move(*hit);
                have = true;
            }
        }
        if (!have) {
            try {
                r = provider.score(seq, i);
            } catch (ProviderError& e) {
                throw ProviderError(e.fault, e.what(), static_cast<long>(i), e.retry_after_s);
            }
            if (opts.cache && provider.deterministic()) opts.cache->put(key, r);
        }
        ScoredToken& t = out.tokens[i];
        t.id = seq.ids[i];
        t.text = seq.texts[i];
        t.logprob = r.logprob;
        t.rank = r.rank;
        t.alternatives = std::move(r.alternatives);
    };

    int workers = std::max(1, opts.workers);
    if (workers == 1 || seq.size() < 2) {
        for (std::size_t i = 0; i < seq.size(); ++i) score_one(i);
        return out;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::mutex err_mutex;
    std::exception_ptr first_error;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= seq.size()) return;
                try {
                    score_one(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

} // namespace codelens
