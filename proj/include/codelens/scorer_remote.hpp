#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "codelens/scorer.hpp"

namespace codelens {

// Token-bucket rate limiter shared by all in-flight requests.
class TokenBucket {
public:
    TokenBucket(double rate_per_s, double capacity)
        : rate_(rate_per_s), capacity_(capacity), tokens_(capacity),
          last_(std::chrono::steady_clock::now()) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mutex_);
        for (;;) {
            refill();
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            double wait_s = (1.0 - tokens_) / rate_;
            lock.unlock();
            std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
            lock.lock();
        }
    }

private:
    void refill() {
        auto now = std::chrono::steady_clock::now();
        double dt = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        tokens_ = std::min(capacity_, tokens_ + dt * rate_);
    }

    double rate_;
    double capacity_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
};

// Counting semaphore bounding concurrent in-flight requests.
class RequestSlot {
public:
    explicit RequestSlot(int limit) : available_(limit) {}

    struct Guard {
        RequestSlot* slot;
        ~Guard() { slot->release(); }
    };

    Guard acquire() {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return available_ > 0; });
        --available_;
        return Guard{this};
    }

private:
    void release() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            ++available_;
        }
        cv_.notify_one();
    }

    int available_;
    std::mutex mutex_;
    std::condition_variable cv_;
    friend struct Guard;
};

struct RemoteSettings {
    std::string endpoint = "http://127.0.0.1:8080"; // scheme://host:port
    std::string path = "/v1/completions";
    std::string model = "gpt-3.5-turbo-instruct";
    std::string api_key_env = "CODELENS_API_KEY";
    int top_k = kTopK;
    int context_limit = 4096;       // max prefix tokens sent per request
    int max_retries = 3;
    double rate_per_s = 50.0;       // token-bucket refill rate
    int max_in_flight = 4;
    double retry_base_s = 0.05;     // backoff base when no retry-after given
    // temperature 0 and top-p 1 are pinned for deterministic outputs
};

// Completion-endpoint scoring client. Sends the decoded prefix as the prompt
// and reads the top-k next-token log probabilities from the response.
class RemoteProvider final : public ScoringProvider {
public:
    explicit RemoteProvider(RemoteSettings settings) : settings_(std::move(settings)),
          bucket_(settings_.rate_per_s, std::max(1.0, settings_.rate_per_s)),
          slots_(settings_.max_in_flight) {
        const char* key = std::getenv(settings_.api_key_env.c_str());
        api_key_ = key ? key : "";
    }

    std::string provider_id() const override {
        return "remote:" + settings_.model + ":t0:p1:k" + std::to_string(settings_.top_k) +
               ":empty-prefix";
    }

    ScoreResult score(const TokenSeq& seq, std::size_t pos) override {
        // sliding window: keep the most recent tokens when over the limit
        std::size_t begin = 0;
        if (pos > static_cast<std::size_t>(settings_.context_limit))
            begin = pos - static_cast<std::size_t>(settings_.context_limit);
        std::string prompt;
        for (std::size_t i = begin; i < pos; ++i) prompt += seq.texts[i];

        int ctx = settings_.context_limit;
        for (;;) {
            try {
                return request(prompt, seq.texts[pos]);
            } catch (const ProviderError& e) {
                if (e.fault != ProviderFault::context_overflow) throw;
                // halve the window and retry
                ctx /= 2;
                if (ctx < 1) throw;
                std::size_t b2 = pos > static_cast<std::size_t>(ctx)
                                     ? pos - static_cast<std::size_t>(ctx) : 0;
                prompt.clear();
                for (std::size_t i = b2; i < pos; ++i) prompt += seq.texts[i];
            }
        }
    }

    // Exposed for tests: number of HTTP requests actually issued.
    long request_count() const { return request_count_.load(); }

private:
    ScoreResult request(const std::string& prompt, const std::string& actual) {
        nlohmann::json body;
        body["model"] = settings_.model;
        body["prompt"] = prompt;
        body["max_tokens"] = 1;
        body["temperature"] = 0;
        body["top_p"] = 1;
        body["logprobs"] = settings_.top_k;
        body["echo"] = false;
        const std::string payload = body.dump();

        int attempt = 0;
        for (;;) {
            auto slot = slots_.acquire();
            bucket_.acquire();
            ++request_count_;

            httplib::Client cli(settings_.endpoint);
            cli.set_connection_timeout(10);
            cli.set_read_timeout(60);
            httplib::Headers headers;
            if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
            auto res = cli.Post(settings_.path, headers, payload, "application/json");

            if (!res) {
                if (++attempt <= settings_.max_retries) {
                    backoff(attempt, 0.0);
                    continue;
                }
                throw ProviderError(ProviderFault::network,
                                    "request failed: " + httplib::to_string(res.error()));
            }
            if (res->status == 200) return parse(res->body, actual);
            if (res->status == 401 || res->status == 403)
                throw ProviderError(ProviderFault::auth,
                                    "authentication rejected (" + std::to_string(res->status) + ")");
            if (res->status == 429) {
                double retry_after = 0.0;
                if (res->has_header("Retry-After"))
                    retry_after = std::atof(res->get_header_value("Retry-After").c_str());
                if (++attempt <= settings_.max_retries) {
                    backoff(attempt, retry_after);
                    continue;
                }
                throw ProviderError(ProviderFault::rate_limit, "rate limited", -1, retry_after);
            }
            if (res->status == 400 && res->body.find("context_length_exceeded") != std::string::npos)
                throw ProviderError(ProviderFault::context_overflow, "context window exceeded");
            if (res->status >= 500) {
                if (++attempt <= settings_.max_retries) {
                    backoff(attempt, 0.0);
                    continue;
                }
            }
            throw ProviderError(ProviderFault::protocol,
                                "unexpected status " + std::to_string(res->status) + ": " + res->body);
        }
    }

    ScoreResult parse(const std::string& body, const std::string& actual) const {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const std::exception& e) {
            throw ProviderError(ProviderFault::protocol, std::string("bad response JSON: ") + e.what());
        }
        ScoreResult r;
        try {
            const auto& top = j.at("choices").at(0).at("logprobs").at("top_logprobs").at(0);
            for (auto it = top.begin(); it != top.end(); ++it)
                r.alternatives.emplace_back(it.key(), it.value().get<double>());
        } catch (const std::exception& e) {
            throw ProviderError(ProviderFault::protocol, std::string("missing logprobs: ") + e.what());
        }
        std::sort(r.alternatives.begin(), r.alternatives.end(),
                  [](const auto& a, const auto& b) { return a.second > b.second; });
        if (static_cast<int>(r.alternatives.size()) > settings_.top_k)
            r.alternatives.resize(static_cast<std::size_t>(settings_.top_k));
        r.rank = settings_.top_k + 1;
        r.logprob = kLogProbFloor;
        for (std::size_t i = 0; i < r.alternatives.size(); ++i) {
            if (r.alternatives[i].first == actual) {
                r.rank = static_cast<int>(i) + 1;
                r.logprob = r.alternatives[i].second;
                break;
            }
        }
        return r;
    }

    void backoff(int attempt, double retry_after) {
        double s = retry_after > 0.0 ? retry_after : settings_.retry_base_s * attempt;
        std::this_thread::sleep_for(std::chrono::duration<double>(s));
    }

    RemoteSettings settings_;
    std::string api_key_;
    TokenBucket bucket_;
    RequestSlot slots_;
    std::atomic<long> request_count_{0};
};

} // namespace codelens
