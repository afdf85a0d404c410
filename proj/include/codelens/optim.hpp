#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "codelens/rng.hpp"
#include "codelens/tensor.hpp"

namespace codelens::nn {

// Named parameter list; models expose their learnable tensors through this.
using ParamList = std::vector<std::pair<std::string, Tensor>>;

inline void trunc_normal_init(Tensor& t, Rng& rng, double stddev = 0.02) {
    for (auto& v : t.data()) {
        double x;
        do {
            x = rng.normal(0.0, stddev);
        } while (std::abs(x) > 2.0 * stddev);
        v = x;
    }
}

inline void he_normal_init(Tensor& t, Rng& rng, std::size_t fan_in) {
    double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : t.data()) v = rng.normal(0.0, stddev);
}

inline void constant_init(Tensor& t, double value) {
    for (auto& v : t.data()) v = value;
}

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Standard Adam with bias correction. State is keyed by parameter name so a
// checkpoint can carry it.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(ParamList& params) {
        ++t_;
        double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (auto& [name, p] : params) {
            if (p.grad().size() != p.data().size()) continue; // no gradient this step
            auto& s = state_[name];
            if (s.m.size() != p.numel()) {
                s.m.assign(p.numel(), 0.0);
                s.v.assign(p.numel(), 0.0);
            }
            auto& data = p.data();
            auto& grad = p.grad();
            for (std::size_t i = 0; i < data.size(); ++i) {
                double g = grad[i];
                s.m[i] = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * g;
                s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * g * g;
                double mhat = s.m[i] / bc1;
                double vhat = s.v[i] / bc2;
                data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

    void zero_grad(ParamList& params) {
        for (auto& [name, p] : params) p.zero_grad();
    }

    const AdamConfig& config() const { return cfg_; }
    long step_count() const { return t_; }
    void set_step_count(long t) { t_ = t; } // checkpoint resume

    struct MomentState {
        std::vector<double> m;
        std::vector<double> v;
    };

    std::unordered_map<std::string, MomentState>& state() { return state_; }

private:
    AdamConfig cfg_;
    long t_ = 0;
    std::unordered_map<std::string, MomentState> state_;
};

} // namespace codelens::nn
