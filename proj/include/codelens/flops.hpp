#pragma once

#include <cstdint>

#include "codelens/models.hpp"

namespace codelens::nn {

// Analytic FLOPs for one forward pass: 2 * multiply-accumulates over every
// linear / convolution / attention contraction, plus bias adds. Activation
// functions, normalization and pooling are excluded from the count.

inline std::uint64_t flops_linear(std::uint64_t in, std::uint64_t out, bool bias = true) {
    return 2 * in * out + (bias ? out : 0);
}

inline std::uint64_t flops_conv(std::uint64_t k, std::uint64_t cin, std::uint64_t cout,
                                std::uint64_t ho, std::uint64_t wo) {
    return 2 * k * k * cin * cout * ho * wo;
}

// One pre-norm transformer layer over nq query tokens and nk key/value tokens.
inline std::uint64_t flops_attention_layer(std::uint64_t nq, std::uint64_t nk, std::uint64_t d,
                                           std::uint64_t mlp) {
    std::uint64_t qkv = flops_linear(d, d) * nq + 2 * flops_linear(d, d) * nk;
    std::uint64_t scores = 2 * nq * nk * d;  // Q K^T
    std::uint64_t context = 2 * nq * nk * d; // A V
    std::uint64_t proj = flops_linear(d, d) * nq;
    std::uint64_t mlp_f = (flops_linear(d, mlp) + flops_linear(mlp, d)) * nq;
    return qkv + scores + context + proj + mlp_f;
}

inline std::uint64_t count_flops(const ViTConfig& c) {
    std::uint64_t n = c.num_patches();
    std::uint64_t pp = c.patch * c.patch;
    std::uint64_t total = flops_linear(pp, c.embed_dim) * n; // patch embedding
    total += static_cast<std::uint64_t>(c.layers) *
             flops_attention_layer(n, n, c.embed_dim, c.mlp_dim);
    total += flops_linear(c.embed_dim, c.mlp_dim); // head hidden (on pooled vector)
    total += flops_linear(c.mlp_dim, 2);           // head logits
    return total;
}

inline std::uint64_t count_flops(const ResNetConfig& c) {
    std::uint64_t hw = c.canvas;
    std::uint64_t w = c.base_width;
    std::uint64_t total = flops_conv(3, 1, w, hw, hw); // stem
    std::uint64_t in_ch = w;
    std::uint64_t size = hw;
    for (std::size_t stage = 0; stage < 3; ++stage) {
        std::uint64_t out_ch = w << stage;
        for (std::size_t b = 0; b < c.blocks_per_stage; ++b) {
            bool down = stage > 0 && b == 0;
            if (down) size /= 2;
            total += flops_conv(3, in_ch, out_ch, size, size);
            total += flops_conv(3, out_ch, out_ch, size, size);
            if (down || in_ch != out_ch) total += flops_conv(1, in_ch, out_ch, size, size);
            in_ch = out_ch;
        }
    }
    total += flops_linear(in_ch, 2); // classifier
    return total;
}

// Depends on the actual input length through the segmentation.
inline std::uint64_t count_flops(const SeqConfig& c, std::uint64_t length) {
    std::uint64_t total = 0;
    std::uint64_t remaining = length;
    bool has_memory = false;
    std::uint64_t prev_n = 0;
    while (remaining > 0) {
        std::uint64_t n = remaining < c.segment_len ? remaining : c.segment_len;
        total += flops_linear(1, c.hidden) * n; // scalar embedding
        std::uint64_t mem = has_memory ? (prev_n < c.memory_len ? prev_n : c.memory_len) : 0;
        total += static_cast<std::uint64_t>(c.layers) *
                 flops_attention_layer(n, n + mem, c.hidden, c.mlp_dim);
        has_memory = c.memory_len > 0;
        prev_n = n;
        remaining -= n;
    }
    total += flops_linear(c.hidden, 2);
    return total;
}

} // namespace codelens::nn
