#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "codelens/scorer.hpp"

namespace codelens {

inline constexpr double kPadValue = -100.0;

// 2D log-probability matrix mirroring the code layout: row r holds the tokens
// of source line r left-aligned from column 0, empty cells hold pad_value.
struct LogProbGrid {
    std::size_t n = 0; // lines
    std::size_t m = 0; // max tokens on any line
    double pad_value = kPadValue;
    std::vector<double> values;      // n*m row-major
    std::vector<std::string> tokens; // parallel; empty string on pad cells

    double at(std::size_t r, std::size_t c) const { return values[r * m + c]; }
    const std::string& token_at(std::size_t r, std::size_t c) const { return tokens[r * m + c]; }
    bool is_pad(std::size_t r, std::size_t c) const { return values[r * m + c] == pad_value; }
};

struct SeqVector {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

// Fixed-size single-channel model input, pixels in [0, 1]; mask marks real
// (non-pad) cells.
struct Canvas {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> pixels; // H*W row-major
    std::vector<bool> mask;

    double at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
};

inline LogProbGrid build_grid(const ScoredSeq& scored) {
    LogProbGrid g;
    if (scored.empty()) return g; // 0x0 by convention

    std::vector<std::string> texts;
    texts.reserve(scored.size());
    for (const auto& t : scored.tokens) texts.push_back(t.text);
    auto runs = line_runs(texts);

    g.n = runs.size();
    g.m = 0;
    for (auto [b, e] : runs) g.m = std::max(g.m, e - b);
    g.values.assign(g.n * g.m, g.pad_value);
    g.tokens.assign(g.n * g.m, std::string());
    for (std::size_t r = 0; r < runs.size(); ++r) {
        auto [b, e] = runs[r];
        for (std::size_t i = b; i < e; ++i) {
            g.values[r * g.m + (i - b)] = scored.tokens[i].logprob;
            g.tokens[r * g.m + (i - b)] = scored.tokens[i].text;
        }
    }
    return g;
}

inline SeqVector to_seq_vector(const ScoredSeq& scored) {
    SeqVector v;
    v.values.reserve(scored.size());
    for (const auto& t : scored.tokens) v.values.push_back(t.logprob);
    return v;
}

// Flattens the non-pad cells row-major; equals to_seq_vector of the source
// sequence by construction.
inline SeqVector grid_non_pad_values(const LogProbGrid& g) {
    SeqVector v;
    for (std::size_t r = 0; r < g.n; ++r)
        for (std::size_t c = 0; c < g.m; ++c)
            if (!g.is_pad(r, c)) v.values.push_back(g.at(r, c));
    return v;
}

// Top-left anchored crop onto an H x W canvas; non-pad values are clamped to
// [clamp_lo, 0] then mapped affinely to [0, 1]; pad cells become 0 with mask
// false. No scaling or interpolation.
inline Canvas to_canvas(const LogProbGrid& g, std::size_t height, std::size_t width,
                        double clamp_lo = -20.0) {
    Canvas c;
    c.height = height;
    c.width = width;
    c.pixels.assign(height * width, 0.0);
    c.mask.assign(height * width, false);
    const double inv = 1.0 / (-clamp_lo);
    for (std::size_t r = 0; r < std::min(height, g.n); ++r) {
        for (std::size_t col = 0; col < std::min(width, g.m); ++col) {
            if (g.is_pad(r, col)) continue;
            double v = std::clamp(g.at(r, col), clamp_lo, 0.0);
            c.pixels[r * width + col] = (v - clamp_lo) * inv;
            c.mask[r * width + col] = true;
        }
    }
    return c;
}

} // namespace codelens
