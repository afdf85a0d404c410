#include <catch2/catch_amalgamated.hpp>

#include "codelens/grid.hpp"
#include "codelens/rng.hpp"
#include "codelens/scorer.hpp"
#include "codelens/tokenizer.hpp"
#include "support/helpers.hpp"

using namespace codelens;

namespace {

ScoredSeq scored_from(const std::vector<std::string>& texts, const std::vector<double>& lps) {
    ScoredSeq s;
    s.provider_id = "test";
    for (std::size_t i = 0; i < texts.size(); ++i) {
        ScoredToken t;
        t.id = static_cast<int>(i);
        t.text = texts[i];
        t.logprob = lps[i];
        s.tokens.push_back(std::move(t));
    }
    return s;
}

} // namespace

TEST_CASE("grid for a\\nbb layout", "[grid]") {
    auto s = scored_from({"a", "\n", "b", "b"}, {-1.0, -2.0, -3.0, -4.0});
    auto g = build_grid(s);
    REQUIRE(g.n == 2);
    REQUIRE(g.m == 2);
    CHECK(g.at(0, 0) == -1.0);
    CHECK(g.at(0, 1) == -2.0);
    CHECK(g.at(1, 0) == -3.0);
    CHECK(g.at(1, 1) == -4.0);
    CHECK(g.token_at(0, 1) == "\n");
}

TEST_CASE("single token grid is 1x1", "[grid]") {
    auto s = scored_from({"x"}, {-0.5});
    auto g = build_grid(s);
    REQUIRE(g.n == 1);
    REQUIRE(g.m == 1);
    CHECK(g.at(0, 0) == -0.5);
}

TEST_CASE("ragged lines pad with -100", "[grid]") {
    auto s = scored_from({"a", "b", "c\n", "d"}, {-1.0, -2.0, -3.0, -4.0});
    auto g = build_grid(s);
    REQUIRE(g.n == 2);
    REQUIRE(g.m == 3);
    CHECK(g.at(1, 0) == -4.0);
    CHECK(g.at(1, 1) == -100.0);
    CHECK(g.at(1, 2) == -100.0);
    CHECK(g.is_pad(1, 1));
    CHECK(g.pad_value == -100.0);
}

TEST_CASE("empty input yields 0x0 grid", "[grid]") {
    ScoredSeq s;
    auto g = build_grid(s);
    CHECK(g.n == 0);
    CHECK(g.m == 0);
    CHECK(to_seq_vector(s).size() == 0);
}

TEST_CASE("seq vector preserves token order", "[grid]") {
    auto s = scored_from({"a", "b\n", "c", "d"}, {-1.5, -2.5, -3.5, -4.5});
    auto v = to_seq_vector(s);
    CHECK(v.values == std::vector<double>{-1.5, -2.5, -3.5, -4.5});
}

TEST_CASE("non-pad cells flatten to the seq vector", "[grid]") {
    Rng rng(404);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::string> texts;
        std::vector<double> lps;
        std::size_t n_tokens = 1 + rng.below(40);
        for (std::size_t i = 0; i < n_tokens; ++i) {
            bool newline = rng.bernoulli(0.2);
            texts.push_back(newline ? "w\n" : "w");
            lps.push_back(-rng.uniform(0.0, 12.0));
        }
        auto s = scored_from(texts, lps);
        auto g = build_grid(s);
        CHECK(grid_non_pad_values(g).values == to_seq_vector(s).values);
    }
}

TEST_CASE("grid rows match tokenizer line runs on real code", "[grid]") {
    Tokenizer tok(BpeVocab::from_file((testutil::data_dir() / "cl100k_base.tiktoken").string()));
    OracleProvider provider(99);
    for (const std::string text : {"def f():\n    return 1\n", "a\nb\nc", "single line",
                                   "x = 1\n\n\ny = 2\n"}) {
        auto seq = tok.encode(text);
        auto scored = score_sequence(seq, provider);
        auto g = build_grid(scored);
        CHECK(g.n == tok.split_lines(seq).size());
    }
}

TEST_CASE("canvas maps the affine range", "[grid]") {
    LogProbGrid g;
    g.n = 1;
    g.m = 1;
    g.values = {0.0};
    g.tokens = {"x"};
    auto c = to_canvas(g, 4, 4, -20.0);
    CHECK(c.at(0, 0) == 1.0);
    CHECK(c.mask[0]);
    for (std::size_t i = 1; i < 16; ++i) {
        CHECK(c.pixels[i] == 0.0);
        CHECK(!c.mask[i]);
    }

    g.values = {-20.0};
    c = to_canvas(g, 4, 4, -20.0);
    CHECK(c.at(0, 0) == 0.0);
    CHECK(c.mask[0]); // real cell even at the lower clamp endpoint

    g.values = {-10.0};
    c = to_canvas(g, 4, 4, -20.0);
    CHECK(c.at(0, 0) == 0.5);

    // below-clamp values saturate
    g.values = {-100.0 + 1e-9}; // not exactly pad
    c = to_canvas(g, 4, 4, -20.0);
    CHECK(c.at(0, 0) == 0.0);
    CHECK(c.mask[0]);
}

TEST_CASE("canvas crops overflow without scaling", "[grid]") {
    auto s = scored_from({"a", "b", "c\n", "d", "e\n", "f"},
                         {-1.0, -2.0, -3.0, -4.0, -5.0, -6.0});
    auto g = build_grid(s); // 3 lines, m=3
    auto c = to_canvas(g, 2, 2, -20.0);
    CHECK(c.at(0, 0) == Catch::Approx((-1.0 + 20.0) / 20.0));
    CHECK(c.at(0, 1) == Catch::Approx((-2.0 + 20.0) / 20.0));
    CHECK(c.at(1, 0) == Catch::Approx((-4.0 + 20.0) / 20.0));
    CHECK(c.at(1, 1) == Catch::Approx((-5.0 + 20.0) / 20.0));
    // pads in cropped region
    auto s2 = scored_from({"a\n", "b"}, {-1.0, -2.0});
    auto g2 = build_grid(s2);
    auto c2 = to_canvas(g2, 4, 4, -20.0);
    CHECK(!c2.mask[1]); // row 0 col 1 is pad in source grid
}
