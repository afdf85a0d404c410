#include <catch2/catch_amalgamated.hpp>

#include "codelens/rng.hpp"
#include "codelens/models.hpp"
#include "codelens/tensor.hpp"
#include "support/gradcheck.hpp"

using namespace codelens;
using namespace codelens::nn;
using testutil::fill_uniform;
using testutil::gradcheck;

namespace {
constexpr double kTol = 1e-4; // max relative error, h = 1e-4 central differences
}

TEST_CASE("backward of sum is all ones", "[tensor]") {
    auto x = Tensor::from_data({4}, {1.0, 2.0, 3.0, 4.0}, true);
    auto loss = sum(x);
    loss.backward();
    CHECK(x.grad() == std::vector<double>{1.0, 1.0, 1.0, 1.0});
}

TEST_CASE("backward of sum of squares is 2x", "[tensor]") {
    auto x = Tensor::from_data({2}, {1.0, 2.0}, true);
    auto loss = sum(mul(x, x));
    loss.backward();
    CHECK(x.grad()[0] == Catch::Approx(2.0));
    CHECK(x.grad()[1] == Catch::Approx(4.0));
}

TEST_CASE("backward without a recorded graph fails", "[tensor]") {
    auto x = Tensor::from_data({1}, {3.0}, false);
    CHECK_THROWS_AS(x.backward(), MissingGraphError);
    auto y = Tensor::from_data({2}, {1.0, 2.0}, true);
    CHECK_NOTHROW(sum(y).backward()); // scalar with a recorded graph works
}

TEST_CASE("backward requires scalar loss", "[tensor]") {
    auto x = Tensor::from_data({2}, {1.0, 2.0}, true);
    auto y = mul(x, x);
    CHECK_THROWS_AS(y.backward(), ShapeError);
}

TEST_CASE("matmul forward matches naive loops", "[tensor]") {
    Rng rng(1);
    auto a = Tensor::zeros({3, 4}, true);
    auto b = Tensor::zeros({4, 5}, true);
    fill_uniform(a, rng, -2.0, 2.0);
    fill_uniform(b, rng, -2.0, 2.0);
    auto c = matmul(a, b);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 4; ++k) s += a.data()[i * 4 + k] * b.data()[k * 5 + j];
            CHECK(c.data()[i * 5 + j] == Catch::Approx(s).epsilon(1e-12));
        }
}

TEST_CASE("shape mismatches name the layer", "[tensor]") {
    auto a = Tensor::zeros({2, 3});
    auto b = Tensor::zeros({4, 2});
    CHECK_THROWS_AS(matmul(a, b), ShapeError);
    try {
        auto w = Tensor::zeros({5, 2});
        auto bias = Tensor::zeros({2});
        linear(a, w, bias, "vit.embed");
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        CHECK(std::string(e.what()).find("vit.embed") != std::string::npos);
    }
}

TEST_CASE("elementwise and reduction gradients", "[tensor][gradcheck]") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t n = 1 + rng.below(6), m = 1 + rng.below(5);
        auto a = Tensor::zeros({n, m}, true);
        auto b = Tensor::zeros({n, m}, true);
        fill_uniform(a, rng, -1.5, 1.5);
        fill_uniform(b, rng, -1.5, 1.5);
        CHECK(gradcheck({&a, &b}, [&] { return sum(mul(add(a, b), sub(a, b))); }) < kTol);
        CHECK(gradcheck({&a}, [&] { return mean(mul(a, a)); }) < kTol);
        CHECK(gradcheck({&a}, [&] { return sum(scale(a, -1.7)); }) < kTol);
    }
}

TEST_CASE("relu gelu softmax gradients", "[tensor][gradcheck]") {
    Rng rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t n = 2 + rng.below(4), m = 2 + rng.below(6);
        auto a = Tensor::zeros({n, m}, true);
        // keep values away from relu's kink where FD is one-sided
        for (auto& v : a.data()) {
            v = rng.uniform(-2.0, 2.0);
            if (std::abs(v) < 5e-3) v = 0.1;
        }
        CHECK(gradcheck({&a}, [&] { return sum(mul(relu(a), relu(a))); }) < kTol);
        CHECK(gradcheck({&a}, [&] { return sum(mul(gelu(a), gelu(a))); }) < kTol);
        auto w = Tensor::zeros({n, m}, true);
        fill_uniform(w, rng, -1.0, 1.0);
        CHECK(gradcheck({&a, &w}, [&] { return sum(mul(softmax_lastdim(a), w)); }) < kTol);
    }
}

TEST_CASE("matmul and linear gradients", "[tensor][gradcheck]") {
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t n = 1 + rng.below(4), k = 1 + rng.below(4), m = 1 + rng.below(4);
        auto a = Tensor::zeros({n, k}, true);
        auto b = Tensor::zeros({k, m}, true);
        auto bias = Tensor::zeros({m}, true);
        fill_uniform(a, rng, -1.0, 1.0);
        fill_uniform(b, rng, -1.0, 1.0);
        fill_uniform(bias, rng, -0.5, 0.5);
        CHECK(gradcheck({&a, &b}, [&] { return sum(mul(matmul(a, b), matmul(a, b))); }) < kTol);
        CHECK(gradcheck({&a, &b, &bias},
                        [&] { return mean(mul(linear(a, b, bias), linear(a, b, bias))); }) < kTol);
    }
}

TEST_CASE("layer norm gradients", "[tensor][gradcheck]") {
    Rng rng(14);
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t rows = 1 + rng.below(4), cols = 2 + rng.below(6);
        auto x = Tensor::zeros({rows, cols}, true);
        auto g = Tensor::zeros({cols}, true);
        auto b = Tensor::zeros({cols}, true);
        fill_uniform(x, rng, -2.0, 2.0);
        fill_uniform(g, rng, 0.5, 1.5);
        fill_uniform(b, rng, -0.5, 0.5);
        auto w = Tensor::zeros({rows, cols}, false);
        fill_uniform(w, rng, -1.0, 1.0);
        CHECK(gradcheck({&x, &g, &b}, [&] { return sum(mul(layer_norm(x, g, b), w)); }) < kTol);
    }
}

TEST_CASE("batch norm gradients in eval and train mode", "[tensor][gradcheck]") {
    Rng rng(15);
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t B = 1 + rng.below(3), C = 1 + rng.below(3);
        std::size_t H = 2 + rng.below(3), W = 2 + rng.below(3);
        auto x = Tensor::zeros({B, C, H, W}, true);
        auto g = Tensor::zeros({C}, true);
        auto b = Tensor::zeros({C}, true);
        fill_uniform(x, rng, -2.0, 2.0);
        fill_uniform(g, rng, 0.5, 1.5);
        fill_uniform(b, rng, -0.5, 0.5);
        auto w = Tensor::zeros({B, C, H, W}, false);
        fill_uniform(w, rng, -1.0, 1.0);

        BatchNormState eval_state(C);
        for (auto& v : eval_state.running_mean) v = rng.uniform(-0.5, 0.5);
        for (auto& v : eval_state.running_var) v = rng.uniform(0.5, 2.0);
        CHECK(gradcheck({&x, &g, &b}, [&] {
                  return sum(mul(batch_norm2d(x, g, b, eval_state, false), w));
              }) < kTol);

        // train mode: fresh state per call so running stats do not drift
        CHECK(gradcheck({&x, &g, &b}, [&] {
                  BatchNormState s(C);
                  return sum(mul(batch_norm2d(x, g, b, s, true), w));
              }) < kTol);
    }
}

TEST_CASE("conv2d gradients", "[tensor][gradcheck]") {
    Rng rng(16);
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t B = 1 + rng.below(2), Cin = 1 + rng.below(2), Cout = 1 + rng.below(3);
        std::size_t H = 3 + rng.below(3), W = 3 + rng.below(3);
        std::size_t stride = 1 + rng.below(2);
        auto x = Tensor::zeros({B, Cin, H, W}, true);
        auto w = Tensor::zeros({Cout, Cin, 3, 3}, true);
        fill_uniform(x, rng, -1.0, 1.0);
        fill_uniform(w, rng, -1.0, 1.0);
        auto m = Tensor::zeros({B, Cout, (H + 2 - 3) / stride + 1, (W + 2 - 3) / stride + 1}, false);
        fill_uniform(m, rng, -1.0, 1.0);
        CHECK(gradcheck({&x, &w}, [&] { return sum(mul(conv2d(x, w, stride, 1), m)); }) < kTol);
    }
    // 1x1 projection path
    auto x = Tensor::zeros({1, 2, 4, 4}, true);
    auto w = Tensor::zeros({3, 2, 1, 1}, true);
    Rng rng2(17);
    fill_uniform(x, rng2, -1.0, 1.0);
    fill_uniform(w, rng2, -1.0, 1.0);
    CHECK(gradcheck({&x, &w}, [&] { return sum(mul(conv2d(x, w, 2, 0), conv2d(x, w, 2, 0))); }) < kTol);
}

TEST_CASE("pooling gradients", "[tensor][gradcheck]") {
    Rng rng(18);
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t B = 1 + rng.below(3), C = 1 + rng.below(4);
        std::size_t H = 2 + rng.below(3), W = 2 + rng.below(3);
        auto x = Tensor::zeros({B, C, H, W}, true);
        fill_uniform(x, rng, -1.0, 1.0);
        CHECK(gradcheck({&x}, [&] { return sum(mul(gap2d(x), gap2d(x))); }) < kTol);

        auto t = Tensor::zeros({B, H, C}, true);
        fill_uniform(t, rng, -1.0, 1.0);
        CHECK(gradcheck({&t}, [&] { return sum(mul(gap_tokens(t), gap_tokens(t))); }) < kTol);
    }
}

TEST_CASE("attention gradients", "[tensor][gradcheck]") {
    Rng rng(19);
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t B = 1 + rng.below(2), N = 2 + rng.below(3), D = 4;
        std::size_t heads = (trial % 2 == 0) ? 2 : 1;
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
        CHECK(gradcheck(all, [&] {
                  auto y = multi_head_attention(x, x, w[0], b[0], w[1], b[1], w[2], b[2], w[3],
                                                b[3], heads);
                  return sum(mul(y, y));
              }) < kTol);
    }
}

TEST_CASE("attention with distinct kv input gradients", "[tensor][gradcheck]") {
    Rng rng(20);
    std::size_t B = 1, Nq = 3, Nk = 5, D = 4;
    auto q = Tensor::zeros({B, Nq, D}, true);
    auto kv = Tensor::zeros({B, Nk, D}, true);
    fill_uniform(q, rng, -1.0, 1.0);
    fill_uniform(kv, rng, -1.0, 1.0);
    std::vector<Tensor> w(4), b(4);
    std::vector<Tensor*> all = {&q, &kv};
    for (int i = 0; i < 4; ++i) {
        w[i] = Tensor::zeros({D, D}, true);
        b[i] = Tensor::zeros({D}, true);
        fill_uniform(w[i], rng, -0.7, 0.7);
        fill_uniform(b[i], rng, -0.2, 0.2);
        all.push_back(&w[i]);
    }
    CHECK(gradcheck(all, [&] {
              auto y = multi_head_attention(q, kv, w[0], b[0], w[1], b[1], w[2], b[2], w[3], b[3], 2);
              return sum(mul(y, y));
          }) < kTol);
}

TEST_CASE("cross entropy values", "[tensor]") {
    // p1 = 0.5 for both classes -> ln 2
    auto logits = Tensor::from_data({2, 2}, {0.3, 0.3, -1.1, -1.1}, true);
    CHECK(cross_entropy(logits, {1, 0}).value() == Catch::Approx(std::log(2.0)).epsilon(1e-12));

    // batch {(p=0.8, y=1), (p=0.4, y=0)} -> -(ln 0.8 + ln 0.6)/2
    double z1 = std::log(0.8) - std::log(0.2);
    double z2 = std::log(0.4) - std::log(0.6);
    auto l2 = Tensor::from_data({2, 2}, {0.0, z1, 0.0, z2}, true);
    CHECK(cross_entropy(l2, {1, 0}).value() ==
          Catch::Approx(-(std::log(0.8) + std::log(0.6)) / 2.0).epsilon(1e-9));
    CHECK(cross_entropy(l2, {1, 0}).value() == Catch::Approx(0.3670).margin(5e-5));

    // near-perfect predictions -> loss ~ 0
    auto l3 = Tensor::from_data({2, 2}, {-20.0, 20.0, 20.0, -20.0}, true);
    CHECK(cross_entropy(l3, {1, 0}).value() == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("cross entropy gradients", "[tensor][gradcheck]") {
    Rng rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t B = 1 + rng.below(6);
        auto logits = Tensor::zeros({B, 2}, true);
        fill_uniform(logits, rng, -2.0, 2.0);
        std::vector<int> labels(B);
        for (auto& y : labels) y = rng.bernoulli(0.5) ? 1 : 0;
        CHECK(gradcheck({&logits}, [&] { return cross_entropy(logits, labels); }) < kTol);
    }
}

TEST_CASE("structural op gradients", "[tensor][gradcheck]") {
    Rng rng(22);
    auto x = Tensor::zeros({2, 8, 8}, true);
    fill_uniform(x, rng, -1.0, 1.0);
    CHECK(gradcheck({&x}, [&] { return sum(mul(patchify(x, 4), patchify(x, 4))); }) < kTol);

    auto z = Tensor::zeros({2, 3, 4}, true);
    auto pos = Tensor::zeros({3, 4}, true);
    fill_uniform(z, rng, -1.0, 1.0);
    fill_uniform(pos, rng, -1.0, 1.0);
    CHECK(gradcheck({&z, &pos}, [&] {
              return sum(mul(add_position(z, pos), add_position(z, pos)));
          }) < kTol);

    auto a = Tensor::zeros({2, 2, 3}, true);
    auto b = Tensor::zeros({2, 4, 3}, true);
    fill_uniform(a, rng, -1.0, 1.0);
    fill_uniform(b, rng, -1.0, 1.0);
    CHECK(gradcheck({&a, &b}, [&] {
              auto c = concat_tokens(a, b);
              return sum(mul(c, c));
          }) < kTol);
}

TEST_CASE("forward determinism is bit exact", "[tensor]") {
    Rng rng(23);
    auto x = Tensor::zeros({2, 1, 6, 6});
    auto w = Tensor::zeros({3, 1, 3, 3});
    fill_uniform(x, rng, -1.0, 1.0);
    fill_uniform(w, rng, -1.0, 1.0);
    auto y1 = conv2d(x, w, 1, 1);
    auto y2 = conv2d(x, w, 1, 1);
    CHECK(y1.data() == y2.data());
}
