#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "codelens/grid.hpp"
#include "codelens/optim.hpp"
#include "codelens/tensor.hpp"

namespace codelens::nn {

// Batch of canvases as a (B, H, W) data tensor.
inline Tensor canvas_batch(const std::vector<const Canvas*>& canvases) {
    if (canvases.empty()) throw ShapeError("canvas_batch: empty batch");
    std::size_t H = canvases[0]->height, W = canvases[0]->width;
    Tensor t = Tensor::zeros({canvases.size(), H, W});
    for (std::size_t i = 0; i < canvases.size(); ++i) {
        if (canvases[i]->height != H || canvases[i]->width != W)
            throw ShapeError("canvas_batch: mixed canvas sizes");
        std::copy(canvases[i]->pixels.begin(), canvases[i]->pixels.end(),
                  t.data().begin() + static_cast<std::ptrdiff_t>(i * H * W));
    }
    return t;
}

// (B, H, W) -> (B*N, P*P) patches in row-major patch order.
inline Tensor patchify(const Tensor& x, std::size_t patch) {
    if (x.shape().size() != 3)
        throw ShapeError("patchify: expected (B,H,W), got " + shape_str(x.shape()));
    std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2);
    if (H % patch != 0 || W % patch != 0)
        throw ShapeError("patchify: canvas " + shape_str(x.shape()) + " not divisible by patch " +
                         std::to_string(patch));
    std::size_t gy = H / patch, gx = W / patch, N = gy * gx, PP = patch * patch;
    auto out = detail::make_node({B * N, PP}, {x.impl()}, [=](TensorImpl& self) {
        auto& px = *self.parents[0];
        px.ensure_grad();
        for (std::size_t n = 0; n < B; ++n)
            for (std::size_t p = 0; p < N; ++p) {
                std::size_t py = p / gx, pxi = p % gx;
                for (std::size_t yy = 0; yy < patch; ++yy)
                    for (std::size_t xx = 0; xx < patch; ++xx)
                        px.grad[(n * H + py * patch + yy) * W + pxi * patch + xx] +=
                            self.grad[(n * N + p) * PP + yy * patch + xx];
            }
    });
    for (std::size_t n = 0; n < B; ++n)
        for (std::size_t p = 0; p < N; ++p) {
            std::size_t py = p / gx, pxi = p % gx;
            for (std::size_t yy = 0; yy < patch; ++yy)
                for (std::size_t xx = 0; xx < patch; ++xx)
                    out.data()[(n * N + p) * PP + yy * patch + xx] =
                        x.data()[(n * H + py * patch + yy) * W + pxi * patch + xx];
        }
    return out;
}

// z (B, N, D) + pos (N, D), broadcast over the batch.
inline Tensor add_position(const Tensor& z, const Tensor& pos) {
    if (z.shape().size() != 3 || pos.shape().size() != 2 || z.dim(1) != pos.dim(0) ||
        z.dim(2) != pos.dim(1))
        throw ShapeError("add_position: z=" + shape_str(z.shape()) + " pos=" + shape_str(pos.shape()));
    std::size_t B = z.dim(0), N = z.dim(1), D = z.dim(2);
    auto out = detail::make_node(z.shape(), {z.impl(), pos.impl()}, [B, N, D](TensorImpl& self) {
        auto& pz = *self.parents[0];
        auto& pp = *self.parents[1];
        pz.ensure_grad();
        pp.ensure_grad();
        for (std::size_t n = 0; n < B; ++n)
            for (std::size_t i = 0; i < N * D; ++i) {
                pz.grad[n * N * D + i] += self.grad[n * N * D + i];
                pp.grad[i] += self.grad[n * N * D + i];
            }
    });
    for (std::size_t n = 0; n < B; ++n)
        for (std::size_t i = 0; i < N * D; ++i)
            out.data()[n * N * D + i] = z.data()[n * N * D + i] + pos.data()[i];
    return out;
}

// Concatenate along the token axis: (B, Na, D) ++ (B, Nb, D).
inline Tensor concat_tokens(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 3 || b.shape().size() != 3 || a.dim(0) != b.dim(0) ||
        a.dim(2) != b.dim(2))
        throw ShapeError("concat_tokens: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    std::size_t B = a.dim(0), Na = a.dim(1), Nb = b.dim(1), D = a.dim(2);
    auto out = detail::make_node({B, Na + Nb, D}, {a.impl(), b.impl()},
                                 [B, Na, Nb, D](TensorImpl& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        pa.ensure_grad();
        pb.ensure_grad();
        for (std::size_t n = 0; n < B; ++n) {
            for (std::size_t i = 0; i < Na * D; ++i)
                pa.grad[n * Na * D + i] += self.grad[n * (Na + Nb) * D + i];
            for (std::size_t i = 0; i < Nb * D; ++i)
                pb.grad[n * Nb * D + i] += self.grad[n * (Na + Nb) * D + Na * D + i];
        }
    });
    for (std::size_t n = 0; n < B; ++n) {
        for (std::size_t i = 0; i < Na * D; ++i)
            out.data()[n * (Na + Nb) * D + i] = a.data()[n * Na * D + i];
        for (std::size_t i = 0; i < Nb * D; ++i)
            out.data()[n * (Na + Nb) * D + Na * D + i] = b.data()[n * Nb * D + i];
    }
    return out;
}

struct TransformerLayer {
    Tensor ln1_g, ln1_b;
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln2_g, ln2_b;
    Tensor mlp_w1, mlp_b1, mlp_w2, mlp_b2;

    void init(std::size_t dim, std::size_t mlp_dim, Rng& rng) {
        ln1_g = Tensor::zeros({dim}, true);
        constant_init(ln1_g, 1.0);
        ln1_b = Tensor::zeros({dim}, true);
        for (Tensor* w : {&wq, &wk, &wv, &wo}) {
            *w = Tensor::zeros({dim, dim}, true);
            trunc_normal_init(*w, rng);
        }
        bq = Tensor::zeros({dim}, true);
        bk = Tensor::zeros({dim}, true);
        bv = Tensor::zeros({dim}, true);
        bo = Tensor::zeros({dim}, true);
        ln2_g = Tensor::zeros({dim}, true);
        constant_init(ln2_g, 1.0);
        ln2_b = Tensor::zeros({dim}, true);
        mlp_w1 = Tensor::zeros({dim, mlp_dim}, true);
        trunc_normal_init(mlp_w1, rng);
        mlp_b1 = Tensor::zeros({mlp_dim}, true);
        mlp_w2 = Tensor::zeros({mlp_dim, dim}, true);
        trunc_normal_init(mlp_w2, rng);
        mlp_b2 = Tensor::zeros({dim}, true);
    }

    void collect(const std::string& prefix, ParamList& out) {
        out.emplace_back(prefix + ".ln1.g", ln1_g);
        out.emplace_back(prefix + ".ln1.b", ln1_b);
        out.emplace_back(prefix + ".attn.wq", wq);
        out.emplace_back(prefix + ".attn.bq", bq);
        out.emplace_back(prefix + ".attn.wk", wk);
        out.emplace_back(prefix + ".attn.bk", bk);
        out.emplace_back(prefix + ".attn.wv", wv);
        out.emplace_back(prefix + ".attn.bv", bv);
        out.emplace_back(prefix + ".attn.wo", wo);
        out.emplace_back(prefix + ".attn.bo", bo);
        out.emplace_back(prefix + ".ln2.g", ln2_g);
        out.emplace_back(prefix + ".ln2.b", ln2_b);
        out.emplace_back(prefix + ".mlp.w1", mlp_w1);
        out.emplace_back(prefix + ".mlp.b1", mlp_b1);
        out.emplace_back(prefix + ".mlp.w2", mlp_w2);
        out.emplace_back(prefix + ".mlp.b2", mlp_b2);
    }

    // pre-norm residual block: x + MSA(LN(x)), then u + MLP(LN(u))
    Tensor forward(const Tensor& x, std::size_t heads) const {
        auto normed = layer_norm(x, ln1_g, ln1_b);
        auto attn = multi_head_attention(normed, normed, wq, bq, wk, bk, wv, bv, wo, bo, heads);
        auto u = add(x, attn);
        auto normed2 = layer_norm(u, ln2_g, ln2_b);
        std::size_t B = u.dim(0), N = u.dim(1), D = u.dim(2);
        auto flat = reshape(normed2, {B * N, D});
        auto hidden = gelu(linear(flat, mlp_w1, mlp_b1, "mlp.fc1"));
        auto mlp_out = reshape(linear(hidden, mlp_w2, mlp_b2, "mlp.fc2"), {B, N, D});
        return add(u, mlp_out);
    }

    // memory variant: queries from x, keys/values from [mem; x]
    Tensor forward_with_memory(const Tensor& x, const Tensor* mem, std::size_t heads) const {
        Tensor kv_src = mem ? concat_tokens(*mem, x) : x;
        auto q_normed = layer_norm(x, ln1_g, ln1_b);
        auto kv_normed = layer_norm(kv_src, ln1_g, ln1_b);
        auto attn = multi_head_attention(q_normed, kv_normed, wq, bq, wk, bk, wv, bv, wo, bo, heads);
        auto u = add(x, attn);
        auto normed2 = layer_norm(u, ln2_g, ln2_b);
        std::size_t B = u.dim(0), N = u.dim(1), D = u.dim(2);
        auto flat = reshape(normed2, {B * N, D});
        auto hidden = gelu(linear(flat, mlp_w1, mlp_b1, "mlp.fc1"));
        auto mlp_out = reshape(linear(hidden, mlp_w2, mlp_b2, "mlp.fc2"), {B, N, D});
        return add(u, mlp_out);
    }
};

// ---------------------------------------------------------------------------
// ViT
// ---------------------------------------------------------------------------

struct ViTConfig {
    std::size_t canvas = 64;
    std::size_t patch = 8;
    std::size_t embed_dim = 128;
    std::size_t layers = 3;
    std::size_t heads = 4;
    std::size_t mlp_dim = 256;

    std::size_t num_patches() const { return (canvas / patch) * (canvas / patch); }

    nlohmann::json to_json() const {
        return {{"canvas", canvas}, {"patch", patch},   {"embed_dim", embed_dim},
                {"layers", layers}, {"heads", heads},   {"mlp_dim", mlp_dim}};
    }
    static ViTConfig from_json(const nlohmann::json& j) {
        ViTConfig c;
        c.canvas = j.at("canvas");
        c.patch = j.at("patch");
        c.embed_dim = j.at("embed_dim");
        c.layers = j.at("layers");
        c.heads = j.at("heads");
        c.mlp_dim = j.at("mlp_dim");
        return c;
    }
};

class ViT {
public:
    ViT(ViTConfig cfg, std::uint64_t seed) : cfg_(cfg) {
        if (cfg_.canvas % cfg_.patch != 0)
            throw ShapeError("vit: canvas not divisible by patch size");
        Rng rng(seed);
        std::size_t pp = cfg_.patch * cfg_.patch;
        patch_w_ = Tensor::zeros({pp, cfg_.embed_dim}, true);
        trunc_normal_init(patch_w_, rng);
        patch_b_ = Tensor::zeros({cfg_.embed_dim}, true);
        pos_ = Tensor::zeros({cfg_.num_patches(), cfg_.embed_dim}, true);
        trunc_normal_init(pos_, rng);
        layers_.resize(cfg_.layers);
        for (auto& l : layers_) l.init(cfg_.embed_dim, cfg_.mlp_dim, rng);
        head_w1_ = Tensor::zeros({cfg_.embed_dim, cfg_.mlp_dim}, true);
        trunc_normal_init(head_w1_, rng);
        head_b1_ = Tensor::zeros({cfg_.mlp_dim}, true);
        head_w2_ = Tensor::zeros({cfg_.mlp_dim, 2}, true);
        trunc_normal_init(head_w2_, rng);
        head_b2_ = Tensor::zeros({2}, true);
    }

    const ViTConfig& config() const { return cfg_; }

    // canvases (B, H, W) -> logits (B, 2)
    Tensor forward(const Tensor& x) const {
        std::size_t B = x.dim(0);
        auto patches = patchify(x, cfg_.patch);                     // (B*N, P^2)
        auto embedded = linear(patches, patch_w_, patch_b_, "vit.embed");
        auto z = add_position(reshape(embedded, {B, cfg_.num_patches(), cfg_.embed_dim}), pos_);
        for (const auto& l : layers_) z = l.forward(z, cfg_.heads);
        auto pooled = gap_tokens(z);                                // (B, D)
        auto hidden = gelu(linear(pooled, head_w1_, head_b1_, "vit.head.fc1"));
        return linear(hidden, head_w2_, head_b2_, "vit.head.fc2"); // (B, 2)
    }

    ParamList parameters() {
        ParamList out;
        out.emplace_back("patch.w", patch_w_);
        out.emplace_back("patch.b", patch_b_);
        out.emplace_back("pos", pos_);
        for (std::size_t i = 0; i < layers_.size(); ++i)
            layers_[i].collect("layer" + std::to_string(i), out);
        out.emplace_back("head.w1", head_w1_);
        out.emplace_back("head.b1", head_b1_);
        out.emplace_back("head.w2", head_w2_);
        out.emplace_back("head.b2", head_b2_);
        return out;
    }

    Tensor& position_embedding() { return pos_; }

private:
    ViTConfig cfg_;
    Tensor patch_w_, patch_b_, pos_;
    std::vector<TransformerLayer> layers_;
    Tensor head_w1_, head_b1_, head_w2_, head_b2_;
};

// ---------------------------------------------------------------------------
// ResNet
// ---------------------------------------------------------------------------

struct ResNetConfig {
    std::size_t canvas = 64;
    std::size_t base_width = 16;
    std::size_t blocks_per_stage = 9; // depth = 6*blocks + 2

    nlohmann::json to_json() const {
        return {{"canvas", canvas}, {"base_width", base_width},
                {"blocks_per_stage", blocks_per_stage}};
    }
    static ResNetConfig from_json(const nlohmann::json& j) {
        ResNetConfig c;
        c.canvas = j.at("canvas");
        c.base_width = j.at("base_width");
        c.blocks_per_stage = j.at("blocks_per_stage");
        return c;
    }
};

class ResNet {
public:
    ResNet(ResNetConfig cfg, std::uint64_t seed) : cfg_(cfg) {
        Rng rng(seed);
        std::size_t w = cfg_.base_width;
        stem_w_ = Tensor::zeros({w, 1, 3, 3}, true);
        he_normal_init(stem_w_, rng, 9);
        stem_g_ = Tensor::zeros({w}, true);
        constant_init(stem_g_, 1.0);
        stem_b_ = Tensor::zeros({w}, true);
        stem_bn_ = BatchNormState(w);

        std::size_t in_ch = w;
        for (std::size_t stage = 0; stage < 3; ++stage) {
            std::size_t out_ch = w << stage;
            for (std::size_t b = 0; b < cfg_.blocks_per_stage; ++b) {
                Block blk;
                blk.stride = (stage > 0 && b == 0) ? 2 : 1;
                blk.in_ch = in_ch;
                blk.out_ch = out_ch;
                blk.c1 = Tensor::zeros({out_ch, in_ch, 3, 3}, true);
                he_normal_init(blk.c1, rng, in_ch * 9);
                blk.bn1_g = Tensor::zeros({out_ch}, true);
                constant_init(blk.bn1_g, 1.0);
                blk.bn1_b = Tensor::zeros({out_ch}, true);
                blk.bn1 = BatchNormState(out_ch);
                blk.c2 = Tensor::zeros({out_ch, out_ch, 3, 3}, true);
                he_normal_init(blk.c2, rng, out_ch * 9);
                blk.bn2_g = Tensor::zeros({out_ch}, true); // zero-init: block starts as identity
                blk.bn2_b = Tensor::zeros({out_ch}, true);
                blk.bn2 = BatchNormState(out_ch);
                if (blk.stride != 1 || in_ch != out_ch) {
                    blk.has_proj = true;
                    blk.proj_w = Tensor::zeros({out_ch, in_ch, 1, 1}, true);
                    he_normal_init(blk.proj_w, rng, in_ch);
                    blk.proj_g = Tensor::zeros({out_ch}, true);
                    constant_init(blk.proj_g, 1.0);
                    blk.proj_b = Tensor::zeros({out_ch}, true);
                    blk.proj_bn = BatchNormState(out_ch);
                }
                blocks_.push_back(std::move(blk));
                in_ch = out_ch;
            }
        }
        fc_w_ = Tensor::zeros({in_ch, 2}, true);
        trunc_normal_init(fc_w_, rng);
        fc_b_ = Tensor::zeros({2}, true);
    }

    const ResNetConfig& config() const { return cfg_; }

    void set_training(bool b) { training_ = b; }
    bool training() const { return training_; }

    // x (B, 1, H, W) or (B, H, W) -> logits (B, 2)
    Tensor forward(const Tensor& input) {
        Tensor x = input;
        if (x.shape().size() == 3) x = reshape(x, {x.dim(0), 1, x.dim(1), x.dim(2)});
        if (x.shape().size() != 4 || x.dim(1) != 1)
            throw ShapeError("resnet: expected single-channel (B,1,H,W), got " +
                             shape_str(input.shape()));
        // x1 = ReLU(BN(Conv3x3(X)))
        auto h = relu(batch_norm2d(conv2d(x, stem_w_, 1, 1, "resnet.stem"), stem_g_, stem_b_,
                                   stem_bn_, training_, "resnet.stem.bn"));
        for (auto& blk : blocks_) {
            // F = BN(Conv(ReLU(BN(Conv(x)))))
            auto f = batch_norm2d(conv2d(h, blk.c1, blk.stride, 1, "block.conv1"), blk.bn1_g,
                                  blk.bn1_b, blk.bn1, training_, "block.bn1");
            f = batch_norm2d(conv2d(relu(f), blk.c2, 1, 1, "block.conv2"), blk.bn2_g, blk.bn2_b,
                             blk.bn2, training_, "block.bn2");
            Tensor shortcut = h;
            if (blk.has_proj)
                shortcut = batch_norm2d(conv2d(h, blk.proj_w, blk.stride, 0, "block.proj"),
                                        blk.proj_g, blk.proj_b, blk.proj_bn, training_,
                                        "block.proj.bn");
            h = relu(add(shortcut, f));
        }
        auto pooled = gap2d(h);
        return linear(pooled, fc_w_, fc_b_, "resnet.fc");
    }

    ParamList parameters() {
        ParamList out;
        out.emplace_back("stem.w", stem_w_);
        out.emplace_back("stem.bn.g", stem_g_);
        out.emplace_back("stem.bn.b", stem_b_);
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            std::string p = "block" + std::to_string(i);
            auto& b = blocks_[i];
            out.emplace_back(p + ".c1", b.c1);
            out.emplace_back(p + ".bn1.g", b.bn1_g);
            out.emplace_back(p + ".bn1.b", b.bn1_b);
            out.emplace_back(p + ".c2", b.c2);
            out.emplace_back(p + ".bn2.g", b.bn2_g);
            out.emplace_back(p + ".bn2.b", b.bn2_b);
            if (b.has_proj) {
                out.emplace_back(p + ".proj.w", b.proj_w);
                out.emplace_back(p + ".proj.bn.g", b.proj_g);
                out.emplace_back(p + ".proj.bn.b", b.proj_b);
            }
        }
        out.emplace_back("fc.w", fc_w_);
        out.emplace_back("fc.b", fc_b_);
        return out;
    }

    // mutable views of the BatchNorm running statistics, for checkpoints
    std::vector<std::pair<std::string, BatchNormState*>> bn_states() {
        std::vector<std::pair<std::string, BatchNormState*>> out;
        out.emplace_back("stem.bn", &stem_bn_);
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            std::string p = "block" + std::to_string(i);
            out.emplace_back(p + ".bn1", &blocks_[i].bn1);
            out.emplace_back(p + ".bn2", &blocks_[i].bn2);
            if (blocks_[i].has_proj) out.emplace_back(p + ".proj.bn", &blocks_[i].proj_bn);
        }
        return out;
    }

    struct Block {
        std::size_t stride = 1;
        std::size_t in_ch = 0, out_ch = 0;
        Tensor c1, bn1_g, bn1_b, c2, bn2_g, bn2_b;
        BatchNormState bn1, bn2;
        bool has_proj = false;
        Tensor proj_w, proj_g, proj_b;
        BatchNormState proj_bn;
    };

    std::vector<Block>& blocks() { return blocks_; }

private:
    ResNetConfig cfg_;
    Tensor stem_w_, stem_g_, stem_b_;
    BatchNormState stem_bn_;
    std::vector<Block> blocks_;
    Tensor fc_w_, fc_b_;
    bool training_ = false;
};

// ---------------------------------------------------------------------------
// sequence baseline: segment-recurrent transformer encoder
// ---------------------------------------------------------------------------

struct SeqConfig {
    std::size_t hidden = 512;
    std::size_t layers = 6;
    std::size_t heads = 8;
    std::size_t mlp_dim = 1024;
    std::size_t segment_len = 64;
    std::size_t memory_len = 50;

    nlohmann::json to_json() const {
        return {{"hidden", hidden},         {"layers", layers},
                {"heads", heads},           {"mlp_dim", mlp_dim},
                {"segment_len", segment_len}, {"memory_len", memory_len}};
    }
    static SeqConfig from_json(const nlohmann::json& j) {
        SeqConfig c;
        c.hidden = j.at("hidden");
        c.layers = j.at("layers");
        c.heads = j.at("heads");
        c.mlp_dim = j.at("mlp_dim");
        c.segment_len = j.at("segment_len");
        c.memory_len = j.at("memory_len");
        return c;
    }
};

class SeqModel {
public:
    SeqModel(SeqConfig cfg, std::uint64_t seed) : cfg_(cfg) {
        Rng rng(seed);
        in_w_ = Tensor::zeros({1, cfg_.hidden}, true);
        trunc_normal_init(in_w_, rng);
        in_b_ = Tensor::zeros({cfg_.hidden}, true);
        layers_.resize(cfg_.layers);
        for (auto& l : layers_) l.init(cfg_.hidden, cfg_.mlp_dim, rng);
        head_w_ = Tensor::zeros({cfg_.hidden, 2}, true);
        trunc_normal_init(head_w_, rng);
        head_b_ = Tensor::zeros({2}, true);
    }

    const SeqConfig& config() const { return cfg_; }

    void set_memory_enabled(bool b) { memory_enabled_ = b; }

    // one sample: values (len) -> logits (1, 2)
    Tensor forward(const std::vector<double>& values) {
        if (values.empty()) throw ShapeError("seq model: empty input");
        std::size_t len = values.size();
        std::size_t seg = cfg_.segment_len;
        std::vector<Tensor> memory(cfg_.layers); // detached previous-segment states
        std::vector<bool> has_memory(cfg_.layers, false);

        Tensor pooled_sum = Tensor::zeros({1, cfg_.hidden});
        std::size_t processed = 0;
        for (std::size_t start = 0; start < len; start += seg) {
            std::size_t n = std::min(seg, len - start);
            // scalar projection + absolute sinusoidal position encoding
            Tensor x = Tensor::from_data({n, 1},
                std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(start),
                                    values.begin() + static_cast<std::ptrdiff_t>(start + n)));
            auto h2 = linear(x, in_w_, in_b_, "seq.embed"); // (n, hidden)
            auto h = reshape(h2, {1, n, cfg_.hidden});
            h = add_position(h, sinusoidal(start, n));

            for (std::size_t li = 0; li < cfg_.layers; ++li) {
                Tensor cur_input = h;
                const Tensor* mem = (memory_enabled_ && has_memory[li]) ? &memory[li] : nullptr;
                h = layers_[li].forward_with_memory(h, mem, cfg_.heads);
                // cache the last memory_len positions of this segment's input,
                // detached: gradients do not flow across segments
                if (memory_enabled_ && cfg_.memory_len > 0) {
                    Tensor detached = cur_input.detach();
                    memory[li] = tail_tokens(detached, cfg_.memory_len);
                    has_memory[li] = true;
                }
            }
            // accumulate sum over positions for global mean pooling
            auto seg_sum = scale(gap_tokens(h), static_cast<double>(n)); // (1, hidden)
            pooled_sum = add(pooled_sum, seg_sum);
            processed += n;
        }
        auto pooled = scale(pooled_sum, 1.0 / static_cast<double>(processed));
        return linear(pooled, head_w_, head_b_, "seq.head");
    }

    ParamList parameters() {
        ParamList out;
        out.emplace_back("embed.w", in_w_);
        out.emplace_back("embed.b", in_b_);
        for (std::size_t i = 0; i < layers_.size(); ++i)
            layers_[i].collect("layer" + std::to_string(i), out);
        out.emplace_back("head.w", head_w_);
        out.emplace_back("head.b", head_b_);
        return out;
    }

private:
    Tensor sinusoidal(std::size_t offset, std::size_t n) const {
        Tensor pos = Tensor::zeros({n, cfg_.hidden});
        for (std::size_t i = 0; i < n; ++i) {
            double p = static_cast<double>(offset + i);
            for (std::size_t d = 0; d < cfg_.hidden; d += 2) {
                double rate = std::pow(10000.0, -static_cast<double>(d) /
                                                     static_cast<double>(cfg_.hidden));
                pos.data()[i * cfg_.hidden + d] = std::sin(p * rate);
                if (d + 1 < cfg_.hidden) pos.data()[i * cfg_.hidden + d + 1] = std::cos(p * rate);
            }
        }
        return pos;
    }

    static Tensor tail_tokens(const Tensor& x, std::size_t max_len) {
        std::size_t N = x.dim(1), D = x.dim(2);
        std::size_t keep = std::min(N, max_len);
        Tensor t = Tensor::zeros({1, keep, D});
        std::copy(x.data().end() - static_cast<std::ptrdiff_t>(keep * D), x.data().end(),
                  t.data().begin());
        return t;
    }

    SeqConfig cfg_;
    Tensor in_w_, in_b_;
    std::vector<TransformerLayer> layers_;
    Tensor head_w_, head_b_;
    bool memory_enabled_ = true;
};

// ---------------------------------------------------------------------------
// size ladder presets
// ---------------------------------------------------------------------------

inline ViTConfig vit_preset(const std::string& name, std::size_t canvas = 64) {
    ViTConfig c;
    c.canvas = canvas;
    c.patch = 8;
    if (name == "tiny") {
        c.embed_dim = 32; c.layers = 1; c.heads = 2; c.mlp_dim = 64;
    } else if (name == "small") {
        c.embed_dim = 64; c.layers = 2; c.heads = 4; c.mlp_dim = 128;
    } else if (name == "medium") {
        c.embed_dim = 96; c.layers = 3; c.heads = 4; c.mlp_dim = 192;
    } else if (name == "large") {
        c.embed_dim = 160; c.layers = 4; c.heads = 4; c.mlp_dim = 320;
    } else if (name == "default") {
        c.embed_dim = 128; c.layers = 3; c.heads = 4; c.mlp_dim = 256;
    } else {
        throw Error("unknown vit preset: " + name);
    }
    return c;
}

inline ResNetConfig resnet_preset(const std::string& name, std::size_t canvas = 64) {
    ResNetConfig c;
    c.canvas = canvas;
    if (name == "tiny") {
        c.base_width = 4; c.blocks_per_stage = 1;
    } else if (name == "small") {
        c.base_width = 8; c.blocks_per_stage = 1;
    } else if (name == "medium") {
        c.base_width = 12; c.blocks_per_stage = 2;
    } else if (name == "large") {
        c.base_width = 16; c.blocks_per_stage = 3;
    } else if (name == "default") {
        c.base_width = 16; c.blocks_per_stage = 9; // ResNet-56
    } else {
        throw Error("unknown resnet preset: " + name);
    }
    return c;
}

inline SeqConfig seq_preset(const std::string& name) {
    SeqConfig c;
    if (name == "tiny") {
        c.hidden = 16; c.layers = 1; c.heads = 2; c.mlp_dim = 32;
        c.segment_len = 16; c.memory_len = 8;
    } else if (name == "small") {
        c.hidden = 32; c.layers = 2; c.heads = 2; c.mlp_dim = 64;
        c.segment_len = 32; c.memory_len = 16;
    } else if (name == "medium") {
        c.hidden = 64; c.layers = 3; c.heads = 4; c.mlp_dim = 128;
        c.segment_len = 48; c.memory_len = 32;
    } else if (name == "default") {
        c.hidden = 512; c.layers = 6; c.heads = 8; c.mlp_dim = 1024;
        c.segment_len = 64; c.memory_len = 50;
    } else {
        throw Error("unknown seq preset: " + name);
    }
    return c;
}

inline nlohmann::json preset_config(const std::string& kind, const std::string& name,
                                    std::size_t canvas = 64) {
    if (kind == "vit") return vit_preset(name, canvas).to_json();
    if (kind == "resnet") return resnet_preset(name, canvas).to_json();
    if (kind == "seq") return seq_preset(name).to_json();
    throw Error("unknown model kind: " + kind);
}

} // namespace codelens::nn
