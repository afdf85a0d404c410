#pragma once

#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "codelens/error.hpp"
#include "codelens/flops.hpp"
#include "codelens/models.hpp"
#include "codelens/optim.hpp"

namespace codelens::nn {

// Uniform handle over the three classifier architectures; this is what the
// trainer, evaluator and CLI operate on.
class Model {
public:
    enum class Kind { vit, resnet, seq };

    static Model create(Kind kind, const nlohmann::json& config, std::uint64_t seed) {
        Model m;
        m.kind_ = kind;
        switch (kind) {
            case Kind::vit:
                m.vit_ = std::make_unique<ViT>(ViTConfig::from_json(config), seed);
                break;
            case Kind::resnet:
                m.resnet_ = std::make_unique<ResNet>(ResNetConfig::from_json(config), seed);
                break;
            case Kind::seq:
                m.seq_ = std::make_unique<SeqModel>(SeqConfig::from_json(config), seed);
                break;
        }
        return m;
    }

    static Kind kind_from_string(const std::string& s) {
        if (s == "vit") return Kind::vit;
        if (s == "resnet") return Kind::resnet;
        if (s == "seq") return Kind::seq;
        throw Error("unknown model kind: " + s);
    }

    static std::string kind_to_string(Kind k) {
        switch (k) {
            case Kind::vit: return "vit";
            case Kind::resnet: return "resnet";
            case Kind::seq: return "seq";
        }
        return "?";
    }

    Kind kind() const { return kind_; }
    bool is_vision() const { return kind_ != Kind::seq; }

    nlohmann::json config_json() const {
        switch (kind_) {
            case Kind::vit: return vit_->config().to_json();
            case Kind::resnet: return resnet_->config().to_json();
            case Kind::seq: return seq_->config().to_json();
        }
        return {};
    }

    std::size_t canvas_size() const {
        if (kind_ == Kind::vit) return vit_->config().canvas;
        if (kind_ == Kind::resnet) return resnet_->config().canvas;
        return 0;
    }

    void set_training(bool b) {
        if (resnet_) resnet_->set_training(b);
    }

    Tensor forward_canvases(const Tensor& batch) {
        if (kind_ == Kind::vit) return vit_->forward(batch);
        if (kind_ == Kind::resnet) return resnet_->forward(batch);
        throw Error("sequence model cannot consume canvases");
    }

    Tensor forward_sequence(const std::vector<double>& values) {
        if (kind_ != Kind::seq) throw Error("vision model cannot consume a 1D sequence");
        return seq_->forward(values);
    }

    ParamList parameters() {
        switch (kind_) {
            case Kind::vit: return vit_->parameters();
            case Kind::resnet: return resnet_->parameters();
            case Kind::seq: return seq_->parameters();
        }
        return {};
    }

    std::vector<std::pair<std::string, BatchNormState*>> bn_states() {
        if (kind_ == Kind::resnet) return resnet_->bn_states();
        return {};
    }

    std::uint64_t flops(std::size_t seq_length_hint = 256) const {
        switch (kind_) {
            case Kind::vit: return count_flops(vit_->config());
            case Kind::resnet: return count_flops(resnet_->config());
            case Kind::seq: return count_flops(seq_->config(), seq_length_hint);
        }
        return 0;
    }

    ViT* vit() { return vit_.get(); }
    ResNet* resnet() { return resnet_.get(); }
    SeqModel* seq() { return seq_.get(); }

private:
    Kind kind_ = Kind::vit;
    std::unique_ptr<ViT> vit_;
    std::unique_ptr<ResNet> resnet_;
    std::unique_ptr<SeqModel> seq_;
};

// Single-file checkpoint: versioned JSON header (config, tensor names and
// shapes, optimizer state layout, training metadata) followed by raw
// little-endian doubles in header order.
inline constexpr char kCheckpointMagic[8] = {'C', 'L', 'C', 'K', '0', '0', '0', '1'};

inline void save_checkpoint(const std::string& path, Model& model, const nlohmann::json& metadata,
                            Adam* adam = nullptr) {
    auto params = model.parameters();
    auto bns = model.bn_states();

    nlohmann::json header;
    header["version"] = 1;
    header["kind"] = Model::kind_to_string(model.kind());
    header["config"] = model.config_json();
    header["metadata"] = metadata;

    std::vector<const std::vector<double>*> blobs;
    auto params_j = nlohmann::json::array();
    for (auto& [name, p] : params) {
        params_j.push_back({{"name", name}, {"shape", p.shape()}});
        blobs.push_back(&p.data());
    }
    header["params"] = std::move(params_j);

    auto buffers_j = nlohmann::json::array();
    for (auto& [name, state] : bns) {
        buffers_j.push_back({{"name", name + ".running_mean"}, {"size", state->running_mean.size()}});
        blobs.push_back(&state->running_mean);
        buffers_j.push_back({{"name", name + ".running_var"}, {"size", state->running_var.size()}});
        blobs.push_back(&state->running_var);
    }
    header["buffers"] = std::move(buffers_j);

    if (adam) {
        auto adam_j = nlohmann::json::object();
        adam_j["t"] = adam->step_count();
        auto entries = nlohmann::json::array();
        for (auto& [name, p] : params) {
            auto it = adam->state().find(name);
            if (it == adam->state().end()) continue;
            entries.push_back({{"name", name}, {"size", it->second.m.size()}});
            blobs.push_back(&it->second.m);
            blobs.push_back(&it->second.v);
        }
        adam_j["entries"] = std::move(entries);
        header["adam"] = std::move(adam_j);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint: " + path);
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    std::string hs = header.dump();
    std::uint64_t hlen = hs.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof hlen);
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto* blob : blobs)
        out.write(reinterpret_cast<const char*>(blob->data()),
                  static_cast<std::streamsize>(blob->size() * sizeof(double)));
    if (!out) throw Error("short write on checkpoint: " + path);
}

struct LoadedCheckpoint {
    Model model;
    nlohmann::json metadata;
    nlohmann::json header;
};

inline LoadedCheckpoint load_checkpoint(const std::string& path, std::unique_ptr<Adam>* adam_out = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw Error("not a checkpoint file: " + path);
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof hlen);
    std::string hs(hlen, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(hlen));
    nlohmann::json header = nlohmann::json::parse(hs);

    LoadedCheckpoint lc{Model::create(Model::kind_from_string(header.at("kind")),
                                      header.at("config"), 0),
                        header.value("metadata", nlohmann::json::object()), header};

    auto read_blob = [&](std::vector<double>& dst, std::size_t n) {
        dst.resize(n);
        in.read(reinterpret_cast<char*>(dst.data()), static_cast<std::streamsize>(n * sizeof(double)));
        if (!in) throw Error("truncated checkpoint: " + path);
    };

    auto params = lc.model.parameters();
    std::size_t idx = 0;
    for (const auto& pj : header.at("params")) {
        if (idx >= params.size() || params[idx].first != pj.at("name").get<std::string>())
            throw Error("checkpoint parameter order mismatch at " + pj.at("name").get<std::string>());
        read_blob(params[idx].second.data(), params[idx].second.numel());
        ++idx;
    }
    auto bns = lc.model.bn_states();
    std::size_t bidx = 0;
    for (const auto& bj : header.at("buffers")) {
        std::size_t n = bj.at("size");
        std::string name = bj.at("name");
        bool is_mean = name.ends_with(".running_mean");
        if (bidx / 2 >= bns.size()) throw Error("checkpoint buffer overflow");
        auto& state = *bns[bidx / 2].second;
        read_blob(is_mean ? state.running_mean : state.running_var, n);
        ++bidx;
    }
    if (adam_out && header.contains("adam")) {
        auto adam = std::make_unique<Adam>();
        // note: config (lr etc.) is supplied by the caller resuming training
        adam->set_step_count(header["adam"].at("t").get<long>());
        for (const auto& ej : header["adam"].at("entries")) {
            auto& st = adam->state()[ej.at("name").get<std::string>()];
            read_blob(st.m, ej.at("size"));
            read_blob(st.v, ej.at("size"));
        }
        *adam_out = std::move(adam);
    }
    return lc;
}

} // namespace codelens::nn
