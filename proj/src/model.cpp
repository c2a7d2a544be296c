#include "tgnef/model.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tgnef {

namespace {
constexpr char kMagic[8] = {'T', 'G', 'N', 'E', 'F', 'C', 'P', '1'};

void ensure_little_endian() {
    uint16_t probe = 1;
    char b;
    std::memcpy(&b, &probe, 1);
    if (b != 1) throw std::runtime_error("checkpoint format requires a little-endian host");
}
}  // namespace

Model::Model(const ModelConfig& cfg, int node_feat_dim, int edge_feat_dim)
    : cfg_(cfg),
      node_feat_dim_(node_feat_dim),
      edge_feat_dim_(edge_feat_dim),
      reg_(mix64(cfg.seed, 0x1717u)) {
    if (cfg_.walk.alpha < 0) throw std::invalid_argument("walk.alpha must be resolved before model build");
    nef_ = std::make_unique<NefModule>(reg_, cfg_.nef, cfg_.walk, node_feat_dim, edge_feat_dim);
    tgn_ = std::make_unique<TgnCore>(reg_, cfg_.tgn, nef_.get(), node_feat_dim, edge_feat_dim);
    edge_dec_ = EdgeDecoder(reg_, cfg_.tgn.d_emb);
    node_dec_ = NodeDecoder(reg_, cfg_.tgn.d_emb, cfg_.n_classes);
}

std::vector<std::vector<double>> Model::snapshot() const {
    std::vector<std::vector<double>> out;
    for (Parameter* p : reg_.all()) out.push_back(p->value);
    return out;
}

void Model::restore(const std::vector<std::vector<double>>& snap) {
    auto params = reg_.all();
    if (snap.size() != params.size()) throw std::runtime_error("snapshot size mismatch");
    for (size_t i = 0; i < params.size(); ++i) params[i]->value = snap[i];
}

void Model::save_checkpoint(const std::string& path, uint64_t config_hash) const {
    ensure_little_endian();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out.write(kMagic, 8);
    uint32_t version = 1;
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&config_hash), 8);
    auto params = reg_.all();
    uint32_t count = static_cast<uint32_t>(params.size());
    out.write(reinterpret_cast<const char*>(&count), 4);
    for (Parameter* p : params) {
        uint16_t nlen = static_cast<uint16_t>(p->name.size());
        out.write(reinterpret_cast<const char*>(&nlen), 2);
        out.write(p->name.data(), nlen);
        uint8_t rank = static_cast<uint8_t>(p->shape.size());
        out.write(reinterpret_cast<const char*>(&rank), 1);
        for (int d : p->shape) {
            uint32_t dim = static_cast<uint32_t>(d);
            out.write(reinterpret_cast<const char*>(&dim), 4);
        }
        out.write(reinterpret_cast<const char*>(p->value.data()),
                  static_cast<std::streamsize>(p->value.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

void Model::load_checkpoint(const std::string& path, uint64_t expected_hash) {
    ensure_little_endian();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("bad checkpoint magic");
    uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    if (version != 1) throw std::runtime_error("unsupported checkpoint version");
    uint64_t hash = 0;
    in.read(reinterpret_cast<char*>(&hash), 8);
    if (expected_hash != 0 && hash != expected_hash)
        throw std::runtime_error("checkpoint was produced under a different configuration");
    uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), 4);
    for (uint32_t i = 0; i < count; ++i) {
        uint16_t nlen = 0;
        in.read(reinterpret_cast<char*>(&nlen), 2);
        std::string name(nlen, '\0');
        in.read(name.data(), nlen);
        uint8_t rank = 0;
        in.read(reinterpret_cast<char*>(&rank), 1);
        std::vector<int> shape(rank);
        size_t numel = 1;
        for (int r = 0; r < rank; ++r) {
            uint32_t dim = 0;
            in.read(reinterpret_cast<char*>(&dim), 4);
            shape[r] = static_cast<int>(dim);
            numel *= dim;
        }
        std::vector<double> data(numel);
        in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(numel * sizeof(double)));
        if (!in) throw std::runtime_error("truncated checkpoint: " + path);
        Parameter* p = reg_.find(name);
        if (!p) throw std::runtime_error("checkpoint has unknown parameter: " + name);
        if (p->shape != shape) throw std::runtime_error("checkpoint shape mismatch for " + name);
        p->value = std::move(data);
    }
}

uint64_t Model::checkpoint_hash(const std::string& path) {
    ensure_little_endian();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    uint64_t hash = 0;
    in.read(reinterpret_cast<char*>(&hash), 8);
    if (!in) throw std::runtime_error("truncated checkpoint header: " + path);
    return hash;
}

}  // namespace tgnef
