#pragma once

// Bundles every trainable block behind one seeded parameter registry, plus
// binary checkpointing of the named weights.

#include <memory>
#include <string>

#include "tgnef/decoders.hpp"
#include "tgnef/nef.hpp"
#include "tgnef/tgn.hpp"
#include "tgnef/walk_sampler.hpp"

namespace tgnef {

struct ModelConfig {
    uint64_t seed = 7;
    WalkConfig walk;      // walk.alpha < 0 requests auto-tuning from the data
    NefConfig nef;
    TgnConfig tgn;
    double dropout = 0.1;
    int n_classes = 2;
};

class Model {
public:
    Model(const ModelConfig& cfg, int node_feat_dim, int edge_feat_dim);

    const ModelConfig& config() const { return cfg_; }
    ParamRegistry& params() { return reg_; }
    const NefModule& nef() const { return *nef_; }
    TgnCore& tgn() { return *tgn_; }
    const TgnCore& tgn() const { return *tgn_; }
    const EdgeDecoder& edge_decoder() const { return edge_dec_; }
    const NodeDecoder& node_decoder() const { return node_dec_; }
    int node_feat_dim() const { return node_feat_dim_; }
    int edge_feat_dim() const { return edge_feat_dim_; }

    // Flat weight snapshot for in-memory best-epoch restore.
    std::vector<std::vector<double>> snapshot() const;
    void restore(const std::vector<std::vector<double>>& snap);

    // Little-endian binary checkpoint tagged with a config hash.
    void save_checkpoint(const std::string& path, uint64_t config_hash) const;
    // Loads by name; throws on shape or hash mismatch (hash check skipped
    // when expected_hash == 0).
    void load_checkpoint(const std::string& path, uint64_t expected_hash = 0);
    static uint64_t checkpoint_hash(const std::string& path);

private:
    ModelConfig cfg_;
    int node_feat_dim_;
    int edge_feat_dim_;
    ParamRegistry reg_;
    std::unique_ptr<NefModule> nef_;
    std::unique_ptr<TgnCore> tgn_;
    EdgeDecoder edge_dec_;
    NodeDecoder node_dec_;
};

}  // namespace tgnef
