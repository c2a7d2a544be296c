#pragma once

// Neighborhood edge features. For a node pair (i, j) at time t we sample K
// backward walks from each endpoint, replace node identities with per-set
// positional frequency counts, encode every step (position counts through a
// shared MLP, time gaps through trainable cosine features, raw attributes),
// run a walk encoder, aggregate per walk, and average over all 2K walks.
// The result depends on the pair's neighborhood structure, never on raw ids.

#include <cstdint>
#include <vector>

#include "tgnef/event_graph.hpp"
#include "tgnef/nn.hpp"
#include "tgnef/tensor.hpp"
#include "tgnef/walk_sampler.hpp"

namespace tgnef {

// Per-position occurrence counts of one node across a walk set (length M+1).
struct PositionalFrequency {
    std::vector<int> counts;
};

struct AnonymizedStep {
    std::vector<int> g_own;    // counts within the step's own walk set
    std::vector<int> g_other;  // counts within the counterpart's walk set
    double dt = 0.0;           // gap to the previous step, 0 at the origin and on pads
    std::vector<double> attrs; // node features ++ edge features, zeros on pads
    bool pad = false;
};

struct AnonymizedWalk {
    std::vector<AnonymizedStep> steps;  // length M+1
};

// Both endpoint walk sets after anonymization; first K walks belong to the
// first endpoint, the remaining K to the second.
struct AnonymizedEdge {
    std::vector<AnonymizedWalk> walks;
};

enum class WalkEncoderKind { BiRecurrent, MaskedMean };
enum class WalkAggKind { Identity, SelfAttention };

struct NefConfig {
    int d_pos = 8;
    int d_time = 8;
    int walk_hidden = 8;
    WalkEncoderKind encoder = WalkEncoderKind::BiRecurrent;
    WalkAggKind agg = WalkAggKind::Identity;
    void validate() const;
};

PositionalFrequency positional_frequency(int node, const WalkSet& set);

// Strip node identities from both walk sets; `log`/`features` provide the
// per-step attribute vectors (pass empty features for structure-only tests).
AnonymizedEdge anonymize_pair(const WalkSet& si, const WalkSet& sj, const EventLog& log,
                              const NodeFeatures& features);

class NefModule {
public:
    NefModule(ParamRegistry& reg, const NefConfig& cfg, const WalkConfig& walk_cfg, int node_feat_dim,
              int edge_feat_dim);

    int nef_dim() const { return d_enc_; }
    int step_dim() const { return d_step_; }
    const NefConfig& config() const { return cfg_; }
    const WalkConfig& walk_config() const { return walk_cfg_; }

    // Full pipeline: sample both walk sets, anonymize, encode. `tag` selects
    // the deterministic randomness substream; it must not depend on node ids
    // so that relabeling the graph cannot change the output.
    Tensor compute(Tape& t, const TemporalAdjacency& adj, const NodeFeatures& features, int i, int j,
                   double t_query, uint64_t tag) const;

    // Encoding stages split out for oracle tests.
    Tensor step_encodings(Tape& t, const AnonymizedEdge& edge) const;  // (2K*(M+1), d_step)
    // Per-walk vectors (2K, d_enc) after the encoder and per-walk aggregation.
    Tensor walk_vectors(Tape& t, const AnonymizedEdge& edge) const;
    Tensor encode(Tape& t, const AnonymizedEdge& edge) const;  // (d_enc)

    uint64_t walk_stream_seed(uint64_t tag, int side) const;

private:
    NefConfig cfg_;
    WalkConfig walk_cfg_;
    int d_x_;
    int d_step_;
    int d_enc_;
    Mlp position_mlp_;
    Parameter* omega_;
    LstmCell fwd_;
    LstmCell bwd_;
    Parameter* attn_q_ = nullptr;
    Parameter* attn_k_ = nullptr;
    Parameter* attn_v_ = nullptr;
};

}  // namespace tgnef
