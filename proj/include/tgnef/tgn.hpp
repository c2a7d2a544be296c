#pragma once

// Memory pipeline: per-node recurrent state, a pending-message store that is
// flushed into memory right before a node is embedded, and an attention
// embedding over recent neighbors that can mix in pair neighborhood features.

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tgnef/event_graph.hpp"
#include "tgnef/nef.hpp"
#include "tgnef/nn.hpp"
#include "tgnef/tensor.hpp"

namespace tgnef {

enum class MsgAggKind { Mean, Last };
enum class MemoryInitKind { Gaussian, Zeros };

struct TgnConfig {
    int d_mem = 32;
    int d_emb = 32;
    int d_time = 8;
    int n_neighbors = 10;  // temporal attention fan-in per hop
    int hops = 1;
    bool nef_in_messages = true;
    bool nef_in_embedding = true;
    MsgAggKind msg_agg = MsgAggKind::Mean;
    MemoryInitKind memory_init = MemoryInitKind::Gaussian;
    void validate() const;
};

class MemoryBank {
public:
    MemoryBank() = default;
    MemoryBank(int node_count, int dim) : dim_(dim), values_(static_cast<size_t>(node_count) * dim, 0.0), last_update_(node_count, 0.0) {}

    void init(MemoryInitKind kind, uint64_t seed, double t0 = 0.0);
    int node_count() const { return static_cast<int>(last_update_.size()); }
    int dim() const { return dim_; }
    std::span<const double> memory(int node) const {
        return {values_.data() + static_cast<size_t>(node) * dim_, static_cast<size_t>(dim_)};
    }
    double last_update_time(int node) const { return last_update_[node]; }
    // t must not regress below the node's last update.
    void commit(int node, std::span<const double> value, double t);

    MemoryBank clone() const { return *this; }

private:
    int dim_ = 0;
    std::vector<double> values_;
    std::vector<double> last_update_;
};

struct RawMessage {
    int node = 0;         // recipient
    int counterpart = 0;  // other endpoint
    double t = 0.0;
    int64_t event_id = -1;
    bool is_source = false;  // recipient was the event's source
};

// Pending raw messages per node. A node's list is emptied exactly when its
// memory updates; fresh batch messages then replace the old records.
class MessageStore {
public:
    MessageStore() = default;
    explicit MessageStore(int node_count) : pending_(node_count) {}

    bool has_pending(int node) const { return !pending_[node].empty(); }
    const std::vector<RawMessage>& pending(int node) const { return pending_[node]; }
    std::vector<RawMessage> take(int node) { return std::exchange(pending_[node], {}); }
    void store(const RawMessage& m) { pending_[m.node].push_back(m); }
    void clear() {
        for (auto& v : pending_) v.clear();
    }

private:
    std::vector<std::vector<RawMessage>> pending_;
};

class TgnCore {
public:
    TgnCore(ParamRegistry& reg, const TgnConfig& cfg, const NefModule* nef, int node_feat_dim,
            int edge_feat_dim);

    const TgnConfig& config() const { return cfg_; }
    int message_dim() const { return msg_dim_; }
    int embedding_dim() const { return cfg_.d_emb; }
    Parameter& time_omega() { return *omega_; }

    // m = concat(s_node, s_counterpart, phi(t - t_last), edge_features[, nef]).
    // nef must be supplied exactly when nef_in_messages is set.
    Tensor generate_message(Tape& t, const Tensor& s_node, const Tensor& s_cpart, double dt,
                            std::span<const double> edge_feats, const Tensor* nef) const;

    // Componentwise mean or most-recent; msgs must be in chronological order.
    Tensor aggregate_messages(Tape& t, std::span<const Tensor> msgs, MsgAggKind mode) const;

    // One recurrent step; rank-1 (single node) or rank-2 (stacked nodes).
    Tensor memory_update(Tape& t, const Tensor& aggregated, const Tensor& s_prev) const;

    // Attention embedding of `node` at time `t_query`. `mem_of` resolves the
    // current on-tape memory tensor of any node (updated rows included).
    // `tag` seeds the walk substreams of per-neighbor pair features.
    Tensor compute_embedding(Tape& t, int node, double t_query,
                             const std::function<Tensor(int)>& mem_of, const TemporalAdjacency& adj,
                             const NodeFeatures& features, uint64_t tag) const;

    // Distinct neighbors by most recent event, newest first, at most n.
    std::vector<AdjEntry> recent_distinct_neighbors(const TemporalAdjacency& adj, int node,
                                                    double t_query, int n) const;

private:
    Tensor hop_attention(Tape& t, int hop, int center, const Tensor& query_in,
                         const std::vector<AdjEntry>& neighbors, double t_query,
                         const std::function<Tensor(int)>& mem_of, const TemporalAdjacency& adj,
                         const NodeFeatures& features, uint64_t tag) const;

    TgnConfig cfg_;
    const NefModule* nef_;
    int d_node_;
    int d_edge_;
    int msg_dim_;
    GruCell memory_rnn_;
    Parameter* omega_;
    Parameter* w_self_;
    // hop-indexed attention projections; hop 0 may include pair features
    std::vector<Parameter*> w_q_, w_k_, w_v_;
};

}  // namespace tgnef
