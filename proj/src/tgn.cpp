#include "tgnef/tgn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace tgnef {

void TgnConfig::validate() const {
    if (d_mem < 1 || d_emb < 1 || d_time < 1) throw std::invalid_argument("dims must be >= 1");
    if (n_neighbors < 1) throw std::invalid_argument("n_neighbors must be >= 1");
    if (hops < 1) throw std::invalid_argument("hops must be >= 1");
}

void MemoryBank::init(MemoryInitKind kind, uint64_t seed, double t0) {
    std::fill(last_update_.begin(), last_update_.end(), t0);
    if (kind == MemoryInitKind::Zeros) {
        std::fill(values_.begin(), values_.end(), 0.0);
        return;
    }
    Rng rng(mix64(seed, 0x3e30u));
    for (double& v : values_) v = 0.1 * rng.next_gaussian();
}

void MemoryBank::commit(int node, std::span<const double> value, double t) {
    if (node < 0 || node >= node_count()) throw GraphError("memory commit: unknown node");
    if (static_cast<int>(value.size()) != dim_) throw GraphError("memory commit: dimension mismatch");
    if (t < last_update_[node]) throw GraphError("memory commit: time regression");
    std::copy(value.begin(), value.end(), values_.begin() + static_cast<size_t>(node) * dim_);
    last_update_[node] = t;
}

TgnCore::TgnCore(ParamRegistry& reg, const TgnConfig& cfg, const NefModule* nef, int node_feat_dim,
                 int edge_feat_dim)
    : cfg_(cfg), nef_(nef), d_node_(node_feat_dim), d_edge_(edge_feat_dim) {
    cfg_.validate();
    if (cfg_.nef_in_messages || cfg_.nef_in_embedding) {
        if (!nef_) throw std::invalid_argument("pair-feature toggles set but no NefModule given");
    }
    int d_nef_msg = cfg_.nef_in_messages ? nef_->nef_dim() : 0;
    msg_dim_ = 2 * cfg_.d_mem + cfg_.d_time + d_edge_ + d_nef_msg;
    memory_rnn_ = GruCell(reg, "mem_rnn", msg_dim_, cfg_.d_mem);
    std::vector<double> omega0(cfg_.d_time);
    for (int k = 0; k < cfg_.d_time; ++k) omega0[k] = std::pow(10.0, -5.0 * k / cfg_.d_time);
    omega_ = &reg.make_values("tgn.omega", {cfg_.d_time}, std::move(omega0));

    int self_in = cfg_.d_mem + d_node_;
    w_self_ = &reg.make("emb.self", {self_in, cfg_.d_emb}, self_in, cfg_.d_emb);
    int q_in = cfg_.d_mem + d_node_ + cfg_.d_time;
    for (int h = 0; h < cfg_.hops; ++h) {
        int d_nef_emb = (h == 0 && cfg_.nef_in_embedding) ? nef_->nef_dim() : 0;
        int kv_in = cfg_.d_mem + d_node_ + d_edge_ + cfg_.d_time + d_nef_emb;
        std::string tag = "emb.h" + std::to_string(h);
        w_q_.push_back(&reg.make(tag + ".q", {q_in, cfg_.d_emb}, q_in, cfg_.d_emb));
        w_k_.push_back(&reg.make(tag + ".k", {kv_in, cfg_.d_emb}, kv_in, cfg_.d_emb));
        w_v_.push_back(&reg.make(tag + ".v", {kv_in, cfg_.d_emb}, kv_in, cfg_.d_emb));
    }
}

Tensor TgnCore::generate_message(Tape& t, const Tensor& s_node, const Tensor& s_cpart, double dt,
                                 std::span<const double> edge_feats, const Tensor* nef) const {
    if (dt < 0) throw GraphError("message time precedes last memory update");
    if (static_cast<int>(edge_feats.size()) != d_edge_) throw ShapeError("edge feature arity mismatch");
    if (cfg_.nef_in_messages != (nef != nullptr))
        throw std::invalid_argument("pair-feature argument does not match toggle");
    std::vector<Tensor> parts{s_node, s_cpart, time_fourier(t.param(*omega_), dt)};
    if (d_edge_ > 0) parts.push_back(t.constant({d_edge_}, std::vector<double>(edge_feats.begin(), edge_feats.end())));
    if (nef) parts.push_back(*nef);
    return concat(std::span<const Tensor>(parts), 0);
}

Tensor TgnCore::aggregate_messages(Tape& t, std::span<const Tensor> msgs, MsgAggKind mode) const {
    (void)t;
    if (msgs.empty()) throw std::invalid_argument("aggregate_messages: empty message list");
    if (mode == MsgAggKind::Last || msgs.size() == 1) return msgs.back();
    return mean_rows(stack_rows(msgs));
}

Tensor TgnCore::memory_update(Tape& t, const Tensor& aggregated, const Tensor& s_prev) const {
    return memory_rnn_.forward(t, aggregated, s_prev);
}

std::vector<AdjEntry> TgnCore::recent_distinct_neighbors(const TemporalAdjacency& adj, int node,
                                                         double t_query, int n) const {
    auto prefix = adj.all_before(node, t_query);
    std::vector<AdjEntry> out;
    std::unordered_set<int> seen;
    for (size_t i = prefix.size(); i-- > 0 && static_cast<int>(out.size()) < n;) {
        if (seen.insert(prefix[i].neighbor).second) out.push_back(prefix[i]);
    }
    return out;  // newest first
}

Tensor TgnCore::hop_attention(Tape& t, int hop, int center, const Tensor& query_in,
                              const std::vector<AdjEntry>& neighbors, double t_query,
                              const std::function<Tensor(int)>& mem_of, const TemporalAdjacency& adj,
                              const NodeFeatures& features, uint64_t tag) const {
    const EventLog& log = adj.log();
    int n = static_cast<int>(neighbors.size());
    std::vector<Tensor> kv_parts;

    std::vector<Tensor> mems;
    mems.reserve(n);
    for (const AdjEntry& e : neighbors) mems.push_back(mem_of(e.neighbor));
    kv_parts.push_back(stack_rows(mems));

    if (d_node_ > 0) {
        std::vector<double> nf(static_cast<size_t>(n) * d_node_);
        for (int r = 0; r < n; ++r) {
            auto row = features[neighbors[r].neighbor];
            std::copy(row.begin(), row.end(), nf.begin() + static_cast<size_t>(r) * d_node_);
        }
        kv_parts.push_back(t.constant({n, d_node_}, std::move(nf)));
    }
    if (d_edge_ > 0) {
        std::vector<double> ef(static_cast<size_t>(n) * d_edge_);
        for (int r = 0; r < n; ++r) {
            auto row = log.edge_features(static_cast<size_t>(neighbors[r].event_id));
            std::copy(row.begin(), row.end(), ef.begin() + static_cast<size_t>(r) * d_edge_);
        }
        kv_parts.push_back(t.constant({n, d_edge_}, std::move(ef)));
    }
    {
        std::vector<double> dts(n);
        for (int r = 0; r < n; ++r) dts[r] = t_query - neighbors[r].t;
        Tensor phi = time_fourier_rows(t.param(*omega_), dts);
        if (n == 1) phi = stack_rows(std::vector<Tensor>{phi});  // keep rank 2
        kv_parts.push_back(phi);
    }
    if (hop == 0 && cfg_.nef_in_embedding) {
        std::vector<Tensor> nefs;
        nefs.reserve(n);
        for (int r = 0; r < n; ++r) {
            // Tag by neighbor rank, not id, so relabeling cannot change draws.
            uint64_t pair_tag = mix64(tag, 0xe23bu, static_cast<uint64_t>(hop), static_cast<uint64_t>(r));
            nefs.push_back(nef_->compute(t, adj, features, center, neighbors[r].neighbor, t_query, pair_tag));
        }
        kv_parts.push_back(stack_rows(nefs));
    }

    Tensor kv = kv_parts.size() == 1 ? kv_parts[0] : concat(std::span<const Tensor>(kv_parts), 1);
    Tensor keys = matmul(kv, t.param(*w_k_[hop]));
    Tensor values = matmul(kv, t.param(*w_v_[hop]));
    Tensor q = matmul(query_in, t.param(*w_q_[hop]));
    return attention(q, keys, values);
}

Tensor TgnCore::compute_embedding(Tape& t, int node, double t_query,
                                  const std::function<Tensor(int)>& mem_of,
                                  const TemporalAdjacency& adj, const NodeFeatures& features,
                                  uint64_t tag) const {
    Tensor s_i = mem_of(node);
    Tensor self_in = s_i;
    if (d_node_ > 0) {
        auto nf = features[node];
        self_in = concat({s_i, t.constant({d_node_}, std::vector<double>(nf.begin(), nf.end()))}, 0);
    }
    Tensor z = matmul(self_in, t.param(*w_self_));

    Tensor query_in = concat({self_in, time_fourier(t.param(*omega_), 0.0)}, 0);

    auto hop1 = recent_distinct_neighbors(adj, node, t_query, cfg_.n_neighbors);
    if (!hop1.empty()) z = add(z, hop_attention(t, 0, node, query_in, hop1, t_query, mem_of, adj, features, tag));

    if (cfg_.hops >= 2 && !hop1.empty()) {
        // Hop 2: most recent distinct nodes reachable through hop-1 neighbors,
        // excluding the center and the hop-1 set.
        std::unordered_set<int> excluded{node};
        for (const AdjEntry& e : hop1) excluded.insert(e.neighbor);
        std::vector<AdjEntry> candidates;
        for (const AdjEntry& e : hop1)
            for (const AdjEntry& f : recent_distinct_neighbors(adj, e.neighbor, t_query, cfg_.n_neighbors))
                if (!excluded.count(f.neighbor)) candidates.push_back(f);
        std::sort(candidates.begin(), candidates.end(), [](const AdjEntry& a, const AdjEntry& b) {
            return a.t != b.t ? a.t > b.t : a.event_id > b.event_id;
        });
        std::vector<AdjEntry> hop2;
        std::unordered_set<int> seen;
        for (const AdjEntry& e : candidates) {
            if (static_cast<int>(hop2.size()) >= cfg_.n_neighbors) break;
            if (seen.insert(e.neighbor).second) hop2.push_back(e);
        }
        if (!hop2.empty()) z = add(z, hop_attention(t, 1, node, query_in, hop2, t_query, mem_of, adj, features, tag));
    }
    return z;
}

}  // namespace tgnef
