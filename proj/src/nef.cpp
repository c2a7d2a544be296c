#include "tgnef/nef.hpp"

#include <cmath>
#include <stdexcept>

namespace tgnef {

void NefConfig::validate() const {
    if (d_pos < 1 || d_time < 1) throw std::invalid_argument("d_pos and d_time must be >= 1");
    if (walk_hidden < 1) throw std::invalid_argument("walk_hidden must be >= 1");
}

PositionalFrequency positional_frequency(int node, const WalkSet& set) {
    size_t len = set.walks.empty() ? 0 : set.walks[0].steps.size();
    PositionalFrequency pf;
    pf.counts.assign(len, 0);
    for (const Walk& w : set.walks)
        for (size_t m = 0; m < w.steps.size(); ++m)
            if (!w.steps[m].pad && w.steps[m].node == node) ++pf.counts[m];
    return pf;
}

namespace {

AnonymizedWalk anonymize_walk(const Walk& w, const WalkSet& own, const WalkSet& other,
                              const EventLog& log, const NodeFeatures& features) {
    size_t len = w.steps.size();
    AnonymizedWalk out;
    out.steps.resize(len);
    int d_node = features.dim();
    int d_edge = log.edge_feature_dim();
    for (size_t m = 0; m < len; ++m) {
        const WalkStep& s = w.steps[m];
        AnonymizedStep& a = out.steps[m];
        a.pad = s.pad;
        a.attrs.assign(d_node + d_edge, 0.0);
        if (s.pad) {
            a.g_own.assign(len, 0);
            a.g_other.assign(len, 0);
            a.dt = 0.0;
            continue;
        }
        a.g_own = positional_frequency(s.node, own).counts;
        a.g_other = positional_frequency(s.node, other).counts;
        a.dt = m == 0 ? 0.0 : w.steps[m - 1].t - s.t;
        if (d_node > 0 && s.node < features.node_count()) {
            auto nf = features[s.node];
            std::copy(nf.begin(), nf.end(), a.attrs.begin());
        }
        if (d_edge > 0 && s.event_id >= 0) {
            auto ef = log.edge_features(static_cast<size_t>(s.event_id));
            std::copy(ef.begin(), ef.end(), a.attrs.begin() + d_node);
        }
    }
    return out;
}

}  // namespace

AnonymizedEdge anonymize_pair(const WalkSet& si, const WalkSet& sj, const EventLog& log,
                              const NodeFeatures& features) {
    AnonymizedEdge edge;
    edge.walks.reserve(si.walks.size() + sj.walks.size());
    for (const Walk& w : si.walks) edge.walks.push_back(anonymize_walk(w, si, sj, log, features));
    for (const Walk& w : sj.walks) edge.walks.push_back(anonymize_walk(w, sj, si, log, features));
    return edge;
}

NefModule::NefModule(ParamRegistry& reg, const NefConfig& cfg, const WalkConfig& walk_cfg,
                     int node_feat_dim, int edge_feat_dim)
    : cfg_(cfg), walk_cfg_(walk_cfg) {
    cfg_.validate();
    walk_cfg_.validate();
    d_x_ = node_feat_dim + edge_feat_dim;
    d_step_ = cfg_.d_pos + cfg_.d_time + d_x_;
    d_enc_ = cfg_.encoder == WalkEncoderKind::BiRecurrent ? 2 * cfg_.walk_hidden : d_step_;
    int g_len = walk_cfg_.walk_length + 1;
    position_mlp_ = Mlp(reg, "nef.pos_mlp", {g_len, cfg_.d_pos, cfg_.d_pos});
    // Geometric frequency ladder, trainable.
    std::vector<double> omega0(cfg_.d_time);
    for (int k = 0; k < cfg_.d_time; ++k) omega0[k] = std::pow(10.0, -5.0 * k / cfg_.d_time);
    omega_ = &reg.make_values("nef.omega", {cfg_.d_time}, std::move(omega0));
    if (cfg_.encoder == WalkEncoderKind::BiRecurrent) {
        fwd_ = LstmCell(reg, "nef.walk_fwd", d_step_, cfg_.walk_hidden);
        bwd_ = LstmCell(reg, "nef.walk_bwd", d_step_, cfg_.walk_hidden);
    }
    if (cfg_.agg == WalkAggKind::SelfAttention) {
        attn_q_ = &reg.make("nef.attn_q", {d_enc_, d_enc_}, d_enc_, d_enc_);
        attn_k_ = &reg.make("nef.attn_k", {d_enc_, d_enc_}, d_enc_, d_enc_);
        attn_v_ = &reg.make("nef.attn_v", {d_enc_, d_enc_}, d_enc_, d_enc_);
    }
}

uint64_t NefModule::walk_stream_seed(uint64_t tag, int side) const {
    return mix64(tag, 0x77a1c000ULL + static_cast<uint64_t>(side));
}

Tensor NefModule::step_encodings(Tape& t, const AnonymizedEdge& edge) const {
    int n_walks = static_cast<int>(edge.walks.size());
    int steps = static_cast<int>(edge.walks[0].steps.size());
    int g_len = steps;
    size_t rows = static_cast<size_t>(n_walks) * steps;

    std::vector<double> g_own(rows * g_len), g_other(rows * g_len), dts(rows);
    std::vector<double> attrs(rows * d_x_);
    std::vector<double> live_mask(rows * d_step_, 0.0);  // zero out padded rows
    for (int w = 0; w < n_walks; ++w) {
        for (int m = 0; m < steps; ++m) {
            size_t r = static_cast<size_t>(w) * steps + m;
            const AnonymizedStep& s = edge.walks[w].steps[m];
            for (int q = 0; q < g_len; ++q) {
                g_own[r * g_len + q] = s.g_own[q];
                g_other[r * g_len + q] = s.g_other[q];
            }
            dts[r] = s.dt;
            for (int q = 0; q < d_x_; ++q) attrs[r * d_x_ + q] = s.attrs[q];
            if (!s.pad)
                for (int q = 0; q < d_step_; ++q) live_mask[r * d_step_ + q] = 1.0;
        }
    }
    int n = static_cast<int>(rows);
    Tensor pos = add(position_mlp_.forward(t, t.constant({n, g_len}, std::move(g_own))),
                     position_mlp_.forward(t, t.constant({n, g_len}, std::move(g_other))));
    Tensor time_enc = time_fourier_rows(t.param(*omega_), dts);
    Tensor h;
    if (d_x_ > 0)
        h = concat({pos, time_enc, t.constant({n, d_x_}, std::move(attrs))}, 1);
    else
        h = concat({pos, time_enc}, 1);
    return mul_const(h, live_mask);
}

Tensor NefModule::walk_vectors(Tape& t, const AnonymizedEdge& edge) const {
    int n_walks = static_cast<int>(edge.walks.size());
    int steps = static_cast<int>(edge.walks[0].steps.size());
    Tensor h_all = step_encodings(t, edge);

    std::vector<double> pad_col(static_cast<size_t>(n_walks) * steps);  // 1 where padded
    std::vector<double> real_counts(n_walks, 0.0);
    for (int w = 0; w < n_walks; ++w)
        for (int m = 0; m < steps; ++m) {
            bool pad = edge.walks[w].steps[m].pad;
            pad_col[static_cast<size_t>(w) * steps + m] = pad ? 1.0 : 0.0;
            if (!pad) real_counts[w] += 1.0;
        }

    std::vector<Tensor> step_mats(steps);
    for (int m = 0; m < steps; ++m) step_mats[m] = rows_stride(h_all, m, steps, n_walks);
    auto pad_mask_at = [&](int m) {
        std::vector<double> mask(n_walks);
        for (int w = 0; w < n_walks; ++w) mask[w] = pad_col[static_cast<size_t>(w) * steps + m];
        return mask;
    };

    Tensor enc;                        // (n_walks, d_enc) final walk vectors
    std::vector<Tensor> step_reps;     // per-step representations for attention
    if (cfg_.encoder == WalkEncoderKind::BiRecurrent) {
        std::vector<Tensor> fwd_h(steps), bwd_h(steps);
        LstmState st{t.constant({n_walks, cfg_.walk_hidden}), t.constant({n_walks, cfg_.walk_hidden})};
        for (int m = 0; m < steps; ++m) {
            LstmState nxt = fwd_.forward(t, step_mats[m], st);
            auto mask = pad_mask_at(m);
            st = {select_rows(mask, st.h, nxt.h), select_rows(mask, st.c, nxt.c)};
            fwd_h[m] = st.h;
        }
        Tensor fwd_final = st.h;
        st = {t.constant({n_walks, cfg_.walk_hidden}), t.constant({n_walks, cfg_.walk_hidden})};
        for (int m = steps - 1; m >= 0; --m) {
            LstmState nxt = bwd_.forward(t, step_mats[m], st);
            auto mask = pad_mask_at(m);
            st = {select_rows(mask, st.h, nxt.h), select_rows(mask, st.c, nxt.c)};
            bwd_h[m] = st.h;
        }
        enc = concat({fwd_final, st.h}, 1);
        if (cfg_.agg == WalkAggKind::SelfAttention) {
            step_reps.resize(steps);
            for (int m = 0; m < steps; ++m) step_reps[m] = concat({fwd_h[m], bwd_h[m]}, 1);
        }
    } else {
        // Masked mean over real steps; padded rows are already zero.
        Tensor acc = step_mats[0];
        for (int m = 1; m < steps; ++m) acc = add(acc, step_mats[m]);
        std::vector<double> inv(n_walks);
        for (int w = 0; w < n_walks; ++w) inv[w] = real_counts[w] > 0 ? 1.0 / real_counts[w] : 0.0;
        enc = scale_rows_const(acc, inv);
        if (cfg_.agg == WalkAggKind::SelfAttention) step_reps = step_mats;
    }

    if (cfg_.agg == WalkAggKind::Identity) return enc;

    // Self-attention per walk: the mean-pooled walk encoding queries the
    // per-step representations; padded steps are masked out.
    Tensor q_src;
    {
        Tensor acc = step_reps[0];
        for (int m = 1; m < steps; ++m) acc = add(acc, step_reps[m]);
        std::vector<double> inv(n_walks);
        for (int w = 0; w < n_walks; ++w) inv[w] = real_counts[w] > 0 ? 1.0 / real_counts[w] : 0.0;
        q_src = scale_rows_const(acc, inv);
    }
    Tensor q = matmul(q_src, t.param(*attn_q_));
    std::vector<Tensor> scores(steps);
    std::vector<Tensor> values(steps);
    double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d_enc_));
    for (int m = 0; m < steps; ++m) {
        Tensor k = matmul(step_reps[m], t.param(*attn_k_));
        values[m] = matmul(step_reps[m], t.param(*attn_v_));
        scores[m] = scale(rowwise_dot(q, k), inv_sqrt);
    }
    Tensor score_mat = stack_cols(scores);
    std::vector<double> live(static_cast<size_t>(n_walks) * steps);
    for (size_t i = 0; i < live.size(); ++i) live[i] = pad_col[i] != 0.0 ? 0.0 : 1.0;
    Tensor weights = softmax_rows_masked(score_mat, live);
    Tensor out = scale_rows(values[0], col(weights, 0));
    for (int m = 1; m < steps; ++m) out = add(out, scale_rows(values[m], col(weights, m)));
    return out;
}

Tensor NefModule::encode(Tape& t, const AnonymizedEdge& edge) const {
    return mean_rows(walk_vectors(t, edge));
}

Tensor NefModule::compute(Tape& t, const TemporalAdjacency& adj, const NodeFeatures& features, int i,
                          int j, double t_query, uint64_t tag) const {
    WalkSet si = sample_walk_set(adj, i, t_query, walk_cfg_, walk_stream_seed(tag, 0));
    WalkSet sj = sample_walk_set(adj, j, t_query, walk_cfg_, walk_stream_seed(tag, 1));
    AnonymizedEdge edge = anonymize_pair(si, sj, adj.log(), features);
    return encode(t, edge);
}

}  // namespace tgnef
