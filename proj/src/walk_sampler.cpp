#include "tgnef/walk_sampler.hpp"

#include <cmath>
#include <stdexcept>

namespace tgnef {

void WalkConfig::validate() const {
    if (walks_per_node < 2) throw std::invalid_argument("walks_per_node must be > 1");
    if (walk_length < 1) throw std::invalid_argument("walk_length must be >= 1");
    if (alpha < 0) throw std::invalid_argument("alpha must be >= 0");
}

size_t pick_decayed(std::span<const AdjEntry> candidates, double t_cur, double alpha, Rng& rng) {
    (void)t_cur;  // the shift by t_cur cancels in the normalization
    // Normalize by the most recent candidate so exponents stay in [0, 1].
    double t_ref = candidates.back().t;  // lists are time-sorted
    double total = 0.0;
    std::vector<double> w(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i) {
        w[i] = std::exp(alpha * (candidates[i].t - t_ref));
        total += w[i];
    }
    double u = rng.next_double() * total;
    double acc = 0.0;
    for (size_t i = 0; i < candidates.size(); ++i) {
        acc += w[i];
        if (u < acc) return i;
    }
    return candidates.size() - 1;  // guard against rounding at the top end
}

Walk sample_walk(const TemporalAdjacency& adj, int start, double t, const WalkConfig& cfg, Rng& rng) {
    Walk walk;
    walk.steps.reserve(cfg.walk_length + 1);
    walk.steps.push_back({start, t, -1, false});
    int cur = start;
    double t_cur = t;
    bool dead = false;
    for (int m = 1; m <= cfg.walk_length; ++m) {
        if (!dead) {
            auto candidates = adj.all_before(cur, t_cur);
            if (candidates.empty()) {
                dead = true;
            } else {
                size_t pick = pick_decayed(candidates, t_cur, cfg.alpha, rng);
                const AdjEntry& e = candidates[pick];
                walk.steps.push_back({e.neighbor, e.t, e.event_id, false});
                cur = e.neighbor;
                t_cur = e.t;
                continue;
            }
        }
        // Pad: repeat the last real node with no event attached.
        walk.steps.push_back({cur, t_cur, -1, true});
    }
    return walk;
}

WalkSet sample_walk_set(const TemporalAdjacency& adj, int node, double t, const WalkConfig& cfg,
                        uint64_t stream_seed) {
    cfg.validate();
    WalkSet set;
    set.node = node;
    set.origin_time = t;
    set.walks.reserve(cfg.walks_per_node);
    for (int k = 0; k < cfg.walks_per_node; ++k) {
        Rng rng(mix64(stream_seed, static_cast<uint64_t>(k)));
        set.walks.push_back(sample_walk(adj, node, t, cfg, rng));
    }
    return set;
}

}  // namespace tgnef
