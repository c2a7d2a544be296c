#pragma once

// Backward-in-time random walks with exponential recency bias. Step m is
// drawn among all events of the current node strictly before the current
// time, with probability proportional to exp(alpha * dt), dt <= 0; larger
// alpha concentrates mass on recent events. Dead ends pad the remaining
// steps so every walk has fixed length M+1.

#include <cstdint>
#include <vector>

#include "tgnef/event_graph.hpp"
#include "tgnef/rng.hpp"

namespace tgnef {

struct WalkStep {
    int node = 0;
    double t = 0.0;
    int64_t event_id = -1;  // event entering this step; -1 at the origin and on pads
    bool pad = false;
};

struct Walk {
    // steps[0] is the origin (node, query time); length is always M+1.
    std::vector<WalkStep> steps;
    int real_steps() const {  // steps carrying an actual event
        int n = 0;
        for (size_t i = 1; i < steps.size(); ++i)
            if (!steps[i].pad) ++n;
        return n;
    }
};

struct WalkConfig {
    int walks_per_node = 8;  // K, must be >= 2
    int walk_length = 2;     // M, steps beyond the origin
    double alpha = 0.0;      // recency decay per unit time, >= 0
    void validate() const;
};

struct WalkSet {
    int node = 0;
    double origin_time = 0.0;
    std::vector<Walk> walks;  // exactly K entries
};

// One walk from `start` at time t. `rng` should be a dedicated substream.
Walk sample_walk(const TemporalAdjacency& adj, int start, double t, const WalkConfig& cfg, Rng& rng);

// K walks, each from its own substream derived from (stream_seed, walk index),
// so the set is reproducible regardless of evaluation order.
WalkSet sample_walk_set(const TemporalAdjacency& adj, int node, double t, const WalkConfig& cfg,
                        uint64_t stream_seed);

// Draw an index among `candidate` events (all strictly before t_cur) with
// probability proportional to exp(alpha * (t_event - t_cur)). Exposed for
// distribution tests.
size_t pick_decayed(std::span<const AdjEntry> candidates, double t_cur, double alpha, Rng& rng);

}  // namespace tgnef
