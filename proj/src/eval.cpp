#include "tgnef/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "tgnef/rng.hpp"

namespace tgnef {

const char* task_name(Task t) {
    switch (t) {
        case Task::TransductiveEdge: return "transductive-edge";
        case Task::InductiveEdge: return "inductive-edge";
        case Task::TransductiveNode: return "transductive-node";
        case Task::InductiveNode: return "inductive-node";
    }
    return "?";
}

Task task_from_name(const std::string& s) {
    if (s == "transductive-edge") return Task::TransductiveEdge;
    if (s == "inductive-edge") return Task::InductiveEdge;
    if (s == "transductive-node") return Task::TransductiveNode;
    if (s == "inductive-node") return Task::InductiveNode;
    throw std::invalid_argument("unknown task: " + s);
}

void SplitSpec::validate() const {
    if (train < 0 || val < 0 || test < 0) throw std::invalid_argument("split fractions must be >= 0");
    if (std::abs(train + val + test - 1.0) > 1e-9)
        throw std::invalid_argument("split fractions must sum to 1");
}

void MaskSpec::validate() const {
    if (node_frac < 0 || node_frac >= 1 || edge_frac < 0 || edge_frac >= 1)
        throw std::invalid_argument("mask fractions must lie in [0, 1)");
}

SplitIndices chrono_split(size_t n_events, const SplitSpec& spec) {
    spec.validate();
    if (n_events == 0) throw std::invalid_argument("chrono_split: empty event set");
    SplitIndices idx;
    idx.train_end = static_cast<size_t>(std::floor(spec.train * static_cast<double>(n_events)));
    idx.val_end = static_cast<size_t>(std::floor((spec.train + spec.val) * static_cast<double>(n_events)));
    idx.val_end = std::min(idx.val_end, n_events);
    if (spec.train > 0 && idx.train_end == 0) throw std::invalid_argument("chrono_split: too few events");
    return idx;
}

std::unordered_set<int> sample_node_mask(int node_count, double frac, uint64_t seed) {
    size_t want = static_cast<size_t>(std::llround(frac * node_count));
    std::unordered_set<int> out;
    if (want == 0) return out;
    // Partial Fisher-Yates over the id range.
    std::vector<int> ids(node_count);
    std::iota(ids.begin(), ids.end(), 0);
    Rng rng(mix64(seed, 0x30de5u));
    for (size_t i = 0; i < want; ++i) {
        size_t j = i + static_cast<size_t>(rng.next_below(ids.size() - i));
        std::swap(ids[i], ids[j]);
        out.insert(ids[i]);
    }
    return out;
}

std::vector<uint8_t> sample_edge_mask(size_t n, double frac, uint64_t seed) {
    std::vector<uint8_t> drop(n, 0);
    size_t want = static_cast<size_t>(std::llround(frac * static_cast<double>(n)));
    if (want == 0) return drop;
    std::vector<size_t> ids(n);
    std::iota(ids.begin(), ids.end(), size_t{0});
    Rng rng(mix64(seed, 0xed6e5u));
    for (size_t i = 0; i < want; ++i) {
        size_t j = i + static_cast<size_t>(rng.next_below(n - i));
        std::swap(ids[i], ids[j]);
        drop[ids[i]] = 1;
    }
    return drop;
}

// ---- metrics ----------------------------------------------------------------

double auc_roc(std::span<const double> scores, std::span<const double> labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("auc_roc: length mismatch");
    size_t n = scores.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });
    // Average ranks over ties, then the rank-sum form of the pairwise count.
    std::vector<double> rank(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }
    double pos_ranks = 0;
    size_t n_pos = 0;
    for (size_t k = 0; k < n; ++k)
        if (labels[k] > 0.5) {
            pos_ranks += rank[k];
            ++n_pos;
        }
    size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auc_roc: needs both classes");
    double u = pos_ranks - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double average_precision(std::span<const double> scores, std::span<const double> labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("average_precision: length mismatch");
    size_t n = scores.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a] > scores[b]; });
    double ap = 0;
    size_t hits = 0;
    for (size_t r = 0; r < n; ++r) {
        if (labels[order[r]] > 0.5) {
            ++hits;
            ap += static_cast<double>(hits) / static_cast<double>(r + 1);
        }
    }
    if (hits == 0) throw std::invalid_argument("average_precision: no positives");
    return ap / static_cast<double>(hits);
}

// ---- prepared data ------------------------------------------------------------

bool PreparedData::scorable(size_t idx) const {
    const Event& e = log[idx];
    bool src_seen = seen_in_train[e.src] != 0;
    bool dst_seen = seen_in_train[e.dst] != 0;
    switch (task) {
        case Task::TransductiveEdge: return src_seen && dst_seen;
        case Task::InductiveEdge: return !src_seen || !dst_seen;
        case Task::TransductiveNode: return src_seen;
        case Task::InductiveNode: return !src_seen;
    }
    return false;
}

PreparedData prepare_data(const EventLog& log, const NodeFeatures& features, const SplitSpec& split,
                          const MaskSpec& mask, Task task, bool bipartite) {
    mask.validate();
    SplitIndices idx = chrono_split(log.size(), split);
    bool transductive = task == Task::TransductiveEdge || task == Task::TransductiveNode;

    std::unordered_set<int> masked = sample_node_mask(log.node_count(), mask.node_frac, mask.seed);
    auto node_visible = [&](const Event& e) { return !masked.count(e.src) && !masked.count(e.dst); };

    // Train range: drop masked-node events, then thin by the edge mask.
    std::vector<size_t> train_keep;
    for (size_t i = 0; i < idx.train_end; ++i)
        if (node_visible(log[i])) train_keep.push_back(i);
    std::vector<uint8_t> edge_drop = sample_edge_mask(train_keep.size(), mask.edge_frac, mask.seed + 1);
    std::vector<size_t> keep;
    for (size_t i = 0; i < train_keep.size(); ++i)
        if (!edge_drop[i]) keep.push_back(train_keep[i]);
    if (keep.empty()) throw std::invalid_argument("masking removed all training events");
    size_t train_end = keep.size();

    for (size_t i = idx.train_end; i < idx.val_end; ++i)
        if (!transductive || node_visible(log[i])) keep.push_back(i);
    size_t val_end = keep.size();
    for (size_t i = idx.val_end; i < log.size(); ++i)
        if (!transductive || node_visible(log[i])) keep.push_back(i);

    std::vector<Event> events;
    std::vector<std::vector<double>> feats;
    events.reserve(keep.size());
    for (size_t i : keep) {
        events.push_back(log[i]);
        if (log.edge_feature_dim() > 0) {
            auto f = log.edge_features(i);
            feats.emplace_back(f.begin(), f.end());
        }
    }

    PreparedData out;
    out.log = EventLog(std::move(events), std::move(feats), log.node_count(), log.edge_feature_dim());
    out.train_end = train_end;
    out.val_end = val_end;
    out.features = features;
    out.task = task;
    out.bipartite = bipartite;
    out.masked_nodes = std::move(masked);
    out.seen_in_train.assign(log.node_count(), 0);
    for (size_t i = 0; i < train_end; ++i) {
        out.seen_in_train[out.log[i].src] = 1;
        out.seen_in_train[out.log[i].dst] = 1;
    }
    std::unordered_set<int> train_d, all_d;
    for (size_t i = 0; i < out.log.size(); ++i) {
        int d = out.log[i].dst;
        all_d.insert(d);
        if (i < train_end) train_d.insert(d);
    }
    out.train_dsts.assign(train_d.begin(), train_d.end());
    out.all_dsts.assign(all_d.begin(), all_d.end());
    std::sort(out.train_dsts.begin(), out.train_dsts.end());
    std::sort(out.all_dsts.begin(), out.all_dsts.end());
    for (int d : out.all_dsts)
        if (!out.seen_in_train[d]) out.unseen_dsts.push_back(d);
    return out;
}

}  // namespace tgnef
