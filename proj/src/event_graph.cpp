#include "tgnef/event_graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace tgnef {

EventLog::EventLog(std::vector<Event> events, std::vector<std::vector<double>> edge_features,
                   int node_count, int edge_feature_dim, bool resort)
    : events_(std::move(events)), node_count_(node_count), edge_feature_dim_(edge_feature_dim) {
    if (!edge_features.empty() && edge_features.size() != events_.size())
        throw GraphError("event/feature count mismatch");
    if (resort) {
        std::vector<size_t> order(events_.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](size_t a, size_t b) { return events_[a].t < events_[b].t; });
        std::vector<Event> sorted;
        sorted.reserve(events_.size());
        std::vector<std::vector<double>> sorted_feat;
        if (!edge_features.empty()) sorted_feat.reserve(events_.size());
        for (size_t i : order) {
            sorted.push_back(events_[i]);
            if (!edge_features.empty()) sorted_feat.push_back(std::move(edge_features[i]));
        }
        events_ = std::move(sorted);
        edge_features = std::move(sorted_feat);
    }
    feat_.reserve(events_.size() * edge_feature_dim_);
    double prev_t = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < events_.size(); ++i) {
        Event& e = events_[i];
        if (e.src < 0 || e.src >= node_count_ || e.dst < 0 || e.dst >= node_count_)
            throw GraphError("node id out of range at event " + std::to_string(i));
        if (!std::isfinite(e.t) || e.t < prev_t)
            throw GraphError("timestamps must be finite and non-decreasing (event " + std::to_string(i) + ")");
        prev_t = e.t;
        e.id = static_cast<int64_t>(i);
        if (edge_feature_dim_ > 0) {
            if (edge_features.empty() || static_cast<int>(edge_features[i].size()) != edge_feature_dim_)
                throw GraphError("edge feature arity mismatch at event " + std::to_string(i));
            feat_.insert(feat_.end(), edge_features[i].begin(), edge_features[i].end());
        }
    }
}

size_t EventLog::count_before(double t) const {
    size_t lo = 0, hi = events_.size();
    while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (events_[mid].t < t)
            lo = mid + 1;
        else
            hi = mid;
    }
    return lo;
}

double EventLog::mean_interevent_time() const {
    if (events_.size() < 2) return 0.0;
    return (t_max() - t_min()) / static_cast<double>(events_.size() - 1);
}

TemporalAdjacency::TemporalAdjacency(const EventLog& log) : log_(&log) {
    lists_.resize(log.node_count());
    for (size_t i = 0; i < log.size(); ++i) {
        const Event& e = log[i];
        lists_[e.src].push_back({e.dst, e.t, e.id, true});
        lists_[e.dst].push_back({e.src, e.t, e.id, false});
    }
}

void TemporalAdjacency::check_node(int node) const {
    if (node < 0 || node >= node_count()) throw GraphError("unknown node id " + std::to_string(node));
}

const std::vector<AdjEntry>& TemporalAdjacency::events_of(int node) const {
    check_node(node);
    return lists_[node];
}

std::span<const AdjEntry> TemporalAdjacency::all_before(int node, double t) const {
    check_node(node);
    const auto& list = lists_[node];
    size_t lo = 0, hi = list.size();
    while (lo < hi) {
        size_t mid = (lo + hi) / 2;
        if (list[mid].t < t)
            lo = mid + 1;
        else
            hi = mid;
    }
    return {list.data(), lo};
}

std::vector<AdjEntry> TemporalAdjacency::neighbors_before(int node, double t, int count) const {
    if (count < 1) throw GraphError("neighbors_before: count must be >= 1");
    auto prefix = all_before(node, t);
    size_t take = std::min(prefix.size(), static_cast<size_t>(count));
    return {prefix.end() - take, prefix.end()};
}

std::unordered_set<int> TemporalAdjacency::khop_neighborhood(int node, double t, int k) const {
    check_node(node);
    if (k < 1) throw GraphError("khop_neighborhood: k must be >= 1");
    std::unordered_set<int> seen{node};
    std::unordered_set<int> result;
    std::deque<std::pair<int, int>> frontier{{node, 0}};
    while (!frontier.empty()) {
        auto [v, depth] = frontier.front();
        frontier.pop_front();
        if (depth == k) continue;
        for (const AdjEntry& e : all_before(v, t)) {
            if (seen.insert(e.neighbor).second) {
                result.insert(e.neighbor);
                frontier.emplace_back(e.neighbor, depth + 1);
            }
        }
    }
    result.erase(node);
    return result;
}

}  // namespace tgnef
