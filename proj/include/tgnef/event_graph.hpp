#pragma once

// Continuous-time interaction graph: a chronologically sorted event stream
// plus static node features, with strictly-before-t neighborhood queries.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace tgnef {

struct GraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Event {
    int src = 0;
    int dst = 0;
    double t = 0.0;
    int64_t id = 0;  // position in chronological order; ties keep input order
    std::optional<int> label;
};

// Static per-node attributes; width may be zero.
class NodeFeatures {
public:
    NodeFeatures() = default;
    NodeFeatures(int node_count, int dim) : node_count_(node_count), dim_(dim), data_(static_cast<size_t>(node_count) * dim, 0.0) {}

    int node_count() const { return node_count_; }
    int dim() const { return dim_; }
    std::span<const double> operator[](int node) const {
        return {data_.data() + static_cast<size_t>(node) * dim_, static_cast<size_t>(dim_)};
    }
    double* row_mut(int node) { return data_.data() + static_cast<size_t>(node) * dim_; }

private:
    int node_count_ = 0;
    int dim_ = 0;
    std::vector<double> data_;
};

class EventLog {
public:
    EventLog() = default;
    // Events must arrive with non-decreasing timestamps unless resort=true,
    // in which case a stable sort by timestamp is applied first.
    EventLog(std::vector<Event> events, std::vector<std::vector<double>> edge_features, int node_count,
             int edge_feature_dim, bool resort = false);

    size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }
    int node_count() const { return node_count_; }
    int edge_feature_dim() const { return edge_feature_dim_; }
    const Event& operator[](size_t i) const { return events_[i]; }
    std::span<const double> edge_features(size_t i) const {
        return {feat_.data() + i * edge_feature_dim_, static_cast<size_t>(edge_feature_dim_)};
    }
    double t_min() const { return empty() ? 0.0 : events_.front().t; }
    double t_max() const { return empty() ? 0.0 : events_.back().t; }

    // Number of events strictly before t (a prefix, since events are sorted).
    size_t count_before(double t) const;

    // Mean time between consecutive events; 0 for fewer than 2 events.
    double mean_interevent_time() const;

private:
    std::vector<Event> events_;
    std::vector<double> feat_;  // flat row-major [size x edge_feature_dim]
    int node_count_ = 0;
    int edge_feature_dim_ = 0;
};

// Half-open range of events [begin, end) within a log.
struct EventSpan {
    const EventLog* log = nullptr;
    size_t begin = 0;
    size_t end = 0;
    size_t size() const { return end - begin; }
    bool empty() const { return begin >= end; }
    const Event& operator[](size_t i) const { return (*log)[begin + i]; }
};

inline EventSpan snapshot_before(const EventLog& log, double t) {
    return {&log, 0, log.count_before(t)};
}
inline EventSpan full_span(const EventLog& log) { return {&log, 0, log.size()}; }

struct AdjEntry {
    int neighbor;
    double t;
    int64_t event_id;
    bool is_source;  // true when the owning node is the event's source
};

// Per-node time-sorted incidence lists over undirected events.
class TemporalAdjacency {
public:
    TemporalAdjacency() = default;
    explicit TemporalAdjacency(const EventLog& log);

    const EventLog& log() const { return *log_; }
    int node_count() const { return static_cast<int>(lists_.size()); }
    const std::vector<AdjEntry>& events_of(int node) const;

    // The `count` most recent events of `node` strictly before t, oldest
    // first (newest last); fewer when history is shorter.
    std::vector<AdjEntry> neighbors_before(int node, double t, int count) const;

    // All events of `node` strictly before t as a span into its list.
    std::span<const AdjEntry> all_before(int node, double t) const;

    // Nodes reachable from `node` within k undirected hops using only
    // edges strictly before t; the start node itself is excluded.
    std::unordered_set<int> khop_neighborhood(int node, double t, int k) const;

private:
    void check_node(int node) const;
    const EventLog* log_ = nullptr;
    std::vector<std::vector<AdjEntry>> lists_;
};

}  // namespace tgnef
