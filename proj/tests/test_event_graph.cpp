#include <doctest.h>

#include <algorithm>
#include <set>

#include "tgnef/event_graph.hpp"
#include "tgnef/rng.hpp"

using namespace tgnef;

TEST_SUITE_BEGIN("event_graph");

namespace {

EventLog make_log(std::vector<std::tuple<int, int, double>> rows, int nodes) {
    std::vector<Event> ev;
    for (auto& [s, d, t] : rows) ev.push_back({s, d, t});
    return EventLog(std::move(ev), {}, nodes, 0);
}

}  // namespace

TEST_CASE("empty log builds empty adjacency") {
    EventLog log({}, {}, 4, 0);
    TemporalAdjacency adj(log);
    for (int v = 0; v < 4; ++v) CHECK(adj.events_of(v).empty());
}

TEST_CASE("single event appears in both endpoint lists") {
    EventLog log = make_log({{0, 1, 5.0}}, 3);
    TemporalAdjacency adj(log);
    REQUIRE(adj.events_of(0).size() == 1);
    REQUIRE(adj.events_of(1).size() == 1);
    CHECK(adj.events_of(0)[0].neighbor == 1);
    CHECK(adj.events_of(0)[0].t == 5.0);
    CHECK(adj.events_of(0)[0].is_source);
    CHECK(adj.events_of(1)[0].neighbor == 0);
    CHECK_FALSE(adj.events_of(1)[0].is_source);
    CHECK(adj.events_of(2).empty());
}

TEST_CASE("validation rejects bad ids and decreasing timestamps") {
    CHECK_THROWS_AS(make_log({{0, 7, 1.0}}, 3), GraphError);
    CHECK_THROWS_AS(make_log({{0, 1, 2.0}, {1, 2, 1.0}}, 3), GraphError);
    // resort=true repairs ordering instead
    std::vector<Event> ev{{0, 1, 2.0}, {1, 2, 1.0}};
    EventLog log(std::move(ev), {}, 3, 0, /*resort=*/true);
    CHECK(log[0].t == 1.0);
    CHECK(log[1].t == 2.0);
}

TEST_CASE("event ids follow chronological order with ties kept stable") {
    EventLog log = make_log({{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}}, 3);
    for (size_t i = 0; i < log.size(); ++i) CHECK(log[i].id == static_cast<int64_t>(i));
    CHECK(log[1].src == 1);  // input order preserved on equal timestamps
}

TEST_CASE("neighbors_before is strict and newest-last") {
    EventLog log = make_log({{0, 1, 1.0}, {0, 2, 2.0}, {0, 3, 3.0}}, 4);
    TemporalAdjacency adj(log);
    auto res = adj.neighbors_before(0, 3.0, 5);
    REQUIRE(res.size() == 2);  // the t=3 event is excluded
    CHECK(res[0].neighbor == 1);
    CHECK(res[1].neighbor == 2);
    CHECK(adj.neighbors_before(3, 3.0, 5).empty());
    auto top1 = adj.neighbors_before(0, 10.0, 1);
    REQUIRE(top1.size() == 1);
    CHECK(top1[0].neighbor == 3);
    CHECK_THROWS_AS(adj.neighbors_before(9, 1.0, 1), GraphError);
}

TEST_CASE("khop matches brute-force BFS on random graphs") {
    Rng rng(404);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 12;
        std::vector<std::tuple<int, int, double>> rows;
        double t = 0;
        for (int i = 0; i < 30; ++i) {
            int a = static_cast<int>(rng.next_below(n));
            int b = static_cast<int>(rng.next_below(n));
            t += rng.next_double();
            rows.push_back({a, b, t});
        }
        EventLog log = make_log(rows, n);
        TemporalAdjacency adj(log);
        double t_q = rng.next_range(0.0, t + 1.0);
        int k = 1 + static_cast<int>(rng.next_below(3));
        int start = static_cast<int>(rng.next_below(n));

        // Oracle: BFS over the time-filtered undirected edge set.
        std::vector<std::set<int>> und(n);
        for (size_t i = 0; i < log.size(); ++i)
            if (log[i].t < t_q) {
                und[log[i].src].insert(log[i].dst);
                und[log[i].dst].insert(log[i].src);
            }
        std::set<int> expect;
        std::vector<int> dist(n, -1);
        std::vector<int> queue{start};
        dist[start] = 0;
        for (size_t qi = 0; qi < queue.size(); ++qi) {
            int v = queue[qi];
            if (dist[v] == k) continue;
            for (int w : und[v])
                if (dist[w] < 0) {
                    dist[w] = dist[v] + 1;
                    expect.insert(w);
                    queue.push_back(w);
                }
        }
        expect.erase(start);

        auto got = adj.khop_neighborhood(start, t_q, k);
        std::set<int> got_sorted(got.begin(), got.end());
        CHECK(got_sorted == expect);
    }
}

TEST_CASE("isolated node and star graph khop") {
    EventLog log = make_log({{0, 1, 1.0}, {0, 2, 2.0}, {0, 3, 3.0}}, 5);
    TemporalAdjacency adj(log);
    CHECK(adj.khop_neighborhood(4, 10.0, 2).empty());
    auto leaves = adj.khop_neighborhood(0, 2.5, 1);
    CHECK(leaves == std::unordered_set<int>{1, 2});
}

TEST_CASE("snapshot_before counts match a linear scan") {
    Rng rng(7);
    std::vector<std::tuple<int, int, double>> rows;
    double t = 0;
    for (int i = 0; i < 57; ++i) {
        t += rng.next_double();
        rows.push_back({static_cast<int>(rng.next_below(5)), static_cast<int>(rng.next_below(5)), t});
    }
    EventLog log = make_log(rows, 5);
    CHECK(snapshot_before(log, 0.0).size() == 0);
    CHECK(snapshot_before(log, log.t_max() + 1).size() == log.size());
    double mid = log[log.size() / 2].t;
    size_t expect = 0;
    for (size_t i = 0; i < log.size(); ++i)
        if (log[i].t < mid) ++expect;
    CHECK(snapshot_before(log, mid).size() == expect);
}

TEST_CASE("adjacency list lengths sum to twice the event count") {
    Rng rng(99);
    std::vector<std::tuple<int, int, double>> rows;
    double t = 0;
    for (int i = 0; i < 200; ++i) {
        t += rng.next_double();
        int a = static_cast<int>(rng.next_below(20));
        int b = static_cast<int>(rng.next_below(20));
        rows.push_back({a, b, t});
    }
    EventLog log = make_log(rows, 20);
    TemporalAdjacency adj(log);
    size_t total = 0;
    for (int v = 0; v < 20; ++v) total += adj.events_of(v).size();
    CHECK(total == 2 * log.size());
}

TEST_CASE("self-loops are ordinary events appearing twice in the owner list") {
    EventLog log = make_log({{1, 1, 1.0}}, 3);
    TemporalAdjacency adj(log);
    CHECK(adj.events_of(1).size() == 2);
    size_t total = 0;
    for (int v = 0; v < 3; ++v) total += adj.events_of(v).size();
    CHECK(total == 2 * log.size());
}

TEST_CASE("queries are reproducible and order independent") {
    EventLog log = make_log({{0, 1, 1.0}, {1, 2, 2.0}, {2, 0, 3.0}}, 3);
    TemporalAdjacency adj(log);
    auto a = adj.neighbors_before(1, 2.5, 4);
    auto b = adj.neighbors_before(2, 2.5, 4);
    auto a2 = adj.neighbors_before(1, 2.5, 4);
    CHECK(a.size() == a2.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].neighbor == a2[i].neighbor);
        CHECK(a[i].event_id == a2[i].event_id);
    }
    CHECK(b.size() == 1);
}

TEST_SUITE_END();
