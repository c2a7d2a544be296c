#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "tgnef/eval.hpp"
#include "tgnef/rng.hpp"

using namespace tgnef;

TEST_SUITE_BEGIN("eval");

namespace {

EventLog make_log(std::vector<std::tuple<int, int, double>> rows, int nodes) {
    std::vector<Event> ev;
    for (auto& [s, d, t] : rows) ev.push_back({s, d, t});
    return EventLog(std::move(ev), {}, nodes, 0);
}

EventLog random_log(uint64_t seed, int nodes, int n_events) {
    Rng rng(seed);
    std::vector<std::tuple<int, int, double>> rows;
    double t = 0;
    for (int i = 0; i < n_events; ++i) {
        t += rng.next_double();
        int a = static_cast<int>(rng.next_below(nodes));
        int b = (a + 1 + static_cast<int>(rng.next_below(nodes - 1))) % nodes;
        rows.push_back({a, b, t});
    }
    return make_log(rows, nodes);
}

// O(n^2) pairwise oracle with half-credit ties.
double auc_brute(std::span<const double> s, std::span<const double> y) {
    double num = 0;
    size_t pairs = 0;
    for (size_t i = 0; i < s.size(); ++i) {
        if (y[i] < 0.5) continue;
        for (size_t j = 0; j < s.size(); ++j) {
            if (y[j] > 0.5) continue;
            ++pairs;
            if (s[i] > s[j]) num += 1;
            else if (s[i] == s[j]) num += 0.5;
        }
    }
    return num / static_cast<double>(pairs);
}

// Rank-walk oracle: descending score, ties by original index.
double ap_brute(std::span<const double> s, std::span<const double> y) {
    std::vector<size_t> order(s.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return s[a] > s[b]; });
    double ap = 0;
    size_t hits = 0;
    for (size_t r = 0; r < order.size(); ++r)
        if (y[order[r]] > 0.5) {
            ++hits;
            ap += static_cast<double>(hits) / static_cast<double>(r + 1);
        }
    return ap / static_cast<double>(hits);
}

}  // namespace

TEST_CASE("chrono split: 10 events at 0.8/0.1/0.1 gives 8/1/1") {
    SplitIndices idx = chrono_split(10, {0.8, 0.1, 0.1});
    CHECK(idx.train_end == 8);
    CHECK(idx.val_end == 9);
    idx = chrono_split(10, {1.0, 0.0, 0.0});
    CHECK(idx.train_end == 10);
    CHECK(idx.val_end == 10);
    CHECK_THROWS(chrono_split(10, {0.5, 0.1, 0.1}));
    CHECK_THROWS(chrono_split(0, {0.8, 0.1, 0.1}));
    CHECK_THROWS(chrono_split(1, {0.8, 0.1, 0.1}));  // empty train
}

TEST_CASE("split boundary timestamps are non-decreasing across splits") {
    EventLog log = random_log(15, 8, 57);
    SplitIndices idx = chrono_split(log.size(), {0.6, 0.2, 0.2});
    double last_train = log[idx.train_end - 1].t;
    double first_val = log[idx.train_end].t;
    double last_val = log[idx.val_end - 1].t;
    double first_test = log[idx.val_end].t;
    CHECK(last_train <= first_val);
    CHECK(last_val <= first_test);
}

TEST_CASE("node mask size and incident-event removal") {
    EventLog log = random_log(3, 40, 300);
    NodeFeatures nf(40, 0);
    MaskSpec mask;
    mask.node_frac = 0.25;
    mask.seed = 5;
    CHECK(sample_node_mask(40, 0.25, 5).size() == 10);
    CHECK(sample_node_mask(40, 0.0, 5).empty());

    PreparedData d = prepare_data(log, nf, {0.8, 0.1, 0.1}, mask, Task::InductiveEdge, false);
    CHECK(d.masked_nodes.size() == 10);
    for (size_t i = 0; i < d.train_end; ++i) {
        CHECK(!d.masked_nodes.count(d.log[i].src));
        CHECK(!d.masked_nodes.count(d.log[i].dst));
    }
    // Inductive: masked nodes remain in val/test; count events referencing them.
    size_t masked_eval = 0;
    for (size_t i = d.train_end; i < d.log.size(); ++i)
        if (d.masked_nodes.count(d.log[i].src) || d.masked_nodes.count(d.log[i].dst)) ++masked_eval;
    CHECK(masked_eval > 0);

    // Transductive: they vanish everywhere.
    PreparedData dt = prepare_data(log, nf, {0.8, 0.1, 0.1}, mask, Task::TransductiveEdge, false);
    for (size_t i = 0; i < dt.log.size(); ++i) {
        CHECK(!dt.masked_nodes.count(dt.log[i].src));
        CHECK(!dt.masked_nodes.count(dt.log[i].dst));
    }
}

TEST_CASE("zero-fraction masks are the identity") {
    EventLog log = random_log(44, 10, 60);
    NodeFeatures nf(10, 0);
    PreparedData d = prepare_data(log, nf, {0.8, 0.1, 0.1}, {}, Task::TransductiveEdge, false);
    CHECK(d.log.size() == log.size());
    for (size_t i = 0; i < log.size(); ++i) {
        CHECK(d.log[i].src == log[i].src);
        CHECK(d.log[i].t == log[i].t);
    }
}

TEST_CASE("edge mask keeps the right count and is seed-deterministic") {
    auto drop1 = sample_edge_mask(200, 0.3, 9);
    auto drop2 = sample_edge_mask(200, 0.3, 9);
    CHECK(drop1 == drop2);
    size_t dropped = std::count(drop1.begin(), drop1.end(), uint8_t{1});
    CHECK(dropped == 60);
    auto drop3 = sample_edge_mask(200, 0.3, 10);
    CHECK(drop1 != drop3);

    EventLog log = random_log(1, 12, 100);
    NodeFeatures nf(12, 0);
    MaskSpec mask;
    mask.edge_frac = 0.5;
    PreparedData d = prepare_data(log, nf, {0.8, 0.1, 0.1}, mask, Task::TransductiveEdge, false);
    CHECK(d.train_end == 40);  // round((1-0.5)*80)
    CHECK(d.log.size() == 40 + 20);
    CHECK_THROWS(prepare_data(log, nf, {0.8, 0.1, 0.1},
                              MaskSpec{0.97, 0.0, 3}, Task::TransductiveEdge, false));
}

TEST_CASE("auc: trivial cases") {
    std::vector<double> s{0.9, 0.8, 0.2, 0.1}, y{1, 1, 0, 0};
    CHECK(auc_roc(s, y) == 1.0);
    std::vector<double> t{0.5, 0.5, 0.5, 0.5};
    CHECK(auc_roc(t, y) == 0.5);
    std::vector<double> s2{0.8, 0.4, 0.6, 0.2}, y2{1, 1, 0, 0};
    CHECK(auc_roc(s2, y2) == doctest::Approx(0.75));
    CHECK_THROWS(auc_roc(std::vector<double>{1, 2}, std::vector<double>{1, 1}));
}

TEST_CASE("ap: trivial and hand cases") {
    std::vector<double> s{0.9, 0.8, 0.1}, y{1, 1, 0};
    CHECK(average_precision(s, y) == 1.0);
    std::vector<double> s2{0.9, 0.5, 0.4}, y2{1, 0, 1};
    CHECK(average_precision(s2, y2) == doctest::Approx((1.0 + 2.0 / 3.0) / 2));
    CHECK_THROWS(average_precision(std::vector<double>{1, 2}, std::vector<double>{0, 0}));
}

TEST_CASE("ap is invariant under strictly monotone score transforms") {
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        size_t n = 5 + rng.next_below(40);
        std::vector<double> s(n), y(n);
        bool pos = false;
        for (size_t i = 0; i < n; ++i) {
            s[i] = rng.next_double();
            y[i] = rng.next_below(2) ? 1.0 : 0.0;
            pos = pos || y[i] > 0.5;
        }
        if (!pos) y[0] = 1.0;
        std::vector<double> s3(n);
        for (size_t i = 0; i < n; ++i) s3[i] = std::exp(3 * s[i]) + 7;
        CHECK(average_precision(s, y) == doctest::Approx(average_precision(s3, y)).epsilon(1e-12));
    }
}

TEST_CASE("metrics match brute-force oracles on random inputs with ties") {
    Rng rng(606);
    for (int trial = 0; trial < 300; ++trial) {
        size_t n = 2 + rng.next_below(199);
        std::vector<double> s(n), y(n);
        size_t n_pos = 0;
        for (size_t i = 0; i < n; ++i) {
            // coarse grid scores force plenty of ties
            s[i] = static_cast<double>(rng.next_below(12)) / 11.0;
            y[i] = rng.next_below(2) ? 1.0 : 0.0;
            n_pos += y[i] > 0.5;
        }
        if (n_pos == 0) {
            y[0] = 1.0;
            n_pos = 1;
        }
        if (n_pos == n) y[0] = 0.0;
        CHECK(auc_roc(s, y) == doctest::Approx(auc_brute(s, y)).epsilon(1e-12));
        CHECK(average_precision(s, y) == doctest::Approx(ap_brute(s, y)).epsilon(1e-12));
    }
}

TEST_CASE("prepared data classifies scorable pairs per task") {
    EventLog log = random_log(123, 30, 200);
    NodeFeatures nf(30, 0);
    MaskSpec mask;
    mask.node_frac = 0.2;
    mask.seed = 4;
    PreparedData ind = prepare_data(log, nf, {0.8, 0.1, 0.1}, mask, Task::InductiveEdge, false);
    size_t n_ind = 0;
    for (size_t i = ind.val_end; i < ind.log.size(); ++i)
        if (ind.scorable(i)) {
            ++n_ind;
            CHECK((!ind.seen_in_train[ind.log[i].src] || !ind.seen_in_train[ind.log[i].dst]));
        }
    CHECK(n_ind > 0);
    PreparedData tr = prepare_data(log, nf, {0.8, 0.1, 0.1}, mask, Task::TransductiveEdge, false);
    for (size_t i = tr.val_end; i < tr.log.size(); ++i)
        if (tr.scorable(i)) {
            CHECK(tr.seen_in_train[tr.log[i].src]);
            CHECK(tr.seen_in_train[tr.log[i].dst]);
        }
}

TEST_SUITE_END();
