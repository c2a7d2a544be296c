#include <doctest.h>

#include <cmath>
#include <map>

#include "tgnef/walk_sampler.hpp"

using namespace tgnef;

TEST_SUITE_BEGIN("walk_sampler");

namespace {

EventLog make_log(std::vector<std::tuple<int, int, double>> rows, int nodes) {
    std::vector<Event> ev;
    for (auto& [s, d, t] : rows) ev.push_back({s, d, t});
    return EventLog(std::move(ev), {}, nodes, 0);
}

}  // namespace

TEST_CASE("config validation") {
    CHECK_THROWS(WalkConfig{1, 2, 0.0}.validate());
    CHECK_THROWS(WalkConfig{2, 0, 0.0}.validate());
    CHECK_THROWS(WalkConfig{2, 2, -0.5}.validate());
    CHECK_NOTHROW(WalkConfig{2, 1, 0.0}.validate());
}

TEST_CASE("single prior event is chosen with probability 1") {
    EventLog log = make_log({{0, 1, 1.0}}, 3);
    TemporalAdjacency adj(log);
    WalkConfig cfg{4, 1, 1.0};
    for (uint64_t s = 0; s < 20; ++s) {
        Rng rng(s);
        Walk w = sample_walk(adj, 0, 2.0, cfg, rng);
        REQUIRE(w.steps.size() == 2);
        CHECK(w.steps[1].node == 1);
        CHECK(w.steps[1].t == 1.0);
        CHECK_FALSE(w.steps[1].pad);
    }
}

TEST_CASE("alpha zero draws uniformly over candidates") {
    // Node 0 saw events to 1,2,3 at different times; alpha=0 ignores times.
    EventLog log = make_log({{0, 1, 1.0}, {0, 2, 2.0}, {0, 3, 3.0}}, 4);
    TemporalAdjacency adj(log);
    const int n_draws = 10000;
    std::map<int, int> counts;
    Rng rng(123);
    auto prefix = adj.all_before(0, 10.0);
    for (int i = 0; i < n_draws; ++i) counts[prefix[pick_decayed(prefix, 10.0, 0.0, rng)].neighbor]++;
    double expect = n_draws / 3.0;
    double sigma = std::sqrt(n_draws * (1.0 / 3) * (2.0 / 3));
    for (auto& [nbr, c] : counts) CHECK(std::abs(c - expect) < 3 * sigma);
}

TEST_CASE("alpha one: frequency ratio of candidates one time unit apart is e") {
    EventLog log = make_log({{0, 1, 1.0}, {0, 2, 2.0}}, 3);
    TemporalAdjacency adj(log);
    const int n_draws = 100000;
    int newer = 0;
    Rng rng(77);
    auto prefix = adj.all_before(0, 3.0);
    for (int i = 0; i < n_draws; ++i)
        if (prefix[pick_decayed(prefix, 3.0, 1.0, rng)].neighbor == 2) ++newer;
    double ratio = static_cast<double>(newer) / (n_draws - newer);
    CHECK(ratio == doctest::Approx(std::exp(1.0)).epsilon(0.05));
}

TEST_CASE("empirical distribution matches softmax(alpha*dt) via chi-square") {
    EventLog log = make_log({{0, 1, 0.5}, {0, 2, 1.25}, {0, 3, 2.0}, {0, 4, 2.75}}, 5);
    TemporalAdjacency adj(log);
    double alpha = 0.8, t_q = 3.0;
    auto prefix = adj.all_before(0, t_q);
    std::vector<double> p(prefix.size());
    double z = 0;
    for (size_t i = 0; i < prefix.size(); ++i) {
        p[i] = std::exp(alpha * (prefix[i].t - t_q));
        z += p[i];
    }
    for (double& v : p) v /= z;
    const int n_draws = 100000;
    std::vector<int> counts(prefix.size(), 0);
    Rng rng(31);
    for (int i = 0; i < n_draws; ++i) counts[pick_decayed(prefix, t_q, alpha, rng)]++;
    double chi2 = 0;
    for (size_t i = 0; i < p.size(); ++i) {
        double e = n_draws * p[i];
        chi2 += (counts[i] - e) * (counts[i] - e) / e;
    }
    // 3 degrees of freedom; chi2 < 11.34 accepts at p > 0.01
    CHECK(chi2 < 11.34);
}

TEST_CASE("isolated node yields fully padded walks anchored at itself") {
    EventLog log = make_log({{1, 2, 1.0}}, 4);
    TemporalAdjacency adj(log);
    WalkConfig cfg{3, 2, 0.5};
    WalkSet set = sample_walk_set(adj, 3, 5.0, cfg, 42);
    CHECK(set.walks.size() == 3);
    for (const Walk& w : set.walks) {
        REQUIRE(w.steps.size() == 3);
        CHECK(w.steps[0].node == 3);
        CHECK_FALSE(w.steps[0].pad);
        CHECK(w.steps[1].pad);
        CHECK(w.steps[2].pad);
        CHECK(w.real_steps() == 0);
    }
}

TEST_CASE("walk set cardinality equals K") {
    EventLog log = make_log({{0, 1, 1.0}, {1, 2, 2.0}}, 3);
    TemporalAdjacency adj(log);
    WalkConfig cfg{32, 2, 0.1};
    CHECK(sample_walk_set(adj, 1, 3.0, cfg, 9).walks.size() == 32);
}

TEST_CASE("fixed seed reproduces identical walk sets in any evaluation order") {
    Rng gen(5150);
    std::vector<std::tuple<int, int, double>> rows;
    double t = 0;
    for (int i = 0; i < 60; ++i) {
        t += gen.next_double();
        rows.push_back({static_cast<int>(gen.next_below(8)), static_cast<int>(gen.next_below(8)), t});
    }
    EventLog log = make_log(rows, 8);
    TemporalAdjacency adj(log);
    WalkConfig cfg{6, 2, 1.0};

    auto fingerprint = [](const WalkSet& s) {
        std::vector<int64_t> out;
        for (const Walk& w : s.walks)
            for (const WalkStep& st : w.steps) {
                out.push_back(st.node);
                out.push_back(st.event_id);
                out.push_back(st.pad);
            }
        return out;
    };
    WalkSet a = sample_walk_set(adj, 3, t, cfg, 1001);
    WalkSet b = sample_walk_set(adj, 5, t / 2, cfg, 2002);
    // Re-draw in swapped order: substreams make results order independent.
    WalkSet b2 = sample_walk_set(adj, 5, t / 2, cfg, 2002);
    WalkSet a2 = sample_walk_set(adj, 3, t, cfg, 1001);
    CHECK(fingerprint(a) == fingerprint(a2));
    CHECK(fingerprint(b) == fingerprint(b2));
}

TEST_CASE("walks never touch events at or after the origin time") {
    Rng gen(8080);
    std::vector<std::tuple<int, int, double>> rows;
    double t = 0;
    for (int i = 0; i < 100; ++i) {
        t += gen.next_double();
        rows.push_back({static_cast<int>(gen.next_below(10)), static_cast<int>(gen.next_below(10)), t});
    }
    EventLog log = make_log(rows, 10);
    TemporalAdjacency adj(log);
    WalkConfig cfg{4, 3, 0.6};
    for (uint64_t s = 0; s < 30; ++s) {
        double origin = gen.next_range(0.0, t);
        WalkSet set = sample_walk_set(adj, static_cast<int>(gen.next_below(10)), origin, cfg, s);
        for (const Walk& w : set.walks) {
            double prev = origin;
            for (size_t m = 1; m < w.steps.size(); ++m) {
                if (w.steps[m].pad) continue;
                // strictly decreasing times, each step an actual event
                CHECK(w.steps[m].t < prev);
                prev = w.steps[m].t;
                const Event& e = log[static_cast<size_t>(w.steps[m].event_id)];
                CHECK(e.t == w.steps[m].t);
                bool connects = (e.src == w.steps[m - 1].node && e.dst == w.steps[m].node) ||
                                (e.dst == w.steps[m - 1].node && e.src == w.steps[m].node);
                CHECK(connects);
            }
        }
    }
}

TEST_SUITE_END();
