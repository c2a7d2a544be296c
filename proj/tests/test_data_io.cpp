#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "tgnef/data_io.hpp"
#include "tgnef/rng.hpp"

using namespace tgnef;

TEST_SUITE_BEGIN("data_io");

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/tgnef_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

}  // namespace

TEST_CASE("interaction csv loads with labels and features") {
    TempFile f("wiki.csv");
    write_file(f.path,
               "user_id,item_id,timestamp,state_label,f0,f1\n"
               "u1,p1,0.0,0,0.5,1.5\n"
               "u2,p1,1.0,1,0.25,2.5\n"
               "u1,p2,2.0,0,0.125,3.5\n");
    LoadedDataset ds = load_event_csv(f.path, /*bipartite=*/true);
    CHECK(ds.log.size() == 3);
    CHECK(ds.log.node_count() == 4);  // 2 users + 2 items
    CHECK(ds.n_sources == 2);
    CHECK(ds.log.edge_feature_dim() == 2);
    CHECK(ds.labeled_events == 3);
    CHECK(ds.positive_labels == 1);
    // bipartite ids: sources first, then destinations
    CHECK(ds.log[0].src == 0);
    CHECK(ds.log[0].dst == 2);
    CHECK(ds.log[1].src == 1);
    CHECK(ds.log[1].dst == 2);
    CHECK(ds.log[2].dst == 3);
    CHECK(ds.log.edge_features(1)[1] == 2.5);
    CHECK(ds.id_names[0] == "u1");
    CHECK(ds.id_names[2] == "p1");
}

TEST_CASE("uci-style minimal csv has feature width zero") {
    TempFile f("uci.csv");
    write_file(f.path, "src,dst,t\n5,9,1.5\n9,7,2.5\n5,7,3.5\n");
    LoadedDataset ds = load_event_csv(f.path, false);
    CHECK(ds.log.edge_feature_dim() == 0);
    CHECK(ds.labeled_events == 0);
    CHECK(ds.log.node_count() == 3);
    // first-appearance order: 5 -> 0, 9 -> 1, 7 -> 2
    CHECK(ds.log[1].src == 1);
    CHECK(ds.log[1].dst == 2);
}

TEST_CASE("loader errors name the offending line") {
    TempFile f("bad.csv");
    write_file(f.path, "a,b,t,l,f0\nx,y,1.0,0,0.5\nx,z,2.0,0\n");
    CHECK_THROWS_WITH_AS(load_event_csv(f.path, false), doctest::Contains("line 3"), IoError);
    TempFile g("bad2.csv");
    write_file(g.path, "a,b,t\nx,y,notatime\n");
    CHECK_THROWS_WITH_AS(load_event_csv(g.path, false), doctest::Contains("line 2"), IoError);
    TempFile h("empty.csv");
    write_file(h.path, "a,b,t\n");
    CHECK_THROWS_AS(load_event_csv(h.path, false), IoError);
}

TEST_CASE("out-of-order rows are stably resorted") {
    TempFile f("unsorted.csv");
    write_file(f.path, "a,b,t\nn0,n1,5.0\nn1,n2,1.0\nn2,n0,5.0\n");
    LoadedDataset ds = load_event_csv(f.path, false);
    CHECK(ds.log[0].t == 1.0);
    CHECK(ds.log[1].t == 5.0);
    // ties keep file order: (n0,n1) before (n2,n0)
    CHECK(ds.id_names[ds.log[1].src] == "n0");
    CHECK(ds.id_names[ds.log[2].src] == "n2");
}

TEST_CASE("round trip write -> load reproduces the log exactly") {
    TempFile f("orig.csv");
    write_file(f.path,
               "s,d,t,l,f0\n"
               "a,b,1.0,0,0.5\n"
               "b,c,2.0,1,-0.25\n"
               "a,c,3.0,0,0.125\n");
    LoadedDataset ds = load_event_csv(f.path, false);
    TempFile g("copy.csv");
    write_event_csv(g.path, ds.log, ds.id_names);
    LoadedDataset ds2 = load_event_csv(g.path, false);
    REQUIRE(ds2.log.size() == ds.log.size());
    CHECK(ds2.log.node_count() == ds.log.node_count());
    CHECK(ds2.log.edge_feature_dim() == ds.log.edge_feature_dim());
    for (size_t i = 0; i < ds.log.size(); ++i) {
        CHECK(ds2.log[i].src == ds.log[i].src);
        CHECK(ds2.log[i].dst == ds.log[i].dst);
        CHECK(ds2.log[i].t == ds.log[i].t);
        CHECK(ds2.log[i].label == ds.log[i].label);
        CHECK(std::vector<double>(ds2.log.edge_features(i).begin(), ds2.log.edge_features(i).end()) ==
              std::vector<double>(ds.log.edge_features(i).begin(), ds.log.edge_features(i).end()));
    }
    CHECK(ds2.id_names == ds.id_names);
}

TEST_CASE("id mapping sidecar inverts the remap exactly") {
    TempFile f("map.csv");
    write_file(f.path, "a,b,t\nxx,yy,1.0\nzz,xx,2.0\n");
    TempFile m("map.tsv");
    LoadedDataset ds = load_event_csv(f.path, false, m.path);
    std::ifstream in(m.path);
    std::string ext;
    int dense;
    std::set<int> seen;
    while (in >> ext >> dense) {
        CHECK(ds.id_names[dense] == ext);
        CHECK(seen.insert(dense).second);  // bijection: each dense id once
    }
    CHECK(seen.size() == static_cast<size_t>(ds.log.node_count()));
}

TEST_CASE("synthetic: strength zero is uniform by chi-square") {
    SyntheticSpec spec;
    spec.n_nodes = 12;
    spec.n_events = 60000;
    spec.motif = SyntheticSpec::Motif::Triadic;
    spec.strength = 0.0;
    spec.seed = 5;
    EventLog log = generate_synthetic(spec);
    // Under uniform pairing each node appears as src with p = 1/12.
    std::vector<int> counts(12, 0);
    for (size_t i = 0; i < log.size(); ++i) counts[log[i].src]++;
    double expect = spec.n_events / 12.0;
    double chi2 = 0;
    for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
    CHECK(chi2 < 24.72);  // chi2(11) at p=0.01
}

TEST_CASE("synthetic: full-strength recurrence repeats past partners") {
    SyntheticSpec spec;
    spec.n_nodes = 20;
    spec.n_events = 2000;
    spec.motif = SyntheticSpec::Motif::Recurrence;
    spec.strength = 1.0;
    spec.seed = 6;
    EventLog log = generate_synthetic(spec);
    std::set<std::pair<int, int>> seen;
    size_t repeats = 0, counted = 0;
    for (size_t i = 0; i < log.size(); ++i) {
        int a = log[i].src, b = log[i].dst;
        if (i >= 500) {  // after warmup nearly every event closes a known pair
            ++counted;
            if (seen.count({a, b}) || seen.count({b, a})) ++repeats;
        }
        seen.insert({a, b});
    }
    CHECK(static_cast<double>(repeats) / counted > 0.95);
}

TEST_CASE("synthetic: triadic strength raises wedge closure far above noise") {
    auto closure_rate = [](double strength, uint64_t seed) {
        SyntheticSpec spec;
        spec.n_nodes = 60;
        spec.n_events = 1500;
        spec.motif = SyntheticSpec::Motif::Triadic;
        spec.strength = strength;
        spec.seed = seed;
        EventLog log = generate_synthetic(spec);
        std::vector<std::set<int>> nbrs(spec.n_nodes);
        size_t closed = 0, total = 0;
        for (size_t i = 0; i < log.size(); ++i) {
            int a = log[i].src, b = log[i].dst;
            if (i >= 200) {
                ++total;
                bool share = false;
                for (int w : nbrs[a])
                    if (nbrs[b].count(w)) share = true;
                closed += share;
            }
            nbrs[a].insert(b);
            nbrs[b].insert(a);
        }
        return static_cast<double>(closed) / total;
    };
    std::vector<double> strong, weak;
    for (uint64_t s = 0; s < 20; ++s) {
        strong.push_back(closure_rate(0.8, s));
        weak.push_back(closure_rate(0.0, s));
    }
    auto mean = [](const std::vector<double>& v) {
        double m = 0;
        for (double x : v) m += x;
        return m / v.size();
    };
    auto sd = [&](const std::vector<double>& v, double m) {
        double s2 = 0;
        for (double x : v) s2 += (x - m) * (x - m);
        return std::sqrt(s2 / (v.size() - 1));
    };
    double ms = mean(strong), mw = mean(weak);
    double pooled = std::sqrt((sd(strong, ms) * sd(strong, ms) + sd(weak, mw) * sd(weak, mw)) / 20);
    CHECK(ms - mw > 3 * pooled);
}

TEST_CASE("synthetic generation is deterministic per seed") {
    SyntheticSpec spec;
    spec.n_nodes = 15;
    spec.n_events = 500;
    spec.motif = SyntheticSpec::Motif::Recurrence;
    spec.strength = 0.6;
    spec.seed = 77;
    EventLog a = generate_synthetic(spec);
    EventLog b = generate_synthetic(spec);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].src == b[i].src);
        CHECK(a[i].dst == b[i].dst);
        CHECK(a[i].t == b[i].t);
    }
    CHECK_THROWS(generate_synthetic(SyntheticSpec{2, 10, SyntheticSpec::Motif::Random, 0.0, 1}));
}

TEST_CASE("embedding export shape, determinism, and unknown-id errors") {
    TempFile f("emb.csv");
    std::vector<int> nodes{0, 2};
    std::vector<std::string> names{"a", "b", "c"};
    auto embed = [](int n) { return std::vector<double>{n + 0.123456789, n * 2.0}; };
    export_embeddings(f.path, nodes, names, embed);
    std::ifstream in(f.path);
    std::string header, l1, l2, extra;
    std::getline(in, header);
    std::getline(in, l1);
    std::getline(in, l2);
    CHECK(header == "id,e0,e1");
    CHECK(l1 == "a,0.123456789,0");
    CHECK(l2 == "c,2.12345679,4");
    CHECK_FALSE(std::getline(in, extra));

    TempFile g("emb2.csv");
    export_embeddings(g.path, nodes, names, embed);
    std::ifstream a(f.path), b(g.path);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());

    std::vector<int> bad{0, 7};
    CHECK_THROWS_WITH_AS(export_embeddings(g.path, bad, names, embed), doctest::Contains("7"),
                         IoError);
}

TEST_SUITE_END();
