#include "tgnef/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <unordered_map>

#include "tgnef/rng.hpp"

namespace tgnef {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, size_t line_no, const char* what) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw IoError(std::string("unparseable ") + what + " '" + s + "' at line " +
                      std::to_string(line_no));
    }
}

}  // namespace

LoadedDataset load_event_csv(const std::string& path, bool bipartite, const std::string& mapping_out) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("missing header line in " + path);

    struct Row {
        std::string src, dst;
        double t;
        std::optional<int> label;
        std::vector<double> feats;
    };
    std::vector<Row> rows;
    int arity = -1;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cols = split_csv(line);
        if (cols.size() < 3) throw IoError("expected at least 3 columns at line " + std::to_string(line_no));
        Row r;
        r.src = cols[0];
        r.dst = cols[1];
        r.t = parse_double(cols[2], line_no, "timestamp");
        size_t feat_start = 3;
        if (cols.size() >= 4) {
            r.label = static_cast<int>(std::llround(parse_double(cols[3], line_no, "label")));
            feat_start = 4;
        }
        for (size_t c = feat_start; c < cols.size(); ++c)
            r.feats.push_back(parse_double(cols[c], line_no, "edge feature"));
        if (arity < 0)
            arity = static_cast<int>(r.feats.size());
        else if (static_cast<int>(r.feats.size()) != arity)
            throw IoError("ragged feature row at line " + std::to_string(line_no) + " (expected " +
                          std::to_string(arity) + " features, got " + std::to_string(r.feats.size()) + ")");
        rows.push_back(std::move(r));
    }
    if (rows.empty()) throw IoError("no events in " + path);

    LoadedDataset ds;
    ds.bipartite = bipartite;
    std::unordered_map<std::string, int> src_ids, dst_ids;
    if (bipartite) {
        for (const Row& r : rows)
            if (!src_ids.count(r.src)) {
                int id = static_cast<int>(src_ids.size());
                src_ids.emplace(r.src, id);
            }
        ds.n_sources = static_cast<int>(src_ids.size());
        for (const Row& r : rows)
            if (!dst_ids.count(r.dst)) {
                int id = ds.n_sources + static_cast<int>(dst_ids.size());
                dst_ids.emplace(r.dst, id);
            }
    } else {
        auto& ids = src_ids;
        for (const Row& r : rows) {
            if (!ids.count(r.src)) ids.emplace(r.src, static_cast<int>(ids.size()));
            if (!ids.count(r.dst)) ids.emplace(r.dst, static_cast<int>(ids.size()));
        }
        ds.n_sources = static_cast<int>(ids.size());
    }
    int node_count = static_cast<int>(src_ids.size() + (bipartite ? dst_ids.size() : 0));
    ds.id_names.resize(node_count);
    for (const auto& [name, id] : src_ids) ds.id_names[id] = name;
    for (const auto& [name, id] : dst_ids) ds.id_names[id] = name;

    std::vector<Event> events;
    std::vector<std::vector<double>> feats;
    events.reserve(rows.size());
    for (Row& r : rows) {
        Event e;
        e.src = src_ids.at(r.src);
        e.dst = bipartite ? dst_ids.at(r.dst) : src_ids.at(r.dst);
        e.t = r.t;
        e.label = r.label;
        if (r.label.has_value()) {
            ++ds.labeled_events;
            if (*r.label != 0) ++ds.positive_labels;
        }
        events.push_back(e);
        if (arity > 0) feats.push_back(std::move(r.feats));
    }
    ds.log = EventLog(std::move(events), std::move(feats), node_count, arity > 0 ? arity : 0,
                      /*resort=*/true);
    ds.features = NodeFeatures(node_count, 0);

    if (!mapping_out.empty()) {
        std::ofstream map_out(mapping_out);
        if (!map_out) throw IoError("cannot write id mapping: " + mapping_out);
        for (int i = 0; i < node_count; ++i) map_out << ds.id_names[i] << "\t" << i << "\n";
    }
    return ds;
}

void write_event_csv(const std::string& path, const EventLog& log,
                     const std::vector<std::string>& id_names) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    bool labels = false;
    for (size_t i = 0; i < log.size(); ++i)
        if (log[i].label.has_value()) labels = true;
    out << "src_id,dst_id,timestamp";
    if (labels || log.edge_feature_dim() > 0) out << ",state_label";
    for (int f = 0; f < log.edge_feature_dim(); ++f) out << ",f" << f;
    out << "\n";
    auto name = [&](int id) { return id_names.empty() ? std::to_string(id) : id_names[id]; };
    char buf[64];
    for (size_t i = 0; i < log.size(); ++i) {
        const Event& e = log[i];
        std::snprintf(buf, sizeof(buf), "%.17g", e.t);
        out << name(e.src) << "," << name(e.dst) << "," << buf;
        if (labels || log.edge_feature_dim() > 0) out << "," << e.label.value_or(0);
        for (double f : log.edge_features(i)) {
            std::snprintf(buf, sizeof(buf), "%.17g", f);
            out << "," << buf;
        }
        out << "\n";
    }
}

void SyntheticSpec::validate() const {
    if (n_nodes < 3) throw std::invalid_argument("synthetic: n_nodes must be >= 3");
    if (n_events < 1) throw std::invalid_argument("synthetic: n_events must be >= 1");
    if (strength < 0 || strength > 1) throw std::invalid_argument("synthetic: strength must be in [0,1]");
}

SyntheticSpec::Motif motif_from_name(const std::string& s) {
    if (s == "random") return SyntheticSpec::Motif::Random;
    if (s == "recurrence") return SyntheticSpec::Motif::Recurrence;
    if (s == "triadic") return SyntheticSpec::Motif::Triadic;
    throw std::invalid_argument("unknown motif: " + s);
}

const char* motif_name(SyntheticSpec::Motif m) {
    switch (m) {
        case SyntheticSpec::Motif::Random: return "random";
        case SyntheticSpec::Motif::Recurrence: return "recurrence";
        case SyntheticSpec::Motif::Triadic: return "triadic";
    }
    return "?";
}

EventLog generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(mix64(spec.seed, 0x5eedu));
    std::vector<std::vector<int>> partners(spec.n_nodes);  // past partners, with multiplicity
    std::vector<Event> events;
    events.reserve(spec.n_events);
    double t = 0;

    auto uniform_pair = [&](int& a, int& b) {
        a = static_cast<int>(rng.next_below(spec.n_nodes));
        do {
            b = static_cast<int>(rng.next_below(spec.n_nodes));
        } while (b == a);
    };

    for (int i = 0; i < spec.n_events; ++i) {
        t += -std::log(1.0 - rng.next_double());  // unit-exponential gap
        int a = -1, b = -1;
        bool use_motif = spec.motif != SyntheticSpec::Motif::Random && rng.next_double() < spec.strength;
        if (use_motif && spec.motif == SyntheticSpec::Motif::Recurrence) {
            int u = static_cast<int>(rng.next_below(spec.n_nodes));
            if (!partners[u].empty()) {
                a = u;
                b = partners[u][rng.next_below(partners[u].size())];
            }
        } else if (use_motif && spec.motif == SyntheticSpec::Motif::Triadic) {
            // Close a wedge through the hub of a recent event.
            for (int attempt = 0; attempt < 8 && a < 0; ++attempt) {
                if (events.empty()) break;
                size_t lo = events.size() > 200 ? events.size() - 200 : 0;
                const Event& recent = events[lo + rng.next_below(events.size() - lo)];
                int hub = rng.next_double() < 0.5 ? recent.src : recent.dst;
                int u = hub == recent.src ? recent.dst : recent.src;
                if (partners[hub].size() < 2) continue;
                int x = partners[hub][rng.next_below(partners[hub].size())];
                if (x != u) {
                    a = u;
                    b = x;
                }
            }
        }
        if (a < 0) uniform_pair(a, b);
        Event e;
        e.src = a;
        e.dst = b;
        e.t = t;
        events.push_back(e);
        partners[a].push_back(b);
        partners[b].push_back(a);
    }
    return EventLog(std::move(events), {}, spec.n_nodes, 0);
}

void export_embeddings(const std::string& path, std::span<const int> nodes,
                       const std::vector<std::string>& id_names,
                       const std::function<std::vector<double>(int)>& embed) {
    std::string unknown;
    for (int n : nodes)
        if (n < 0 || (!id_names.empty() && n >= static_cast<int>(id_names.size())))
            unknown += (unknown.empty() ? "" : ", ") + std::to_string(n);
    if (!unknown.empty()) throw IoError("unknown node ids: " + unknown);

    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    bool wrote_header = false;
    char buf[64];
    for (int n : nodes) {
        std::vector<double> z = embed(n);
        if (!wrote_header) {
            out << "id";
            for (size_t j = 0; j < z.size(); ++j) out << ",e" << j;
            out << "\n";
            wrote_header = true;
        }
        out << (id_names.empty() ? std::to_string(n) : id_names[n]);
        for (double v : z) {
            std::snprintf(buf, sizeof(buf), "%.9g", v);
            out << "," << buf;
        }
        out << "\n";
    }
}

}  // namespace tgnef
