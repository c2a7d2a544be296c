#pragma once

// Dataset ingestion (interaction CSV with string ids remapped to dense
// ints), synthetic stream generation with planted temporal motifs, and
// embedding export.

#include <functional>
#include <string>

#include "tgnef/event_graph.hpp"

namespace tgnef {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LoadedDataset {
    EventLog log;
    NodeFeatures features;  // width 0 for this wire format
    bool bipartite = false;
    int n_sources = 0;                  // bipartite: ids [0, n_sources) are sources
    std::vector<std::string> id_names;  // dense id -> external id
    size_t labeled_events = 0;
    size_t positive_labels = 0;
};

// Wire format: a header line, then `src,dst,timestamp[,label[,f0,f1,...]]`.
// External ids are remapped to dense ints in first-appearance order
// (bipartite: all sources first, then all destinations). Events are
// stably re-sorted by timestamp when needed. When `mapping_out` is
// non-empty the id mapping is written there as two-column text.
LoadedDataset load_event_csv(const std::string& path, bool bipartite,
                             const std::string& mapping_out = "");

// Inverse of the loader for logs whose dense ids equal their external ids
// (or with explicit names); one event per line after a header.
void write_event_csv(const std::string& path, const EventLog& log,
                     const std::vector<std::string>& id_names = {});

struct SyntheticSpec {
    int n_nodes = 100;
    int n_events = 1000;
    enum class Motif { Random, Recurrence, Triadic } motif = Motif::Random;
    double strength = 0.0;  // probability that an event follows the motif rule
    uint64_t seed = 1;
    void validate() const;
};

SyntheticSpec::Motif motif_from_name(const std::string& s);
const char* motif_name(SyntheticSpec::Motif m);

// Unit-exponential arrival times; with probability `strength` the next pair
// follows the motif (recurrence: repeat a past partner of a random node;
// triadic: connect two nodes that share a recent neighbor), otherwise a
// uniform random pair.
EventLog generate_synthetic(const SyntheticSpec& spec);

// One line per node: external id then d_emb comma-separated floats with 9
// significant digits. `embed` maps a node id to its embedding values.
void export_embeddings(const std::string& path, std::span<const int> nodes,
                       const std::vector<std::string>& id_names,
                       const std::function<std::vector<double>(int)>& embed);

}  // namespace tgnef
