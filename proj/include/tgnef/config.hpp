#pragma once

// Plain sectioned key=value run configuration. Unknown sections or keys are
// rejected before any work starts; the canonical serialization (and its
// hash) is embedded in every artifact so runs are self-describing.

#include <string>

#include "tgnef/bench.hpp"
#include "tgnef/data_io.hpp"

namespace tgnef {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DatasetConfig {
    std::string kind = "synthetic";  // csv | synthetic
    std::string path;
    bool bipartite = false;
    SyntheticSpec synth;
};

struct RunConfig {
    DatasetConfig dataset;
    ModelConfig model;
    TrainConfig train;
    ExperimentSpec eval;
    void validate() const;
};

RunConfig default_config();

// Parses the sectioned key=value format; throws ConfigError naming the
// offending line on unknown keys or malformed values.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// "section.key=value" command-line override.
void apply_override(RunConfig& cfg, const std::string& assignment);

// Deterministic serialization of every field (sections and keys in fixed
// order), suitable for hashing and for echoing into artifacts.
std::string canonical_text(const RunConfig& cfg);
uint64_t config_hash(const RunConfig& cfg);
std::string config_hash_hex(const RunConfig& cfg);

}  // namespace tgnef
