#include "tgnef/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace tgnef {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    throw ConfigError("expected boolean for " + key + ", got '" + v + "'");
}

double parse_num(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (...) {
        throw ConfigError("expected number for " + key + ", got '" + v + "'");
    }
}

int parse_int(const std::string& v, const std::string& key) {
    double d = parse_num(v, key);
    if (d != std::llround(d)) throw ConfigError("expected integer for " + key + ", got '" + v + "'");
    return static_cast<int>(std::llround(d));
}

uint64_t parse_u64(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        uint64_t u = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return u;
    } catch (...) {
        throw ConfigError("expected unsigned integer for " + key + ", got '" + v + "'");
    }
}

// Mask fractions also accept the lean/strict vocabulary.
double parse_mask(const std::string& v, const std::string& key) {
    if (v == "lean") return 0.10;
    if (v == "strict") return 0.75;
    return parse_num(v, key);
}

// One setter per key keeps parsing, overrides, and serialization aligned.
using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct KeySpec {
    Setter set;
    Getter get;
};

std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const std::map<std::string, KeySpec>& key_table() {
    static const std::map<std::string, KeySpec> table = [] {
        std::map<std::string, KeySpec> t;
        auto add = [&](const std::string& name, Setter s, Getter g) { t.emplace(name, KeySpec{s, g}); };

        add("dataset.kind",
            [](RunConfig& c, const std::string& k, const std::string& v) {
                if (v != "csv" && v != "synthetic") throw ConfigError("dataset.kind must be csv or synthetic");
                c.dataset.kind = v;
                (void)k;
            },
            [](const RunConfig& c) { return c.dataset.kind; });
        add("dataset.path",
            [](RunConfig& c, const std::string&, const std::string& v) { c.dataset.path = v; },
            [](const RunConfig& c) { return c.dataset.path; });
        add("dataset.bipartite",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.dataset.bipartite = parse_bool(v, k); },
            [](const RunConfig& c) { return c.dataset.bipartite ? "true" : "false"; });
        add("dataset.synth_nodes",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.dataset.synth.n_nodes = parse_int(v, k); },
            [](const RunConfig& c) { return std::to_string(c.dataset.synth.n_nodes); });
        add("dataset.synth_events",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.dataset.synth.n_events = parse_int(v, k); },
            [](const RunConfig& c) { return std::to_string(c.dataset.synth.n_events); });
        add("dataset.synth_motif",
            [](RunConfig& c, const std::string&, const std::string& v) { c.dataset.synth.motif = motif_from_name(v); },
            [](const RunConfig& c) { return motif_name(c.dataset.synth.motif); });
        add("dataset.synth_strength",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.dataset.synth.strength = parse_num(v, k); },
            [](const RunConfig& c) { return fmt_num(c.dataset.synth.strength); });
        add("dataset.synth_seed",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.dataset.synth.seed = parse_u64(v, k); },
            [](const RunConfig& c) { return std::to_string(c.dataset.synth.seed); });

        add("model.seed",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.model.seed = parse_u64(v, k); },
            [](const RunConfig& c) { return std::to_string(c.model.seed); });
        add("model.d_mem",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.model.tgn.d_mem = parse_int(v, k); },
            [](const RunConfig& c) { return std::to_string(c.model.tgn.d_mem); });
        add("model.d_emb",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.model.tgn.d_emb = parse_int(v, k); },
            [](const RunConfig& c) { return std::to_string(c.model.tgn.d_emb); });
        add("model.d_time",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.model.tgn.d_time = parse_int(v, k); },
            [](const RunConfig& c) { return std::to_string(c.model.tgn.d_time); });
        add("model.n_neighbors",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.model.tgn.n_neighbors = parse_int(v, k); },
            [](const RunConfig& c) { return std::to_string(c.model.tgn.n_neighbors); });
        add("model.hops",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.model.tgn.hops = parse_int(v, k); },
            [](const RunConfig& c) { return std::to_string(c.model.tgn.hops); });
        add("model.msg_nef",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.model.tgn.nef_in_messages = parse_bool(v, k); },
            [](const RunConfig& c) { return c.model.tgn.nef_in_messages ? "true" : "false"; });
        add("model.emb_nef",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.model.tgn.nef_in_embedding = parse_bool(v, k); },
            [](const RunConfig& c) { return c.model.tgn.nef_in_embedding ? "true" : "false"; });
        add("model.msg_agg",
            [](RunConfig& c, const std::string&, const std::string& v) {
                if (v == "mean") c.model.tgn.msg_agg = MsgAggKind::Mean;
                else if (v == "last") c.model.tgn.msg_agg = MsgAggKind::Last;
                else throw ConfigError("model.msg_agg must be mean or last");
            },
            [](const RunConfig& c) { return c.model.tgn.msg_agg == MsgAggKind::Mean ? "mean" : "last"; });
        add("model.memory_init",
            [](RunConfig& c, const std::string&, const std::string& v) {
                if (v == "gaussian") c.model.tgn.memory_init = MemoryInitKind::Gaussian;
                else if (v == "zeros") c.model.tgn.memory_init = MemoryInitKind::Zeros;
                else throw ConfigError("model.memory_init must be gaussian or zeros");
            },
            [](const RunConfig& c) {
                return c.model.tgn.memory_init == MemoryInitKind::Gaussian ? "gaussian" : "zeros";
            });
        add("model.walks_per_node",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.model.walk.walks_per_node = parse_int(v, k); },
            [](const RunConfig& c) { return std::to_string(c.model.walk.walks_per_node); });
        add("model.walk_length",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.model.walk.walk_length = parse_int(v, k); },
            [](const RunConfig& c) { return std::to_string(c.model.walk.walk_length); });
        add("model.walk_alpha",
            [](RunConfig& c, const std::string& k, const std::string& v) {
                c.model.walk.alpha = v == "auto" ? -1.0 : parse_num(v, k);
            },
            [](const RunConfig& c) { return c.model.walk.alpha < 0 ? "auto" : fmt_num(c.model.walk.alpha); });
        add("model.nef_d_pos",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.model.nef.d_pos = parse_int(v, k); },
            [](const RunConfig& c) { return std::to_string(c.model.nef.d_pos); });
        add("model.nef_d_time",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.model.nef.d_time = parse_int(v, k); },
            [](const RunConfig& c) { return std::to_string(c.model.nef.d_time); });
        add("model.walk_hidden",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.model.nef.walk_hidden = parse_int(v, k); },
            [](const RunConfig& c) { return std::to_string(c.model.nef.walk_hidden); });
        add("model.walk_encoder",
            [](RunConfig& c, const std::string&, const std::string& v) {
                if (v == "bi") c.model.nef.encoder = WalkEncoderKind::BiRecurrent;
                else if (v == "mean") c.model.nef.encoder = WalkEncoderKind::MaskedMean;
                else throw ConfigError("model.walk_encoder must be bi or mean");
            },
            [](const RunConfig& c) {
                return c.model.nef.encoder == WalkEncoderKind::BiRecurrent ? "bi" : "mean";
            });
        add("model.walk_agg",
            [](RunConfig& c, const std::string&, const std::string& v) {
                if (v == "identity") c.model.nef.agg = WalkAggKind::Identity;
                else if (v == "self-attention") c.model.nef.agg = WalkAggKind::SelfAttention;
                else throw ConfigError("model.walk_agg must be identity or self-attention");
            },
            [](const RunConfig& c) {
                return c.model.nef.agg == WalkAggKind::Identity ? "identity" : "self-attention";
            });
        add("model.dropout",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.model.dropout = parse_num(v, k); },
            [](const RunConfig& c) { return fmt_num(c.model.dropout); });
        add("model.n_classes",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.model.n_classes = parse_int(v, k); },
            [](const RunConfig& c) { return std::to_string(c.model.n_classes); });

        add("train.batch_size",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.train.batch_size = parse_int(v, k); },
            [](const RunConfig& c) { return std::to_string(c.train.batch_size); });
        add("train.epochs",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.train.epochs = parse_int(v, k); },
            [](const RunConfig& c) { return std::to_string(c.train.epochs); });
        add("train.lr",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.train.lr = parse_num(v, k); },
            [](const RunConfig& c) { return fmt_num(c.train.lr); });
        add("train.seed",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.train.seed = parse_u64(v, k); },
            [](const RunConfig& c) { return std::to_string(c.train.seed); });
        add("train.patience",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.train.patience = parse_int(v, k); },
            [](const RunConfig& c) { return std::to_string(c.train.patience); });
        add("train.node_epochs",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.train.node_epochs = parse_int(v, k); },
            [](const RunConfig& c) { return std::to_string(c.train.node_epochs); });
        add("train.node_lr",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.train.node_lr = parse_num(v, k); },
            [](const RunConfig& c) { return fmt_num(c.train.node_lr); });

        add("eval.task",
            [](RunConfig& c, const std::string&, const std::string& v) { c.eval.task = task_from_name(v); },
            [](const RunConfig& c) { return task_name(c.eval.task); });
        add("eval.node_mask",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.eval.mask.node_frac = parse_mask(v, k); },
            [](const RunConfig& c) { return fmt_num(c.eval.mask.node_frac); });
        add("eval.edge_mask",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.eval.mask.edge_frac = parse_mask(v, k); },
            [](const RunConfig& c) { return fmt_num(c.eval.mask.edge_frac); });
        add("eval.split",
            [](RunConfig& c, const std::string& k, const std::string& v) {
                std::istringstream ss(v);
                std::string part;
                std::vector<double> f;
                while (std::getline(ss, part, '/')) f.push_back(parse_num(trim(part), k));
                if (f.size() != 3) throw ConfigError("eval.split expects train/val/test, e.g. 0.8/0.1/0.1");
                c.eval.split = {f[0], f[1], f[2]};
            },
            [](const RunConfig& c) {
                return fmt_num(c.eval.split.train) + "/" + fmt_num(c.eval.split.val) + "/" +
                       fmt_num(c.eval.split.test);
            });
        add("eval.n_runs",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.eval.n_runs = parse_int(v, k); },
            [](const RunConfig& c) { return std::to_string(c.eval.n_runs); });
        add("eval.base_seed",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.eval.base_seed = parse_u64(v, k); },
            [](const RunConfig& c) { return std::to_string(c.eval.base_seed); });
        return t;
    }();
    return table;
}

}  // namespace

RunConfig default_config() { return RunConfig{}; }

void RunConfig::validate() const {
    if (dataset.kind == "csv" && dataset.path.empty())
        throw ConfigError("dataset.kind=csv requires dataset.path");
    if (dataset.kind == "synthetic") dataset.synth.validate();
    model.walk.validate();
    model.nef.validate();
    model.tgn.validate();
    if (model.dropout < 0 || model.dropout >= 1) throw ConfigError("model.dropout must be in [0,1)");
    if (model.n_classes < 2) throw ConfigError("model.n_classes must be >= 2");
    train.validate();
    eval.validate();
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    size_t line_no = 0;
    const auto& table = key_table();
    while (std::getline(in, line)) {
        ++line_no;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[' && s.back() == ']') {
            section = trim(s.substr(1, s.size() - 2));
            if (section != "dataset" && section != "model" && section != "train" && section != "eval")
                throw ConfigError("unknown section [" + section + "] at line " + std::to_string(line_no));
            continue;
        }
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value at line " + std::to_string(line_no));
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (section.empty()) throw ConfigError("key outside any section at line " + std::to_string(line_no));
        std::string full = section + "." + key;
        auto it = table.find(full);
        if (it == table.end()) throw ConfigError("unknown key '" + full + "' at line " + std::to_string(line_no));
        it->second.set(cfg, full, value);
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    size_t eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override must look like section.key=value");
    std::string key = trim(assignment.substr(0, eq));
    std::string value = trim(assignment.substr(eq + 1));
    const auto& table = key_table();
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown key '" + key + "'");
    it->second.set(cfg, key, value);
}

std::string canonical_text(const RunConfig& cfg) {
    std::ostringstream os;
    std::string section;
    for (const auto& [key, spec] : key_table()) {  // std::map iterates sorted
        std::string sec = key.substr(0, key.find('.'));
        if (sec != section) {
            os << "[" << sec << "]\n";
            section = sec;
        }
        os << key.substr(key.find('.') + 1) << " = " << spec.get(cfg) << "\n";
    }
    return os.str();
}

uint64_t config_hash(const RunConfig& cfg) {
    std::string text = canonical_text(cfg);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash_hex(const RunConfig& cfg) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
    return buf;
}

}  // namespace tgnef
