#include "tgnef/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace tgnef {

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

uint64_t pair_key(int a, int b) { return (static_cast<uint64_t>(a) << 32) | static_cast<uint32_t>(b); }

constexpr uint64_t kMsgTag = 0x6d65u;
constexpr uint64_t kEmbTag = 0xe4b0u;

}  // namespace

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (patience < 0) throw std::invalid_argument("patience must be >= 0");
}

std::vector<int> negative_sample(std::span<const Event> positives, std::span<const int> universe,
                                 Rng& rng) {
    if (universe.size() < 2) throw std::invalid_argument("negative_sample: universe smaller than 2");
    std::unordered_set<uint64_t> batch_pairs;
    for (const Event& e : positives) batch_pairs.insert(pair_key(e.src, e.dst));
    std::vector<int> out;
    out.reserve(positives.size());
    for (const Event& e : positives) {
        int dst = -1;
        for (int attempt = 0; attempt < 200; ++attempt) {
            int cand = universe[rng.next_below(universe.size())];
            if (!batch_pairs.count(pair_key(e.src, cand))) {
                dst = cand;
                break;
            }
        }
        if (dst < 0) {
            // Tiny universe fallback: first non-colliding entry, else give up
            // on collision avoidance rather than loop forever.
            for (int cand : universe)
                if (!batch_pairs.count(pair_key(e.src, cand))) {
                    dst = cand;
                    break;
                }
            if (dst < 0) dst = universe[rng.next_below(universe.size())];
        }
        out.push_back(dst);
    }
    return out;
}

TgnEngine::TgnEngine(Model& model, const PreparedData& data, uint64_t stream_seed)
    : model_(model),
      data_(data),
      adj_(data.log),
      memory_(data.log.node_count(), model.config().tgn.d_mem),
      store_(data.log.node_count()),
      stream_seed_(stream_seed) {}

void TgnEngine::reset_state() {
    memory_.init(model_.config().tgn.memory_init, mix64(stream_seed_, 0x6d696eu),
                 data_.log.empty() ? 0.0 : data_.log.t_min());
    store_.clear();
    batch_counter_ = 0;
}

TgnEngine::ForwardBatch TgnEngine::forward_batch(Tape& tape, size_t begin, size_t end,
                                                 std::span<const size_t> score_idx,
                                                 std::span<const int> neg_dsts, Rng* drop_rng,
                                                 bool collect_src_embeddings) {
    const TgnConfig& tcfg = model_.config().tgn;
    const int batch_id = batch_counter_++;
    ForwardBatch fwd;
    BatchOutput& out = fwd.out;

    // Nodes whose state participates in this batch's inference.
    std::vector<int> touched;
    {
        std::unordered_set<int> seen;
        auto touch = [&](int n) {
            if (seen.insert(n).second) touched.push_back(n);
        };
        for (size_t i = begin; i < end; ++i) {
            touch(data_.log[i].src);
            touch(data_.log[i].dst);
        }
        for (int d : neg_dsts) touch(d);
        std::sort(touched.begin(), touched.end());
    }

    // Phase 1: flush pending messages into memory for touched nodes.
    std::vector<int>& flush_nodes = fwd.flush_nodes;
    std::vector<Tensor> aggregated;
    std::vector<Tensor> prev_mem;
    std::vector<double>& new_times = fwd.new_times;
    for (int node : touched) {
        if (!store_.has_pending(node)) continue;
        if (recorder_) recorder_->log(batch_id, node, EventRecorder::Kind::Flush);
        std::vector<RawMessage> raw = store_.take(node);
        Tensor s_node = tape.constant({tcfg.d_mem}, std::vector<double>(memory_.memory(node).begin(),
                                                                        memory_.memory(node).end()));
        std::vector<Tensor> msgs;
        msgs.reserve(raw.size());
        double t_new = memory_.last_update_time(node);
        for (const RawMessage& m : raw) {
            Tensor s_cpart = tape.constant(
                {tcfg.d_mem},
                std::vector<double>(memory_.memory(m.counterpart).begin(), memory_.memory(m.counterpart).end()));
            Tensor nef;
            const Tensor* nef_ptr = nullptr;
            if (tcfg.nef_in_messages) {
                uint64_t tag = mix64(stream_seed_, kMsgTag, static_cast<uint64_t>(m.event_id),
                                     static_cast<uint64_t>(m.is_source ? 1 : 0));
                nef = model_.nef().compute(tape, adj_, data_.features, m.node, m.counterpart, m.t, tag);
                nef_ptr = &nef;
            }
            std::span<const double> efeat =
                data_.log.edge_feature_dim() > 0
                    ? data_.log.edge_features(static_cast<size_t>(m.event_id))
                    : std::span<const double>{};
            double dt = m.t - memory_.last_update_time(node);
            msgs.push_back(model_.tgn().generate_message(tape, s_node, s_cpart, dt, efeat, nef_ptr));
            t_new = std::max(t_new, m.t);
        }
        Tensor agg = model_.tgn().aggregate_messages(tape, msgs, tcfg.msg_agg);
        flush_nodes.push_back(node);
        aggregated.push_back(agg);
        prev_mem.push_back(s_node);
        new_times.push_back(t_new);
    }

    std::unordered_map<int, int> updated_row;  // node -> row in the updated block
    Tensor& updated = fwd.updated;
    if (!flush_nodes.empty()) {
        Tensor agg_mat = stack_rows(aggregated);
        Tensor prev_mat = stack_rows(prev_mem);
        updated = model_.tgn().memory_update(tape, agg_mat, prev_mat);
        for (size_t i = 0; i < flush_nodes.size(); ++i) updated_row[flush_nodes[i]] = static_cast<int>(i);
    }

    // Memory resolver: just-updated rows stay on tape so gradients reach the
    // message path; everything else enters as a detached constant.
    std::unordered_map<int, Tensor> mem_cache;
    auto mem_of = [&](int node) -> Tensor {
        auto it = mem_cache.find(node);
        if (it != mem_cache.end()) return it->second;
        Tensor t;
        auto rit = updated_row.find(node);
        if (rit != updated_row.end())
            t = row(updated, rit->second);
        else
            t = tape.constant({tcfg.d_mem}, std::vector<double>(memory_.memory(node).begin(),
                                                                memory_.memory(node).end()));
        mem_cache.emplace(node, t);
        return t;
    };

    // Phase 2: inference.
    if (recorder_)
        for (int node : touched) recorder_->log(batch_id, node, EventRecorder::Kind::Infer);

    if (!score_idx.empty()) {
        std::vector<Tensor> pair_rows;
        pair_rows.reserve(2 * score_idx.size());
        std::vector<Tensor> neg_rows;
        neg_rows.reserve(score_idx.size());
        for (size_t k = 0; k < score_idx.size(); ++k) {
            const Event& e = data_.log[score_idx[k]];
            uint64_t base = mix64(stream_seed_, kEmbTag, static_cast<uint64_t>(e.id));
            Tensor z_src = model_.tgn().compute_embedding(tape, e.src, e.t, mem_of, adj_, data_.features,
                                                          mix64(base, 0));
            Tensor z_dst = model_.tgn().compute_embedding(tape, e.dst, e.t, mem_of, adj_, data_.features,
                                                          mix64(base, 1));
            Tensor z_neg = model_.tgn().compute_embedding(tape, neg_dsts[k], e.t, mem_of, adj_,
                                                          data_.features, mix64(base, 2));
            pair_rows.push_back(concat({z_src, z_dst}, 0));
            neg_rows.push_back(concat({z_src, z_neg}, 0));
        }
        pair_rows.insert(pair_rows.end(), neg_rows.begin(), neg_rows.end());
        Tensor zcat = stack_rows(pair_rows);
        double drop = drop_rng ? model_.config().dropout : 0.0;
        Tensor logits = model_.edge_decoder().logits_batch(tape, zcat, drop, drop_rng);
        out.labels.assign(2 * score_idx.size(), 0.0);
        std::fill(out.labels.begin(), out.labels.begin() + score_idx.size(), 1.0);
        fwd.loss = bce_with_logits_mean(logits, out.labels);
        out.loss = fwd.loss.item();
        if (!std::isfinite(out.loss))
            throw NumericError("training aborted: non-finite loss in batch " + std::to_string(batch_id));
        out.scores.resize(logits.value().size());
        for (size_t i = 0; i < out.scores.size(); ++i)
            out.scores[i] = 1.0 / (1.0 + std::exp(-logits.value()[i]));
    }

    if (collect_src_embeddings) {
        for (size_t i = begin; i < end; ++i) {
            const Event& e = data_.log[i];
            uint64_t tag = mix64(stream_seed_, kEmbTag, static_cast<uint64_t>(e.id), 3);
            Tensor z = model_.tgn().compute_embedding(tape, e.src, e.t, mem_of, adj_, data_.features, tag);
            out.collected.emplace_back(i, z.value());
        }
    }

    return fwd;
}

TgnEngine::BatchOutput TgnEngine::run_batch(size_t begin, size_t end,
                                            std::span<const size_t> score_idx,
                                            std::span<const int> neg_dsts, Adam* opt, Rng* drop_rng,
                                            bool collect_src_embeddings) {
    const int batch_id = batch_counter_;  // forward_batch will advance it
    Tape tape;
    ForwardBatch fwd = forward_batch(tape, begin, end, score_idx, neg_dsts, drop_rng,
                                     collect_src_embeddings);
    if (opt && fwd.loss.valid()) {
        opt->zero_grad();
        tape.backward(fwd.loss);
        opt->step();
    }

    // Phase 3: commit the flushed memory rows (values from the pre-step
    // forward pass) and write this batch's raw messages.
    int d = model_.config().tgn.d_mem;
    for (size_t i = 0; i < fwd.flush_nodes.size(); ++i) {
        const auto& val = tape.node(fwd.updated.id()).value;
        std::span<const double> rowspan(val.data() + i * static_cast<size_t>(d),
                                        static_cast<size_t>(d));
        memory_.commit(fwd.flush_nodes[i], rowspan, fwd.new_times[i]);
    }
    for (size_t i = begin; i < end; ++i) {
        const Event& e = data_.log[i];
        if (recorder_) {
            recorder_->log(batch_id, e.src, EventRecorder::Kind::Store);
            recorder_->log(batch_id, e.dst, EventRecorder::Kind::Store);
        }
        store_.store({e.src, e.dst, e.t, e.id, true});
        store_.store({e.dst, e.src, e.t, e.id, false});
    }
    return std::move(fwd.out);
}

void TgnEngine::replay(size_t begin, size_t end, int batch_size) {
    for (size_t b = begin; b < end; b += static_cast<size_t>(batch_size))
        run_batch(b, std::min(end, b + static_cast<size_t>(batch_size)), {}, {}, nullptr, nullptr);
}

std::vector<double> TgnEngine::embed(int node, double t, uint64_t tag) {
    Tape tape;
    const TgnConfig& tcfg = model_.config().tgn;
    std::unordered_map<int, Tensor> cache;
    auto mem_of = [&](int n) -> Tensor {
        auto it = cache.find(n);
        if (it != cache.end()) return it->second;
        Tensor c = tape.constant({tcfg.d_mem},
                                 std::vector<double>(memory_.memory(n).begin(), memory_.memory(n).end()));
        cache.emplace(n, c);
        return c;
    };
    return model_.tgn().compute_embedding(tape, node, t, mem_of, adj_, data_.features, tag).value();
}

EdgeEvalResult evaluate_edges(TgnEngine& engine, const PreparedData& data, size_t begin, size_t end,
                              int batch_size, uint64_t neg_seed) {
    std::vector<double> scores, labels;
    Rng neg_rng(neg_seed);
    bool inductive = data.task == Task::InductiveEdge || data.task == Task::InductiveNode;
    for (size_t b = begin; b < end; b += static_cast<size_t>(batch_size)) {
        size_t e = std::min(end, b + static_cast<size_t>(batch_size));
        std::vector<size_t> score_idx;
        std::vector<Event> positives;
        for (size_t i = b; i < e; ++i)
            if (data.scorable(i)) {
                score_idx.push_back(i);
                positives.push_back(data.log[i]);
            }
        std::vector<int> negs;
        if (!score_idx.empty()) {
            if (inductive && data.unseen_dsts.size() >= 2) {
                // Keep every scored pair inductive: seen sources draw their
                // negative from the unseen destinations.
                negs.resize(score_idx.size());
                std::vector<Event> seen_src, unseen_src;
                for (size_t k = 0; k < positives.size(); ++k)
                    (data.seen_in_train[positives[k].src] ? seen_src : unseen_src).push_back(positives[k]);
                std::vector<int> a = unseen_src.empty()
                                         ? std::vector<int>{}
                                         : negative_sample(unseen_src, data.all_dsts, neg_rng);
                std::vector<int> bneg = seen_src.empty()
                                            ? std::vector<int>{}
                                            : negative_sample(seen_src, data.unseen_dsts, neg_rng);
                size_t ai = 0, bi = 0;
                for (size_t k = 0; k < positives.size(); ++k)
                    negs[k] = data.seen_in_train[positives[k].src] ? bneg[bi++] : a[ai++];
            } else {
                negs = negative_sample(positives, data.all_dsts, neg_rng);
            }
        }
        auto outb = engine.run_batch(b, e, score_idx, negs, nullptr, nullptr);
        scores.insert(scores.end(), outb.scores.begin(), outb.scores.end());
        labels.insert(labels.end(), outb.labels.begin(), outb.labels.end());
    }
    EdgeEvalResult res;
    res.n_scored = scores.size();
    if (!scores.empty()) {
        res.auc = auc_roc(scores, labels);
        res.ap = average_precision(scores, labels);
    }
    return res;
}

TrainOutcome train_model(Model& model, const PreparedData& data, const TrainConfig& cfg,
                         EventRecorder* recorder) {
    cfg.validate();
    TgnEngine engine(model, data, mix64(cfg.seed, 0x57a7e5u));
    engine.set_recorder(recorder);
    Adam opt(model.params().all(), cfg.lr);
    TrainOutcome outcome;
    std::vector<std::vector<double>> best_snapshot;
    int since_best = 0;

    std::vector<int> train_universe =
        data.train_dsts.size() >= 2 ? data.train_dsts : data.all_dsts;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double t0 = now_ms();
        engine.reset_state();
        std::vector<BatchResult> batch_results;
        double loss_sum = 0;
        size_t n_batches = 0;
        for (size_t b = 0; b < data.train_end; b += static_cast<size_t>(cfg.batch_size)) {
            size_t e = std::min(data.train_end, b + static_cast<size_t>(cfg.batch_size));
            std::vector<size_t> score_idx;
            std::vector<Event> positives;
            for (size_t i = b; i < e; ++i) {
                score_idx.push_back(i);
                positives.push_back(data.log[i]);
            }
            Rng neg_rng(mix64(cfg.seed, 0x6e65u, static_cast<uint64_t>(epoch), b));
            std::vector<int> negs = negative_sample(positives, train_universe, neg_rng);
            Rng drop_rng(mix64(cfg.seed, 0xd20bu, static_cast<uint64_t>(epoch), b));
            double bt0 = now_ms();
            auto outb = engine.run_batch(b, e, score_idx, negs, &opt, &drop_rng);
            BatchResult br;
            br.loss = outb.loss;
            br.wall_ms = now_ms() - bt0;
            if (outb.scores.size() >= 2) {
                br.auc = auc_roc(outb.scores, outb.labels);
                br.ap = average_precision(outb.scores, outb.labels);
            }
            batch_results.push_back(br);
            loss_sum += outb.loss;
            ++n_batches;
        }

        // Frozen validation: rebuild memory by replaying the training range
        // under the current weights, then score the validation range with
        // per-run fixed negatives. This makes the recorded value a pure
        // function of (weights, data, seed), so a reloaded checkpoint
        // reproduces it exactly.
        engine.reset_state();
        engine.replay(0, data.train_end, cfg.batch_size);
        EdgeEvalResult val = evaluate_edges(engine, data, data.train_end, data.val_end, cfg.batch_size,
                                            mix64(cfg.seed, 0x7632u));
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = n_batches ? loss_sum / static_cast<double>(n_batches) : 0.0;
        rec.val_auc = val.auc;
        rec.val_ap = val.ap;
        rec.wall_s = (now_ms() - t0) / 1000.0;
        outcome.history.epochs.push_back(rec);
        outcome.batch_results.push_back(std::move(batch_results));

        bool no_val = val.n_scored == 0;
        double score = no_val ? -rec.train_loss : rec.val_ap;
        if (outcome.history.best_epoch < 0 || score > outcome.history.best_val_ap) {
            outcome.history.best_epoch = epoch;
            outcome.history.best_val_ap = score;
            best_snapshot = model.snapshot();
            since_best = 0;
        } else {
            ++since_best;
        }
        if (since_best >= cfg.patience) break;
    }
    if (!best_snapshot.empty()) model.restore(best_snapshot);
    return outcome;
}

NodePhaseResult run_node_phase(Model& model, const PreparedData& data, const TrainConfig& cfg) {
    // Frozen edge model; replay everything once, harvesting source embeddings
    // at labeled events.
    TgnEngine engine(model, data, mix64(cfg.seed, 0x57a7e5u));
    engine.reset_state();
    std::vector<std::vector<double>> embs;
    std::vector<int> labels;
    std::vector<int> split;  // 0 train, 1 val, 2 test
    for (size_t b = 0; b < data.log.size(); b += static_cast<size_t>(cfg.batch_size)) {
        size_t e = std::min(data.log.size(), b + static_cast<size_t>(cfg.batch_size));
        auto outb = engine.run_batch(b, e, {}, {}, nullptr, nullptr, /*collect=*/true);
        for (auto& [idx, emb] : outb.collected) {
            const Event& ev = data.log[idx];
            if (!ev.label.has_value()) continue;
            if (idx >= data.val_end && !data.scorable(idx)) continue;  // task filter on test
            embs.push_back(std::move(emb));
            labels.push_back(*ev.label);
            split.push_back(idx < data.train_end ? 0 : (idx < data.val_end ? 1 : 2));
        }
    }

    NodePhaseResult res;
    std::vector<size_t> tr, va, te;
    for (size_t i = 0; i < embs.size(); ++i)
        (split[i] == 0 ? tr : split[i] == 1 ? va : te).push_back(i);
    res.n_train = tr.size();
    res.n_val = va.size();
    res.n_test = te.size();
    if (tr.empty() || te.empty()) throw std::invalid_argument("node task: not enough labeled events");

    int d_emb = model.config().tgn.d_emb;
    auto probs_of = [&](const std::vector<size_t>& idxs) {
        Tape tape;
        std::vector<double> flat;
        flat.reserve(idxs.size() * d_emb);
        for (size_t i : idxs) flat.insert(flat.end(), embs[i].begin(), embs[i].end());
        Tensor z = tape.constant({static_cast<int>(idxs.size()), d_emb}, std::move(flat));
        Tensor logits = model.node_decoder().logits(tape, z);
        std::vector<double> out(idxs.size());
        for (size_t r = 0; r < idxs.size(); ++r) {
            // P(class 1) via the 2-class softmax on the logit difference.
            double z0 = logits.value()[r * model.node_decoder().n_classes() + 0];
            double z1 = logits.value()[r * model.node_decoder().n_classes() + 1];
            out[r] = 1.0 / (1.0 + std::exp(z0 - z1));
        }
        return out;
    };

    Adam opt(model.node_decoder().parameters(), cfg.node_lr);
    double best_val = -1;
    std::vector<std::vector<double>> best_snap;
    int since_best = 0;
    Rng drop_rng(mix64(cfg.seed, 0xd20b2u));
    for (int epoch = 0; epoch < cfg.node_epochs; ++epoch) {
        Tape tape;
        std::vector<double> flat;
        std::vector<int> lab;
        flat.reserve(tr.size() * d_emb);
        for (size_t i : tr) {
            flat.insert(flat.end(), embs[i].begin(), embs[i].end());
            lab.push_back(labels[i]);
        }
        Tensor z = tape.constant({static_cast<int>(tr.size()), d_emb}, std::move(flat));
        Tensor logits = model.node_decoder().logits(tape, z, model.config().dropout, &drop_rng);
        Tensor loss = softmax_xent_mean(logits, lab);
        opt.zero_grad();
        tape.backward(loss);
        opt.step();

        double val_metric;
        if (!va.empty()) {
            bool both = false;
            for (size_t i : va)
                if (labels[i] != labels[va[0]]) both = true;
            std::vector<double> vl;
            for (size_t i : va) vl.push_back(labels[i]);
            val_metric = both ? auc_roc(probs_of(va), vl) : -loss.item();
        } else {
            val_metric = -loss.item();
        }
        if (val_metric > best_val) {
            best_val = val_metric;
            best_snap.clear();
            for (Parameter* p : model.node_decoder().parameters()) best_snap.push_back(p->value);
            since_best = 0;
        } else if (++since_best > std::max(cfg.patience, 1) * 10) {
            break;
        }
    }
    if (!best_snap.empty()) {
        auto ps = model.node_decoder().parameters();
        for (size_t i = 0; i < ps.size(); ++i) ps[i]->value = best_snap[i];
    }

    std::vector<double> test_scores = probs_of(te);
    std::vector<double> test_labels;
    for (size_t i : te) test_labels.push_back(labels[i]);
    bool both = false;
    for (double l : test_labels)
        if (l != test_labels[0]) both = true;
    if (both) {
        res.test_auc = auc_roc(test_scores, test_labels);
        res.test_ap = average_precision(test_scores, test_labels);
    } else {
        throw std::invalid_argument("node task: test labels contain a single class");
    }
    return res;
}

}  // namespace tgnef
