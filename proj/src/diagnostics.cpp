#include "tgnef/diagnostics.hpp"

#include "tgnef/bench.hpp"
#include "tgnef/nef.hpp"
#include "tgnef/nn.hpp"

namespace tgnef {

namespace {

std::vector<double> random_vec(size_t n, Rng& rng, double scale = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = scale * rng.next_range(-1.0, 1.0);
    return v;
}

// Move every weight off its init point: zero biases would otherwise park
// relu inputs exactly on the kink, where one-sided derivatives differ.
void jitter_params(std::span<Parameter* const> params, uint64_t seed, double eps = 0.05) {
    Rng rng(mix64(seed, 0x717e2u));
    for (Parameter* p : params)
        for (double& v : p->value) v += rng.next_range(-eps, eps);
}

}  // namespace

std::vector<GradSuiteEntry> grad_check_blocks(uint64_t seed, double tol) {
    std::vector<GradSuiteEntry> out;
    Rng rng(mix64(seed, 0xb10c5u));
    auto check = [&](const std::string& name,
                     const std::function<Tensor(Tape&, const std::vector<Tensor>&)>& f,
                     const std::vector<std::vector<int>>& shapes,
                     std::vector<std::vector<double>> values, std::span<Parameter* const> params) {
        out.push_back({name, grad_check(f, shapes, std::move(values), params, tol)});
    };

    {  // matmul + bias through a reduction
        check("linear",
              [](Tape& t, const std::vector<Tensor>& in) {
                  return sum(tanh_op(linear(in[0], in[1], in[2])));
              },
              {{3, 4}, {4, 5}, {5}}, {random_vec(12, rng), random_vec(20, rng), random_vec(5, rng)}, {});
    }
    {  // concat along both axes with downstream mixing
        check("concat",
              [](Tape& t, const std::vector<Tensor>& in) {
                  Tensor c0 = concat({in[0], in[1]}, 0);
                  Tensor c1 = concat({c0, c0}, 1);
                  return sum(sigmoid(c1));
              },
              {{2, 3}, {2, 3}}, {random_vec(6, rng), random_vec(6, rng)}, {});
    }
    {
        ParamRegistry reg(mix64(seed, 1));
        Mlp mlp(reg, "mlp", {4, 6, 3});
        auto params = reg.all();
        jitter_params(params, mix64(seed, 16));
        check("mlp",
              [&mlp](Tape& t, const std::vector<Tensor>& in) { return sum(mlp.forward(t, in[0])); },
              {{5, 4}}, {random_vec(20, rng)}, params);
    }
    {
        ParamRegistry reg(mix64(seed, 2));
        GruCell gru(reg, "gru", 4, 3);
        auto params = reg.all();
        jitter_params(params, mix64(seed, 17));
        check("gru_cell",
              [&gru](Tape& t, const std::vector<Tensor>& in) {
                  return sum(gru.forward(t, in[0], in[1]));
              },
              {{2, 4}, {2, 3}}, {random_vec(8, rng), random_vec(6, rng)}, params);
    }
    {
        ParamRegistry reg(mix64(seed, 3));
        LstmCell lstm(reg, "lstm", 3, 3);
        auto params = reg.all();
        jitter_params(params, mix64(seed, 18));
        check("lstm_cell",
              [&lstm](Tape& t, const std::vector<Tensor>& in) {
                  LstmState s{in[1], in[2]};
                  LstmState n1 = lstm.forward(t, in[0], s);
                  LstmState n2 = lstm.forward(t, in[0], n1);
                  return sum(n2.h);
              },
              {{2, 3}, {2, 3}, {2, 3}},
              {random_vec(6, rng), random_vec(6, rng), random_vec(6, rng)}, params);
    }
    {  // dot-product attention
        check("attention",
              [](Tape& t, const std::vector<Tensor>& in) {
                  return sum(attention(in[0], in[1], in[2]));
              },
              {{3}, {4, 3}, {4, 2}},
              {random_vec(3, rng), random_vec(12, rng), random_vec(8, rng)}, {});
    }
    {
        check("softmax_cross_entropy",
              [](Tape& t, const std::vector<Tensor>& in) {
                  return softmax_xent_mean(in[0], {0, 2, 1});
              },
              {{3, 3}}, {random_vec(9, rng)}, {});
    }
    {
        check("sigmoid_bce",
              [](Tape& t, const std::vector<Tensor>& in) {
                  return bce_with_logits_mean(in[0], {1, 0, 1, 0});
              },
              {{4}}, {random_vec(4, rng, 2.0)}, {});
    }
    {
        check("time_fourier",
              [](Tape& t, const std::vector<Tensor>& in) {
                  return sum(time_fourier_rows(in[0], {0.0, 0.5, 2.25}));
              },
              {{5}}, {random_vec(5, rng)}, {});
    }
    {  // bidirectional walk encoder + per-walk self-attention on a fixed anonymized pair
        WalkConfig wcfg;
        wcfg.walks_per_node = 2;
        wcfg.walk_length = 2;
        wcfg.alpha = 0.5;
        NefConfig ncfg;
        ncfg.d_pos = 3;
        ncfg.d_time = 2;
        ncfg.walk_hidden = 3;
        ncfg.encoder = WalkEncoderKind::BiRecurrent;
        ncfg.agg = WalkAggKind::SelfAttention;
        ParamRegistry reg(mix64(seed, 4));
        NefModule nef(reg, ncfg, wcfg, 0, 0);
        AnonymizedEdge edge;
        Rng er(mix64(seed, 5));
        for (int w = 0; w < 4; ++w) {
            AnonymizedWalk walk;
            for (int m = 0; m < 3; ++m) {
                AnonymizedStep s;
                s.pad = w == 1 && m == 2;  // one padded tail
                s.g_own = {static_cast<int>(er.next_below(3)), static_cast<int>(er.next_below(3)), 0};
                s.g_other = {0, static_cast<int>(er.next_below(2)), static_cast<int>(er.next_below(2))};
                s.dt = s.pad ? 0.0 : er.next_double();
                if (s.pad) s.g_own = s.g_other = {0, 0, 0};
                walk.steps.push_back(s);
            }
            edge.walks.push_back(walk);
        }
        auto params = reg.all();
        jitter_params(params, mix64(seed, 0x13));
        check("walk_encoder_bidir_attn",
              [&nef, &edge](Tape& t, const std::vector<Tensor>&) { return sum(nef.encode(t, edge)); },
              {}, {}, params);

        NefConfig mcfg = ncfg;
        mcfg.encoder = WalkEncoderKind::MaskedMean;
        mcfg.agg = WalkAggKind::Identity;
        ParamRegistry reg2(mix64(seed, 6));
        NefModule nef2(reg2, mcfg, wcfg, 0, 0);
        auto params2 = reg2.all();
        jitter_params(params2, mix64(seed, 0x14));
        check("walk_encoder_mean",
              [&nef2, &edge](Tape& t, const std::vector<Tensor>&) { return sum(nef2.encode(t, edge)); },
              {}, {}, params2);
    }
    return out;
}

GradSuiteEntry grad_check_full_model(uint64_t seed, double tol) {
    // 6-node fixture with repeated partners so walks have structure.
    std::vector<Event> events;
    int pairs[][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 2}, {1, 3}, {2, 4},
                      {3, 5}, {0, 4}, {1, 5}, {0, 1}, {2, 3}, {1, 4}, {0, 5}};
    double t = 0;
    Rng trng(mix64(seed, 0xf1e7u));
    for (auto& p : pairs) {
        t += 0.3 + trng.next_double();
        events.push_back({p[0], p[1], t});
    }
    EventLog log(std::move(events), {}, 6, 0);
    NodeFeatures nf(6, 0);
    PreparedData data = prepare_data(log, nf, {0.8, 0.1, 0.1}, {}, Task::TransductiveEdge, false);

    ModelConfig mc;
    mc.seed = mix64(seed, 0x6d6fu);
    mc.walk = {2, 2, 0.7};
    mc.nef = {3, 3, 3, WalkEncoderKind::BiRecurrent, WalkAggKind::SelfAttention};
    mc.tgn.d_mem = 4;
    mc.tgn.d_emb = 4;
    mc.tgn.d_time = 3;
    mc.tgn.n_neighbors = 3;
    mc.dropout = 0.0;
    Model model(mc, 0, 0);

    jitter_params(model.params().all(), mix64(seed, 0x15));
    TgnEngine engine(model, data, mix64(seed, 0x57a7u));
    engine.reset_state();
    engine.replay(0, 8, 4);
    MemoryBank mem_snapshot = engine.memory();
    MessageStore store_snapshot = engine.message_store();

    std::vector<size_t> score_idx{8, 9, 10, 11};
    std::vector<int> negs{2, 5, 0, 3};
    auto params = model.params().all();
    auto f = [&](Tape& tape, const std::vector<Tensor>&) {
        engine.memory() = mem_snapshot;
        engine.message_store() = store_snapshot;
        auto fwd = engine.forward_batch(tape, 8, 12, score_idx, negs, nullptr);
        return fwd.loss;
    };
    return {"full_model_step", grad_check(f, {}, {}, params, tol)};
}

}  // namespace tgnef
