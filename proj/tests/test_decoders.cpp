#include <doctest.h>

#include <cmath>

#include "tgnef/decoders.hpp"

using namespace tgnef;

TEST_SUITE_BEGIN("decoders");

TEST_CASE("zero final layer gives probability one half for any input") {
    ParamRegistry reg(1);
    EdgeDecoder dec(reg, 4);
    // zero the last layer only
    init_constant(*reg.find("edge_dec.w2"), 0.0);
    init_constant(*reg.find("edge_dec.b2"), 0.0);
    Rng rng(3);
    for (int i = 0; i < 10; ++i) {
        Tape t;
        std::vector<double> a(4), b(4);
        for (auto& x : a) x = rng.next_range(-3, 3);
        for (auto& x : b) x = rng.next_range(-3, 3);
        CHECK(dec.probability(t, t.constant({4}, a), t.constant({4}, b)) == doctest::Approx(0.5));
    }
}

TEST_CASE("probabilities stay strictly inside (0,1)") {
    ParamRegistry reg(2);
    EdgeDecoder dec(reg, 3);
    Rng rng(9);
    for (int i = 0; i < 50; ++i) {
        Tape t;
        std::vector<double> a(3), b(3);
        for (auto& x : a) x = rng.next_range(-50, 50);
        for (auto& x : b) x = rng.next_range(-50, 50);
        double p = dec.probability(t, t.constant({3}, a), t.constant({3}, b));
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
}

TEST_CASE("edge decoder is order dependent and matches a scalar oracle in 1d") {
    ParamRegistry reg(5);
    EdgeDecoder dec(reg, 1);  // input dim 2, hidden [2, 1]
    Tape t;
    Tensor zi = t.constant({1}, {0.8});
    Tensor zj = t.constant({1}, {-0.3});
    double p_ij = dec.probability(t, zi, zj);
    double p_ji = dec.probability(t, zj, zi);
    CHECK(p_ij != p_ji);

    auto& w0 = reg.find("edge_dec.w0")->value;  // 2x2
    auto& b0 = reg.find("edge_dec.b0")->value;
    auto& w1 = reg.find("edge_dec.w1")->value;  // 2x1
    auto& b1 = reg.find("edge_dec.b1")->value;
    auto& w2 = reg.find("edge_dec.w2")->value;  // 1x1
    auto& b2 = reg.find("edge_dec.b2")->value;
    double x0 = 0.8, x1 = -0.3;
    double h0 = std::max(0.0, x0 * w0[0] + x1 * w0[2] + b0[0]);
    double h1 = std::max(0.0, x0 * w0[1] + x1 * w0[3] + b0[1]);
    double g0 = std::max(0.0, h0 * w1[0] + h1 * w1[1] + b1[0]);
    double logit = g0 * w2[0] + b2[0];
    CHECK(p_ij == doctest::Approx(1.0 / (1.0 + std::exp(-logit))).epsilon(1e-12));
}

TEST_CASE("node decoder: uniform on zero logits, shift invariant, hand softmax") {
    ParamRegistry reg(7);
    NodeDecoder dec(reg, 4, 3);
    {
        // zero the network so logits vanish
        for (Parameter* p : dec.parameters()) init_constant(*p, 0.0);
        Tape t;
        Tensor p = dec.class_probs(t, t.constant({4}, {1, 2, 3, 4}));
        for (double v : p.value()) CHECK(v == doctest::Approx(1.0 / 3));
    }
    {
        Tape t;
        Tensor a = softmax(t.constant({3}, {0.2, 1.1, -0.4}));
        Tensor b = softmax(t.constant({3}, {0.2 + 5, 1.1 + 5, -0.4 + 5}));
        for (int i = 0; i < 3; ++i)
            CHECK(a.value()[i] == doctest::Approx(b.value()[i]).epsilon(1e-12));
    }
    {
        Tape t;
        Tensor p = softmax(t.constant({3}, {1.0, 2.0, 3.0}));
        double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
        CHECK(p.value()[0] == doctest::Approx(std::exp(1.0) / z));
        CHECK(p.value()[1] == doctest::Approx(std::exp(2.0) / z));
        CHECK(p.value()[2] == doctest::Approx(std::exp(3.0) / z));
    }
}

TEST_CASE("two-class softmax argmax equals the sigmoid threshold on the logit gap") {
    ParamRegistry reg(8);
    NodeDecoder dec(reg, 3, 2);
    Rng rng(17);
    for (int i = 0; i < 40; ++i) {
        Tape t;
        std::vector<double> z(3);
        for (auto& x : z) x = rng.next_range(-2, 2);
        Tensor logits = dec.logits(t, t.constant({3}, z));
        double gap = logits.value()[1] - logits.value()[0];
        double sig = 1.0 / (1.0 + std::exp(-gap));
        Tensor probs = dec.class_probs(t, t.constant({3}, z));
        CHECK((probs.value()[1] > probs.value()[0]) == (sig > 0.5));
        CHECK(probs.value()[1] == doctest::Approx(sig).epsilon(1e-9));
    }
}

TEST_CASE("decoder gradients pass the audit") {
    ParamRegistry reg(10);
    EdgeDecoder edge(reg, 3);
    NodeDecoder node(reg, 3, 2);
    auto params = reg.all();
    Rng jit(2);
    for (Parameter* p : params)
        for (double& v : p->value) v += jit.next_range(-0.05, 0.05);
    auto f_edge = [&](Tape& t, const std::vector<Tensor>& in) {
        return bce_with_logits_mean(edge.logit(t, in[0], in[1]), {1.0});
    };
    auto rep = grad_check(f_edge, {{3}, {3}}, {{0.4, -0.2, 0.9}, {0.1, 0.3, -0.8}}, params);
    INFO(rep.worst);
    CHECK(rep.pass);
    auto f_node = [&](Tape& t, const std::vector<Tensor>& in) {
        Tensor logits = node.logits(t, in[0]);
        Tensor row_mat = stack_rows(std::vector<Tensor>{logits});
        return softmax_xent_mean(row_mat, {1});
    };
    rep = grad_check(f_node, {{3}}, {{0.2, -0.6, 1.2}}, params);
    INFO(rep.worst);
    CHECK(rep.pass);
}

TEST_SUITE_END();
