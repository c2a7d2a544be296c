#pragma once

// Trainable blocks composed from tape primitives: multi-layer perceptrons
// and gated recurrent cells. Weights live in a ParamRegistry owned by the
// model so the optimizer and checkpointing see a flat named list.

#include <memory>
#include <string>
#include <vector>

#include "tgnef/tensor.hpp"

namespace tgnef {

class ParamRegistry {
public:
    explicit ParamRegistry(uint64_t init_seed = 0) : init_seed_(init_seed) {}

    Parameter& make(const std::string& name, std::vector<int> shape, int fan_in, int fan_out) {
        auto p = std::make_unique<Parameter>(name, std::move(shape));
        init_glorot(*p, fan_in, fan_out, mix64(init_seed_, std::hash<std::string>{}(name)));
        params_.push_back(std::move(p));
        return *params_.back();
    }

    Parameter& make_zeros(const std::string& name, std::vector<int> shape) {
        auto p = std::make_unique<Parameter>(name, std::move(shape));
        params_.push_back(std::move(p));
        return *params_.back();
    }

    Parameter& make_values(const std::string& name, std::vector<int> shape, std::vector<double> values) {
        auto p = std::make_unique<Parameter>(name, std::move(shape));
        p->value = std::move(values);
        params_.push_back(std::move(p));
        return *params_.back();
    }

    std::vector<Parameter*> all() const {
        std::vector<Parameter*> out;
        for (const auto& p : params_) out.push_back(p.get());
        return out;
    }

    Parameter* find(const std::string& name) const {
        for (const auto& p : params_)
            if (p->name == name) return p.get();
        return nullptr;
    }

    uint64_t init_seed() const { return init_seed_; }

private:
    uint64_t init_seed_;
    std::vector<std::unique_ptr<Parameter>> params_;
};

// Fully connected stack with ReLU between layers and a linear last layer.
struct Mlp {
    std::vector<Parameter*> weights;
    std::vector<Parameter*> biases;

    Mlp() = default;
    Mlp(ParamRegistry& reg, const std::string& name, const std::vector<int>& dims) {
        for (size_t l = 0; l + 1 < dims.size(); ++l) {
            weights.push_back(&reg.make(name + ".w" + std::to_string(l), {dims[l], dims[l + 1]},
                                        dims[l], dims[l + 1]));
            biases.push_back(&reg.make_zeros(name + ".b" + std::to_string(l), {dims[l + 1]}));
        }
    }

    // x: (n, in) or (in). Optional inverted dropout after each hidden ReLU.
    Tensor forward(Tape& t, const Tensor& x, double drop_rate = 0.0, Rng* rng = nullptr) const {
        Tensor h = x;
        for (size_t l = 0; l < weights.size(); ++l) {
            h = linear(h, t.param(*weights[l]), t.param(*biases[l]));
            if (l + 1 < weights.size()) {
                h = relu(h);
                if (drop_rate > 0.0 && rng) h = dropout(h, drop_rate, *rng);
            }
        }
        return h;
    }
};

// z = sig(x Wz + h Uz + bz); r = sig(x Wr + h Ur + br);
// hc = tanh(x Wh + (r*h) Uh + bh); h' = (1-z)*h + z*hc.
struct GruCell {
    Parameter *wz, *uz, *bz, *wr, *ur, *br, *wh, *uh, *bh;
    int d_in = 0, d_h = 0;

    GruCell() = default;
    GruCell(ParamRegistry& reg, const std::string& name, int in, int hidden) : d_in(in), d_h(hidden) {
        wz = &reg.make(name + ".wz", {in, hidden}, in, hidden);
        uz = &reg.make(name + ".uz", {hidden, hidden}, hidden, hidden);
        bz = &reg.make_zeros(name + ".bz", {hidden});
        wr = &reg.make(name + ".wr", {in, hidden}, in, hidden);
        ur = &reg.make(name + ".ur", {hidden, hidden}, hidden, hidden);
        br = &reg.make_zeros(name + ".br", {hidden});
        wh = &reg.make(name + ".wh", {in, hidden}, in, hidden);
        uh = &reg.make(name + ".uh", {hidden, hidden}, hidden, hidden);
        bh = &reg.make_zeros(name + ".bh", {hidden});
    }

    // x: (n, d_in) or (d_in); h likewise with d_h.
    Tensor forward(Tape& t, const Tensor& x, const Tensor& h) const {
        Tensor z = sigmoid(add(linear(x, t.param(*wz), t.param(*bz)), matmul(h, t.param(*uz))));
        Tensor r = sigmoid(add(linear(x, t.param(*wr), t.param(*br)), matmul(h, t.param(*ur))));
        Tensor hc = tanh_op(add(linear(x, t.param(*wh), t.param(*bh)), matmul(mul(r, h), t.param(*uh))));
        Tensor one_minus_z = add_scalar(neg(z), 1.0);
        return add(mul(one_minus_z, h), mul(z, hc));
    }
};

struct LstmState {
    Tensor h;
    Tensor c;
};

struct LstmCell {
    Parameter *wi, *ui, *bi, *wf, *uf, *bf, *wo, *uo, *bo, *wg, *ug, *bg;
    int d_in = 0, d_h = 0;

    LstmCell() = default;
    LstmCell(ParamRegistry& reg, const std::string& name, int in, int hidden) : d_in(in), d_h(hidden) {
        auto gate = [&](const char* g, Parameter*& w, Parameter*& u, Parameter*& b) {
            w = &reg.make(name + ".w" + g, {in, hidden}, in, hidden);
            u = &reg.make(name + ".u" + g, {hidden, hidden}, hidden, hidden);
            b = &reg.make_zeros(name + ".b" + g, {hidden});
        };
        gate("i", wi, ui, bi);
        gate("f", wf, uf, bf);
        gate("o", wo, uo, bo);
        gate("g", wg, ug, bg);
    }

    LstmState forward(Tape& t, const Tensor& x, const LstmState& s) const {
        Tensor i = sigmoid(add(linear(x, t.param(*wi), t.param(*bi)), matmul(s.h, t.param(*ui))));
        Tensor f = sigmoid(add(linear(x, t.param(*wf), t.param(*bf)), matmul(s.h, t.param(*uf))));
        Tensor o = sigmoid(add(linear(x, t.param(*wo), t.param(*bo)), matmul(s.h, t.param(*uo))));
        Tensor g = tanh_op(add(linear(x, t.param(*wg), t.param(*bg)), matmul(s.h, t.param(*ug))));
        Tensor c = add(mul(f, s.c), mul(i, g));
        Tensor h = mul(o, tanh_op(c));
        return {h, c};
    }
};

}  // namespace tgnef
