#pragma once

// Task heads: 3-layer MLPs mapping embeddings to an edge probability
// (sigmoid) or to class probabilities (softmax).

#include "tgnef/nn.hpp"
#include "tgnef/tensor.hpp"

namespace tgnef {

class EdgeDecoder {
public:
    EdgeDecoder() = default;
    EdgeDecoder(ParamRegistry& reg, int d_emb)
        : in_dim_(2 * d_emb), mlp_(reg, "edge_dec", {2 * d_emb, 2 * d_emb, d_emb, 1}) {}

    int input_dim() const { return in_dim_; }

    // Raw logit for a single pair; apply sigmoid for the probability.
    Tensor logit(Tape& t, const Tensor& z_i, const Tensor& z_j, double drop_rate = 0.0,
                 Rng* rng = nullptr) const {
        return mlp_.forward(t, concat({z_i, z_j}, 0), drop_rate, rng);
    }

    // zcat: (n, 2*d_emb) stacked pairs -> (n) logits.
    Tensor logits_batch(Tape& t, const Tensor& zcat, double drop_rate = 0.0, Rng* rng = nullptr) const {
        return col(mlp_.forward(t, zcat, drop_rate, rng), 0);
    }

    double probability(Tape& t, const Tensor& z_i, const Tensor& z_j) const {
        return sigmoid(logit(t, z_i, z_j)).item();
    }

    std::vector<Parameter*> parameters() const {
        std::vector<Parameter*> out(mlp_.weights);
        out.insert(out.end(), mlp_.biases.begin(), mlp_.biases.end());
        return out;
    }

private:
    int in_dim_ = 0;
    Mlp mlp_;
};

class NodeDecoder {
public:
    NodeDecoder() = default;
    NodeDecoder(ParamRegistry& reg, int d_emb, int n_classes)
        : n_classes_(n_classes), mlp_(reg, "node_dec", {d_emb, d_emb, d_emb / 2 > 0 ? d_emb / 2 : 1, n_classes}) {}

    int n_classes() const { return n_classes_; }

    Tensor logits(Tape& t, const Tensor& z, double drop_rate = 0.0, Rng* rng = nullptr) const {
        return mlp_.forward(t, z, drop_rate, rng);
    }

    Tensor class_probs(Tape& t, const Tensor& z) const { return softmax(logits(t, z)); }

    std::vector<Parameter*> parameters() const {
        std::vector<Parameter*> out(mlp_.weights);
        out.insert(out.end(), mlp_.biases.begin(), mlp_.biases.end());
        return out;
    }

private:
    int n_classes_ = 0;
    Mlp mlp_;
};

}  // namespace tgnef
