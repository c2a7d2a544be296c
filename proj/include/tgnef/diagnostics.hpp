#pragma once

// Gradient-integrity battery: finite-difference checks for every trainable
// block and for one full training-step graph on a small fixture.

#include <string>
#include <vector>

#include "tgnef/tensor.hpp"

namespace tgnef {

struct GradSuiteEntry {
    std::string name;
    GradCheckReport report;
};

// Primitive and composite blocks (linear, concat, MLP, GRU, LSTM,
// bidirectional walk encoder, attention, losses, time encoding) on random
// small inputs for the given seed.
std::vector<GradSuiteEntry> grad_check_blocks(uint64_t seed, double tol = 1e-4);

// One full step on a 6-node fixture: stored messages (with pair features)
// -> memory update -> attention embeddings (with pair features) -> decoder
// -> loss; gradients checked for every model parameter.
GradSuiteEntry grad_check_full_model(uint64_t seed, double tol = 1e-4);

}  // namespace tgnef
