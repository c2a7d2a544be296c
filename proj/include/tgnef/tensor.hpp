#pragma once

// Dense double-precision arrays with tape-based reverse-mode differentiation.
// Tensors are rank-1 or rank-2, row-major; a scalar is shape {1}. The tape
// records ops in execution order and backward replays them in exact reverse.

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "tgnef/rng.hpp"

namespace tgnef {

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Tape;

// Named trainable weight with Adam state. Shape is fixed at construction.
struct Parameter {
    std::string name;
    std::vector<int> shape;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<double> adam_m;
    std::vector<double> adam_v;

    Parameter(std::string n, std::vector<int> s);
    size_t size() const { return value.size(); }
    void zero_grad();
};

// Lightweight handle into a tape node.
class Tensor {
public:
    Tensor() : tape_(nullptr), id_(-1) {}
    Tensor(Tape* tape, int id) : tape_(tape), id_(id) {}

    bool valid() const { return tape_ != nullptr; }
    int id() const { return id_; }
    Tape* tape() const { return tape_; }

    const std::vector<int>& shape() const;
    const std::vector<double>& value() const;
    int rows() const;
    int cols() const;
    double item() const;  // scalar only

private:
    Tape* tape_;
    int id_;
};

struct TapeNode {
    std::vector<int> shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    std::function<void(Tape&, TapeNode&)> backward;  // null for leaves
};

class Tape {
public:
    Tape();

    Tensor constant(std::vector<int> shape, std::vector<double> data);
    Tensor constant(std::vector<int> shape, double fill = 0.0);
    Tensor scalar(double v) { return constant({1}, {v}); }
    // Leaf whose gradient is tracked (for gradient checking of inputs).
    Tensor input(std::vector<int> shape, std::vector<double> data);
    // Leaf bound to a parameter; grads flow into p.grad after backward().
    // Repeated calls for the same parameter return the same node.
    Tensor param(Parameter& p);

    void backward(const Tensor& loss);

    const std::vector<double>& grad_of(const Tensor& t) const;
    TapeNode& node(int id) { return nodes_[id]; }
    const TapeNode& node(int id) const { return nodes_[id]; }
    size_t size() const { return nodes_.size(); }
    void clear();

    int emit(std::vector<int> shape, std::vector<double> value, bool requires_grad,
             std::function<void(Tape&, TapeNode&)> backward);

    void set_check_finite(bool on) { check_finite_ = on; }
    bool check_finite() const { return check_finite_; }

private:
    std::deque<TapeNode> nodes_;  // deque: stable references while appending
    std::vector<std::pair<int, Parameter*>> bindings_;
    std::unordered_map<const Parameter*, int> param_nodes_;
    bool check_finite_;
};

// ---- primitive ops ----------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor neg(const Tensor& a);
Tensor detach(const Tensor& a);

// (m,k)x(k,n)->(m,n); (m,k)x(k)->(m); (k)x(k,n)->(n)
Tensor matmul(const Tensor& a, const Tensor& b);
// x:(n,i) or (i); W:(i,o); b:(o) broadcast over rows. bias may be invalid().
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);

Tensor sigmoid(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor relu(const Tensor& a);

// General concatenation along axis (0 or 1); all parts share rank and
// the non-axis dimension.
Tensor concat(std::span<const Tensor> parts, int axis = 0);
Tensor concat(std::initializer_list<Tensor> parts, int axis = 0);

Tensor stack_rows(std::span<const Tensor> vecs);        // k vectors (d) -> (k,d)
Tensor stack_cols(std::span<const Tensor> vecs);        // k vectors (n) -> (n,k)
Tensor row(const Tensor& x, int r);                     // (n,d) -> (d)
Tensor col(const Tensor& x, int c);                     // (n,d) -> (n)
Tensor rows_stride(const Tensor& x, int start, int stride, int count);
Tensor mean_rows(const Tensor& x);                      // (n,d) -> (d)
Tensor sum_cols(const Tensor& x);                       // (n,d) -> (n)
Tensor scale_rows_const(const Tensor& x, const std::vector<double>& w);
Tensor scale_rows(const Tensor& x, const Tensor& s);    // s: (n)
Tensor select_rows(const std::vector<double>& mask, const Tensor& a, const Tensor& b);
Tensor rowwise_dot(const Tensor& a, const Tensor& b);   // (n,d),(n,d) -> (n)
Tensor mul_const(const Tensor& x, const std::vector<double>& m);

Tensor softmax(const Tensor& x);  // rank-1
// Row-wise softmax over entries where mask==1; fully masked rows yield 0.
Tensor softmax_rows_masked(const Tensor& x, const std::vector<double>& mask);

Tensor sum(const Tensor& x);  // -> scalar

// Mean binary cross-entropy on logits, numerically stable.
Tensor bce_with_logits_mean(const Tensor& logits, const std::vector<double>& targets);
// Mean softmax cross-entropy; labels are class indices per row.
Tensor softmax_xent_mean(const Tensor& logits, const std::vector<int>& labels);

// cos(omega_i * dt): trainable frequency encoding of a time difference.
Tensor time_fourier(const Tensor& omega, double dt);
Tensor time_fourier_rows(const Tensor& omega, const std::vector<double>& dts);

// Inverted dropout; identity when rate == 0.
Tensor dropout(const Tensor& x, double rate, Rng& rng);

// softmax(q . k_i / sqrt(d))-weighted sum of value rows.
Tensor attention(const Tensor& query, const Tensor& keys, const Tensor& values);

// ---- optimizer ---------------------------------------------------------

class Adam {
public:
    explicit Adam(std::vector<Parameter*> params, double lr = 1e-3, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);
    void step();
    void zero_grad();
    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

private:
    std::vector<Parameter*> params_;
    double lr_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
};

// Glorot-uniform init, seeded.
void init_glorot(Parameter& p, int fan_in, int fan_out, uint64_t seed);
void init_constant(Parameter& p, double v);

// ---- gradient checking ---------------------------------------------------

struct GradCheckReport {
    double max_rel_err = 0.0;
    bool pass = true;
    std::string worst;  // where the max error occurred
};

// Compares tape gradients against central finite differences for every
// coordinate of every tracked input and every listed parameter. `f` must be
// deterministic given fixed inputs/parameters.
GradCheckReport grad_check(
    const std::function<Tensor(Tape&, const std::vector<Tensor>&)>& f,
    const std::vector<std::vector<int>>& input_shapes,
    std::vector<std::vector<double>> input_values,
    std::span<Parameter* const> params, double tol = 1e-4, double h = 1e-5);

}  // namespace tgnef
