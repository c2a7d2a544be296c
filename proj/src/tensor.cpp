#include "tgnef/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

namespace tgnef {

namespace {

size_t numel(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return n;
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw ShapeError(msg);
}

void check_all_finite(const std::vector<double>& v, const char* op) {
    for (double x : v)
        if (!std::isfinite(x)) throw NumericError(std::string("non-finite value produced by ") + op);
}

}  // namespace

// ---- Parameter -----------------------------------------------------------

Parameter::Parameter(std::string n, std::vector<int> s) : name(std::move(n)), shape(std::move(s)) {
    size_t sz = numel(shape);
    value.assign(sz, 0.0);
    grad.assign(sz, 0.0);
    adam_m.assign(sz, 0.0);
    adam_v.assign(sz, 0.0);
}

void Parameter::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

// ---- Tensor ----------------------------------------------------------------

const std::vector<int>& Tensor::shape() const { return tape_->node(id_).shape; }
const std::vector<double>& Tensor::value() const { return tape_->node(id_).value; }
int Tensor::rows() const { return shape()[0]; }
int Tensor::cols() const {
    const auto& s = shape();
    return s.size() > 1 ? s[1] : 1;
}
double Tensor::item() const {
    require(value().size() == 1, "item() requires a scalar tensor");
    return value()[0];
}

// ---- Tape ------------------------------------------------------------------

Tape::Tape() {
    const char* env = std::getenv("TGNEF_CHECK_FINITE");
    check_finite_ = env && env[0] == '1';
}

int Tape::emit(std::vector<int> shape, std::vector<double> value, bool requires_grad,
               std::function<void(Tape&, TapeNode&)> backward) {
    if (check_finite_) check_all_finite(value, "op");
    TapeNode n;
    n.shape = std::move(shape);
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backward = requires_grad ? std::move(backward) : nullptr;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::constant(std::vector<int> shape, std::vector<double> data) {
    require(numel(shape) == data.size(), "constant: shape/data size mismatch");
    return Tensor(this, emit(std::move(shape), std::move(data), false, nullptr));
}

Tensor Tape::constant(std::vector<int> shape, double fill) {
    std::vector<double> data(numel(shape), fill);
    return Tensor(this, emit(std::move(shape), std::move(data), false, nullptr));
}

Tensor Tape::input(std::vector<int> shape, std::vector<double> data) {
    require(numel(shape) == data.size(), "input: shape/data size mismatch");
    return Tensor(this, emit(std::move(shape), std::move(data), true, nullptr));
}

Tensor Tape::param(Parameter& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return Tensor(this, it->second);
    int id = emit(p.shape, p.value, true, nullptr);
    param_nodes_.emplace(&p, id);
    bindings_.emplace_back(id, &p);
    return Tensor(this, id);
}

void Tape::backward(const Tensor& loss) {
    require(loss.tape() == this, "backward: loss from another tape");
    require(loss.value().size() == 1, "backward: loss must be scalar");
    for (auto& n : nodes_) {
        if (n.requires_grad)
            n.grad.assign(n.value.size(), 0.0);
        else
            n.grad.clear();
    }
    TapeNode& ln = node(loss.id());
    if (!ln.requires_grad) return;  // loss disconnected from all parameters
    ln.grad[0] = 1.0;
    for (int i = loss.id(); i >= 0; --i) {
        TapeNode& n = nodes_[i];
        if (n.requires_grad && n.backward) n.backward(*this, n);
    }
    for (auto& [id, p] : bindings_) {
        const auto& g = nodes_[id].grad;
        for (size_t k = 0; k < g.size(); ++k) p->grad[k] += g[k];
    }
}

const std::vector<double>& Tape::grad_of(const Tensor& t) const {
    return nodes_[t.id()].grad;
}

void Tape::clear() {
    nodes_.clear();
    bindings_.clear();
    param_nodes_.clear();
}

// ---- op helpers ----------------------------------------------------------

namespace {

Tape& same_tape(const Tensor& a, const Tensor& b) {
    require(a.tape() == b.tape(), "operands from different tapes");
    return *a.tape();
}

bool rg(const Tensor& t) { return t.tape()->node(t.id()).requires_grad; }

void accum(std::vector<double>& dst, const std::vector<double>& src) {
    for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

// ---- elementwise -----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    Tape& t = same_tape(a, b);
    require(a.shape() == b.shape(), "add: shape mismatch");
    const auto& av = a.value();
    const auto& bv = b.value();
    std::vector<double> out(av.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    int ia = a.id(), ib = b.id();
    return Tensor(&t, t.emit(a.shape(), std::move(out), rg(a) || rg(b),
                             [ia, ib](Tape& tp, TapeNode& self) {
                                 if (tp.node(ia).requires_grad) accum(tp.node(ia).grad, self.grad);
                                 if (tp.node(ib).requires_grad) accum(tp.node(ib).grad, self.grad);
                             }));
}

Tensor sub(const Tensor& a, const Tensor& b) {
    Tape& t = same_tape(a, b);
    require(a.shape() == b.shape(), "sub: shape mismatch");
    const auto& av = a.value();
    const auto& bv = b.value();
    std::vector<double> out(av.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
    int ia = a.id(), ib = b.id();
    return Tensor(&t, t.emit(a.shape(), std::move(out), rg(a) || rg(b),
                             [ia, ib](Tape& tp, TapeNode& self) {
                                 if (tp.node(ia).requires_grad) accum(tp.node(ia).grad, self.grad);
                                 if (tp.node(ib).requires_grad) {
                                     auto& g = tp.node(ib).grad;
                                     for (size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
                                 }
                             }));
}

Tensor mul(const Tensor& a, const Tensor& b) {
    Tape& t = same_tape(a, b);
    require(a.shape() == b.shape(), "mul: shape mismatch");
    const auto& av = a.value();
    const auto& bv = b.value();
    std::vector<double> out(av.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    int ia = a.id(), ib = b.id();
    return Tensor(&t, t.emit(a.shape(), std::move(out), rg(a) || rg(b),
                             [ia, ib](Tape& tp, TapeNode& self) {
                                 const auto& av2 = tp.node(ia).value;
                                 const auto& bv2 = tp.node(ib).value;
                                 if (tp.node(ia).requires_grad) {
                                     auto& g = tp.node(ia).grad;
                                     for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bv2[i];
                                 }
                                 if (tp.node(ib).requires_grad) {
                                     auto& g = tp.node(ib).grad;
                                     for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * av2[i];
                                 }
                             }));
}

Tensor scale(const Tensor& a, double c) {
    Tape& t = *a.tape();
    std::vector<double> out(a.value());
    for (double& x : out) x *= c;
    int ia = a.id();
    return Tensor(&t, t.emit(a.shape(), std::move(out), rg(a), [ia, c](Tape& tp, TapeNode& self) {
                      if (!tp.node(ia).requires_grad) return;
                      auto& g = tp.node(ia).grad;
                      for (size_t i = 0; i < g.size(); ++i) g[i] += c * self.grad[i];
                  }));
}

Tensor add_scalar(const Tensor& a, double c) {
    Tape& t = *a.tape();
    std::vector<double> out(a.value());
    for (double& x : out) x += c;
    int ia = a.id();
    return Tensor(&t, t.emit(a.shape(), std::move(out), rg(a), [ia](Tape& tp, TapeNode& self) {
                      if (tp.node(ia).requires_grad) accum(tp.node(ia).grad, self.grad);
                  }));
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor detach(const Tensor& a) {
    return a.tape()->constant(a.shape(), a.value());
}

// ---- matmul ---------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    Tape& t = same_tape(a, b);
    const auto& as = a.shape();
    const auto& bs = b.shape();
    int m, k, n;
    bool a_vec = as.size() == 1, b_vec = bs.size() == 1;
    require(!(a_vec && b_vec), "matmul: use rowwise_dot for vector-vector");
    if (!a_vec && !b_vec) {
        m = as[0]; k = as[1]; n = bs[1];
        require(bs[0] == k, "matmul: inner dimension mismatch");
    } else if (b_vec) {
        m = as[0]; k = as[1]; n = 1;
        require(bs[0] == k, "matmul: inner dimension mismatch");
    } else {
        m = 1; k = as[0]; n = bs[1];
        require(bs[0] == k, "matmul: inner dimension mismatch");
    }
    const auto& av = a.value();
    const auto& bv = b.value();
    std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
    // i-k-j order keeps the inner loop contiguous in b and out.
    for (int i = 0; i < m; ++i) {
        const double* arow = av.data() + static_cast<size_t>(i) * k;
        double* orow = out.data() + static_cast<size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            double aik = arow[kk];
            if (aik == 0.0) continue;
            const double* brow = bv.data() + static_cast<size_t>(kk) * n;
            for (int j = 0; j < n; ++j) orow[j] += aik * brow[j];
        }
    }
    std::vector<int> oshape;
    if (!a_vec && !b_vec) oshape = {m, n};
    else if (b_vec) oshape = {m};
    else oshape = {n};
    int ia = a.id(), ib = b.id();
    return Tensor(&t, t.emit(std::move(oshape), std::move(out), rg(a) || rg(b),
                             [ia, ib, m, k, n](Tape& tp, TapeNode& self) {
                                 const auto& av2 = tp.node(ia).value;
                                 const auto& bv2 = tp.node(ib).value;
                                 const auto& g = self.grad;
                                 if (tp.node(ia).requires_grad) {
                                     auto& da = tp.node(ia).grad;  // dA = g . B^T
                                     for (int i = 0; i < m; ++i)
                                         for (int kk = 0; kk < k; ++kk) {
                                             double s = 0;
                                             const double* grow = g.data() + static_cast<size_t>(i) * n;
                                             const double* brow = bv2.data() + static_cast<size_t>(kk) * n;
                                             for (int j = 0; j < n; ++j) s += grow[j] * brow[j];
                                             da[static_cast<size_t>(i) * k + kk] += s;
                                         }
                                 }
                                 if (tp.node(ib).requires_grad) {
                                     auto& db = tp.node(ib).grad;  // dB = A^T . g
                                     for (int kk = 0; kk < k; ++kk) {
                                         double* drow = db.data() + static_cast<size_t>(kk) * n;
                                         for (int i = 0; i < m; ++i) {
                                             double aik = av2[static_cast<size_t>(i) * k + kk];
                                             if (aik == 0.0) continue;
                                             const double* grow = g.data() + static_cast<size_t>(i) * n;
                                             for (int j = 0; j < n; ++j) drow[j] += aik * grow[j];
                                         }
                                     }
                                 }
                             }));
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
    Tensor y = matmul(x, w);
    if (!bias.valid()) return y;
    Tape& t = *x.tape();
    const auto& bs = bias.shape();
    require(bs.size() == 1, "linear: bias must be rank-1");
    int n = y.shape().size() == 2 ? y.shape()[1] : y.shape()[0];
    require(bs[0] == n, "linear: bias width mismatch");
    int rows = y.shape().size() == 2 ? y.shape()[0] : 1;
    std::vector<double> out(y.value());
    const auto& bv = bias.value();
    for (int r = 0; r < rows; ++r)
        for (int j = 0; j < n; ++j) out[static_cast<size_t>(r) * n + j] += bv[j];
    int iy = y.id(), ib = bias.id();
    return Tensor(&t, t.emit(y.shape(), std::move(out), rg(y) || rg(bias),
                             [iy, ib, rows, n](Tape& tp, TapeNode& self) {
                                 if (tp.node(iy).requires_grad) accum(tp.node(iy).grad, self.grad);
                                 if (tp.node(ib).requires_grad) {
                                     auto& db = tp.node(ib).grad;
                                     for (int r = 0; r < rows; ++r)
                                         for (int j = 0; j < n; ++j)
                                             db[j] += self.grad[static_cast<size_t>(r) * n + j];
                                 }
                             }));
}

// ---- activations ------------------------------------------------------------

Tensor sigmoid(const Tensor& a) {
    Tape& t = *a.tape();
    std::vector<double> out(a.value());
    for (double& x : out) x = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    int ia = a.id();
    return Tensor(&t, t.emit(a.shape(), std::move(out), rg(a), [ia](Tape& tp, TapeNode& self) {
                      if (!tp.node(ia).requires_grad) return;
                      auto& g = tp.node(ia).grad;
                      for (size_t i = 0; i < g.size(); ++i) {
                          double y = self.value[i];
                          g[i] += self.grad[i] * y * (1.0 - y);
                      }
                  }));
}

Tensor tanh_op(const Tensor& a) {
    Tape& t = *a.tape();
    std::vector<double> out(a.value());
    for (double& x : out) x = std::tanh(x);
    int ia = a.id();
    return Tensor(&t, t.emit(a.shape(), std::move(out), rg(a), [ia](Tape& tp, TapeNode& self) {
                      if (!tp.node(ia).requires_grad) return;
                      auto& g = tp.node(ia).grad;
                      for (size_t i = 0; i < g.size(); ++i) {
                          double y = self.value[i];
                          g[i] += self.grad[i] * (1.0 - y * y);
                      }
                  }));
}

Tensor relu(const Tensor& a) {
    Tape& t = *a.tape();
    std::vector<double> out(a.value());
    for (double& x : out) x = x > 0 ? x : 0.0;
    int ia = a.id();
    return Tensor(&t, t.emit(a.shape(), std::move(out), rg(a), [ia](Tape& tp, TapeNode& self) {
                      if (!tp.node(ia).requires_grad) return;
                      auto& g = tp.node(ia).grad;
                      const auto& xv = tp.node(ia).value;
                      for (size_t i = 0; i < g.size(); ++i)
                          if (xv[i] > 0) g[i] += self.grad[i];
                  }));
}

// ---- structure ---------------------------------------------------------------

Tensor concat(std::span<const Tensor> parts, int axis) {
    require(!parts.empty(), "concat: empty part list");
    Tape& t = *parts[0].tape();
    size_t rank = parts[0].shape().size();
    require(axis >= 0 && axis < static_cast<int>(rank), "concat: bad axis");
    bool any_grad = false;
    for (const auto& p : parts) {
        require(p.tape() == &t, "concat: operands from different tapes");
        require(p.shape().size() == rank, "concat: rank mismatch");
        any_grad = any_grad || rg(p);
    }
    std::vector<int> ids;
    for (const auto& p : parts) ids.push_back(p.id());

    if (rank == 1 || (rank == 2 && axis == 0)) {
        // Stack along dim 0: contiguous copy.
        int width = rank == 2 ? parts[0].shape()[1] : 1;
        int total0 = 0;
        std::vector<double> out;
        std::vector<size_t> offsets;
        for (const auto& p : parts) {
            if (rank == 2) require(p.shape()[1] == width, "concat: width mismatch");
            offsets.push_back(out.size());
            out.insert(out.end(), p.value().begin(), p.value().end());
            total0 += p.shape()[0];
        }
        std::vector<int> oshape = rank == 2 ? std::vector<int>{total0, width} : std::vector<int>{total0};
        return Tensor(&t, t.emit(std::move(oshape), std::move(out), any_grad,
                                 [ids, offsets](Tape& tp, TapeNode& self) {
                                     for (size_t p = 0; p < ids.size(); ++p) {
                                         TapeNode& src = tp.node(ids[p]);
                                         if (!src.requires_grad) continue;
                                         for (size_t i = 0; i < src.grad.size(); ++i)
                                             src.grad[i] += self.grad[offsets[p] + i];
                                     }
                                 }));
    }

    // rank 2, axis 1: interleave columns.
    int nrows = parts[0].shape()[0];
    int total_cols = 0;
    std::vector<int> widths;
    for (const auto& p : parts) {
        require(p.shape()[0] == nrows, "concat: row count mismatch");
        widths.push_back(p.shape()[1]);
        total_cols += p.shape()[1];
    }
    std::vector<double> out(static_cast<size_t>(nrows) * total_cols);
    {
        int col0 = 0;
        for (size_t p = 0; p < parts.size(); ++p) {
            const auto& v = parts[p].value();
            int w = widths[p];
            for (int r = 0; r < nrows; ++r)
                std::copy(v.begin() + static_cast<size_t>(r) * w, v.begin() + static_cast<size_t>(r + 1) * w,
                          out.begin() + static_cast<size_t>(r) * total_cols + col0);
            col0 += w;
        }
    }
    return Tensor(&t, t.emit({nrows, total_cols}, std::move(out), any_grad,
                             [ids, widths, nrows, total_cols](Tape& tp, TapeNode& self) {
                                 int col0 = 0;
                                 for (size_t p = 0; p < ids.size(); ++p) {
                                     TapeNode& src = tp.node(ids[p]);
                                     int w = widths[p];
                                     if (src.requires_grad) {
                                         for (int r = 0; r < nrows; ++r)
                                             for (int j = 0; j < w; ++j)
                                                 src.grad[static_cast<size_t>(r) * w + j] +=
                                                     self.grad[static_cast<size_t>(r) * total_cols + col0 + j];
                                     }
                                     col0 += w;
                                 }
                             }));
}

Tensor concat(std::initializer_list<Tensor> parts, int axis) {
    std::vector<Tensor> v(parts);
    return concat(std::span<const Tensor>(v), axis);
}

Tensor stack_rows(std::span<const Tensor> vecs) {
    require(!vecs.empty(), "stack_rows: empty list");
    Tape& t = *vecs[0].tape();
    int d = vecs[0].shape()[0];
    bool any_grad = false;
    std::vector<int> ids;
    std::vector<double> out;
    out.reserve(vecs.size() * d);
    for (const auto& v : vecs) {
        require(v.shape().size() == 1 && v.shape()[0] == d, "stack_rows: width mismatch");
        any_grad = any_grad || rg(v);
        ids.push_back(v.id());
        out.insert(out.end(), v.value().begin(), v.value().end());
    }
    int k = static_cast<int>(vecs.size());
    return Tensor(&t, t.emit({k, d}, std::move(out), any_grad, [ids, d](Tape& tp, TapeNode& self) {
                      for (size_t r = 0; r < ids.size(); ++r) {
                          TapeNode& src = tp.node(ids[r]);
                          if (!src.requires_grad) continue;
                          for (int j = 0; j < d; ++j) src.grad[j] += self.grad[r * d + j];
                      }
                  }));
}

Tensor stack_cols(std::span<const Tensor> vecs) {
    require(!vecs.empty(), "stack_cols: empty list");
    Tape& t = *vecs[0].tape();
    int n = vecs[0].shape()[0];
    int k = static_cast<int>(vecs.size());
    bool any_grad = false;
    std::vector<int> ids;
    std::vector<double> out(static_cast<size_t>(n) * k);
    for (int c = 0; c < k; ++c) {
        const auto& v = vecs[c];
        require(v.shape().size() == 1 && v.shape()[0] == n, "stack_cols: length mismatch");
        any_grad = any_grad || rg(v);
        ids.push_back(v.id());
        for (int r = 0; r < n; ++r) out[static_cast<size_t>(r) * k + c] = v.value()[r];
    }
    return Tensor(&t, t.emit({n, k}, std::move(out), any_grad, [ids, n, k](Tape& tp, TapeNode& self) {
                      for (int c = 0; c < k; ++c) {
                          TapeNode& src = tp.node(ids[c]);
                          if (!src.requires_grad) continue;
                          for (int r = 0; r < n; ++r) src.grad[r] += self.grad[static_cast<size_t>(r) * k + c];
                      }
                  }));
}

Tensor row(const Tensor& x, int r) {
    Tape& t = *x.tape();
    require(x.shape().size() == 2, "row: rank-2 input required");
    int n = x.shape()[0], d = x.shape()[1];
    require(r >= 0 && r < n, "row: index out of range");
    std::vector<double> out(x.value().begin() + static_cast<size_t>(r) * d,
                            x.value().begin() + static_cast<size_t>(r + 1) * d);
    int ix = x.id();
    return Tensor(&t, t.emit({d}, std::move(out), rg(x), [ix, r, d](Tape& tp, TapeNode& self) {
                      if (!tp.node(ix).requires_grad) return;
                      auto& g = tp.node(ix).grad;
                      for (int j = 0; j < d; ++j) g[static_cast<size_t>(r) * d + j] += self.grad[j];
                  }));
}

Tensor col(const Tensor& x, int c) {
    Tape& t = *x.tape();
    require(x.shape().size() == 2, "col: rank-2 input required");
    int n = x.shape()[0], d = x.shape()[1];
    require(c >= 0 && c < d, "col: index out of range");
    std::vector<double> out(n);
    for (int r = 0; r < n; ++r) out[r] = x.value()[static_cast<size_t>(r) * d + c];
    int ix = x.id();
    return Tensor(&t, t.emit({n}, std::move(out), rg(x), [ix, c, n, d](Tape& tp, TapeNode& self) {
                      if (!tp.node(ix).requires_grad) return;
                      auto& g = tp.node(ix).grad;
                      for (int r = 0; r < n; ++r) g[static_cast<size_t>(r) * d + c] += self.grad[r];
                  }));
}

Tensor rows_stride(const Tensor& x, int start, int stride, int count) {
    Tape& t = *x.tape();
    require(x.shape().size() == 2, "rows_stride: rank-2 input required");
    int n = x.shape()[0], d = x.shape()[1];
    require(start >= 0 && stride >= 1 && count >= 1, "rows_stride: bad arguments");
    require(start + static_cast<long>(stride) * (count - 1) < n, "rows_stride: out of range");
    std::vector<double> out(static_cast<size_t>(count) * d);
    const auto& xv = x.value();
    for (int i = 0; i < count; ++i) {
        size_t src = static_cast<size_t>(start + i * stride) * d;
        std::copy(xv.begin() + src, xv.begin() + src + d, out.begin() + static_cast<size_t>(i) * d);
    }
    int ix = x.id();
    return Tensor(&t, t.emit({count, d}, std::move(out), rg(x),
                             [ix, start, stride, count, d](Tape& tp, TapeNode& self) {
                                 if (!tp.node(ix).requires_grad) return;
                                 auto& g = tp.node(ix).grad;
                                 for (int i = 0; i < count; ++i) {
                                     size_t dst = static_cast<size_t>(start + i * stride) * d;
                                     for (int j = 0; j < d; ++j) g[dst + j] += self.grad[static_cast<size_t>(i) * d + j];
                                 }
                             }));
}

Tensor mean_rows(const Tensor& x) {
    Tape& t = *x.tape();
    require(x.shape().size() == 2, "mean_rows: rank-2 input required");
    int n = x.shape()[0], d = x.shape()[1];
    std::vector<double> out(d, 0.0);
    const auto& xv = x.value();
    for (int r = 0; r < n; ++r)
        for (int j = 0; j < d; ++j) out[j] += xv[static_cast<size_t>(r) * d + j];
    for (double& v : out) v /= n;
    int ix = x.id();
    return Tensor(&t, t.emit({d}, std::move(out), rg(x), [ix, n, d](Tape& tp, TapeNode& self) {
                      if (!tp.node(ix).requires_grad) return;
                      auto& g = tp.node(ix).grad;
                      for (int r = 0; r < n; ++r)
                          for (int j = 0; j < d; ++j) g[static_cast<size_t>(r) * d + j] += self.grad[j] / n;
                  }));
}

Tensor sum_cols(const Tensor& x) {
    Tape& t = *x.tape();
    require(x.shape().size() == 2, "sum_cols: rank-2 input required");
    int n = x.shape()[0], d = x.shape()[1];
    std::vector<double> out(n, 0.0);
    const auto& xv = x.value();
    for (int r = 0; r < n; ++r)
        for (int j = 0; j < d; ++j) out[r] += xv[static_cast<size_t>(r) * d + j];
    int ix = x.id();
    return Tensor(&t, t.emit({n}, std::move(out), rg(x), [ix, n, d](Tape& tp, TapeNode& self) {
                      if (!tp.node(ix).requires_grad) return;
                      auto& g = tp.node(ix).grad;
                      for (int r = 0; r < n; ++r)
                          for (int j = 0; j < d; ++j) g[static_cast<size_t>(r) * d + j] += self.grad[r];
                  }));
}

Tensor scale_rows_const(const Tensor& x, const std::vector<double>& w) {
    Tape& t = *x.tape();
    require(x.shape().size() == 2, "scale_rows_const: rank-2 input required");
    int n = x.shape()[0], d = x.shape()[1];
    require(static_cast<int>(w.size()) == n, "scale_rows_const: weight length mismatch");
    std::vector<double> out(x.value());
    for (int r = 0; r < n; ++r)
        for (int j = 0; j < d; ++j) out[static_cast<size_t>(r) * d + j] *= w[r];
    int ix = x.id();
    return Tensor(&t, t.emit(x.shape(), std::move(out), rg(x), [ix, w, n, d](Tape& tp, TapeNode& self) {
                      if (!tp.node(ix).requires_grad) return;
                      auto& g = tp.node(ix).grad;
                      for (int r = 0; r < n; ++r)
                          for (int j = 0; j < d; ++j)
                              g[static_cast<size_t>(r) * d + j] += self.grad[static_cast<size_t>(r) * d + j] * w[r];
                  }));
}

Tensor scale_rows(const Tensor& x, const Tensor& s) {
    Tape& t = same_tape(x, s);
    require(x.shape().size() == 2 && s.shape().size() == 1, "scale_rows: need (n,d) and (n)");
    int n = x.shape()[0], d = x.shape()[1];
    require(s.shape()[0] == n, "scale_rows: length mismatch");
    std::vector<double> out(x.value());
    const auto& sv = s.value();
    for (int r = 0; r < n; ++r)
        for (int j = 0; j < d; ++j) out[static_cast<size_t>(r) * d + j] *= sv[r];
    int ix = x.id(), is = s.id();
    return Tensor(&t, t.emit(x.shape(), std::move(out), rg(x) || rg(s),
                             [ix, is, n, d](Tape& tp, TapeNode& self) {
                                 const auto& xv = tp.node(ix).value;
                                 const auto& sv2 = tp.node(is).value;
                                 if (tp.node(ix).requires_grad) {
                                     auto& g = tp.node(ix).grad;
                                     for (int r = 0; r < n; ++r)
                                         for (int j = 0; j < d; ++j)
                                             g[static_cast<size_t>(r) * d + j] +=
                                                 self.grad[static_cast<size_t>(r) * d + j] * sv2[r];
                                 }
                                 if (tp.node(is).requires_grad) {
                                     auto& g = tp.node(is).grad;
                                     for (int r = 0; r < n; ++r) {
                                         double acc = 0;
                                         for (int j = 0; j < d; ++j)
                                             acc += self.grad[static_cast<size_t>(r) * d + j] *
                                                    xv[static_cast<size_t>(r) * d + j];
                                         g[r] += acc;
                                     }
                                 }
                             }));
}

Tensor select_rows(const std::vector<double>& mask, const Tensor& a, const Tensor& b) {
    Tape& t = same_tape(a, b);
    require(a.shape() == b.shape() && a.shape().size() == 2, "select_rows: need matching rank-2 inputs");
    int n = a.shape()[0], d = a.shape()[1];
    require(static_cast<int>(mask.size()) == n, "select_rows: mask length mismatch");
    std::vector<double> out(static_cast<size_t>(n) * d);
    const auto& av = a.value();
    const auto& bv = b.value();
    for (int r = 0; r < n; ++r) {
        const auto& src = mask[r] != 0.0 ? av : bv;
        std::copy(src.begin() + static_cast<size_t>(r) * d, src.begin() + static_cast<size_t>(r + 1) * d,
                  out.begin() + static_cast<size_t>(r) * d);
    }
    int ia = a.id(), ib = b.id();
    return Tensor(&t, t.emit(a.shape(), std::move(out), rg(a) || rg(b),
                             [ia, ib, mask, n, d](Tape& tp, TapeNode& self) {
                                 for (int r = 0; r < n; ++r) {
                                     TapeNode& dst = tp.node(mask[r] != 0.0 ? ia : ib);
                                     if (!dst.requires_grad) continue;
                                     for (int j = 0; j < d; ++j)
                                         dst.grad[static_cast<size_t>(r) * d + j] +=
                                             self.grad[static_cast<size_t>(r) * d + j];
                                 }
                             }));
}

Tensor rowwise_dot(const Tensor& a, const Tensor& b) {
    Tape& t = same_tape(a, b);
    require(a.shape() == b.shape() && a.shape().size() == 2, "rowwise_dot: need matching rank-2 inputs");
    int n = a.shape()[0], d = a.shape()[1];
    std::vector<double> out(n, 0.0);
    const auto& av = a.value();
    const auto& bv = b.value();
    for (int r = 0; r < n; ++r)
        for (int j = 0; j < d; ++j)
            out[r] += av[static_cast<size_t>(r) * d + j] * bv[static_cast<size_t>(r) * d + j];
    int ia = a.id(), ib = b.id();
    return Tensor(&t, t.emit({n}, std::move(out), rg(a) || rg(b),
                             [ia, ib, n, d](Tape& tp, TapeNode& self) {
                                 const auto& av2 = tp.node(ia).value;
                                 const auto& bv2 = tp.node(ib).value;
                                 if (tp.node(ia).requires_grad) {
                                     auto& g = tp.node(ia).grad;
                                     for (int r = 0; r < n; ++r)
                                         for (int j = 0; j < d; ++j)
                                             g[static_cast<size_t>(r) * d + j] +=
                                                 self.grad[r] * bv2[static_cast<size_t>(r) * d + j];
                                 }
                                 if (tp.node(ib).requires_grad) {
                                     auto& g = tp.node(ib).grad;
                                     for (int r = 0; r < n; ++r)
                                         for (int j = 0; j < d; ++j)
                                             g[static_cast<size_t>(r) * d + j] +=
                                                 self.grad[r] * av2[static_cast<size_t>(r) * d + j];
                                 }
                             }));
}

Tensor mul_const(const Tensor& x, const std::vector<double>& m) {
    Tape& t = *x.tape();
    require(x.value().size() == m.size(), "mul_const: size mismatch");
    std::vector<double> out(x.value());
    for (size_t i = 0; i < out.size(); ++i) out[i] *= m[i];
    int ix = x.id();
    return Tensor(&t, t.emit(x.shape(), std::move(out), rg(x), [ix, m](Tape& tp, TapeNode& self) {
                      if (!tp.node(ix).requires_grad) return;
                      auto& g = tp.node(ix).grad;
                      for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * m[i];
                  }));
}

// ---- softmax ---------------------------------------------------------------

Tensor softmax(const Tensor& x) {
    Tape& t = *x.tape();
    require(x.shape().size() == 1, "softmax: rank-1 input required");
    const auto& xv = x.value();
    require(!xv.empty(), "softmax: empty input");
    double mx = *std::max_element(xv.begin(), xv.end());
    std::vector<double> out(xv.size());
    double z = 0;
    for (size_t i = 0; i < xv.size(); ++i) {
        out[i] = std::exp(xv[i] - mx);
        z += out[i];
    }
    for (double& v : out) v /= z;
    int ix = x.id();
    return Tensor(&t, t.emit(x.shape(), std::move(out), rg(x), [ix](Tape& tp, TapeNode& self) {
                      if (!tp.node(ix).requires_grad) return;
                      auto& g = tp.node(ix).grad;
                      double dot = 0;
                      for (size_t i = 0; i < g.size(); ++i) dot += self.grad[i] * self.value[i];
                      for (size_t i = 0; i < g.size(); ++i) g[i] += self.value[i] * (self.grad[i] - dot);
                  }));
}

Tensor softmax_rows_masked(const Tensor& x, const std::vector<double>& mask) {
    Tape& t = *x.tape();
    require(x.shape().size() == 2, "softmax_rows_masked: rank-2 input required");
    int n = x.shape()[0], d = x.shape()[1];
    require(mask.size() == static_cast<size_t>(n) * d, "softmax_rows_masked: mask size mismatch");
    const auto& xv = x.value();
    std::vector<double> out(static_cast<size_t>(n) * d, 0.0);
    for (int r = 0; r < n; ++r) {
        double mx = -1e300;
        bool any = false;
        for (int j = 0; j < d; ++j)
            if (mask[static_cast<size_t>(r) * d + j] != 0.0) {
                mx = std::max(mx, xv[static_cast<size_t>(r) * d + j]);
                any = true;
            }
        if (!any) continue;
        double z = 0;
        for (int j = 0; j < d; ++j) {
            size_t idx = static_cast<size_t>(r) * d + j;
            if (mask[idx] != 0.0) {
                out[idx] = std::exp(xv[idx] - mx);
                z += out[idx];
            }
        }
        for (int j = 0; j < d; ++j) out[static_cast<size_t>(r) * d + j] /= z;
    }
    int ix = x.id();
    return Tensor(&t, t.emit(x.shape(), std::move(out), rg(x), [ix, mask, n, d](Tape& tp, TapeNode& self) {
                      if (!tp.node(ix).requires_grad) return;
                      auto& g = tp.node(ix).grad;
                      for (int r = 0; r < n; ++r) {
                          double dot = 0;
                          for (int j = 0; j < d; ++j) {
                              size_t idx = static_cast<size_t>(r) * d + j;
                              dot += self.grad[idx] * self.value[idx];
                          }
                          for (int j = 0; j < d; ++j) {
                              size_t idx = static_cast<size_t>(r) * d + j;
                              if (mask[idx] != 0.0) g[idx] += self.value[idx] * (self.grad[idx] - dot);
                          }
                      }
                  }));
}

Tensor sum(const Tensor& x) {
    Tape& t = *x.tape();
    double s = std::accumulate(x.value().begin(), x.value().end(), 0.0);
    int ix = x.id();
    return Tensor(&t, t.emit({1}, {s}, rg(x), [ix](Tape& tp, TapeNode& self) {
                      if (!tp.node(ix).requires_grad) return;
                      auto& g = tp.node(ix).grad;
                      for (double& v : g) v += self.grad[0];
                  }));
}

// ---- losses -----------------------------------------------------------------

Tensor bce_with_logits_mean(const Tensor& logits, const std::vector<double>& targets) {
    Tape& t = *logits.tape();
    require(logits.shape().size() == 1, "bce: rank-1 logits required");
    size_t n = logits.value().size();
    require(targets.size() == n && n > 0, "bce: target length mismatch");
    const auto& z = logits.value();
    double loss = 0;
    for (size_t i = 0; i < n; ++i) {
        double zi = z[i];
        loss += std::max(zi, 0.0) - zi * targets[i] + std::log1p(std::exp(-std::abs(zi)));
    }
    loss /= static_cast<double>(n);
    int iz = logits.id();
    return Tensor(&t, t.emit({1}, {loss}, rg(logits), [iz, targets, n](Tape& tp, TapeNode& self) {
                      if (!tp.node(iz).requires_grad) return;
                      auto& g = tp.node(iz).grad;
                      const auto& zv = tp.node(iz).value;
                      for (size_t i = 0; i < n; ++i) {
                          double p = zv[i] >= 0 ? 1.0 / (1.0 + std::exp(-zv[i]))
                                                : std::exp(zv[i]) / (1.0 + std::exp(zv[i]));
                          g[i] += self.grad[0] * (p - targets[i]) / static_cast<double>(n);
                      }
                  }));
}

Tensor softmax_xent_mean(const Tensor& logits, const std::vector<int>& labels) {
    Tape& t = *logits.tape();
    require(logits.shape().size() == 2, "xent: rank-2 logits required");
    int n = logits.shape()[0], c = logits.shape()[1];
    require(static_cast<int>(labels.size()) == n && n > 0, "xent: label count mismatch");
    const auto& z = logits.value();
    double loss = 0;
    std::vector<double> probs(static_cast<size_t>(n) * c);
    for (int r = 0; r < n; ++r) {
        require(labels[r] >= 0 && labels[r] < c, "xent: label out of range");
        double mx = -1e300;
        for (int j = 0; j < c; ++j) mx = std::max(mx, z[static_cast<size_t>(r) * c + j]);
        double zsum = 0;
        for (int j = 0; j < c; ++j) {
            probs[static_cast<size_t>(r) * c + j] = std::exp(z[static_cast<size_t>(r) * c + j] - mx);
            zsum += probs[static_cast<size_t>(r) * c + j];
        }
        for (int j = 0; j < c; ++j) probs[static_cast<size_t>(r) * c + j] /= zsum;
        loss -= std::log(std::max(probs[static_cast<size_t>(r) * c + labels[r]], 1e-300));
    }
    loss /= n;
    int iz = logits.id();
    return Tensor(&t, t.emit({1}, {loss}, rg(logits),
                             [iz, labels, probs, n, c](Tape& tp, TapeNode& self) {
                                 if (!tp.node(iz).requires_grad) return;
                                 auto& g = tp.node(iz).grad;
                                 for (int r = 0; r < n; ++r)
                                     for (int j = 0; j < c; ++j) {
                                         double delta = j == labels[r] ? 1.0 : 0.0;
                                         g[static_cast<size_t>(r) * c + j] +=
                                             self.grad[0] * (probs[static_cast<size_t>(r) * c + j] - delta) / n;
                                     }
                             }));
}

// ---- time encoding -----------------------------------------------------------

Tensor time_fourier(const Tensor& omega, double dt) {
    return time_fourier_rows(omega, std::vector<double>{dt});
}

Tensor time_fourier_rows(const Tensor& omega, const std::vector<double>& dts) {
    Tape& t = *omega.tape();
    require(omega.shape().size() == 1, "time_fourier: rank-1 frequencies required");
    int d = omega.shape()[0];
    int n = static_cast<int>(dts.size());
    std::vector<double> out(static_cast<size_t>(n) * d);
    const auto& w = omega.value();
    for (int r = 0; r < n; ++r)
        for (int j = 0; j < d; ++j) out[static_cast<size_t>(r) * d + j] = std::cos(w[j] * dts[r]);
    std::vector<int> oshape = n == 1 ? std::vector<int>{d} : std::vector<int>{n, d};
    int iw = omega.id();
    return Tensor(&t, t.emit(std::move(oshape), std::move(out), rg(omega),
                             [iw, dts, n, d](Tape& tp, TapeNode& self) {
                                 if (!tp.node(iw).requires_grad) return;
                                 auto& g = tp.node(iw).grad;
                                 const auto& w2 = tp.node(iw).value;
                                 for (int r = 0; r < n; ++r)
                                     for (int j = 0; j < d; ++j)
                                         g[j] -= self.grad[static_cast<size_t>(r) * d + j] * dts[r] *
                                                 std::sin(w2[j] * dts[r]);
                             }));
}

Tensor dropout(const Tensor& x, double rate, Rng& rng) {
    if (rate <= 0.0) return x;
    require(rate < 1.0, "dropout: rate must be < 1");
    std::vector<double> mask(x.value().size());
    double keep = 1.0 - rate;
    for (double& m : mask) m = rng.next_double() < rate ? 0.0 : 1.0 / keep;
    return mul_const(x, mask);
}

Tensor attention(const Tensor& query, const Tensor& keys, const Tensor& values) {
    require(keys.shape().size() == 2 && values.shape().size() == 2, "attention: keys/values must be rank-2");
    require(query.shape().size() == 1, "attention: query must be rank-1");
    int n = keys.shape()[0];
    require(n >= 1, "attention: empty neighborhood");
    require(values.shape()[0] == n, "attention: keys/values row mismatch");
    require(keys.shape()[1] == query.shape()[0], "attention: query width mismatch");
    Tensor scores = scale(matmul(keys, query), 1.0 / std::sqrt(static_cast<double>(query.shape()[0])));
    Tensor w = softmax(scores);
    return matmul(w, values);
}

// ---- Adam -------------------------------------------------------------------

Adam::Adam(std::vector<Parameter*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step() {
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (Parameter* p : params_) {
        for (size_t i = 0; i < p->value.size(); ++i) {
            double g = p->grad[i];
            p->adam_m[i] = beta1_ * p->adam_m[i] + (1 - beta1_) * g;
            p->adam_v[i] = beta2_ * p->adam_v[i] + (1 - beta2_) * g * g;
            double mhat = p->adam_m[i] / bc1;
            double vhat = p->adam_v[i] / bc2;
            p->value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

void Adam::zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
}

void init_glorot(Parameter& p, int fan_in, int fan_out, uint64_t seed) {
    double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Rng rng(seed);
    for (double& v : p.value) v = rng.next_range(-limit, limit);
}

void init_constant(Parameter& p, double v) { std::fill(p.value.begin(), p.value.end(), v); }

// ---- gradient check -----------------------------------------------------------

GradCheckReport grad_check(const std::function<Tensor(Tape&, const std::vector<Tensor>&)>& f,
                           const std::vector<std::vector<int>>& input_shapes,
                           std::vector<std::vector<double>> input_values,
                           std::span<Parameter* const> params, double tol, double h) {
    auto eval = [&](const std::vector<std::vector<double>>& vals) {
        Tape tape;
        std::vector<Tensor> inputs;
        for (size_t i = 0; i < input_shapes.size(); ++i) inputs.push_back(tape.input(input_shapes[i], vals[i]));
        return f(tape, inputs).item();
    };

    // Analytic pass.
    std::vector<std::vector<double>> ad_input_grads;
    std::vector<std::vector<double>> ad_param_grads;
    {
        for (Parameter* p : params) p->zero_grad();
        Tape tape;
        std::vector<Tensor> inputs;
        for (size_t i = 0; i < input_shapes.size(); ++i)
            inputs.push_back(tape.input(input_shapes[i], input_values[i]));
        Tensor loss = f(tape, inputs);
        tape.backward(loss);
        for (const Tensor& in : inputs) {
            const auto& g = tape.grad_of(in);
            ad_input_grads.push_back(g.empty() ? std::vector<double>(in.value().size(), 0.0) : g);
        }
        for (Parameter* p : params) ad_param_grads.push_back(p->grad);
    }

    GradCheckReport rep;
    // Central differences cannot resolve |g| below ~eps*|f|/h; differences
    // under that floor are round-off, not disagreement.
    double f0 = eval(input_values);
    double noise_floor = 200.0 * 2.220446049250313e-16 * std::max(1.0, std::abs(f0)) / h;
    auto compare = [&](double g_ad, double g_fd, const std::string& where) {
        if (std::abs(g_ad - g_fd) < noise_floor) return;
        double rel = std::abs(g_ad - g_fd) / std::max({std::abs(g_ad), std::abs(g_fd), 1e-8});
        if (rel > rep.max_rel_err) {
            rep.max_rel_err = rel;
            rep.worst = where;
        }
    };

    // Finite differences on tracked inputs.
    for (size_t i = 0; i < input_values.size(); ++i) {
        for (size_t j = 0; j < input_values[i].size(); ++j) {
            double saved = input_values[i][j];
            input_values[i][j] = saved + h;
            double up = eval(input_values);
            input_values[i][j] = saved - h;
            double dn = eval(input_values);
            input_values[i][j] = saved;
            compare(ad_input_grads[i][j], (up - dn) / (2 * h),
                    "input " + std::to_string(i) + "[" + std::to_string(j) + "]");
        }
    }
    // Finite differences on parameters.
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Parameter* p = params[pi];
        for (size_t j = 0; j < p->value.size(); ++j) {
            double saved = p->value[j];
            p->value[j] = saved + h;
            double up = eval(input_values);
            p->value[j] = saved - h;
            double dn = eval(input_values);
            p->value[j] = saved;
            compare(ad_param_grads[pi][j], (up - dn) / (2 * h), p->name + "[" + std::to_string(j) + "]");
        }
    }
    rep.pass = rep.max_rel_err < tol;
    return rep;
}

}  // namespace tgnef
