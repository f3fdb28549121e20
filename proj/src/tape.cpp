#include "xmln/tape.hpp"

#include "xmln/errors.hpp"

#include <cmath>

namespace xmln {

const Tensor& Value::tensor() const { return tape->value_of(*this); }

double Value::scalar() const {
    const Tensor& t = tensor();
    if (t.size() != 1) throw NumericError("scalar() on tensor of shape " + t.shape_str());
    return t.data[0];
}

void Tape::check_finite(const Tensor& t, const char* op) const {
    for (double v : t.data) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string("non-finite result in op ") + op);
        }
    }
}

Value Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return Value{this, static_cast<int>(nodes_.size()) - 1};
}

Value Tape::constant(Tensor t) {
    check_finite(t, "constant");
    Node n;
    n.op = Op::Leaf;
    n.val = std::move(t);
    return push(std::move(n));
}

Value Tape::leaf(Tensor t) { return constant(std::move(t)); }

Value Tape::param(Param& p) {
    Node n;
    n.op = Op::Leaf;
    n.val = p.value;
    n.bound = &p;
    return push(std::move(n));
}

Value Tape::add(Value a, Value b) {
    const Tensor& ta = val(a.idx);
    const Tensor& tb = val(b.idx);
    if (!ta.same_shape(tb))
        throw NumericError("add: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
    Node n;
    n.op = Op::Add;
    n.a = a.idx;
    n.b = b.idx;
    n.val = Tensor(ta.shape);
    for (int64_t i = 0; i < ta.size(); ++i) n.val[i] = ta[i] + tb[i];
    check_finite(n.val, "add");
    return push(std::move(n));
}

Value Tape::sub(Value a, Value b) {
    const Tensor& ta = val(a.idx);
    const Tensor& tb = val(b.idx);
    if (!ta.same_shape(tb))
        throw NumericError("sub: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
    Node n;
    n.op = Op::Sub;
    n.a = a.idx;
    n.b = b.idx;
    n.val = Tensor(ta.shape);
    for (int64_t i = 0; i < ta.size(); ++i) n.val[i] = ta[i] - tb[i];
    check_finite(n.val, "sub");
    return push(std::move(n));
}

Value Tape::mul(Value a, Value b) {
    const Tensor& ta = val(a.idx);
    const Tensor& tb = val(b.idx);
    if (!ta.same_shape(tb))
        throw NumericError("mul: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
    Node n;
    n.op = Op::Mul;
    n.a = a.idx;
    n.b = b.idx;
    n.val = Tensor(ta.shape);
    for (int64_t i = 0; i < ta.size(); ++i) n.val[i] = ta[i] * tb[i];
    check_finite(n.val, "mul");
    return push(std::move(n));
}

Value Tape::scale(Value a, double c) {
    const Tensor& ta = val(a.idx);
    Node n;
    n.op = Op::Scale;
    n.a = a.idx;
    n.c = c;
    n.val = Tensor(ta.shape);
    for (int64_t i = 0; i < ta.size(); ++i) n.val[i] = c * ta[i];
    check_finite(n.val, "scale");
    return push(std::move(n));
}

Value Tape::matvec(Value w, Value x) {
    const Tensor& tw = val(w.idx);
    const Tensor& tx = val(x.idx);
    if (tw.shape.size() != 2 || tx.shape.size() != 1 || tw.cols() != tx.rows())
        throw NumericError("matvec: shape mismatch " + tw.shape_str() + " vs " + tx.shape_str());
    const int64_t m = tw.rows(), k = tw.cols();
    Node n;
    n.op = Op::MatVec;
    n.a = w.idx;
    n.b = x.idx;
    n.val = Tensor({m});
    const double* wp = tw.data.data();
    const double* xp = tx.data.data();
    for (int64_t i = 0; i < m; ++i) {
        double acc = 0.0;
        const double* row = wp + i * k;
        for (int64_t j = 0; j < k; ++j) acc += row[j] * xp[j];
        n.val[i] = acc;
    }
    check_finite(n.val, "matvec");
    return push(std::move(n));
}

Value Tape::concat(std::span<const Value> parts) {
    if (parts.empty()) throw NumericError("concat: no inputs");
    int64_t total = 0;
    for (const Value& p : parts) {
        if (val(p.idx).shape.size() != 1) throw NumericError("concat: vector inputs only");
        total += val(p.idx).size();
    }
    Node n;
    n.op = Op::Concat;
    n.val = Tensor({total});
    int64_t off = 0;
    for (const Value& p : parts) {
        n.inputs.push_back(p.idx);
        const Tensor& t = val(p.idx);
        for (int64_t i = 0; i < t.size(); ++i) n.val[off + i] = t[i];
        off += t.size();
    }
    return push(std::move(n));
}

Value Tape::concat(Value a, Value b) {
    const Value parts[2] = {a, b};
    return concat(std::span<const Value>(parts, 2));
}

Value Tape::relu(Value a) {
    const Tensor& ta = val(a.idx);
    Node n;
    n.op = Op::Relu;
    n.a = a.idx;
    n.val = Tensor(ta.shape);
    for (int64_t i = 0; i < ta.size(); ++i) n.val[i] = ta[i] > 0.0 ? ta[i] : 0.0;
    return push(std::move(n));
}

Value Tape::logistic(Value a) {
    const Tensor& ta = val(a.idx);
    Node n;
    n.op = Op::Logistic;
    n.a = a.idx;
    n.val = Tensor(ta.shape);
    for (int64_t i = 0; i < ta.size(); ++i) {
        double y = 1.0 / (1.0 + std::exp(-ta[i]));
        if (y < kQEps) y = kQEps;
        if (y > 1.0 - kQEps) y = 1.0 - kQEps;
        n.val[i] = y;
    }
    check_finite(n.val, "logistic");
    return push(std::move(n));
}

Value Tape::log(Value a) {
    const Tensor& ta = val(a.idx);
    Node n;
    n.op = Op::Log;
    n.a = a.idx;
    n.val = Tensor(ta.shape);
    for (int64_t i = 0; i < ta.size(); ++i) n.val[i] = std::log(ta[i]);
    check_finite(n.val, "log");
    return push(std::move(n));
}

Value Tape::sum(Value a) {
    const Tensor& ta = val(a.idx);
    Node n;
    n.op = Op::Sum;
    n.a = a.idx;
    double acc = 0.0;
    for (int64_t i = 0; i < ta.size(); ++i) acc += ta[i];
    n.val = Tensor::scalar(acc);
    check_finite(n.val, "sum");
    return push(std::move(n));
}

Value Tape::row(Value m, int64_t r) {
    const Tensor& tm = val(m.idx);
    if (tm.shape.size() != 2 || r < 0 || r >= tm.rows())
        throw NumericError("row: bad index " + std::to_string(r) + " for " + tm.shape_str());
    Node n;
    n.op = Op::Row;
    n.a = m.idx;
    n.c = static_cast<double>(r);
    n.val = Tensor({tm.cols()});
    const int64_t k = tm.cols();
    for (int64_t j = 0; j < k; ++j) n.val[j] = tm[r * k + j];
    return push(std::move(n));
}

const Tensor& Tape::value_of(Value v) const { return nodes_[static_cast<size_t>(v.idx)].val; }

const Tensor& Tape::grad_of(Value v) const {
    const Node& n = nodes_[static_cast<size_t>(v.idx)];
    if (n.grad.size() == 0) throw NumericError("grad_of before backward()");
    return n.grad;
}

void Tape::backward(Value output) {
    if (backward_done_) throw NumericError("backward() called twice on the same tape");
    if (output.tape != this) throw NumericError("backward(): value from another tape");
    if (val(output.idx).size() != 1) throw NumericError("backward(): output must be scalar");
    backward_done_ = true;

    for (Node& n : nodes_) n.grad = Tensor(n.val.shape);
    nodes_[static_cast<size_t>(output.idx)].grad[0] = 1.0;

    for (int i = output.idx; i >= 0; --i) {
        Node& n = nodes_[static_cast<size_t>(i)];
        const Tensor& g = n.grad;
        switch (n.op) {
        case Op::Leaf:
            break;
        case Op::Add: {
            Tensor& ga = nodes_[static_cast<size_t>(n.a)].grad;
            Tensor& gb = nodes_[static_cast<size_t>(n.b)].grad;
            for (int64_t j = 0; j < g.size(); ++j) {
                ga[j] += g[j];
                gb[j] += g[j];
            }
            break;
        }
        case Op::Sub: {
            Tensor& ga = nodes_[static_cast<size_t>(n.a)].grad;
            Tensor& gb = nodes_[static_cast<size_t>(n.b)].grad;
            for (int64_t j = 0; j < g.size(); ++j) {
                ga[j] += g[j];
                gb[j] -= g[j];
            }
            break;
        }
        case Op::Mul: {
            Tensor& ga = nodes_[static_cast<size_t>(n.a)].grad;
            Tensor& gb = nodes_[static_cast<size_t>(n.b)].grad;
            const Tensor& va = val(n.a);
            const Tensor& vb = val(n.b);
            for (int64_t j = 0; j < g.size(); ++j) {
                ga[j] += g[j] * vb[j];
                gb[j] += g[j] * va[j];
            }
            break;
        }
        case Op::Scale: {
            Tensor& ga = nodes_[static_cast<size_t>(n.a)].grad;
            for (int64_t j = 0; j < g.size(); ++j) ga[j] += n.c * g[j];
            break;
        }
        case Op::MatVec: {
            Tensor& gw = nodes_[static_cast<size_t>(n.a)].grad;
            Tensor& gx = nodes_[static_cast<size_t>(n.b)].grad;
            const Tensor& w = val(n.a);
            const Tensor& x = val(n.b);
            const int64_t m = w.rows(), k = w.cols();
            for (int64_t r = 0; r < m; ++r) {
                const double gr = g[r];
                if (gr == 0.0) continue;
                const double* wr = w.data.data() + r * k;
                double* gwr = gw.data.data() + r * k;
                for (int64_t j = 0; j < k; ++j) {
                    gwr[j] += gr * x[j];
                    gx[j] += gr * wr[j];
                }
            }
            break;
        }
        case Op::Concat: {
            int64_t off = 0;
            for (int src : n.inputs) {
                Tensor& gs = nodes_[static_cast<size_t>(src)].grad;
                for (int64_t j = 0; j < gs.size(); ++j) gs[j] += g[off + j];
                off += gs.size();
            }
            break;
        }
        case Op::Relu: {
            Tensor& ga = nodes_[static_cast<size_t>(n.a)].grad;
            const Tensor& va = val(n.a);
            for (int64_t j = 0; j < g.size(); ++j)
                if (va[j] > 0.0) ga[j] += g[j];
            break;
        }
        case Op::Logistic: {
            Tensor& ga = nodes_[static_cast<size_t>(n.a)].grad;
            for (int64_t j = 0; j < g.size(); ++j) {
                const double y = n.val[j];
                ga[j] += g[j] * y * (1.0 - y);
            }
            break;
        }
        case Op::Log: {
            Tensor& ga = nodes_[static_cast<size_t>(n.a)].grad;
            const Tensor& va = val(n.a);
            for (int64_t j = 0; j < g.size(); ++j) ga[j] += g[j] / va[j];
            break;
        }
        case Op::Sum: {
            Tensor& ga = nodes_[static_cast<size_t>(n.a)].grad;
            const double gs = g[0];
            for (int64_t j = 0; j < ga.size(); ++j) ga[j] += gs;
            break;
        }
        case Op::Row: {
            Tensor& ga = nodes_[static_cast<size_t>(n.a)].grad;
            const int64_t k = val(n.a).cols();
            const int64_t r = static_cast<int64_t>(n.c);
            for (int64_t j = 0; j < k; ++j) ga[r * k + j] += g[j];
            break;
        }
        }
    }

    // hand accumulated leaf gradients to their parameters
    for (Node& n : nodes_) {
        if (n.bound == nullptr) continue;
        Tensor& pg = n.bound->grad;
        for (int64_t j = 0; j < pg.size(); ++j) pg[j] += n.grad[j];
    }
}

} // namespace xmln
