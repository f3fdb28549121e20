#pragma once

#include "xmln/params.hpp"
#include "xmln/tensor.hpp"

#include <span>
#include <vector>

namespace xmln {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
struct Value {
    Tape* tape = nullptr;
    int idx = -1;

    bool valid() const { return tape != nullptr && idx >= 0; }
    const Tensor& tensor() const;
    double scalar() const;
};

// Record of a differentiable computation. Nodes are appended in evaluation
// order, which is already a topological order, so the backward pass is a
// single reverse sweep. One backward per tape; build a fresh tape per step.
class Tape {
  public:
    enum class Op : uint8_t {
        Leaf,     // constant or parameter input
        Add,
        Sub,
        Mul,      // elementwise
        Scale,    // c * x, c a plain double
        MatVec,   // [m,n] x [n] -> [m]
        Concat,   // vectors, in argument order
        Relu,
        Logistic, // clamped to (kQEps, 1-kQEps) so log() stays finite
        Log,
        Sum,      // reduce to scalar
        Row,      // select row r of a matrix
    };

    // Smallest representable posterior; keeps every q strictly inside (0,1).
    static constexpr double kQEps = 1e-12;

    Value constant(Tensor t);
    Value constant_scalar(double v) { return constant(Tensor::scalar(v)); }
    Value leaf(Tensor t);          // like constant, but gradients are retained
    Value param(Param& p);         // leaf bound to p; backward adds into p.grad

    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    Value mul(Value a, Value b);
    Value scale(Value a, double c);
    Value matvec(Value w, Value x);
    Value concat(std::span<const Value> parts);
    Value concat(Value a, Value b);
    Value relu(Value a);
    Value logistic(Value a);
    Value log(Value a);
    Value sum(Value a);
    Value row(Value m, int64_t r);

    // Seeds d(output)/d(output) = 1 and sweeps the tape in reverse. Throws
    // NumericError if output is not scalar or backward already ran.
    void backward(Value output);

    const Tensor& value_of(Value v) const;
    const Tensor& grad_of(Value v) const;

    size_t node_count() const { return nodes_.size(); }

  private:
    struct Node {
        Op op;
        int a = -1;
        int b = -1;
        double c = 0.0;              // Scale factor / Row index
        std::vector<int> inputs;     // Concat only
        Tensor val;
        Tensor grad;
        Param* bound = nullptr;
    };

    std::vector<Node> nodes_;
    bool backward_done_ = false;

    Value push(Node n);
    const Tensor& val(int i) const { return nodes_[static_cast<size_t>(i)].val; }
    void check_finite(const Tensor& t, const char* op) const;

    friend struct Value;
};

inline Value operator+(Value a, Value b) { return a.tape->add(a, b); }
inline Value operator-(Value a, Value b) { return a.tape->sub(a, b); }
inline Value operator*(Value a, Value b) { return a.tape->mul(a, b); }

} // namespace xmln
