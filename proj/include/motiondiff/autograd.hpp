#pragma once

#include "motiondiff/core.hpp"
#include "motiondiff/params.hpp"

#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

// Small reverse-mode differentiation tape over dense double matrices. Every
// op records its value and, when any input requires a gradient, a closure
// that pushes the output gradient back to its inputs.
namespace motiondiff::ag {

class Tape;

class Var {
public:
    Var() = default;

    const Matrix& value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    int id() const { return id_; }
    Tape* tape() const { return tape_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, int id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    int id_ = -1;
};

class Tape {
public:
    using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

    // With record = false no gradient closures are kept (inference mode).
    explicit Tape(bool record = true) : record_(record) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix value);
    Var variable(Matrix value);

    const Matrix& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id_)].value; }
    bool requires_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id_)].requires_grad; }

    // Gradient of the last backward() target; zero if v did not influence it.
    Matrix grad(Var v) const;

    // Seeds d(target)/d(target) = 1 for a 1x1 target and propagates.
    void backward(Var target);

    // Used by op implementations.
    Var push(Matrix value, std::initializer_list<Var> inputs, Backward backward);
    void accumulate(Var v, const Matrix& g);
    bool recording() const { return record_; }
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        Backward backward;
        bool requires_grad = false;
        bool has_grad = false;
    };

    std::vector<Node> nodes_;
    bool record_;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }

// Element-wise and linear-algebra ops. Shapes follow Eigen conventions; row
// vectors are 1 x n matrices.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var matmul(Var a, Var b);
Var add_row(Var a, Var row);                  // a[n x d] + broadcast row[1 x d]
Var linear(Var x, Var weight, Var bias);      // x[n x i] * weight[i x o] + bias[1 x o]
Var silu(Var x);
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
Var mean_rows(Var x);                         // [n x d] -> [1 x d]
Var repeat_rows(Var row, Eigen::Index n);     // [1 x d] -> [n x d]
Var sum_all(Var x);                           // -> [1 x 1]

// Multi-head scaled dot-product attention; q[n x d], k/v[m x d], d % heads == 0.
Var attention(Var q, Var k, Var v, int heads);

// Per-channel convolution along the row (time) axis with zero padding;
// weight[K x d], bias[1 x d], K odd.
Var depthwise_conv_rows(Var x, Var weight, Var bias);

// Single-channel convolution sliding along the column (feature) axis of every
// row with zero padding; weight[1 x K], bias[1 x 1], K odd.
Var conv_along_features(Var x, Var weight, Var bias);

// Losses, all returning [1 x 1].
Var mse(Var pred, const Matrix& target);
Var bce_with_logits(Var logits, const Matrix& targets);   // mean over entries
Var cross_entropy(Var logits, int target_class);           // logits[1 x C]

// Parameter binding for one forward pass. Each named parameter becomes a
// tape variable the first time it is requested.
class Binder {
public:
    Binder(Tape& tape, const ParameterSet& params) : tape_(tape), params_(params) {}

    Var operator()(const std::string& name);
    Tape& tape() { return tape_; }
    const ParameterSet& params() const { return params_; }

    // Gradients of every bound parameter after tape().backward().
    std::map<std::string, Matrix> gradients() const;

private:
    Tape& tape_;
    const ParameterSet& params_;
    std::unordered_map<std::string, Var> bound_;
};

}  // namespace motiondiff::ag
