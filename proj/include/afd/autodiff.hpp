#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "afd/params.hpp"
#include "afd/tensor.hpp"

namespace afd {

// Handle into a Tape. Valid only for the tape that produced it.
struct Value {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode graph over dense tensors. One tape per training step; nodes
// are appended in evaluation order, so a reverse sweep is already
// topologically sorted. Single-threaded per tape.
class Tape {
public:
    enum class Op {
        leaf,
        matmul,
        add,
        sub,
        mul,
        scale,
        grad_scale,   // value = input, backward multiplies by factor
        stop_grad,    // grad_scale with factor 0, kept distinct for its tag
        tanh_fn,
        silu,
        sigmoid,
        log_fn,
        log_sigmoid,
        concat_rows,
        sum_all,
        mean_all,
        squared_norm,
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Value leaf(Tensor v);
    Value leaf(double v) { return leaf(Tensor::scalar(v)); }

    // Leaf bound to a named parameter array; gradients are collected per name.
    Value param(const ParamStore& store, const std::string& name);

    Value matmul(Value a, Value b);
    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    Value mul(Value a, Value b);  // elementwise
    Value scale(Value a, double c);
    Value tanh(Value a);
    Value silu(Value a);
    Value sigmoid(Value a);
    Value log(Value a);
    Value log_sigmoid(Value a);
    Value concat_rows(const std::vector<Value>& parts);
    Value sum(Value a);
    Value mean(Value a);
    Value squared_norm(Value a);
    Value stop_gradient(Value a);
    Value grad_scale(Value a, double factor);

    const Tensor& value(Value v) const { return nodes_[v.id].val; }
    const Tensor& grad(Value v) const { return grads_[v.id]; }

    // Reverse sweep from a scalar loss. Gradients of nodes unreachable from
    // the loss stay zero.
    void backward(Value loss);

    // Gradients of the parameters bound from `store`, keyed by name. Two
    // stores bound on the same tape never mix, even with equal names.
    std::unordered_map<std::string, Tensor> param_grads(const ParamStore& store) const;

    size_t node_count() const { return nodes_.size(); }
    void reset();

private:
    struct Node {
        Tensor val;
        Op op = Op::leaf;
        int a = -1;
        int b = -1;
        double c = 0.0;               // scalar payload
        std::vector<int> parts;       // concat parents
        std::string param_name;       // nonempty for bound parameter leaves
        const ParamStore* param_store = nullptr;
    };

    Value push(Node n);
    const Tensor& val(Value v) const { return nodes_[v.id].val; }
    static const char* op_tag(Op op);

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
};

// Builds a scalar loss on the given tape with parameters bound from `store`.
using LossBuilder = std::function<Value(Tape&, const ParamStore&)>;

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    int worst_index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
    bool passed(double tol) const { return max_rel_err < tol; }
};

// Central finite differences against the reverse-mode gradient, over every
// scalar in `params`.
GradCheckReport grad_check(const LossBuilder& loss_fn, ParamStore& params, double step, double tol);

}  // namespace afd
