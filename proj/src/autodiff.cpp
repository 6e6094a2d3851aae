#include "afd/autodiff.hpp"

#include <cmath>

#include "afd/errors.hpp"

namespace afd {

namespace {

double sigmoid_scalar(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log sigma(x) = -softplus(-x), stable for large |x|
double log_sigmoid_scalar(double x) {
    const double z = -x;
    return -(std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))));
}

}  // namespace

const char* Tape::op_tag(Op op) {
    switch (op) {
        case Op::leaf: return "leaf";
        case Op::matmul: return "matmul";
        case Op::add: return "add";
        case Op::sub: return "sub";
        case Op::mul: return "mul";
        case Op::scale: return "scale";
        case Op::grad_scale: return "grad_scale";
        case Op::stop_grad: return "stop_gradient";
        case Op::tanh_fn: return "tanh";
        case Op::silu: return "silu";
        case Op::sigmoid: return "sigmoid";
        case Op::log_fn: return "log";
        case Op::log_sigmoid: return "log_sigmoid";
        case Op::concat_rows: return "concat_rows";
        case Op::sum_all: return "sum";
        case Op::mean_all: return "mean";
        case Op::squared_norm: return "squared_norm";
    }
    return "?";
}

Value Tape::push(Node n) {
    if (!n.val.all_finite()) {
        throw NumericalError(std::string("non-finite value out of op ") + op_tag(n.op));
    }
    nodes_.push_back(std::move(n));
    return Value{static_cast<int>(nodes_.size()) - 1};
}

Value Tape::leaf(Tensor v) {
    Node n;
    n.val = std::move(v);
    return push(std::move(n));
}

Value Tape::param(const ParamStore& store, const std::string& name) {
    Node n;
    n.val = store.get(name);
    n.param_name = name;
    n.param_store = &store;
    return push(std::move(n));
}

Value Tape::matmul(Value a, Value b) {
    Node n;
    n.op = Op::matmul;
    n.a = a.id;
    n.b = b.id;
    n.val = afd::matmul(val(a), val(b));
    return push(std::move(n));
}

Value Tape::add(Value a, Value b) {
    Node n;
    n.op = Op::add;
    n.a = a.id;
    n.b = b.id;
    n.val = val(a) + val(b);
    return push(std::move(n));
}

Value Tape::sub(Value a, Value b) {
    Node n;
    n.op = Op::sub;
    n.a = a.id;
    n.b = b.id;
    n.val = val(a) - val(b);
    return push(std::move(n));
}

Value Tape::mul(Value a, Value b) {
    if (!val(a).same_shape(val(b))) {
        throw ConfigError("mul shape mismatch " + val(a).shape_str() + " vs " + val(b).shape_str());
    }
    Node n;
    n.op = Op::mul;
    n.a = a.id;
    n.b = b.id;
    n.val = val(a);
    for (size_t i = 0; i < n.val.data.size(); ++i) n.val.data[i] *= val(b).data[i];
    return push(std::move(n));
}

Value Tape::scale(Value a, double c) {
    Node n;
    n.op = Op::scale;
    n.a = a.id;
    n.c = c;
    n.val = val(a) * c;
    return push(std::move(n));
}

Value Tape::grad_scale(Value a, double factor) {
    Node n;
    n.op = Op::grad_scale;
    n.a = a.id;
    n.c = factor;
    n.val = val(a);
    return push(std::move(n));
}

Value Tape::stop_gradient(Value a) {
    Node n;
    n.op = Op::stop_grad;
    n.a = a.id;
    n.val = val(a);
    return push(std::move(n));
}

Value Tape::tanh(Value a) {
    Node n;
    n.op = Op::tanh_fn;
    n.a = a.id;
    n.val = val(a);
    for (double& x : n.val.data) x = std::tanh(x);
    return push(std::move(n));
}

Value Tape::silu(Value a) {
    Node n;
    n.op = Op::silu;
    n.a = a.id;
    n.val = val(a);
    for (double& x : n.val.data) x = x * sigmoid_scalar(x);
    return push(std::move(n));
}

Value Tape::sigmoid(Value a) {
    Node n;
    n.op = Op::sigmoid;
    n.a = a.id;
    n.val = val(a);
    for (double& x : n.val.data) x = sigmoid_scalar(x);
    return push(std::move(n));
}

Value Tape::log(Value a) {
    Node n;
    n.op = Op::log_fn;
    n.a = a.id;
    n.val = val(a);
    for (double& x : n.val.data) x = std::log(x);
    return push(std::move(n));
}

Value Tape::log_sigmoid(Value a) {
    Node n;
    n.op = Op::log_sigmoid;
    n.a = a.id;
    n.val = val(a);
    for (double& x : n.val.data) x = log_sigmoid_scalar(x);
    return push(std::move(n));
}

Value Tape::concat_rows(const std::vector<Value>& parts) {
    if (parts.empty()) throw ConfigError("concat_rows of empty list");
    int rows = 0;
    for (Value p : parts) {
        if (val(p).cols != 1) throw ConfigError("concat_rows expects column vectors");
        rows += val(p).rows;
    }
    Node n;
    n.op = Op::concat_rows;
    n.val = Tensor(rows, 1);
    int off = 0;
    for (Value p : parts) {
        n.parts.push_back(p.id);
        const Tensor& t = val(p);
        for (int i = 0; i < t.rows; ++i) n.val.data[off + i] = t.data[i];
        off += t.rows;
    }
    return push(std::move(n));
}

Value Tape::sum(Value a) {
    Node n;
    n.op = Op::sum_all;
    n.a = a.id;
    double s = 0.0;
    for (double x : val(a).data) s += x;
    n.val = Tensor::scalar(s);
    return push(std::move(n));
}

Value Tape::mean(Value a) {
    Node n;
    n.op = Op::mean_all;
    n.a = a.id;
    double s = 0.0;
    for (double x : val(a).data) s += x;
    n.val = Tensor::scalar(s / static_cast<double>(val(a).size()));
    return push(std::move(n));
}

Value Tape::squared_norm(Value a) {
    Node n;
    n.op = Op::squared_norm;
    n.a = a.id;
    n.val = Tensor::scalar(dot(val(a), val(a)));
    return push(std::move(n));
}

void Tape::backward(Value loss) {
    if (!loss.valid() || !val(loss).is_scalar()) {
        throw ConfigError("backward requires a scalar loss node");
    }
    grads_.assign(nodes_.size(), Tensor());
    for (size_t i = 0; i < nodes_.size(); ++i) {
        grads_[i] = Tensor(nodes_[i].val.rows, nodes_[i].val.cols);
    }
    grads_[loss.id].data[0] = 1.0;

    for (int id = loss.id; id >= 0; --id) {
        const Node& n = nodes_[id];
        const Tensor& g = grads_[id];
        switch (n.op) {
            case Op::leaf:
                break;
            case Op::matmul: {
                // dA += g . B^T ; dB += A^T . g
                const Tensor& A = nodes_[n.a].val;
                const Tensor& B = nodes_[n.b].val;
                Tensor& dA = grads_[n.a];
                Tensor& dB = grads_[n.b];
                for (int i = 0; i < A.rows; ++i) {
                    for (int k = 0; k < A.cols; ++k) {
                        double s = 0.0;
                        for (int j = 0; j < B.cols; ++j) s += g.at(i, j) * B.at(k, j);
                        dA.at(i, k) += s;
                    }
                }
                for (int k = 0; k < B.rows; ++k) {
                    for (int j = 0; j < B.cols; ++j) {
                        double s = 0.0;
                        for (int i = 0; i < A.rows; ++i) s += A.at(i, k) * g.at(i, j);
                        dB.at(k, j) += s;
                    }
                }
                break;
            }
            case Op::add: {
                Tensor& dA = grads_[n.a];
                Tensor& dB = grads_[n.b];
                for (size_t i = 0; i < g.data.size(); ++i) {
                    dA.data[i] += g.data[i];
                    dB.data[i] += g.data[i];
                }
                break;
            }
            case Op::sub: {
                Tensor& dA = grads_[n.a];
                Tensor& dB = grads_[n.b];
                for (size_t i = 0; i < g.data.size(); ++i) {
                    dA.data[i] += g.data[i];
                    dB.data[i] -= g.data[i];
                }
                break;
            }
            case Op::mul: {
                const Tensor& A = nodes_[n.a].val;
                const Tensor& B = nodes_[n.b].val;
                Tensor& dA = grads_[n.a];
                Tensor& dB = grads_[n.b];
                for (size_t i = 0; i < g.data.size(); ++i) {
                    dA.data[i] += g.data[i] * B.data[i];
                    dB.data[i] += g.data[i] * A.data[i];
                }
                break;
            }
            case Op::scale: {
                Tensor& dA = grads_[n.a];
                for (size_t i = 0; i < g.data.size(); ++i) dA.data[i] += g.data[i] * n.c;
                break;
            }
            case Op::grad_scale: {
                Tensor& dA = grads_[n.a];
                for (size_t i = 0; i < g.data.size(); ++i) dA.data[i] += g.data[i] * n.c;
                break;
            }
            case Op::stop_grad:
                break;
            case Op::tanh_fn: {
                Tensor& dA = grads_[n.a];
                for (size_t i = 0; i < g.data.size(); ++i) {
                    const double y = n.val.data[i];
                    dA.data[i] += g.data[i] * (1.0 - y * y);
                }
                break;
            }
            case Op::silu: {
                const Tensor& A = nodes_[n.a].val;
                Tensor& dA = grads_[n.a];
                for (size_t i = 0; i < g.data.size(); ++i) {
                    const double s = sigmoid_scalar(A.data[i]);
                    dA.data[i] += g.data[i] * (s + A.data[i] * s * (1.0 - s));
                }
                break;
            }
            case Op::sigmoid: {
                Tensor& dA = grads_[n.a];
                for (size_t i = 0; i < g.data.size(); ++i) {
                    const double y = n.val.data[i];
                    dA.data[i] += g.data[i] * y * (1.0 - y);
                }
                break;
            }
            case Op::log_fn: {
                const Tensor& A = nodes_[n.a].val;
                Tensor& dA = grads_[n.a];
                for (size_t i = 0; i < g.data.size(); ++i) dA.data[i] += g.data[i] / A.data[i];
                break;
            }
            case Op::log_sigmoid: {
                const Tensor& A = nodes_[n.a].val;
                Tensor& dA = grads_[n.a];
                for (size_t i = 0; i < g.data.size(); ++i) {
                    dA.data[i] += g.data[i] * sigmoid_scalar(-A.data[i]);
                }
                break;
            }
            case Op::concat_rows: {
                int off = 0;
                for (int pid : n.parts) {
                    Tensor& dP = grads_[pid];
                    for (int i = 0; i < dP.rows; ++i) dP.data[i] += g.data[off + i];
                    off += dP.rows;
                }
                break;
            }
            case Op::sum_all: {
                Tensor& dA = grads_[n.a];
                for (double& x : dA.data) x += g.data[0];
                break;
            }
            case Op::mean_all: {
                Tensor& dA = grads_[n.a];
                const double s = g.data[0] / static_cast<double>(dA.size());
                for (double& x : dA.data) x += s;
                break;
            }
            case Op::squared_norm: {
                const Tensor& A = nodes_[n.a].val;
                Tensor& dA = grads_[n.a];
                for (size_t i = 0; i < dA.data.size(); ++i) dA.data[i] += g.data[0] * 2.0 * A.data[i];
                break;
            }
        }
    }
}

std::unordered_map<std::string, Tensor> Tape::param_grads(const ParamStore& store) const {
    std::unordered_map<std::string, Tensor> out;
    for (size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].param_store != &store) continue;
        auto it = out.find(nodes_[i].param_name);
        if (it == out.end()) {
            out.emplace(nodes_[i].param_name, grads_[i]);
        } else {
            it->second = it->second + grads_[i];
        }
    }
    return out;
}

void Tape::reset() {
    nodes_.clear();
    grads_.clear();
}

GradCheckReport grad_check(const LossBuilder& loss_fn, ParamStore& params, double step, double tol) {
    (void)tol;
    Tape tape;
    Value loss = loss_fn(tape, params);
    if (!tape.value(loss).all_finite()) throw NumericalError("grad_check: non-finite loss");
    tape.backward(loss);
    auto analytic = tape.param_grads(params);

    GradCheckReport report;
    for (auto& [name, theta] : params.arrays()) {
        for (size_t i = 0; i < theta.data.size(); ++i) {
            const double saved = theta.data[i];
            theta.data[i] = saved + step;
            Tape tp;
            const double fp = tp.value(loss_fn(tp, params)).data[0];
            theta.data[i] = saved - step;
            Tape tm;
            const double fm = tm.value(loss_fn(tm, params)).data[0];
            theta.data[i] = saved;

            if (!std::isfinite(fp) || !std::isfinite(fm)) throw NumericalError("grad_check: non-finite loss");
            const double numeric = (fp - fm) / (2.0 * step);
            const double exact = analytic.count(name) ? analytic.at(name).data[i] : 0.0;
            // the absolute floor keeps finite-difference roundoff noise on
            // near-zero gradients from masquerading as relative error
            const double denom = std::max({std::abs(numeric), std::abs(exact), 1e-6});
            const double rel = std::abs(numeric - exact) / denom;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = name;
                report.worst_index = static_cast<int>(i);
                report.analytic = exact;
                report.numeric = numeric;
            }
        }
    }
    return report;
}

}  // namespace afd
