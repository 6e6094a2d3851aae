#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "afd/tensor.hpp"

namespace afd {

// Named flat parameter arrays. Names are unique; shapes are fixed after
// creation. Iteration order is the sorted name order, which keeps every
// optimizer sweep and serialization deterministic.
class ParamStore {
public:
    Tensor& create(const std::string& name, int rows, int cols);
    Tensor& create(const std::string& name, Tensor init);

    bool has(const std::string& name) const { return arrays_.count(name) > 0; }
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;

    size_t count() const { return arrays_.size(); }
    size_t scalar_count() const;
    bool all_finite() const;

    const std::map<std::string, Tensor>& arrays() const { return arrays_; }
    std::map<std::string, Tensor>& arrays() { return arrays_; }

    bool same_geometry(const ParamStore& other) const;

private:
    std::map<std::string, Tensor> arrays_;
};

// Outcome of one optimizer step on some loss.
struct StepResult {
    double loss = 0.0;
    double grad_norm = 0.0;
};

// AdamW with decoupled weight decay and global gradient-norm clipping.
class AdamW {
public:
    struct Options {
        double lr = 1e-5;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        double weight_decay = 1e-4;
        double clip_norm = 1.0;  // <= 0 disables clipping
    };

    AdamW() = default;
    explicit AdamW(Options opt) : opt_(opt) {}

    // Applies one update; returns the pre-clip global gradient norm.
    double step(ParamStore& params, const std::unordered_map<std::string, Tensor>& grads);

    Options& options() { return opt_; }
    const Options& options() const { return opt_; }
    long long step_count() const { return t_; }

    // Serialization hooks used by trainer checkpoints.
    const ParamStore& moments_m() const { return m_; }
    const ParamStore& moments_v() const { return v_; }
    void restore(long long t, ParamStore m, ParamStore v);

private:
    Options opt_;
    ParamStore m_;
    ParamStore v_;
    long long t_ = 0;
};

}  // namespace afd
