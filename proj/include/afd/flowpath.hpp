#pragma once

#include <functional>
#include <string>
#include <vector>

#include "afd/rng.hpp"
#include "afd/tensor.hpp"

namespace afd {

// Noising schedule on t in [0,1]: clean end at t=0 (alpha=1, sigma=0), noise
// end at t=1 (alpha=0, sigma=1).
struct Schedule {
    std::string name;
    std::function<double(double)> alpha;
    std::function<double(double)> sigma;
    std::function<double(double)> alpha_dot;
    std::function<double(double)> sigma_dot;

    static Schedule rectified_flow();   // alpha = 1-t, sigma = t
    static Schedule trig();             // alpha = cos(pi/2 t), sigma = sin(pi/2 t)
    static Schedule by_name(const std::string& name);
};

// Forward-noised state x_t = alpha(t) x0 + sigma(t) eps with its velocity
// target v = alpha_dot(t) x0 + sigma_dot(t) eps.
struct NoisySample {
    Tensor x_t;
    double t = 0.0;
    Tensor eps;
    Tensor v;
};

NoisySample forward_noise(const Tensor& x0, double t, const Tensor& eps, const Schedule& sched);

// Velocity evaluator: (x_t, t) -> velocity, with any conditioning already
// bound. Both losses and the sampler are generic over it.
using VelocityFn = std::function<Tensor(const Tensor& x_t, double t)>;

// Deterministic Euler integration of dx/dt = v from t=1 down to t=0 in
// `steps` uniform steps, starting from the given noise draw.
Tensor integrate_euler(const VelocityFn& field, const Tensor& noise, int steps);

}  // namespace afd
