#include "afd/flowpath.hpp"

#include <cmath>

#include "afd/errors.hpp"

namespace afd {

Schedule Schedule::rectified_flow() {
    Schedule s;
    s.name = "rectified_flow";
    s.alpha = [](double t) { return 1.0 - t; };
    s.sigma = [](double t) { return t; };
    s.alpha_dot = [](double) { return -1.0; };
    s.sigma_dot = [](double) { return 1.0; };
    return s;
}

Schedule Schedule::trig() {
    Schedule s;
    s.name = "trig";
    s.alpha = [](double t) { return std::cos(M_PI_2 * t); };
    s.sigma = [](double t) { return std::sin(M_PI_2 * t); };
    s.alpha_dot = [](double t) { return -M_PI_2 * std::sin(M_PI_2 * t); };
    s.sigma_dot = [](double t) { return M_PI_2 * std::cos(M_PI_2 * t); };
    return s;
}

Schedule Schedule::by_name(const std::string& name) {
    if (name == "rectified_flow") return rectified_flow();
    if (name == "trig") return trig();
    throw ConfigError("unknown schedule: " + name);
}

NoisySample forward_noise(const Tensor& x0, double t, const Tensor& eps, const Schedule& sched) {
    if (t < 0.0 || t > 1.0) throw InputError("forward_noise: t out of [0,1]");
    if (!x0.same_shape(eps)) throw InputError("forward_noise: x0/eps shape mismatch");
    NoisySample ns;
    ns.t = t;
    ns.eps = eps;
    ns.x_t = x0 * sched.alpha(t) + eps * sched.sigma(t);
    ns.v = x0 * sched.alpha_dot(t) + eps * sched.sigma_dot(t);
    return ns;
}

Tensor integrate_euler(const VelocityFn& field, const Tensor& noise, int steps) {
    if (steps < 1) throw InputError("integrate_euler: steps must be >= 1");
    Tensor x = noise;
    const double dt = 1.0 / static_cast<double>(steps);
    for (int m = 0; m < steps; ++m) {
        const double t = 1.0 - static_cast<double>(m) * dt;
        Tensor v = field(x, t);
        x = x - v * dt;
        if (!x.all_finite()) {
            throw NumericalError("integrate_euler: non-finite state at step " + std::to_string(m));
        }
    }
    return x;
}

}  // namespace afd
