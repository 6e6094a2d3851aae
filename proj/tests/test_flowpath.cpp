#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "afd/errors.hpp"
#include "afd/flowpath.hpp"

using namespace afd;

TEST_CASE("schedule endpoint identities") {
    for (const char* name : {"rectified_flow", "trig"}) {
        Schedule s = Schedule::by_name(name);
        CHECK(s.alpha(0.0) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(s.sigma(0.0) == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(s.alpha(1.0) == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(s.sigma(1.0) == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK_THROWS_AS(Schedule::by_name("nope"), ConfigError);
}

TEST_CASE("forward_noise on the rectified-flow schedule") {
    const Schedule s = Schedule::rectified_flow();
    Rng rng = Rng::seeded(2);
    Tensor x0 = Tensor::randn(3, 1, rng);
    Tensor eps = Tensor::randn(3, 1, rng);

    // t = 0: x_t = x0, v = eps - x0
    NoisySample a = forward_noise(x0, 0.0, eps, s);
    CHECK(max_abs_diff(a.x_t, x0) == 0.0);
    CHECK(max_abs_diff(a.v, eps - x0) == 0.0);

    // t = 1: x_t = eps, v = eps - x0
    NoisySample b = forward_noise(x0, 1.0, eps, s);
    CHECK(max_abs_diff(b.x_t, eps) == 0.0);
    CHECK(max_abs_diff(b.v, eps - x0) == 0.0);

    // direct substitution at t = 0.5
    NoisySample c = forward_noise(Tensor::column({1.0, 0.0}), 0.5, Tensor::column({0.0, 1.0}), s);
    CHECK(c.x_t.data[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(c.x_t.data[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(c.v.data[0] == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(c.v.data[1] == doctest::Approx(1.0).epsilon(1e-15));

    CHECK_THROWS_AS(forward_noise(x0, 1.5, eps, s), InputError);
    CHECK_THROWS_AS(forward_noise(x0, -0.1, eps, s), InputError);
}

TEST_CASE("forward_noise invariants hold exactly") {
    const Schedule s = Schedule::rectified_flow();
    Rng rng = Rng::seeded(3);
    for (int i = 0; i < 64; ++i) {
        const double t = rng.uniform();
        Tensor x0 = Tensor::randn(4, 1, rng);
        Tensor eps = Tensor::randn(4, 1, rng);
        NoisySample ns = forward_noise(x0, t, eps, s);
        CHECK(max_abs_diff(ns.x_t, x0 * s.alpha(t) + eps * s.sigma(t)) == 0.0);
        CHECK(max_abs_diff(ns.v, x0 * s.alpha_dot(t) + eps * s.sigma_dot(t)) == 0.0);
        // rectified flow: v = eps - x0 for all t
        CHECK(max_abs_diff(ns.v, eps - x0) < 1e-15);
    }
}

TEST_CASE("forward_noise is linear in x0 for shared (t, eps)") {
    const Schedule s = Schedule::rectified_flow();
    Rng rng = Rng::seeded(4);
    Tensor u = Tensor::randn(3, 1, rng);
    Tensor w = Tensor::randn(3, 1, rng);
    Tensor eps = Tensor::randn(3, 1, rng);
    const double t = 0.37;
    const double a = 0.6;
    const double b = -1.3;

    NoisySample mixed = forward_noise(u * a + w * b, t, eps, s);
    NoisySample nu = forward_noise(u, t, eps, s);
    NoisySample nw = forward_noise(w, t, eps, s);
    // x_t(a u + b w) = a x_t(u) + b x_t(w) + (1 - a - b) sigma(t) eps
    Tensor expected = nu.x_t * a + nw.x_t * b + eps * ((1.0 - a - b) * s.sigma(t));
    CHECK(max_abs_diff(mixed.x_t, expected) < 1e-12);
}

TEST_CASE("euler integration of the exact point-mass field is exact in one step") {
    Rng rng = Rng::seeded(5);
    Tensor x0_fixed = Tensor::randn(2, 1, rng);
    Tensor eps_fixed = Tensor::randn(2, 1, rng);
    // rectified-flow field of a point mass: v(x, t) = eps - x0 (constant)
    VelocityFn field = [&](const Tensor&, double) { return eps_fixed - x0_fixed; };
    Tensor out = integrate_euler(field, eps_fixed, 1);
    CHECK(max_abs_diff(out, x0_fixed) < 1e-15);

    // more steps on a constant field is still exact
    Tensor out4 = integrate_euler(field, eps_fixed, 4);
    CHECK(max_abs_diff(out4, x0_fixed) < 1e-12);
}

TEST_CASE("zero field returns the initial noise unchanged") {
    Rng rng = Rng::seeded(6);
    Tensor noise = Tensor::randn(3, 1, rng);
    VelocityFn field = [](const Tensor& x, double) { return Tensor::zeros(x.rows, 1); };
    Tensor out = integrate_euler(field, noise, 7);
    CHECK(max_abs_diff(out, noise) == 0.0);
}

TEST_CASE("non-finite state during integration names the step") {
    VelocityFn field = [](const Tensor& x, double) { return x * -1e10; };
    Tensor noise = Tensor::column({1e300});
    try {
        integrate_euler(field, noise, 3);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
    CHECK_THROWS_AS(integrate_euler(field, noise, 0), InputError);
}
