#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "afd/autodiff.hpp"
#include "afd/errors.hpp"

using namespace afd;

TEST_CASE("elementary forward values") {
    Tape tape;
    CHECK(tape.value(tape.sigmoid(tape.leaf(0.0))).data[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(tape.value(tape.squared_norm(tape.leaf(Tensor::zeros(4, 1)))).data[0] == 0.0);

    Rng rng = Rng::seeded(3);
    Tensor v = Tensor::randn(5, 1, rng);
    Value mv = tape.matmul(tape.leaf(Tensor::identity(5)), tape.leaf(v));
    CHECK(max_abs_diff(tape.value(mv), v) == 0.0);

    CHECK(tape.value(tape.log_sigmoid(tape.leaf(2.0))).data[0] ==
          doctest::Approx(std::log(1.0 / (1.0 + std::exp(-2.0)))).epsilon(1e-14));
}

TEST_CASE("shape mismatch is a configuration error") {
    Tape tape;
    Value a = tape.leaf(Tensor::zeros(2, 3));
    Value b = tape.leaf(Tensor::zeros(2, 2));
    CHECK_THROWS_AS(tape.matmul(a, b), ConfigError);
    CHECK_THROWS_AS(tape.add(a, b), ConfigError);
}

TEST_CASE("non-finite intermediate raises a numerical error naming the op") {
    Tape tape;
    Value x = tape.leaf(-1.0);
    try {
        tape.log(x);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("log") != std::string::npos);
    }
}

TEST_CASE("stop_gradient value identity and zero gradient") {
    Rng rng = Rng::seeded(11);
    ParamStore store;
    store.create("x", Tensor::randn(6, 1, rng));

    Tape tape;
    Value x = tape.param(store, "x");
    Value sg = tape.stop_gradient(x);
    CHECK(max_abs_diff(tape.value(sg), store.get("x")) == 0.0);

    Value loss = tape.squared_norm(sg);
    tape.backward(loss);
    CHECK(squared_norm(tape.grad(x)) == 0.0);
}

TEST_CASE("stop_gradient idempotence") {
    Rng rng = Rng::seeded(12);
    ParamStore store;
    store.create("x", Tensor::randn(4, 1, rng));

    auto run = [&](bool twice) {
        Tape tape;
        Value x = tape.param(store, "x");
        Value sg = twice ? tape.stop_gradient(tape.stop_gradient(x)) : tape.stop_gradient(x);
        Value mixed = tape.add(tape.scale(sg, 0.7), tape.scale(x, 0.3));
        Value loss = tape.squared_norm(mixed);
        tape.backward(loss);
        return std::make_pair(tape.value(loss).data[0], tape.grad(x));
    };
    auto [l1, g1] = run(false);
    auto [l2, g2] = run(true);
    CHECK(l1 == l2);
    CHECK(max_abs_diff(g1, g2) == 0.0);
}

// d/dtheta [(1-b) sg(f) + b f] = b df/dtheta, checked against central
// finite differences at b = 0.1
TEST_CASE("sg interpolation derivative scales by beta") {
    const double beta = 0.1;
    Rng rng = Rng::seeded(21);
    ParamStore store;
    store.create("theta", Tensor::randn(5, 1, rng));

    Tape tape;
    Value theta = tape.param(store, "theta");
    Value f = tape.squared_norm(tape.tanh(theta));
    Value mixed = tape.add(tape.scale(tape.stop_gradient(f), 1.0 - beta), tape.scale(f, beta));
    tape.backward(mixed);
    Tensor analytic = tape.grad(theta);

    const double h = 1e-5;
    for (int i = 0; i < 5; ++i) {
        auto eval_f = [&](double x) {
            Tensor t = store.get("theta");
            t.data[i] = x;
            double s = 0.0;
            for (double u : t.data) s += std::tanh(u) * std::tanh(u);
            return s;
        };
        const double x0 = store.get("theta").data[i];
        const double numeric = beta * (eval_f(x0 + h) - eval_f(x0 - h)) / (2.0 * h);
        CHECK(analytic.data[i] == doctest::Approx(numeric).epsilon(1e-4));
    }
}

TEST_CASE("grad_check: quadratic loss") {
    Rng rng = Rng::seeded(31);
    ParamStore store;
    store.create("theta", Tensor::randn(8, 1, rng));
    GradCheckReport r = grad_check(
        [](Tape& tape, const ParamStore& p) { return tape.squared_norm(tape.param(p, "theta")); }, store, 1e-5,
        1e-6);
    CHECK(r.max_rel_err < 1e-6);
}

TEST_CASE("grad_check: two-layer tanh regression") {
    Rng rng = Rng::seeded(32);
    ParamStore store;
    store.create("W1", Tensor::randn(6, 3, rng, 0.5));
    store.create("b1", Tensor::randn(6, 1, rng, 0.1));
    store.create("W2", Tensor::randn(2, 6, rng, 0.5));
    store.create("b2", Tensor::randn(2, 1, rng, 0.1));
    Rng data_rng = Rng::seeded(132);
    Tensor x = Tensor::randn(3, 1, data_rng);
    Tensor y = Tensor::randn(2, 1, data_rng);

    GradCheckReport r = grad_check(
        [&](Tape& tape, const ParamStore& p) {
            Value h = tape.tanh(tape.add(tape.matmul(tape.param(p, "W1"), tape.leaf(x)), tape.param(p, "b1")));
            Value out = tape.add(tape.matmul(tape.param(p, "W2"), h), tape.param(p, "b2"));
            return tape.squared_norm(tape.sub(out, tape.leaf(y)));
        },
        store, 1e-5, 1e-4);
    CHECK(r.max_rel_err < 1e-4);
}

// With a stop-gradient inside the loss, finite differences of the full
// expression disagree with backward; the sg-aware form is the oracle.
TEST_CASE("grad_check: stop_gradient needs the sg-aware oracle") {
    Rng rng = Rng::seeded(33);
    ParamStore store;
    store.create("theta", Tensor::randn(4, 1, rng));
    const double beta = 0.1;

    GradCheckReport full = grad_check(
        [&](Tape& tape, const ParamStore& p) {
            Value f = tape.squared_norm(tape.param(p, "theta"));
            return tape.add(tape.scale(tape.stop_gradient(f), 1.0 - beta), tape.scale(f, beta));
        },
        store, 1e-5, 1e-4);
    CHECK(full.max_rel_err > 0.1);

    const double frozen = squared_norm(store.get("theta"));
    GradCheckReport aware = grad_check(
        [&](Tape& tape, const ParamStore& p) {
            Value f = tape.squared_norm(tape.param(p, "theta"));
            return tape.add(tape.scale(tape.leaf(frozen), 1.0 - beta), tape.scale(f, beta));
        },
        store, 1e-5, 1e-4);
    CHECK(aware.max_rel_err < 1e-4);
}

TEST_CASE("backward linearity") {
    Rng rng = Rng::seeded(41);
    ParamStore store;
    store.create("theta", Tensor::randn(5, 1, rng));
    const double a = 1.7;
    const double b = -0.4;

    auto grad_of = [&](const std::function<Value(Tape&, Value)>& make) {
        Tape tape;
        Value theta = tape.param(store, "theta");
        tape.backward(make(tape, theta));
        return tape.grad(theta);
    };
    Tensor g1 = grad_of([&](Tape& t, Value x) { return t.squared_norm(x); });
    Tensor g2 = grad_of([&](Tape& t, Value x) { return t.sum(t.silu(x)); });
    Tensor gc = grad_of([&](Tape& t, Value x) {
        return t.add(t.scale(t.squared_norm(x), a), t.scale(t.sum(t.silu(x)), b));
    });
    for (int i = 0; i < 5; ++i) {
        CHECK(gc.data[i] == doctest::Approx(a * g1.data[i] + b * g2.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("determinism: identical seeds give bit-identical values and gradients") {
    auto run = [] {
        Rng rng = Rng::seeded(55);
        ParamStore store;
        store.create("W", Tensor::randn(7, 7, rng, 0.3));
        Tape tape;
        Value W = tape.param(store, "W");
        Value x = tape.leaf(Tensor::randn(7, 1, rng));
        Value loss = tape.squared_norm(tape.silu(tape.matmul(W, x)));
        tape.backward(loss);
        return std::make_pair(tape.value(loss).data[0], tape.grad(W));
    };
    auto [l1, g1] = run();
    auto [l2, g2] = run();
    CHECK(l1 == l2);
    CHECK(max_abs_diff(g1, g2) == 0.0);
}

TEST_CASE("gradient of unreachable nodes stays zero") {
    Rng rng = Rng::seeded(66);
    Tape tape;
    Value used = tape.leaf(Tensor::randn(3, 1, rng));
    Value unused = tape.leaf(Tensor::randn(3, 1, rng));
    Value loss = tape.squared_norm(used);
    tape.backward(loss);
    CHECK(squared_norm(tape.grad(unused)) == 0.0);
}

TEST_CASE("concat and mean backward") {
    Rng rng = Rng::seeded(77);
    ParamStore store;
    store.create("a", Tensor::randn(3, 1, rng));
    store.create("b", Tensor::randn(2, 1, rng));
    GradCheckReport r = grad_check(
        [](Tape& tape, const ParamStore& p) {
            Value cat = tape.concat_rows({tape.param(p, "a"), tape.param(p, "b")});
            return tape.mean(tape.mul(cat, cat));
        },
        store, 1e-5, 1e-4);
    CHECK(r.max_rel_err < 1e-4);
}
