#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "afd/errors.hpp"
#include "afd/eval.hpp"

using namespace afd;

TEST_CASE("1-d wasserstein basics") {
    CHECK(wasserstein1_1d({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
    CHECK(wasserstein1_1d({0.0}, {2.5}) == doctest::Approx(2.5).epsilon(1e-15));
    // unequal sizes via the quantile walk
    CHECK(wasserstein1_1d({0.0, 1.0}, {0.5}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(wasserstein1_1d({}, {1.0}), InputError);
}

TEST_CASE("sliced wasserstein: identity, symmetry, point-mass closed form") {
    Rng rng = Rng::seeded(1);
    std::vector<Tensor> a;
    for (int i = 0; i < 32; ++i) a.push_back(Tensor::randn(4, 1, rng));

    Rng r1 = Rng::seeded(2);
    CHECK(sliced_wasserstein(a, a, 16, r1) == 0.0);

    std::vector<Tensor> b;
    for (int i = 0; i < 24; ++i) b.push_back(Tensor::randn(4, 1, rng));
    Rng r2 = Rng::seeded(3);
    Rng r3 = Rng::seeded(3);
    CHECK(sliced_wasserstein(a, b, 32, r2) == sliced_wasserstein(b, a, 32, r3));

    // two point masses at distance delta in dimension d:
    // SW = delta * E|<u, e>| = delta * Gamma(d/2) / (sqrt(pi) Gamma((d+1)/2))
    const int d = 16;
    const double delta = 1.7;
    Tensor pa = Tensor::zeros(d, 1);
    Tensor pb = Tensor::zeros(d, 1);
    pb.data[3] = delta;
    Rng r4 = Rng::seeded(4);
    const double got = sliced_wasserstein({pa}, {pb}, 8192, r4);
    const double want = delta * std::exp(std::lgamma(d / 2.0) - std::lgamma((d + 1) / 2.0)) / std::sqrt(M_PI);
    CHECK(std::abs(got - want) / want < 0.02);

    std::vector<Tensor> wrong = {Tensor::zeros(3, 1)};
    Rng r5 = Rng::seeded(5);
    CHECK_THROWS_AS(sliced_wasserstein(a, wrong, 4, r5), InputError);
}

TEST_CASE("physics residual anchors") {
    OscillatorParams op;
    op.omega = 0.9;
    op.decay = 0.96;
    op.init_mean = Tensor::column({1.4, 0.0});
    op.init_sd = 0.3;
    op.obs_sd = 0.05;
    const Tensor A = op.transition();

    // exact noiseless trajectory: zero residual
    {
        Video v;
        v.prompt_id = 0;
        Tensor x = Tensor::column({1.0, 0.5});
        v.blocks.push_back(x);
        for (int k = 1; k < 6; ++k) {
            x = matmul(A, x);
            v.blocks.push_back(x);
        }
        CHECK(physics_residual(v, op) < 1e-28);
    }

    // teacher-like noise: residual near obs_sd^2 per coordinate
    {
        Rng rng = Rng::seeded(6);
        double total = 0.0;
        const int N = 1000;
        const int K = 8;
        for (int i = 0; i < N; ++i) {
            Video v;
            v.prompt_id = 0;
            Tensor x = op.init_mean + Tensor::randn(2, 1, rng, op.init_sd);
            v.blocks.push_back(x);
            for (int k = 1; k < K; ++k) {
                x = matmul(A, x) + Tensor::randn(2, 1, rng, op.obs_sd);
                v.blocks.push_back(x);
            }
            total += physics_residual(v, op);
        }
        const double mean = total / N;
        const double want = op.obs_sd * op.obs_sd;
        const double se = std::sqrt(2.0) * want / std::sqrt(static_cast<double>(N * (K - 1) * 2));
        CHECK(std::abs(mean - want) < 3.0 * se);
    }

    // constant video: closed form |(I - A) x|^2 / d per step
    {
        Tensor x = Tensor::column({0.8, -0.6});
        Video v;
        v.prompt_id = 0;
        for (int k = 0; k < 5; ++k) v.blocks.push_back(x);
        const Tensor r = x - matmul(A, x);
        CHECK(physics_residual(v, op) == doctest::Approx(squared_norm(r) / 2.0).epsilon(1e-12));
    }
}

TEST_CASE("toy instances load and validate") {
    DiscreteToy toy = DiscreteToy::load(std::string(AFDLAB_DATA_DIR) + "/toy8_a.json");
    CHECK(toy.size() == 8);
    CHECK(toy.d == 2);

    DiscreteToy bad = toy;
    bad.pi_T[0] += 0.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    SupportToy s2 = SupportToy::load(std::string(AFDLAB_DATA_DIR) + "/support2.json");
    CHECK(s2.size() == 2);
    auto tilt = s2.tilt();
    CHECK(tilt[0] == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(tilt[1] == doctest::Approx(0.1).epsilon(1e-12));

    SupportToy bad_s = s2;
    bad_s.weight[0] = 0.3;  // negative tilt is rejected
    CHECK_THROWS_AS(bad_s.validate(), ConfigError);
}

TEST_CASE("brute-force tilted conditional velocity: closed-form cases") {
    const Schedule sched = Schedule::rectified_flow();

    // single-point support: exact affine formula (eps fully determined)
    {
        SupportToy toy;
        toy.x0 = {0.7};
        toy.base_prob = {1.0};
        toy.weight = {0.9};
        for (double t : {0.2, 0.5, 0.8}) {
            for (double x : {-0.5, 0.3, 1.2}) {
                const double a = sched.alpha(t);
                const double s = sched.sigma(t);
                const double eps = (x - a * toy.x0[0]) / s;
                const double want = sched.alpha_dot(t) * toy.x0[0] + sched.sigma_dot(t) * eps;
                CHECK(tilted_conditional_velocity(toy, sched, x, t) == doctest::Approx(want).epsilon(1e-12));
            }
        }
    }

    // symmetric two-point support, equal tilt, x_t at the midpoint: zero
    {
        SupportToy toy;
        toy.x0 = {-0.9, 0.9};
        toy.base_prob = {0.5, 0.5};
        toy.weight = {0.8, 0.8};
        for (double t : {0.3, 0.5, 0.7}) {
            CHECK(std::abs(tilted_conditional_velocity(toy, sched, 0.0, t)) < 1e-12);
        }
    }

    // two-point support with tilt (0.9, 0.1): direct Bayes arithmetic
    {
        SupportToy toy;
        toy.x0 = {-1.0, 1.0};
        toy.base_prob = {0.5, 0.5};
        toy.weight = {0.95, 0.55};
        const double t = 0.5;
        const double x = 0.2;
        const double a = sched.alpha(t);
        const double s = sched.sigma(t);
        auto normal = [&](double u, double m) {
            return std::exp(-0.5 * (u - m) * (u - m) / (s * s)) / (s * std::sqrt(2.0 * M_PI));
        };
        const double w0 = 0.9 * normal(x, a * -1.0);
        const double w1 = 0.1 * normal(x, a * 1.0);
        auto vel = [&](double x0) { return -x0 + (x - a * x0) / s; };
        const double want = (w0 * vel(-1.0) + w1 * vel(1.0)) / (w0 + w1);
        CHECK(tilted_conditional_velocity(toy, sched, x, t) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("reverse-kl proposition on the shipped toys") {
    VerifyTolerances tol;
    for (const char* name : {"toy8_a", "toy8_b"}) {
        DiscreteToy toy = DiscreteToy::load(std::string(AFDLAB_DATA_DIR) + "/" + name + ".json");
        ReverseKlReport r = verify_reverse_kl(toy, tol, 11);
        CHECK(r.pass);
        CHECK(r.argmax_tv < 1e-12);
        CHECK(r.grid_gap <= 1e-12);
        CHECK(r.identity_spread < 1e-12);
    }

    // shifting rho by a constant leaves the maximizer unchanged
    DiscreteToy toy = DiscreteToy::load(std::string(AFDLAB_DATA_DIR) + "/toy8_a.json");
    std::vector<double> argmax_base(toy.size());
    std::vector<double> argmax_shift(toy.size());
    double za = 0.0;
    double zs = 0.0;
    for (int j = 0; j < toy.size(); ++j) {
        const double rho = std::log(toy.pi_T[j] / toy.pi_theta[j]);
        argmax_base[j] = toy.pi_theta[j] * std::exp(rho);
        argmax_shift[j] = toy.pi_theta[j] * std::exp(rho + 2.5);
        za += argmax_base[j];
        zs += argmax_shift[j];
    }
    for (int j = 0; j < toy.size(); ++j) {
        CHECK(argmax_base[j] / za == doctest::Approx(argmax_shift[j] / zs).epsilon(1e-12));
    }
}

TEST_CASE("v+/v- algebra report passes") {
    AlgebraReport r = verify_vpm_algebra(2024);
    CHECK(r.pass);
    CHECK(r.value_err == 0.0);
    CHECK(r.neutral_grad_norm < 1e-12);
}

TEST_CASE("finite-difference suite covers every trainable loss") {
    GradCheckSuiteReport r = verify_grad_checks(2024);
    CHECK(r.per_loss.size() == 9);
    for (const auto& [name, err] : r.per_loss) {
        INFO(name);
        CHECK(err < 1e-4);
    }
    CHECK(r.pass);
}

TEST_CASE("tolerance validation rejects non-positive entries") {
    VerifyTolerances tol;
    tol.ratio_max_err = -0.1;
    CHECK_THROWS_AS(tol.validate(), ConfigError);
}
