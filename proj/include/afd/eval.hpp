#pragma once

#include <string>
#include <vector>

#include "afd/discriminator.hpp"
#include "afd/flowpath.hpp"
#include "afd/rng.hpp"
#include "afd/student.hpp"
#include "afd/teacher.hpp"

namespace afd {

// ----------------------------- metrics -----------------------------

// Exact 1-D Wasserstein-1 between empirical distributions (any sizes).
double wasserstein1_1d(std::vector<double> a, std::vector<double> b);

// Mean over random unit projections of the 1-D W1 between projections.
double sliced_wasserstein(const std::vector<Tensor>& a, const std::vector<Tensor>& b, int n_projections, Rng& rng);

// Mean squared violation of the oscillator recurrence, per step and coord.
double physics_residual(const Video& video, const OscillatorParams& dynamics);

// ----------------------------- verification -----------------------------

struct VerifyTolerances {
    double ratio_max_err = 0.1;
    double ratio_zero_err = 0.05;
    double tilt_exact_err = 1e-12;
    double tilt_trained_tv = 0.05;
    double cond_velocity_err = 0.05;
    double reverse_kl_tv = 1e-3;

    void validate() const;
};

// Finite discrete instance with explicit teacher/student tables; outcomes are
// embedded as one-block videos.
struct DiscreteToy {
    int d = 2;
    std::vector<Tensor> outcomes;   // each (d, 1)
    std::vector<double> pi_theta;
    std::vector<double> pi_T;

    int size() const { return static_cast<int>(outcomes.size()); }
    void validate() const;
    static DiscreteToy load(const std::string& path);
    void save(const std::string& path) const;
};

// Finite x0 support with base sampling probabilities and per-outcome NFT
// training weights; the induced tilt is p_j ∝ base_j * (2 w_j - 1).
struct SupportToy {
    std::vector<double> x0;       // d = 1 support points
    std::vector<double> base_prob;
    std::vector<double> weight;   // in (0.5, 1]

    int size() const { return static_cast<int>(x0.size()); }
    std::vector<double> tilt() const;
    void validate() const;
    static SupportToy load(const std::string& path);
    void save(const std::string& path) const;
};

struct RatioRecoveryReport {
    double max_abs_err = 0.0;     // teacher N(1,1) vs student N(0,1)
    double max_abs_zero = 0.0;    // identical distributions
    double mixture_max_err = 0.0; // mixture vs Gaussian pair, tolerance 0.15
    bool pass = false;
};

// Trains a BT discriminator on two analytic 1-D samplers and compares its
// logit with the closed-form log-density ratio on a grid.
RatioRecoveryReport verify_ratio_recovery(const VerifyTolerances& tol, uint64_t seed);

struct TiltedLawReport {
    double exact_max_err = 0.0;  // exact-ratio tilt vs pi_T
    double trained_tv = 0.0;     // trained-logit tilt vs pi_T
    bool pass = false;
};

TiltedLawReport verify_tilted_law(const DiscreteToy& toy, const VerifyTolerances& tol, uint64_t seed);

// Brute-force conditional forward velocity under the tilted law, by support
// enumeration and Bayes with the Gaussian forward kernel.
double tilted_conditional_velocity(const SupportToy& toy, const Schedule& sched, double x_t, double t);

struct CondVelocityReport {
    double max_abs_err = 0.0;
    int grid_points = 0;
    bool pass = false;
};

CondVelocityReport verify_conditional_velocity(const SupportToy& toy, const VerifyTolerances& tol, uint64_t seed);

struct ReverseKlReport {
    double argmax_tv = 0.0;       // closed-form maximizer vs pi_T
    double grid_gap = 0.0;        // best candidate objective minus optimum (<= 0)
    double identity_spread = 0.0; // |J(pi) + KL(pi || pi_T)| over random pi
    bool pass = false;
};

ReverseKlReport verify_reverse_kl(const DiscreteToy& toy, const VerifyTolerances& tol, uint64_t seed);

// ----------------------------- algebra / gradient checks -----------------------------

struct AlgebraReport {
    double value_err = 0.0;         // |v+/- value - v| (bitwise zero expected)
    double plus_ratio_err = 0.0;    // grad(|v+ - v|^2) vs beta * grad(|v - v|^2)
    double minus_ratio_err = 0.0;
    double neutral_grad_norm = 0.0; // NFT gradient norm at w = 0.5
    double sg_composite_err = 0.0;  // grad_scale vs literal (1-b) sg(x) + b x
    bool pass = false;
};

AlgebraReport verify_vpm_algebra(uint64_t seed);

struct GradCheckSuiteReport {
    std::vector<std::pair<std::string, double>> per_loss;  // name -> max rel err
    double worst = 0.0;
    std::string worst_loss;
    bool pass = false;
};

// Finite-difference checks for every trainable loss on seeded small batches.
GradCheckSuiteReport verify_grad_checks(uint64_t seed, double tol = 1e-4);

// ----------------------------- run evaluation -----------------------------

struct PolicyEval {
    double sliced_w = 0.0;       // mean over prompts, student rollouts vs teacher
    double residual = -1.0;      // physics teachers only, -1 otherwise
    double teacher_residual = -1.0;
};

PolicyEval evaluate_policy(const VelocityField& field, const Teacher& teacher, int sample_steps, int n_rollouts,
                           int n_projections, Rng& rng);

}  // namespace afd
