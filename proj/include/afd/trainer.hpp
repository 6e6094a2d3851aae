#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "afd/baselines.hpp"
#include "afd/discriminator.hpp"
#include "afd/objective.hpp"
#include "afd/teacher.hpp"

namespace afd {

enum class Arm { base, sft, gan, dmd_scaffold, afd };

std::string arm_name(Arm arm);
Arm arm_from_name(const std::string& name);

enum class RolloutPolicy { live, ema };

struct TeacherSpec {
    std::string kind = "physics";  // physics | mixture | hidden_flow | styled_physics

    // physics family
    double omega_lo = 0.7;
    double omega_hi = 1.15;
    double decay = 0.96;
    double init_radius = 1.4;
    double init_sd = 0.3;
    double obs_sd = 0.05;

    // style transform (styled_physics)
    double style_scale = 0.8;
    double style_rot = 0.5;
    double style_offset = 0.6;
    double style_extra_sd = 0.05;

    // mixture family
    double mixture_sd = 0.5;
    double mixture_sep = 1.2;

    // hidden flow family
    std::string hidden_checkpoint;  // pretrained in-process when empty
    uint64_t hidden_seed = 1234;
};

std::shared_ptr<const Teacher> make_teacher(const TeacherSpec& spec, int K, int d, int n_prompts);

struct RunConfig {
    int schema_version = 1;
    Arm arm = Arm::afd;
    uint64_t seed = 0;
    int steps = 2000;
    int batch = 16;
    double lr_student = 1e-5;
    double lr_disc = 1e-5;
    DiscLoss disc_loss = DiscLoss::bt;
    AFDConfig afd;
    StudentGeometry geom;
    int sample_steps = 4;  // few-step rollout budget M_S
    RolloutPolicy rollout_policy = RolloutPolicy::live;
    std::string schedule = "rectified_flow";
    TeacherSpec teacher;
    std::string base_checkpoint;  // pretrained student; required for every arm
    int teacher_pool = 64;
    int checkpoint_every = 500;
    std::optional<bool> on_policy;  // must agree with the arm when present

    void validate() const;
};

// One CSV row per step; discriminator quantities are logged before student
// quantities by column order.
struct StepMetrics {
    long long step = 0;
    Arm arm = Arm::afd;
    double disc_loss = 0.0;
    double student_loss = 0.0;
    double nft_loss = 0.0;
    double prior_loss = 0.0;
    double mean_reward = 0.0;  // mean sigma(D(rollout)): the tracked reward curve
    double mean_w = 0.0;       // mean training weight w_i
    double grad_norm_student = 0.0;
    double grad_norm_disc = 0.0;

    static std::string csv_header();
    std::string csv_row() const;
};

struct TrainState {
    VelocityField field;       // theta
    ParamStore ema;            // theta_bar, initialized to theta
    VelocityField ref_field;   // frozen reference for the prior term
    Discriminator disc;        // phi
    AdamW opt_student;
    AdamW opt_disc;
    long long step = 0;
    Rng rng;
    AdvantageTracker tracker;
    std::vector<long long> teacher_counters;
};

// Structural telemetry for invariant tests.
struct PhaseFlags {
    long long teacher_queries = 0;
    long long rollouts = 0;
    bool generator_grad_through_rollout = false;
    bool forward_noised_rollouts = false;
};

class Trainer {
public:
    explicit Trainer(RunConfig cfg);

    StepMetrics step();

    const RunConfig& config() const { return cfg_; }
    TrainState& state() { return state_; }
    const TrainState& state() const { return state_; }
    const Teacher& teacher() const { return pool_->teacher(); }
    const PhaseFlags& last_flags() const { return flags_; }

    VelocityField ema_field() const;
    VelocityField rollout_field() const;

    void save_state(const std::string& path) const;
    void load_state(const std::string& path);

private:
    RunConfig cfg_;
    Schedule sched_;
    std::shared_ptr<const Teacher> teacher_;
    std::unique_ptr<TeacherPool> pool_;
    TrainState state_;
    PhaseFlags flags_;
};

// ----------------------------- pretraining -----------------------------

struct PretrainConfig {
    StudentGeometry geom;
    TeacherSpec teacher;  // the (possibly mismatched) source distribution
    int steps = 3000;
    int batch = 32;
    double lr = 1e-3;
    uint64_t seed = 1;
    std::string schedule = "rectified_flow";
};

VelocityField pretrain_student(const PretrainConfig& cfg);

void save_field_checkpoint(const VelocityField& field, const std::string& path);
VelocityField load_field_checkpoint(const std::string& path);

}  // namespace afd
