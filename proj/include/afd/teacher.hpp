#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "afd/rng.hpp"
#include "afd/student.hpp"

namespace afd {

// Black-box teacher: the only channel is prompt -> complete clean video.
// No scores, latents, trajectories, or parameters are reachable from here.
class Teacher {
public:
    virtual ~Teacher() = default;
    virtual Video sample(Prompt prompt, Rng& rng) const = 0;
    virtual std::string name() const = 0;
    virtual int n_prompts() const = 0;
    virtual int K() const = 0;
    virtual int d() const = 0;

protected:
    void check_prompt(int prompt_id) const;
};

// Exact log-density access for oracle teachers only. Kept on a separate
// interface so that training code, which holds a Teacher&, cannot reach it.
class OracleDensity {
public:
    virtual ~OracleDensity() = default;
    virtual double log_density(const Video& video, int prompt_id) const = 0;
};

// Throws CapabilityError when the teacher carries no analytic density.
double oracle_log_density(const Teacher& teacher, const Video& video);

// ---------------------------------------------------------------------------
// Damped oscillator: x_{k+1} = decay * R(omega) x_k + obs_sd * eps,
// x_1 ~ N(init_mean, init_sd^2 I). d = 2.
// ---------------------------------------------------------------------------
struct OscillatorParams {
    double omega = 0.9;
    double decay = 0.96;
    Tensor init_mean;  // (2,1)
    double init_sd = 0.3;
    double obs_sd = 0.05;

    Tensor transition() const;  // decay * rotation(omega)
};

struct PhysicsTeacherConfig {
    int K = 8;
    std::vector<OscillatorParams> per_prompt;

    // Per-prompt frequencies spread over [omega_lo, omega_hi], initial means
    // spaced on a circle of the given radius.
    static PhysicsTeacherConfig make(int K, int n_prompts, double omega_lo, double omega_hi, double decay,
                                     double init_radius, double init_sd, double obs_sd);
};

class PhysicsTeacher : public Teacher, public OracleDensity {
public:
    explicit PhysicsTeacher(PhysicsTeacherConfig cfg, std::string name = "physics");

    Video sample(Prompt prompt, Rng& rng) const override;
    std::string name() const override { return name_; }
    int n_prompts() const override { return static_cast<int>(cfg_.per_prompt.size()); }
    int K() const override { return cfg_.K; }
    int d() const override { return 2; }
    double log_density(const Video& video, int prompt_id) const override;

    const OscillatorParams& dynamics(int prompt_id) const;

private:
    PhysicsTeacherConfig cfg_;
    std::string name_;
};

// ---------------------------------------------------------------------------
// Per-prompt two-component isotropic Gaussian mixture over flattened videos.
// ---------------------------------------------------------------------------
struct MixtureComponent {
    double weight = 0.5;
    Tensor mean;  // (K*d, 1)
    double sd = 1.0;
};

struct MixturePrompt {
    std::vector<MixtureComponent> components;
};

class MixtureTeacher : public Teacher, public OracleDensity {
public:
    MixtureTeacher(int K, int d, std::vector<MixturePrompt> prompts, std::string name = "mixture");

    Video sample(Prompt prompt, Rng& rng) const override;
    std::string name() const override { return name_; }
    int n_prompts() const override { return static_cast<int>(prompts_.size()); }
    int K() const override { return K_; }
    int d() const override { return d_; }
    double log_density(const Video& video, int prompt_id) const override;

    const MixturePrompt& mixture(int prompt_id) const;

private:
    int K_;
    int d_;
    std::vector<MixturePrompt> prompts_;
    std::string name_;
};

// ---------------------------------------------------------------------------
// Hidden flow teacher: a pretrained non-causal flow over whole flattened
// videos, sampled with many Euler steps. Architecturally unrelated to the
// causal student; exposes no density.
// ---------------------------------------------------------------------------
struct HiddenFlowConfig {
    int K = 8;
    int d = 2;
    int n_prompts = 8;
    std::vector<int> hidden = {64, 64};
    int sample_steps = 64;
    int pretrain_steps = 3000;
    int pretrain_batch = 64;
    double pretrain_lr = 1e-3;
    double target_mean_scale = 0.8;
    double target_sd = 0.7;
};

class HiddenFlowTeacher : public Teacher {
public:
    // Trains the internal field on per-prompt Gaussian targets.
    static HiddenFlowTeacher pretrain(const HiddenFlowConfig& cfg, uint64_t seed);

    Video sample(Prompt prompt, Rng& rng) const override;
    std::string name() const override { return "hidden_flow"; }
    int n_prompts() const override { return cfg_.n_prompts; }
    int K() const override { return cfg_.K; }
    int d() const override { return cfg_.d; }

    // Training-target moments, for test comparison only.
    Tensor target_mean(int prompt_id) const;  // (K*d, 1)
    double target_sd() const { return cfg_.target_sd; }

    void save(const std::string& path) const;
    static HiddenFlowTeacher load(const std::string& path);

private:
    HiddenFlowTeacher() = default;
    HiddenFlowConfig cfg_;
    VelocityField field_;  // geometry: one block of dimension K*d
};

// ---------------------------------------------------------------------------
// Style-shifted physics teacher: same dynamics pushed through a fixed affine
// warp per block, with extra observation noise. Stands in for a shifted
// visual domain.
// ---------------------------------------------------------------------------
class StyledPhysicsTeacher : public Teacher {
public:
    StyledPhysicsTeacher(std::shared_ptr<const PhysicsTeacher> base, Tensor warp, Tensor offset, double extra_sd);

    Video sample(Prompt prompt, Rng& rng) const override;
    std::string name() const override { return "styled_physics"; }
    int n_prompts() const override { return base_->n_prompts(); }
    int K() const override { return base_->K(); }
    int d() const override { return base_->d(); }

private:
    std::shared_ptr<const PhysicsTeacher> base_;
    Tensor warp_;
    Tensor offset_;
    double extra_sd_;
};

// ---------------------------------------------------------------------------
// Query cache: draws are keyed by (prompt, draw index mod pool), generated
// from order-independent streams. A finite pool mimics a bounded API budget
// and keeps runs deterministic under resume.
// ---------------------------------------------------------------------------
class TeacherPool {
public:
    TeacherPool(std::shared_ptr<const Teacher> inner, int pool_size, uint64_t seed);

    const Video& draw(int prompt_id, long long counter) const;
    const Teacher& teacher() const { return *inner_; }
    int pool_size() const { return pool_size_; }

private:
    std::shared_ptr<const Teacher> inner_;
    int pool_size_;
    uint64_t seed_;
    mutable std::map<std::pair<int, int>, Video> cache_;
};

}  // namespace afd
