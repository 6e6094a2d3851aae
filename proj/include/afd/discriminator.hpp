#pragma once

#include <string>
#include <vector>

#include "afd/autodiff.hpp"
#include "afd/student.hpp"

namespace afd {

using ModelBinding = FieldBinding;

struct DiscGeometry {
    int K = 8;
    int d = 2;
    int n_prompts = 8;
    int enc_dim = 16;
    int prompt_dim = 8;
    std::vector<int> hidden = {128, 128};

    int input_dim() const { return K * enc_dim + prompt_dim; }
    bool operator==(const DiscGeometry&) const = default;

    static DiscGeometry for_student(const StudentGeometry& g);
};

// Prompt-conditioned video scorer D(x_0, y) -> scalar logit. Per-block
// encoder matches the student's encoder architecture, never its parameters.
class Discriminator {
public:
    Discriminator() = default;
    Discriminator(DiscGeometry geom, Rng& rng);

    const DiscGeometry& geometry() const { return geom_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    ModelBinding bind(Tape& tape) const;
    Value score(const ModelBinding& mb, const std::vector<Value>& blocks, int prompt_id) const;
    Value score(const ModelBinding& mb, const Video& video) const;
    double score(const Video& video) const;

private:
    DiscGeometry geom_;
    ParamStore params_;
};

struct VideoPair {
    Video teacher;
    Video student;
};

// Bradley-Terry pairwise loss: mean of -log sigma(D(teacher) - D(student))
// over prompt-matched pairs.
Value bt_loss(Tape& tape, const Discriminator& disc, const ModelBinding& mb, const std::vector<VideoPair>& pairs);
double bt_loss_value(const Discriminator& disc, const std::vector<VideoPair>& pairs);

// GAN-style binary cross entropy, teacher = 1, student = 0 (ablation arm).
Value gan_loss(Tape& tape, const Discriminator& disc, const ModelBinding& mb, const std::vector<Video>& batch);
double gan_loss_value(const Discriminator& disc, const std::vector<Video>& batch);

// Raw logit; log(pi_T / pi_theta) at the BT optimum.
double log_ratio(const Discriminator& disc, const Video& video, int prompt_id);

// One scored rollout: raw score, baseline, clipped normalized advantage and
// the [0,1] training weight. Plain doubles: no gradient reaches the student.
struct Advantage {
    double score = 0.0;
    double baseline = 0.0;
    double clipped = 0.0;
    double weight = 0.5;
};

// Running advantage scale: per-prompt EMA of squared advantages with a
// global fallback until a prompt has enough observations.
class AdvantageTracker {
public:
    AdvantageTracker() = default;
    AdvantageTracker(int n_prompts, double decay = 0.99, long long min_obs = 10);

    double std_for(int prompt_id) const;
    void observe(int prompt_id, double raw_advantage);

    std::string serialize() const;
    static AdvantageTracker deserialize(const std::string& text);

private:
    struct Entry {
        long long count = 0;
        double ema_sq = 0.0;
    };
    double std_of(const Entry& e) const;

    std::vector<Entry> per_prompt_;
    Entry global_;
    double decay_ = 0.99;
    long long min_obs_ = 10;
};

// Scores an on-policy student batch, subtracts the per-prompt baseline
// (whole-batch mean when a prompt appears once), normalizes by the running
// std, clips, and maps through the logistic into [0,1].
std::vector<Advantage> advantage(const Discriminator& disc, const std::vector<Video>& student_batch,
                                 AdvantageTracker& tracker, double clip_max);

enum class DiscLoss { bt, gan };

// One optimizer step on the selected discriminator loss; returns its value.
double disc_step(Discriminator& disc, AdamW& opt, const std::vector<VideoPair>& pairs, DiscLoss kind);

}  // namespace afd
