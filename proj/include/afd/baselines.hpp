#pragma once

#include <functional>
#include <vector>

#include "afd/discriminator.hpp"
#include "afd/student.hpp"

namespace afd {

enum class BaselineKind { base, sft, gan, dmd_scaffold };

// Supervised fine-tuning on teacher videos: flow-matching regression with
// histories taken from teacher prefixes (off-policy conditioning).
StepResult sft_step(VelocityField& field, AdamW& opt, const std::vector<Video>& teacher_videos,
                    const Schedule& sched, Rng& rng);

// Scores a generated video (blocks still on the tape) for the GAN arm.
using VideoScorer = std::function<Value(Tape&, const std::vector<Value>& blocks, int prompt_id)>;

// Video-level adversarial generator step: ascends the scorer through the
// full differentiable Euler rollout, including history conditioning. Per-item
// RNG streams are derived from `rollout_rng` one draw per item.
StepResult gan_step(VelocityField& field, AdamW& opt, const VideoScorer& scorer, const std::vector<int>& prompts,
                    int K, int sample_steps, Rng& rollout_rng);

StepResult gan_step(VelocityField& field, AdamW& opt, const Discriminator& disc, const std::vector<int>& prompts,
                    int K, int sample_steps, Rng& rollout_rng);

// Score-free DMD scaffold: advantage-weighted positive-only flow matching on
// the student's own noised rollout states (no v+/v- pair, no negative term).
StepResult dmd_scaffold_step(VelocityField& field, AdamW& opt, const std::vector<ConditionedState>& states,
                             const std::vector<double>& weights);

// The weighted positive-only regression the scaffold optimizes.
Value weighted_fm_loss(Tape& tape, const VelocityField& field, const FieldBinding& fb,
                       const std::vector<ConditionedState>& states, const std::vector<double>& weights);

}  // namespace afd
