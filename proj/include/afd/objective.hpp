#pragma once

#include <vector>

#include "afd/autodiff.hpp"
#include "afd/student.hpp"

namespace afd {

struct AFDConfig {
    double beta = 0.1;          // interpolation strength of v+/v-
    double lambda_prior = 1e-4;
    double clip_max = 5.0;
    double ema_decay = 0.99;

    void validate() const;
};

// Positive/negative policy operators. v+ = (1-beta) sg(v) + beta v and
// v- = (1+beta) sg(v) - beta v: forward value is exactly v, backward
// gradient is scaled by +beta / -beta. Implemented directly through a
// gradient-scaling edge so the value identity holds bitwise.
Value v_plus(Tape& tape, Value v_theta, double beta);
Value v_minus(Tape& tape, Value v_theta, double beta);

// Weighted negative-aware fine-tuning loss: mean over states of
// w |v+ - v|^2 + (1-w) |v- - v|^2. Weights are per state, in [0,1].
Value nft_loss(Tape& tape, const VelocityField& field, const FieldBinding& fb,
               const std::vector<ConditionedState>& states, const std::vector<double>& weights, double beta);

// Weighted pull toward the frozen reference field on the same states:
// mean over states of w |v_theta - v_ref|^2.
Value prior_loss(Tape& tape, const VelocityField& field, const FieldBinding& fb, const VelocityField& ref_field,
                 const FieldBinding& ref_fb, const std::vector<ConditionedState>& states,
                 const std::vector<double>& weights);

// nft_loss + lambda_prior * prior_loss.
Value afd_loss(Tape& tape, const VelocityField& field, const FieldBinding& fb, const VelocityField& ref_field,
               const FieldBinding& ref_fb, const std::vector<ConditionedState>& states,
               const std::vector<double>& weights, const AFDConfig& cfg);

struct AfdLossParts {
    double nft = 0.0;
    double prior = 0.0;
    double total = 0.0;
};

double afd_loss_value(const VelocityField& field, const VelocityField& ref_field,
                      const std::vector<ConditionedState>& states, const std::vector<double>& weights,
                      const AFDConfig& cfg);

}  // namespace afd
