#include "afd/objective.hpp"

#include "afd/errors.hpp"

namespace afd {

void AFDConfig::validate() const {
    if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must be in (0, 1]");
    if (lambda_prior < 0.0) throw ConfigError("lambda_prior must be >= 0");
    if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw ConfigError("ema_decay must be in [0, 1)");
    if (clip_max <= 0.0) throw ConfigError("clip_max must be > 0");
}

Value v_plus(Tape& tape, Value v_theta, double beta) {
    if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("v_plus: beta must be in (0, 1]");
    return tape.grad_scale(v_theta, beta);
}

Value v_minus(Tape& tape, Value v_theta, double beta) {
    if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("v_minus: beta must be in (0, 1]");
    return tape.grad_scale(v_theta, -beta);
}

namespace {

void check_weights(const std::vector<ConditionedState>& states, const std::vector<double>& weights) {
    if (states.empty()) throw InputError("loss over empty state list");
    if (states.size() != weights.size()) throw InputError("one weight per state required");
    for (double w : weights) {
        if (!(w >= 0.0 && w <= 1.0)) throw InputError("weight outside [0,1]");
    }
}

}  // namespace

Value nft_loss(Tape& tape, const VelocityField& field, const FieldBinding& fb,
               const std::vector<ConditionedState>& states, const std::vector<double>& weights, double beta) {
    check_weights(states, weights);
    std::vector<Value> terms;
    terms.reserve(states.size());
    for (size_t i = 0; i < states.size(); ++i) {
        const ConditionedState& cs = states[i];
        Value h = field.history_summary(fb, cs.history);
        Value v = field.eval(fb, tape.leaf(cs.sample.x_t), cs.sample.t, h, cs.prompt_id);
        Value target = tape.leaf(cs.sample.v);
        Value pos = tape.squared_norm(tape.sub(v_plus(tape, v, beta), target));
        Value neg = tape.squared_norm(tape.sub(v_minus(tape, v, beta), target));
        terms.push_back(tape.add(tape.scale(pos, weights[i]), tape.scale(neg, 1.0 - weights[i])));
    }
    return tape.mean(tape.concat_rows(terms));
}

Value prior_loss(Tape& tape, const VelocityField& field, const FieldBinding& fb, const VelocityField& ref_field,
                 const FieldBinding& ref_fb, const std::vector<ConditionedState>& states,
                 const std::vector<double>& weights) {
    check_weights(states, weights);
    std::vector<Value> terms;
    terms.reserve(states.size());
    for (size_t i = 0; i < states.size(); ++i) {
        const ConditionedState& cs = states[i];
        Value h = field.history_summary(fb, cs.history);
        Value v = field.eval(fb, tape.leaf(cs.sample.x_t), cs.sample.t, h, cs.prompt_id);
        Value href = ref_field.history_summary(ref_fb, cs.history);
        Value vref = tape.stop_gradient(ref_field.eval(ref_fb, tape.leaf(cs.sample.x_t), cs.sample.t, href, cs.prompt_id));
        terms.push_back(tape.scale(tape.squared_norm(tape.sub(v, vref)), weights[i]));
    }
    return tape.mean(tape.concat_rows(terms));
}

Value afd_loss(Tape& tape, const VelocityField& field, const FieldBinding& fb, const VelocityField& ref_field,
               const FieldBinding& ref_fb, const std::vector<ConditionedState>& states,
               const std::vector<double>& weights, const AFDConfig& cfg) {
    cfg.validate();
    Value nft = nft_loss(tape, field, fb, states, weights, cfg.beta);
    if (cfg.lambda_prior == 0.0) return nft;
    Value prior = prior_loss(tape, field, fb, ref_field, ref_fb, states, weights);
    return tape.add(nft, tape.scale(prior, cfg.lambda_prior));
}

double afd_loss_value(const VelocityField& field, const VelocityField& ref_field,
                      const std::vector<ConditionedState>& states, const std::vector<double>& weights,
                      const AFDConfig& cfg) {
    Tape tape;
    FieldBinding fb = field.bind(tape);
    FieldBinding ref_fb = ref_field.bind(tape);
    return tape.value(afd_loss(tape, field, fb, ref_field, ref_fb, states, weights, cfg)).data[0];
}

}  // namespace afd
