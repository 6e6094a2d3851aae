#include "afd/baselines.hpp"

#include "afd/errors.hpp"

namespace afd {

StepResult sft_step(VelocityField& field, AdamW& opt, const std::vector<Video>& teacher_videos,
                    const Schedule& sched, Rng& rng) {
    if (teacher_videos.empty()) throw InputError("sft_step: empty batch");
    std::vector<FmItem> items;
    for (const Video& video : teacher_videos) {
        if (video.source != Source::teacher) throw InputError("sft_step: batch must be teacher-tagged");
        std::vector<FmItem> vi = fm_items_from_video(video);
        items.insert(items.end(), vi.begin(), vi.end());
    }
    Tape tape;
    FieldBinding fb = field.bind(tape);
    Value loss = fm_loss(tape, field, fb, items, sched, rng);
    StepResult res;
    res.loss = tape.value(loss).data[0];
    tape.backward(loss);
    res.grad_norm = opt.step(field.params(), tape.param_grads(field.params()));
    return res;
}

StepResult gan_step(VelocityField& field, AdamW& opt, const VideoScorer& scorer, const std::vector<int>& prompts,
                    int K, int sample_steps, Rng& rollout_rng) {
    if (prompts.empty()) throw InputError("gan_step: empty prompt batch");
    Tape tape;
    FieldBinding fb = field.bind(tape);
    std::vector<Value> scores;
    scores.reserve(prompts.size());
    for (size_t i = 0; i < prompts.size(); ++i) {
        Rng item_rng = rollout_rng.stream(0x9a4, rollout_rng.u64());
        std::vector<Value> blocks = field.rollout_on_tape(fb, Prompt{prompts[i]}, K, sample_steps, item_rng);
        scores.push_back(scorer(tape, blocks, prompts[i]));
    }
    // generator ascends the score
    Value loss = tape.scale(tape.mean(tape.concat_rows(scores)), -1.0);
    StepResult res;
    res.loss = tape.value(loss).data[0];
    tape.backward(loss);
    auto grads = tape.param_grads(field.params());
    for (const auto& [name, g] : grads) {
        if (!g.all_finite()) throw NumericalError("gan_step: non-finite generator gradient in " + name);
    }
    res.grad_norm = opt.step(field.params(), grads);
    return res;
}

StepResult gan_step(VelocityField& field, AdamW& opt, const Discriminator& disc, const std::vector<int>& prompts,
                    int K, int sample_steps, Rng& rollout_rng) {
    Tape* bound_tape = nullptr;
    ModelBinding mb;
    VideoScorer scorer = [&](Tape& tape, const std::vector<Value>& blocks, int prompt_id) {
        if (bound_tape != &tape) {
            mb = disc.bind(tape);
            bound_tape = &tape;
        }
        return disc.score(mb, blocks, prompt_id);
    };
    return gan_step(field, opt, scorer, prompts, K, sample_steps, rollout_rng);
}

Value weighted_fm_loss(Tape& tape, const VelocityField& field, const FieldBinding& fb,
                       const std::vector<ConditionedState>& states, const std::vector<double>& weights) {
    if (states.empty()) throw InputError("weighted_fm_loss: empty state list");
    if (states.size() != weights.size()) throw InputError("weighted_fm_loss: one weight per state required");
    std::vector<Value> terms;
    terms.reserve(states.size());
    for (size_t i = 0; i < states.size(); ++i) {
        const ConditionedState& cs = states[i];
        Value h = field.history_summary(fb, cs.history);
        Value v = field.eval(fb, tape.leaf(cs.sample.x_t), cs.sample.t, h, cs.prompt_id);
        Value sq = tape.squared_norm(tape.sub(v, tape.leaf(cs.sample.v)));
        terms.push_back(tape.scale(sq, weights[i]));
    }
    return tape.mean(tape.concat_rows(terms));
}

StepResult dmd_scaffold_step(VelocityField& field, AdamW& opt, const std::vector<ConditionedState>& states,
                             const std::vector<double>& weights) {
    Tape tape;
    FieldBinding fb = field.bind(tape);
    Value loss = weighted_fm_loss(tape, field, fb, states, weights);
    StepResult res;
    res.loss = tape.value(loss).data[0];
    tape.backward(loss);
    res.grad_norm = opt.step(field.params(), tape.param_grads(field.params()));
    return res;
}

}  // namespace afd
