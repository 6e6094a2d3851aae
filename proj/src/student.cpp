#include "afd/student.hpp"

#include <cmath>

#include "afd/errors.hpp"

namespace afd {

Tensor Video::flatten() const {
    Tensor out(K() * d(), 1);
    int off = 0;
    for (const Tensor& b : blocks) {
        for (int i = 0; i < b.rows; ++i) out.data[off + i] = b.data[i];
        off += b.rows;
    }
    return out;
}

bool Video::all_finite() const {
    for (const Tensor& b : blocks) {
        if (!b.all_finite()) return false;
    }
    return true;
}

Tensor t_embedding(double t, int temb_dim) {
    Tensor out(temb_dim, 1);
    const int half = temb_dim / 2;
    for (int j = 0; j < half; ++j) {
        const double w = M_PI * std::pow(2.0, static_cast<double>(j));
        out.data[2 * j] = std::sin(w * t);
        out.data[2 * j + 1] = std::cos(w * t);
    }
    return out;
}

VelocityField::VelocityField(StudentGeometry geom, Rng& rng) : geom_(std::move(geom)) {
    auto winit = [&rng](int rows, int cols) {
        Rng r = rng.stream(0x57, static_cast<uint64_t>(rows) * 131 + cols);
        return Tensor::randn(rows, cols, r, 1.0 / std::sqrt(static_cast<double>(cols)));
    };
    params_.create("enc.W", winit(geom_.enc_dim, geom_.d));
    params_.create("enc.b", geom_.enc_dim, 1);
    params_.create("start", geom_.history_dim(), 1);
    {
        Rng r = rng.stream(0x70);
        params_.create("pemb", Tensor::randn(geom_.prompt_dim, geom_.n_prompts, r, 0.5));
    }
    int in = geom_.input_dim();
    for (size_t l = 0; l < geom_.hidden.size(); ++l) {
        const int out = geom_.hidden[l];
        params_.create("mlp." + std::to_string(l) + ".W", winit(out, in));
        params_.create("mlp." + std::to_string(l) + ".b", out, 1);
        in = out;
    }
    // small output init keeps early rollouts near the noise prior
    Rng r = rng.stream(0x0a);
    params_.create("mlp.out.W", Tensor::randn(geom_.d, in, r, 0.1 / std::sqrt(static_cast<double>(in))));
    params_.create("mlp.out.b", geom_.d, 1);
}

FieldBinding VelocityField::bind(Tape& tape) const {
    FieldBinding fb;
    fb.tape = &tape;
    fb.store = &params_;
    for (const auto& [name, t] : params_.arrays()) fb.p.emplace(name, tape.param(params_, name));
    return fb;
}

Value VelocityField::encode_block(const FieldBinding& fb, Value block) const {
    Tape& tape = *fb.tape;
    return tape.add(tape.matmul(fb.at("enc.W"), block), fb.at("enc.b"));
}

Value VelocityField::history_from_encodings(const FieldBinding& fb, const std::vector<Value>& encs) const {
    Tape& tape = *fb.tape;
    if (encs.empty()) return fb.at("start");
    Value acc = encs[0];
    for (size_t i = 1; i < encs.size(); ++i) acc = tape.add(acc, encs[i]);
    Value mean_enc = tape.scale(acc, 1.0 / static_cast<double>(encs.size()));
    return tape.concat_rows({mean_enc, encs.back()});
}

Value VelocityField::history_summary(const FieldBinding& fb, const std::vector<Tensor>& prior_blocks) const {
    std::vector<Value> encs;
    encs.reserve(prior_blocks.size());
    for (const Tensor& b : prior_blocks) encs.push_back(encode_block(fb, fb.tape->leaf(b)));
    return history_from_encodings(fb, encs);
}

Tensor VelocityField::history_summary(const std::vector<Tensor>& prior_blocks) const {
    Tape tape;
    FieldBinding fb = bind(tape);
    return tape.value(history_summary(fb, prior_blocks));
}

void VelocityField::check_prompt(int prompt_id) const {
    if (prompt_id < 0 || prompt_id >= geom_.n_prompts) {
        throw InputError("prompt id " + std::to_string(prompt_id) + " outside registered set of " +
                         std::to_string(geom_.n_prompts));
    }
}

Value VelocityField::eval(const FieldBinding& fb, Value x_t, double t, Value history, int prompt_id) const {
    check_prompt(prompt_id);
    Tape& tape = *fb.tape;
    Tensor onehot(geom_.n_prompts, 1);
    onehot.data[prompt_id] = 1.0;
    Value pemb = tape.matmul(fb.at("pemb"), tape.leaf(onehot));
    Value x = tape.concat_rows({x_t, tape.leaf(t_embedding(t, geom_.temb_dim)), history, pemb});
    for (size_t l = 0; l < geom_.hidden.size(); ++l) {
        const std::string k = "mlp." + std::to_string(l);
        x = tape.silu(tape.add(tape.matmul(fb.at(k + ".W"), x), fb.at(k + ".b")));
    }
    return tape.add(tape.matmul(fb.at("mlp.out.W"), x), fb.at("mlp.out.b"));
}

Tensor VelocityField::eval(const Tensor& x_t, double t, const std::vector<Tensor>& history, int prompt_id) const {
    Tape tape;
    FieldBinding fb = bind(tape);
    Value h = history_summary(fb, history);
    return tape.value(eval(fb, tape.leaf(x_t), t, h, prompt_id));
}

Value VelocityField::sample_block(const FieldBinding& fb, const std::vector<Tensor>& history, int prompt_id,
                                  int steps, const Tensor& noise) const {
    if (steps < 1) throw InputError("sample_block: steps must be >= 1");
    Tape& tape = *fb.tape;
    Value h = history_summary(fb, history);
    Value x = tape.leaf(noise);
    const double dt = 1.0 / static_cast<double>(steps);
    for (int m = 0; m < steps; ++m) {
        const double t = 1.0 - static_cast<double>(m) * dt;
        Value v = eval(fb, x, t, h, prompt_id);
        x = tape.sub(x, tape.scale(v, dt));
    }
    return x;
}

std::vector<Value> VelocityField::rollout_on_tape(const FieldBinding& fb, Prompt prompt, int K, int steps,
                                                  Rng& rng) const {
    if (K < 1) throw InputError("rollout: K must be >= 1");
    check_prompt(prompt.id);
    Tape& tape = *fb.tape;
    std::vector<Value> blocks;
    std::vector<Value> encs;
    const double dt = 1.0 / static_cast<double>(steps);
    for (int k = 0; k < K; ++k) {
        Value h = history_from_encodings(fb, encs);
        Tensor noise = Tensor::randn(geom_.d, 1, rng);
        Value x = tape.leaf(noise);
        for (int m = 0; m < steps; ++m) {
            const double t = 1.0 - static_cast<double>(m) * dt;
            Value v = eval(fb, x, t, h, prompt.id);
            x = tape.sub(x, tape.scale(v, dt));
        }
        blocks.push_back(x);
        encs.push_back(encode_block(fb, x));
    }
    return blocks;
}

Video VelocityField::rollout(Prompt prompt, int K, int steps, Rng& rng) const {
    Tape tape;
    FieldBinding fb = bind(tape);
    std::vector<Value> blocks = rollout_on_tape(fb, prompt, K, steps, rng);
    Video video;
    video.prompt_id = prompt.id;
    video.source = Source::student;
    for (Value b : blocks) video.blocks.push_back(tape.value(b));
    return video;
}

Video rollout(const VelocityField& field, Prompt prompt, int K, int steps, Rng& rng) {
    return field.rollout(prompt, K, steps, rng);
}

Tensor sample_ode(const VelocityField& field, Prompt prompt, const std::vector<Tensor>& history, int steps,
                  Rng& rng) {
    Tape tape;
    FieldBinding fb = field.bind(tape);
    Tensor noise = Tensor::randn(field.geometry().d, 1, rng);
    return tape.value(field.sample_block(fb, history, prompt.id, steps, noise));
}

std::vector<ConditionedState> noised_rollout_states(const Video& video, const Schedule& sched, Rng& rng) {
    std::vector<ConditionedState> states;
    states.reserve(video.blocks.size());
    for (int k = 0; k < video.K(); ++k) {
        ConditionedState cs;
        const double t = rng.uniform();
        Tensor eps = Tensor::randn(video.d(), 1, rng);
        cs.sample = forward_noise(video.blocks[k], t, eps, sched);
        cs.history.assign(video.blocks.begin(), video.blocks.begin() + k);
        cs.prompt_id = video.prompt_id;
        states.push_back(std::move(cs));
    }
    return states;
}

Value fm_loss_on_states(Tape& tape, const VelocityField& field, const FieldBinding& fb,
                        const std::vector<ConditionedState>& states) {
    if (states.empty()) throw InputError("fm_loss: empty batch");
    std::vector<Value> terms;
    terms.reserve(states.size());
    for (const ConditionedState& cs : states) {
        Value h = field.history_summary(fb, cs.history);
        Value v = field.eval(fb, tape.leaf(cs.sample.x_t), cs.sample.t, h, cs.prompt_id);
        terms.push_back(tape.squared_norm(tape.sub(v, tape.leaf(cs.sample.v))));
    }
    return tape.mean(tape.concat_rows(terms));
}

Value fm_loss(Tape& tape, const VelocityField& field, const FieldBinding& fb, const std::vector<FmItem>& batch,
              const Schedule& sched, Rng& rng) {
    if (batch.empty()) throw InputError("fm_loss: empty batch");
    std::vector<ConditionedState> states;
    states.reserve(batch.size());
    for (const FmItem& item : batch) {
        ConditionedState cs;
        const double t = rng.uniform();
        Tensor eps = Tensor::randn(item.x0.rows, 1, rng);
        cs.sample = forward_noise(item.x0, t, eps, sched);
        cs.history = item.history;
        cs.prompt_id = item.prompt_id;
        states.push_back(std::move(cs));
    }
    return fm_loss_on_states(tape, field, fb, states);
}

double fm_loss_value(const VelocityField& field, const std::vector<FmItem>& batch, const Schedule& sched, Rng& rng) {
    Tape tape;
    FieldBinding fb = field.bind(tape);
    return tape.value(fm_loss(tape, field, fb, batch, sched, rng)).data[0];
}

std::vector<FmItem> fm_items_from_video(const Video& video) {
    std::vector<FmItem> items;
    items.reserve(video.blocks.size());
    for (int k = 0; k < video.K(); ++k) {
        FmItem item;
        item.x0 = video.blocks[k];
        item.prompt_id = video.prompt_id;
        item.history.assign(video.blocks.begin(), video.blocks.begin() + k);
        items.push_back(std::move(item));
    }
    return items;
}

}  // namespace afd
