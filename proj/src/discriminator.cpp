#include "afd/discriminator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>

#include "afd/errors.hpp"

namespace afd {

DiscGeometry DiscGeometry::for_student(const StudentGeometry& g) {
    DiscGeometry dg;
    dg.K = g.K;
    dg.d = g.d;
    dg.n_prompts = g.n_prompts;
    dg.enc_dim = g.enc_dim;
    dg.prompt_dim = g.prompt_dim;
    return dg;
}

Discriminator::Discriminator(DiscGeometry geom, Rng& rng) : geom_(std::move(geom)) {
    auto winit = [&rng](int rows, int cols) {
        Rng r = rng.stream(0xd15c, static_cast<uint64_t>(rows) * 257 + cols);
        return Tensor::randn(rows, cols, r, 1.0 / std::sqrt(static_cast<double>(cols)));
    };
    params_.create("enc.W", winit(geom_.enc_dim, geom_.d));
    params_.create("enc.b", geom_.enc_dim, 1);
    {
        Rng r = rng.stream(0xd1f0);
        params_.create("pemb", Tensor::randn(geom_.prompt_dim, geom_.n_prompts, r, 0.5));
    }
    int in = geom_.input_dim();
    for (size_t l = 0; l < geom_.hidden.size(); ++l) {
        const int out = geom_.hidden[l];
        params_.create("mlp." + std::to_string(l) + ".W", winit(out, in));
        params_.create("mlp." + std::to_string(l) + ".b", out, 1);
        in = out;
    }
    params_.create("mlp.out.W", winit(1, in));
    params_.create("mlp.out.b", 1, 1);
}

ModelBinding Discriminator::bind(Tape& tape) const {
    ModelBinding mb;
    mb.tape = &tape;
    mb.store = &params_;
    for (const auto& [name, t] : params_.arrays()) mb.p.emplace(name, tape.param(params_, name));
    return mb;
}

Value Discriminator::score(const ModelBinding& mb, const std::vector<Value>& blocks, int prompt_id) const {
    if (static_cast<int>(blocks.size()) != geom_.K) {
        throw InputError("discriminator expects " + std::to_string(geom_.K) + " blocks");
    }
    if (prompt_id < 0 || prompt_id >= geom_.n_prompts) {
        throw InputError("prompt id " + std::to_string(prompt_id) + " outside registered set");
    }
    Tape& tape = *mb.tape;
    std::vector<Value> parts;
    parts.reserve(blocks.size() + 1);
    for (Value b : blocks) {
        parts.push_back(tape.add(tape.matmul(mb.at("enc.W"), b), mb.at("enc.b")));
    }
    Tensor onehot(geom_.n_prompts, 1);
    onehot.data[prompt_id] = 1.0;
    parts.push_back(tape.matmul(mb.at("pemb"), tape.leaf(onehot)));
    Value x = tape.concat_rows(parts);
    for (size_t l = 0; l < geom_.hidden.size(); ++l) {
        const std::string k = "mlp." + std::to_string(l);
        x = tape.silu(tape.add(tape.matmul(mb.at(k + ".W"), x), mb.at(k + ".b")));
    }
    return tape.add(tape.matmul(mb.at("mlp.out.W"), x), mb.at("mlp.out.b"));
}

Value Discriminator::score(const ModelBinding& mb, const Video& video) const {
    std::vector<Value> blocks;
    blocks.reserve(video.blocks.size());
    for (const Tensor& b : video.blocks) blocks.push_back(mb.tape->leaf(b));
    return score(mb, blocks, video.prompt_id);
}

double Discriminator::score(const Video& video) const {
    Tape tape;
    ModelBinding mb = bind(tape);
    return tape.value(score(mb, video)).data[0];
}

Value bt_loss(Tape& tape, const Discriminator& disc, const ModelBinding& mb, const std::vector<VideoPair>& pairs) {
    if (pairs.empty()) throw InputError("bt_loss: empty batch");
    std::vector<Value> terms;
    terms.reserve(pairs.size());
    for (const VideoPair& pair : pairs) {
        if (pair.teacher.prompt_id != pair.student.prompt_id) {
            throw InputError("bt_loss: pair with mismatched prompts");
        }
        Value margin = tape.sub(disc.score(mb, pair.teacher), disc.score(mb, pair.student));
        terms.push_back(tape.scale(tape.log_sigmoid(margin), -1.0));
    }
    return tape.mean(tape.concat_rows(terms));
}

double bt_loss_value(const Discriminator& disc, const std::vector<VideoPair>& pairs) {
    Tape tape;
    ModelBinding mb = disc.bind(tape);
    return tape.value(bt_loss(tape, disc, mb, pairs)).data[0];
}

Value gan_loss(Tape& tape, const Discriminator& disc, const ModelBinding& mb, const std::vector<Video>& batch) {
    if (batch.empty()) throw InputError("gan_loss: empty batch");
    std::vector<Value> terms;
    terms.reserve(batch.size());
    for (const Video& video : batch) {
        Value logit = disc.score(mb, video);
        if (video.source == Source::teacher) {
            terms.push_back(tape.scale(tape.log_sigmoid(logit), -1.0));
        } else {
            terms.push_back(tape.scale(tape.log_sigmoid(tape.scale(logit, -1.0)), -1.0));
        }
    }
    return tape.mean(tape.concat_rows(terms));
}

double gan_loss_value(const Discriminator& disc, const std::vector<Video>& batch) {
    Tape tape;
    ModelBinding mb = disc.bind(tape);
    return tape.value(gan_loss(tape, disc, mb, batch)).data[0];
}

double log_ratio(const Discriminator& disc, const Video& video, int prompt_id) {
    Video v = video;
    v.prompt_id = prompt_id;
    return disc.score(v);
}

AdvantageTracker::AdvantageTracker(int n_prompts, double decay, long long min_obs)
    : per_prompt_(static_cast<size_t>(n_prompts)), decay_(decay), min_obs_(min_obs) {}

double AdvantageTracker::std_of(const Entry& e) const { return std::sqrt(e.ema_sq); }

double AdvantageTracker::std_for(int prompt_id) const {
    const double floor = 1e-6;
    if (prompt_id < 0 || prompt_id >= static_cast<int>(per_prompt_.size())) {
        throw InputError("advantage tracker: prompt out of range");
    }
    if (per_prompt_[prompt_id].count >= min_obs_) return std::max(floor, std_of(per_prompt_[prompt_id]));
    if (global_.count >= min_obs_) return std::max(floor, std_of(global_));
    return 1.0;
}

void AdvantageTracker::observe(int prompt_id, double raw_advantage) {
    auto feed = [this](Entry& e, double a2) {
        e.ema_sq = (e.count == 0) ? a2 : decay_ * e.ema_sq + (1.0 - decay_) * a2;
        ++e.count;
    };
    const double a2 = raw_advantage * raw_advantage;
    feed(per_prompt_[prompt_id], a2);
    feed(global_, a2);
}

std::string AdvantageTracker::serialize() const {
    // doubles as bit patterns, so state round-trips exactly
    std::ostringstream os;
    os << per_prompt_.size() << ' ' << std::bit_cast<uint64_t>(decay_) << ' ' << min_obs_ << ' '
       << global_.count << ' ' << std::bit_cast<uint64_t>(global_.ema_sq);
    for (const Entry& e : per_prompt_) os << ' ' << e.count << ' ' << std::bit_cast<uint64_t>(e.ema_sq);
    return os.str();
}

AdvantageTracker AdvantageTracker::deserialize(const std::string& text) {
    std::istringstream is(text);
    size_t n = 0;
    uint64_t decay_bits = 0;
    uint64_t ema_bits = 0;
    AdvantageTracker t;
    is >> n >> decay_bits >> t.min_obs_ >> t.global_.count >> ema_bits;
    t.decay_ = std::bit_cast<double>(decay_bits);
    t.global_.ema_sq = std::bit_cast<double>(ema_bits);
    t.per_prompt_.resize(n);
    for (Entry& e : t.per_prompt_) {
        is >> e.count >> ema_bits;
        e.ema_sq = std::bit_cast<double>(ema_bits);
    }
    if (!is) throw LoadError("corrupt advantage tracker state");
    return t;
}

std::vector<Advantage> advantage(const Discriminator& disc, const std::vector<Video>& student_batch,
                                 AdvantageTracker& tracker, double clip_max) {
    if (student_batch.empty()) throw InputError("advantage: empty batch");

    const size_t n = student_batch.size();
    std::vector<double> scores(n);
    double batch_mean = 0.0;
    std::map<int, std::pair<double, int>> by_prompt;  // prompt -> (sum, count)
    for (size_t i = 0; i < n; ++i) {
        scores[i] = disc.score(student_batch[i]);
        batch_mean += scores[i];
        auto& acc = by_prompt[student_batch[i].prompt_id];
        acc.first += scores[i];
        acc.second += 1;
    }
    batch_mean /= static_cast<double>(n);

    std::vector<Advantage> out(n);
    for (size_t i = 0; i < n; ++i) {
        const auto& acc = by_prompt[student_batch[i].prompt_id];
        const double baseline = (acc.second > 1) ? acc.first / acc.second : batch_mean;
        out[i].score = scores[i];
        out[i].baseline = baseline;
    }
    // normalize with the tracker state from before this batch
    for (size_t i = 0; i < n; ++i) {
        const int prompt = student_batch[i].prompt_id;
        const double raw = out[i].score - out[i].baseline;
        const double normalized = raw / tracker.std_for(prompt);
        out[i].clipped = std::clamp(normalized, -clip_max, clip_max);
        out[i].weight = 1.0 / (1.0 + std::exp(-out[i].clipped));
    }
    for (size_t i = 0; i < n; ++i) {
        tracker.observe(student_batch[i].prompt_id, out[i].score - out[i].baseline);
    }
    return out;
}

double disc_step(Discriminator& disc, AdamW& opt, const std::vector<VideoPair>& pairs, DiscLoss kind) {
    Tape tape;
    ModelBinding mb = disc.bind(tape);
    Value loss;
    if (kind == DiscLoss::bt) {
        loss = bt_loss(tape, disc, mb, pairs);
    } else {
        std::vector<Video> batch;
        batch.reserve(pairs.size() * 2);
        for (const VideoPair& p : pairs) {
            batch.push_back(p.teacher);
            batch.push_back(p.student);
        }
        loss = gan_loss(tape, disc, mb, batch);
    }
    const double value = tape.value(loss).data[0];
    tape.backward(loss);
    opt.step(disc.params(), tape.param_grads(disc.params()));
    return value;
}

}  // namespace afd
