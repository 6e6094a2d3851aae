#include "afd/trainer.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "afd/checkpoint.hpp"
#include "afd/errors.hpp"

namespace afd {

std::string arm_name(Arm arm) {
    switch (arm) {
        case Arm::base: return "base";
        case Arm::sft: return "sft";
        case Arm::gan: return "gan";
        case Arm::dmd_scaffold: return "dmd_scaffold";
        case Arm::afd: return "afd";
    }
    return "?";
}

Arm arm_from_name(const std::string& name) {
    if (name == "base") return Arm::base;
    if (name == "sft") return Arm::sft;
    if (name == "gan") return Arm::gan;
    if (name == "dmd_scaffold") return Arm::dmd_scaffold;
    if (name == "afd") return Arm::afd;
    throw ConfigError("unknown arm: " + name);
}

std::shared_ptr<const Teacher> make_teacher(const TeacherSpec& spec, int K, int d, int n_prompts) {
    if (spec.kind == "physics" || spec.kind == "styled_physics") {
        if (d != 2) throw ConfigError("physics teachers require d = 2");
        auto cfg = PhysicsTeacherConfig::make(K, n_prompts, spec.omega_lo, spec.omega_hi, spec.decay,
                                              spec.init_radius, spec.init_sd, spec.obs_sd);
        auto physics = std::make_shared<const PhysicsTeacher>(std::move(cfg));
        if (spec.kind == "physics") return physics;
        Tensor warp(2, 2);
        warp.at(0, 0) = spec.style_scale * std::cos(spec.style_rot);
        warp.at(0, 1) = -spec.style_scale * std::sin(spec.style_rot);
        warp.at(1, 0) = spec.style_scale * std::sin(spec.style_rot);
        warp.at(1, 1) = spec.style_scale * std::cos(spec.style_rot);
        Tensor offset = Tensor::column({spec.style_offset, -spec.style_offset});
        return std::make_shared<const StyledPhysicsTeacher>(physics, warp, offset, spec.style_extra_sd);
    }
    if (spec.kind == "mixture") {
        std::vector<MixturePrompt> prompts;
        for (int p = 0; p < n_prompts; ++p) {
            const double phase = 2.0 * M_PI * p / n_prompts;
            Tensor center(K * d, 1);
            for (int i = 0; i < K * d; ++i) {
                center.data[i] = std::cos(phase + 0.35 * static_cast<double>(i));
            }
            Tensor shift(K * d, 1);
            for (int i = 0; i < K * d; ++i) {
                shift.data[i] = 0.5 * spec.mixture_sep * std::sin(phase + 0.2 * static_cast<double>(i));
            }
            MixturePrompt mp;
            mp.components.push_back({0.5, center + shift, spec.mixture_sd});
            mp.components.push_back({0.5, center - shift, spec.mixture_sd});
            prompts.push_back(std::move(mp));
        }
        return std::make_shared<const MixtureTeacher>(K, d, std::move(prompts));
    }
    if (spec.kind == "hidden_flow") {
        if (!spec.hidden_checkpoint.empty()) {
            return std::make_shared<const HiddenFlowTeacher>(HiddenFlowTeacher::load(spec.hidden_checkpoint));
        }
        HiddenFlowConfig cfg;
        cfg.K = K;
        cfg.d = d;
        cfg.n_prompts = n_prompts;
        return std::make_shared<const HiddenFlowTeacher>(HiddenFlowTeacher::pretrain(cfg, spec.hidden_seed));
    }
    throw ConfigError("unknown teacher kind: " + spec.kind);
}

void RunConfig::validate() const {
    if (schema_version != 1) throw ConfigError("unsupported schema_version");
    if (batch < 2) throw ConfigError("batch must be >= 2 (advantage baseline needs at least 2 rollouts)");
    if (steps < 0) throw ConfigError("steps must be >= 0");
    if (lr_student < 0.0 || lr_disc < 0.0) throw ConfigError("learning rates must be >= 0");
    if (sample_steps < 1) throw ConfigError("sample_steps must be >= 1");
    if (teacher_pool < 1) throw ConfigError("teacher_pool must be >= 1");
    if (geom.K < 1 || geom.d < 1 || geom.n_prompts < 1) throw ConfigError("bad student geometry");
    afd.validate();
    Schedule::by_name(schedule);
    if (on_policy.has_value()) {
        const bool wants_rollouts = arm != Arm::sft;
        if (*on_policy != wants_rollouts) {
            throw ConfigError("on_policy flag contradicts arm '" + arm_name(arm) + "'");
        }
    }
    if (base_checkpoint.empty()) throw ConfigError("base_checkpoint required (run pretrain first)");
}

std::string StepMetrics::csv_header() {
    return "step,arm,disc_loss,student_loss,nft_loss,prior_loss,mean_reward,mean_w,grad_norm_student,"
           "grad_norm_disc";
}

std::string StepMetrics::csv_row() const {
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%lld,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", step,
                  arm_name(arm).c_str(), disc_loss, student_loss, nft_loss, prior_loss, mean_reward, mean_w,
                  grad_norm_student, grad_norm_disc);
    return buf;
}

Trainer::Trainer(RunConfig cfg) : cfg_(std::move(cfg)), sched_(Schedule::by_name(cfg_.schedule)) {
    cfg_.validate();
    teacher_ = make_teacher(cfg_.teacher, cfg_.geom.K, cfg_.geom.d, cfg_.geom.n_prompts);
    pool_ = std::make_unique<TeacherPool>(teacher_, cfg_.teacher_pool, cfg_.seed);

    state_.field = load_field_checkpoint(cfg_.base_checkpoint);
    if (!(state_.field.geometry() == cfg_.geom)) {
        throw LoadError("base checkpoint geometry does not match run configuration");
    }
    state_.ref_field = state_.field.clone();
    state_.ema = state_.field.params();

    Rng disc_init = Rng::seeded(cfg_.seed).stream(0xd15c0);
    state_.disc = Discriminator(DiscGeometry::for_student(cfg_.geom), disc_init);

    AdamW::Options so;
    so.lr = cfg_.lr_student;
    state_.opt_student = AdamW(so);
    AdamW::Options dopt;
    dopt.lr = cfg_.lr_disc;
    state_.opt_disc = AdamW(dopt);

    state_.rng = Rng::seeded(cfg_.seed ^ 0xaf0d);
    state_.tracker = AdvantageTracker(cfg_.geom.n_prompts, cfg_.afd.ema_decay);
    state_.teacher_counters.assign(cfg_.geom.n_prompts, 0);
}

VelocityField Trainer::ema_field() const {
    VelocityField f = state_.field.clone();
    f.params() = state_.ema;
    return f;
}

VelocityField Trainer::rollout_field() const {
    return cfg_.rollout_policy == RolloutPolicy::ema ? ema_field() : state_.field;
}

StepMetrics Trainer::step() {
    StepMetrics m;
    m.step = state_.step;
    m.arm = cfg_.arm;
    flags_ = PhaseFlags{};

    const int B = cfg_.batch;
    const int P = cfg_.geom.n_prompts;
    const bool wants_rollouts = cfg_.arm != Arm::sft;
    const bool wants_disc = cfg_.arm == Arm::afd || cfg_.arm == Arm::gan || cfg_.arm == Arm::dmd_scaffold;
    const bool wants_advantage = cfg_.arm == Arm::afd || cfg_.arm == Arm::dmd_scaffold;

    // -- phase 1: on-policy data collection --
    std::vector<int> prompts(B);
    std::vector<Video> teacher_videos;
    std::vector<Video> rollouts;
    try {
        for (int i = 0; i < B; ++i) prompts[i] = state_.rng.uniform_int(P);
        teacher_videos.reserve(B);
        for (int i = 0; i < B; ++i) {
            teacher_videos.push_back(pool_->draw(prompts[i], state_.teacher_counters[prompts[i]]++));
            ++flags_.teacher_queries;
        }
        if (wants_rollouts) {
            const VelocityField actor = rollout_field();
            const uint64_t step_token = state_.rng.u64();
            rollouts.reserve(B);
            for (int i = 0; i < B; ++i) {
                Rng item_rng = Rng::seeded(step_token).stream(0x401, static_cast<uint64_t>(i));
                rollouts.push_back(actor.rollout(Prompt{prompts[i]}, cfg_.geom.K, cfg_.sample_steps, item_rng));
                ++flags_.rollouts;
            }
        }
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("collect phase: ") + e.what());
    }

    // -- phase 2: teacher-student discrimination --
    std::vector<Advantage> adv;
    try {
        if (wants_disc) {
            std::vector<VideoPair> pairs(B);
            for (int i = 0; i < B; ++i) {
                pairs[i].teacher = teacher_videos[i];
                pairs[i].student = rollouts[i];
            }
            Tape tape;
            ModelBinding mb = state_.disc.bind(tape);
            Value loss;
            if (cfg_.disc_loss == DiscLoss::bt) {
                loss = bt_loss(tape, state_.disc, mb, pairs);
            } else {
                std::vector<Video> labeled;
                labeled.reserve(2 * B);
                for (const VideoPair& p : pairs) {
                    labeled.push_back(p.teacher);
                    labeled.push_back(p.student);
                }
                loss = gan_loss(tape, state_.disc, mb, labeled);
            }
            m.disc_loss = tape.value(loss).data[0];
            tape.backward(loss);
            m.grad_norm_disc = state_.opt_disc.step(state_.disc.params(), tape.param_grads(state_.disc.params()));
        }
        if (wants_advantage) {
            adv = advantage(state_.disc, rollouts, state_.tracker, cfg_.afd.clip_max);
        }
        if (wants_rollouts) {
            double reward = 0.0;
            double wsum = 0.0;
            for (int i = 0; i < B; ++i) {
                const double score = wants_advantage ? adv[i].score : state_.disc.score(rollouts[i]);
                reward += 1.0 / (1.0 + std::exp(-score));
                if (wants_advantage) wsum += adv[i].weight;
            }
            m.mean_reward = reward / B;
            m.mean_w = wants_advantage ? wsum / B : 0.0;
        }
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("discriminate phase: ") + e.what());
    }

    // -- phase 3: student update --
    try {
        switch (cfg_.arm) {
            case Arm::base:
                break;
            case Arm::sft: {
                StepResult r = sft_step(state_.field, state_.opt_student, teacher_videos, sched_, state_.rng);
                m.student_loss = r.loss;
                m.grad_norm_student = r.grad_norm;
                break;
            }
            case Arm::gan: {
                StepResult r = gan_step(state_.field, state_.opt_student, state_.disc, prompts, cfg_.geom.K,
                                        cfg_.sample_steps, state_.rng);
                m.student_loss = r.loss;
                m.grad_norm_student = r.grad_norm;
                flags_.generator_grad_through_rollout = true;
                break;
            }
            case Arm::dmd_scaffold:
            case Arm::afd: {
                std::vector<ConditionedState> states;
                std::vector<double> weights;
                states.reserve(static_cast<size_t>(B) * cfg_.geom.K);
                for (int i = 0; i < B; ++i) {
                    auto vs = noised_rollout_states(rollouts[i], sched_, state_.rng);
                    for (auto& s : vs) {
                        states.push_back(std::move(s));
                        weights.push_back(adv[i].weight);
                    }
                }
                flags_.forward_noised_rollouts = true;
                if (cfg_.arm == Arm::dmd_scaffold) {
                    StepResult r = dmd_scaffold_step(state_.field, state_.opt_student, states, weights);
                    m.student_loss = r.loss;
                    m.grad_norm_student = r.grad_norm;
                } else {
                    Tape tape;
                    FieldBinding fb = state_.field.bind(tape);
                    FieldBinding rb = state_.ref_field.bind(tape);
                    Value nft = nft_loss(tape, state_.field, fb, states, weights, cfg_.afd.beta);
                    Value prior = prior_loss(tape, state_.field, fb, state_.ref_field, rb, states, weights);
                    Value total = tape.add(nft, tape.scale(prior, cfg_.afd.lambda_prior));
                    m.nft_loss = tape.value(nft).data[0];
                    m.prior_loss = tape.value(prior).data[0];
                    m.student_loss = tape.value(total).data[0];
                    tape.backward(total);
                    m.grad_norm_student =
                        state_.opt_student.step(state_.field.params(), tape.param_grads(state_.field.params()));
                }
                break;
            }
        }
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("student phase: ") + e.what());
    }

    // -- phase 4: EMA update --
    // incremental form of gamma * ema + (1 - gamma) * theta; exact fixed
    // point when theta is frozen
    const double gamma = cfg_.afd.ema_decay;
    for (auto& [name, ema] : state_.ema.arrays()) {
        const Tensor& theta = state_.field.params().get(name);
        for (size_t i = 0; i < ema.data.size(); ++i) {
            ema.data[i] += (1.0 - gamma) * (theta.data[i] - ema.data[i]);
        }
    }

    ++state_.step;
    return m;
}

void Trainer::save_state(const std::string& path) const {
    Checkpoint ck;
    nlohmann::json meta;
    meta["kind"] = "trainstate";
    meta["schema_version"] = 1;
    meta["step"] = state_.step;
    meta["arm"] = arm_name(cfg_.arm);
    meta["rng"] = state_.rng.serialize();
    meta["tracker"] = state_.tracker.serialize();
    meta["teacher_counters"] = state_.teacher_counters;
    meta["opt_student_t"] = state_.opt_student.step_count();
    meta["opt_disc_t"] = state_.opt_disc.step_count();
    meta["geometry"] = {{"K", cfg_.geom.K},         {"d", cfg_.geom.d},
                        {"n_prompts", cfg_.geom.n_prompts}, {"enc_dim", cfg_.geom.enc_dim},
                        {"temb_dim", cfg_.geom.temb_dim},   {"prompt_dim", cfg_.geom.prompt_dim},
                        {"hidden", cfg_.geom.hidden}};
    ck.meta_json = meta.dump();
    ck.stores["theta"] = state_.field.params();
    ck.stores["ema"] = state_.ema;
    ck.stores["ref"] = state_.ref_field.params();
    ck.stores["phi"] = state_.disc.params();
    ck.stores["adam_theta_m"] = state_.opt_student.moments_m();
    ck.stores["adam_theta_v"] = state_.opt_student.moments_v();
    ck.stores["adam_phi_m"] = state_.opt_disc.moments_m();
    ck.stores["adam_phi_v"] = state_.opt_disc.moments_v();
    ck.save(path);
}

void Trainer::load_state(const std::string& path) {
    Checkpoint ck = Checkpoint::load(path);
    nlohmann::json meta = nlohmann::json::parse(ck.meta_json);
    if (meta.value("kind", "") != "trainstate") throw LoadError("not a train-state checkpoint: " + path);
    if (meta.value("schema_version", 0) != 1) throw LoadError("unsupported checkpoint version: " + path);
    const auto& g = meta.at("geometry");
    if (g.at("K").get<int>() != cfg_.geom.K || g.at("d").get<int>() != cfg_.geom.d ||
        g.at("n_prompts").get<int>() != cfg_.geom.n_prompts ||
        g.at("hidden").get<std::vector<int>>() != cfg_.geom.hidden) {
        throw LoadError("checkpoint geometry does not match run configuration");
    }

    if (!state_.field.params().same_geometry(ck.stores.at("theta"))) {
        throw LoadError("checkpoint parameter layout mismatch");
    }
    state_.field.params() = ck.stores.at("theta");
    state_.ema = ck.stores.at("ema");
    state_.ref_field.params() = ck.stores.at("ref");
    state_.disc.params() = ck.stores.at("phi");
    state_.opt_student.restore(meta.at("opt_student_t").get<long long>(), ck.stores.at("adam_theta_m"),
                               ck.stores.at("adam_theta_v"));
    state_.opt_disc.restore(meta.at("opt_disc_t").get<long long>(), ck.stores.at("adam_phi_m"),
                            ck.stores.at("adam_phi_v"));
    state_.step = meta.at("step").get<long long>();
    state_.rng = Rng::deserialize(meta.at("rng").get<std::string>());
    state_.tracker = AdvantageTracker::deserialize(meta.at("tracker").get<std::string>());
    state_.teacher_counters = meta.at("teacher_counters").get<std::vector<long long>>();
}

// ----------------------------- pretraining -----------------------------

VelocityField pretrain_student(const PretrainConfig& cfg) {
    auto teacher = make_teacher(cfg.teacher, cfg.geom.K, cfg.geom.d, cfg.geom.n_prompts);
    Rng init = Rng::seeded(cfg.seed).stream(0x9e);
    VelocityField field(cfg.geom, init);
    AdamW::Options opt;
    opt.lr = cfg.lr;
    AdamW adam(opt);
    Rng rng = Rng::seeded(cfg.seed).stream(0x9f);
    const Schedule sched = Schedule::by_name(cfg.schedule);
    for (int s = 0; s < cfg.steps; ++s) {
        std::vector<Video> batch;
        batch.reserve(cfg.batch);
        for (int i = 0; i < cfg.batch; ++i) {
            const int p = rng.uniform_int(cfg.geom.n_prompts);
            batch.push_back(teacher->sample(Prompt{p}, rng));
        }
        sft_step(field, adam, batch, sched, rng);
    }
    return field;
}

void save_field_checkpoint(const VelocityField& field, const std::string& path) {
    Checkpoint ck;
    const StudentGeometry& g = field.geometry();
    nlohmann::json meta;
    meta["kind"] = "field";
    meta["schema_version"] = 1;
    meta["geometry"] = {{"K", g.K},         {"d", g.d},
                        {"n_prompts", g.n_prompts}, {"enc_dim", g.enc_dim},
                        {"temb_dim", g.temb_dim},   {"prompt_dim", g.prompt_dim},
                        {"hidden", g.hidden}};
    ck.meta_json = meta.dump();
    ck.stores["field"] = field.params();
    ck.save(path);
}

VelocityField load_field_checkpoint(const std::string& path) {
    Checkpoint ck = Checkpoint::load(path);
    nlohmann::json meta = nlohmann::json::parse(ck.meta_json);
    if (meta.value("kind", "") != "field") throw LoadError("not a field checkpoint: " + path);
    const auto& g = meta.at("geometry");
    StudentGeometry geom;
    geom.K = g.at("K").get<int>();
    geom.d = g.at("d").get<int>();
    geom.n_prompts = g.at("n_prompts").get<int>();
    geom.enc_dim = g.at("enc_dim").get<int>();
    geom.temb_dim = g.at("temb_dim").get<int>();
    geom.prompt_dim = g.at("prompt_dim").get<int>();
    geom.hidden = g.at("hidden").get<std::vector<int>>();
    Rng dummy = Rng::seeded(0);
    VelocityField field(geom, dummy);
    if (!field.params().same_geometry(ck.stores.at("field"))) {
        throw LoadError("field checkpoint layout mismatch: " + path);
    }
    field.params() = ck.stores.at("field");
    return field;
}

}  // namespace afd
