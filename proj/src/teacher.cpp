#include "afd/teacher.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "afd/checkpoint.hpp"
#include "afd/errors.hpp"

namespace afd {

namespace {

double log_normal_pdf(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * std::log(2.0 * M_PI) - std::log(sd) - 0.5 * z * z;
}

double log_isotropic(const Tensor& x, const Tensor& mean, double sd) {
    double s = 0.0;
    for (size_t i = 0; i < x.data.size(); ++i) s += log_normal_pdf(x.data[i], mean.data[i], sd);
    return s;
}

double logsumexp(const std::vector<double>& xs) {
    double m = xs[0];
    for (double x : xs) m = std::max(m, x);
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace

void Teacher::check_prompt(int prompt_id) const {
    if (prompt_id < 0 || prompt_id >= n_prompts()) {
        throw InputError("unknown prompt " + std::to_string(prompt_id) + " for teacher " + name());
    }
}

double oracle_log_density(const Teacher& teacher, const Video& video) {
    const auto* oracle = dynamic_cast<const OracleDensity*>(&teacher);
    if (oracle == nullptr) {
        throw CapabilityError("teacher '" + teacher.name() + "' exposes no analytic density");
    }
    return oracle->log_density(video, video.prompt_id);
}

// ----------------------------- physics -----------------------------

Tensor OscillatorParams::transition() const {
    Tensor A(2, 2);
    A.at(0, 0) = decay * std::cos(omega);
    A.at(0, 1) = -decay * std::sin(omega);
    A.at(1, 0) = decay * std::sin(omega);
    A.at(1, 1) = decay * std::cos(omega);
    return A;
}

PhysicsTeacherConfig PhysicsTeacherConfig::make(int K, int n_prompts, double omega_lo, double omega_hi,
                                                double decay, double init_radius, double init_sd, double obs_sd) {
    PhysicsTeacherConfig cfg;
    cfg.K = K;
    for (int p = 0; p < n_prompts; ++p) {
        OscillatorParams op;
        const double frac = n_prompts > 1 ? static_cast<double>(p) / (n_prompts - 1) : 0.0;
        op.omega = omega_lo + (omega_hi - omega_lo) * frac;
        op.decay = decay;
        const double phase = 2.0 * M_PI * p / n_prompts;
        op.init_mean = Tensor::column({init_radius * std::cos(phase), init_radius * std::sin(phase)});
        op.init_sd = init_sd;
        op.obs_sd = obs_sd;
        cfg.per_prompt.push_back(std::move(op));
    }
    return cfg;
}

PhysicsTeacher::PhysicsTeacher(PhysicsTeacherConfig cfg, std::string name)
    : cfg_(std::move(cfg)), name_(std::move(name)) {}

Video PhysicsTeacher::sample(Prompt prompt, Rng& rng) const {
    check_prompt(prompt.id);
    const OscillatorParams& op = cfg_.per_prompt[prompt.id];
    const Tensor A = op.transition();
    Video video;
    video.prompt_id = prompt.id;
    video.source = Source::teacher;
    Tensor x = op.init_mean + Tensor::randn(2, 1, rng, op.init_sd);
    video.blocks.push_back(x);
    for (int k = 1; k < cfg_.K; ++k) {
        x = matmul(A, x) + Tensor::randn(2, 1, rng, op.obs_sd);
        video.blocks.push_back(x);
    }
    return video;
}

double PhysicsTeacher::log_density(const Video& video, int prompt_id) const {
    check_prompt(prompt_id);
    if (video.K() != cfg_.K || video.d() != 2) throw InputError("physics log_density: geometry mismatch");
    const OscillatorParams& op = cfg_.per_prompt[prompt_id];
    const Tensor A = op.transition();
    double lp = log_isotropic(video.blocks[0], op.init_mean, op.init_sd);
    for (int k = 1; k < video.K(); ++k) {
        lp += log_isotropic(video.blocks[k], matmul(A, video.blocks[k - 1]), op.obs_sd);
    }
    return lp;
}

const OscillatorParams& PhysicsTeacher::dynamics(int prompt_id) const {
    check_prompt(prompt_id);
    return cfg_.per_prompt[prompt_id];
}

// ----------------------------- mixture -----------------------------

MixtureTeacher::MixtureTeacher(int K, int d, std::vector<MixturePrompt> prompts, std::string name)
    : K_(K), d_(d), prompts_(std::move(prompts)), name_(std::move(name)) {
    for (const MixturePrompt& mp : prompts_) {
        double total = 0.0;
        for (const MixtureComponent& c : mp.components) {
            if (c.mean.rows != K_ * d_ || c.mean.cols != 1) throw ConfigError("mixture mean has wrong shape");
            if (c.sd <= 0.0 || c.weight < 0.0) throw ConfigError("mixture component needs sd > 0, weight >= 0");
            total += c.weight;
        }
        if (std::abs(total - 1.0) > 1e-12) throw ConfigError("mixture weights must sum to 1");
    }
}

Video MixtureTeacher::sample(Prompt prompt, Rng& rng) const {
    check_prompt(prompt.id);
    const MixturePrompt& mp = prompts_[prompt.id];
    const double u = rng.uniform();
    double acc = 0.0;
    const MixtureComponent* chosen = &mp.components.back();
    for (const MixtureComponent& c : mp.components) {
        acc += c.weight;
        if (u < acc) {
            chosen = &c;
            break;
        }
    }
    Tensor flat = chosen->mean + Tensor::randn(K_ * d_, 1, rng, chosen->sd);
    Video video;
    video.prompt_id = prompt.id;
    video.source = Source::teacher;
    for (int k = 0; k < K_; ++k) {
        Tensor b(d_, 1);
        for (int i = 0; i < d_; ++i) b.data[i] = flat.data[k * d_ + i];
        video.blocks.push_back(std::move(b));
    }
    return video;
}

double MixtureTeacher::log_density(const Video& video, int prompt_id) const {
    check_prompt(prompt_id);
    if (video.K() != K_ || video.d() != d_) throw InputError("mixture log_density: geometry mismatch");
    const Tensor flat = video.flatten();
    std::vector<double> terms;
    for (const MixtureComponent& c : prompts_[prompt_id].components) {
        terms.push_back(std::log(c.weight) + log_isotropic(flat, c.mean, c.sd));
    }
    return logsumexp(terms);
}

const MixturePrompt& MixtureTeacher::mixture(int prompt_id) const {
    check_prompt(prompt_id);
    return prompts_[prompt_id];
}

// ----------------------------- hidden flow -----------------------------

namespace {

StudentGeometry hidden_geometry(const HiddenFlowConfig& cfg) {
    StudentGeometry g;
    g.K = 1;
    g.d = cfg.K * cfg.d;
    g.n_prompts = cfg.n_prompts;
    g.enc_dim = 8;
    g.temb_dim = 8;
    g.prompt_dim = 8;
    g.hidden = cfg.hidden;
    return g;
}

}  // namespace

Tensor HiddenFlowTeacher::target_mean(int prompt_id) const {
    check_prompt(prompt_id);
    const int n = cfg_.K * cfg_.d;
    Tensor mu(n, 1);
    for (int i = 0; i < n; ++i) {
        mu.data[i] = cfg_.target_mean_scale *
                     std::sin(2.0 * M_PI * prompt_id / cfg_.n_prompts + 0.4 * static_cast<double>(i));
    }
    return mu;
}

HiddenFlowTeacher HiddenFlowTeacher::pretrain(const HiddenFlowConfig& cfg, uint64_t seed) {
    HiddenFlowTeacher t;
    t.cfg_ = cfg;
    Rng init = Rng::seeded(seed).stream(0x11f);
    t.field_ = VelocityField(hidden_geometry(cfg), init);

    AdamW::Options opt;
    opt.lr = cfg.pretrain_lr;
    opt.weight_decay = 0.0;
    opt.clip_norm = 0.0;
    AdamW adam(opt);
    Rng rng = Rng::seeded(seed).stream(0x7f1);
    const Schedule sched = Schedule::rectified_flow();

    for (int step = 0; step < cfg.pretrain_steps; ++step) {
        std::vector<FmItem> batch;
        batch.reserve(cfg.pretrain_batch);
        for (int i = 0; i < cfg.pretrain_batch; ++i) {
            FmItem item;
            item.prompt_id = rng.uniform_int(cfg.n_prompts);
            item.x0 = t.target_mean(item.prompt_id) + Tensor::randn(cfg.K * cfg.d, 1, rng, cfg.target_sd);
            batch.push_back(std::move(item));
        }
        Tape tape;
        FieldBinding fb = t.field_.bind(tape);
        Value loss = fm_loss(tape, t.field_, fb, batch, sched, rng);
        tape.backward(loss);
        adam.step(t.field_.params(), tape.param_grads(t.field_.params()));
    }
    return t;
}

Video HiddenFlowTeacher::sample(Prompt prompt, Rng& rng) const {
    check_prompt(prompt.id);
    // jointly generates all K blocks in one non-causal pass
    Video flat_video = field_.rollout(prompt, 1, cfg_.sample_steps, rng);
    const Tensor& flat = flat_video.blocks[0];
    Video video;
    video.prompt_id = prompt.id;
    video.source = Source::teacher;
    for (int k = 0; k < cfg_.K; ++k) {
        Tensor b(cfg_.d, 1);
        for (int i = 0; i < cfg_.d; ++i) b.data[i] = flat.data[k * cfg_.d + i];
        video.blocks.push_back(std::move(b));
    }
    return video;
}

void HiddenFlowTeacher::save(const std::string& path) const {
    Checkpoint ck;
    nlohmann::json meta;
    meta["kind"] = "hidden_teacher";
    meta["schema_version"] = 1;
    meta["config"] = {{"K", cfg_.K},
                      {"d", cfg_.d},
                      {"n_prompts", cfg_.n_prompts},
                      {"hidden", cfg_.hidden},
                      {"sample_steps", cfg_.sample_steps},
                      {"pretrain_steps", cfg_.pretrain_steps},
                      {"pretrain_batch", cfg_.pretrain_batch},
                      {"pretrain_lr", cfg_.pretrain_lr},
                      {"target_mean_scale", cfg_.target_mean_scale},
                      {"target_sd", cfg_.target_sd}};
    ck.meta_json = meta.dump();
    ck.stores["field"] = field_.params();
    ck.save(path);
}

HiddenFlowTeacher HiddenFlowTeacher::load(const std::string& path) {
    Checkpoint ck = Checkpoint::load(path);
    nlohmann::json meta = nlohmann::json::parse(ck.meta_json);
    if (meta.value("kind", "") != "hidden_teacher") throw LoadError("not a hidden teacher checkpoint: " + path);
    HiddenFlowTeacher t;
    const auto& c = meta.at("config");
    t.cfg_.K = c.at("K").get<int>();
    t.cfg_.d = c.at("d").get<int>();
    t.cfg_.n_prompts = c.at("n_prompts").get<int>();
    t.cfg_.hidden = c.at("hidden").get<std::vector<int>>();
    t.cfg_.sample_steps = c.at("sample_steps").get<int>();
    t.cfg_.pretrain_steps = c.at("pretrain_steps").get<int>();
    t.cfg_.pretrain_batch = c.at("pretrain_batch").get<int>();
    t.cfg_.pretrain_lr = c.at("pretrain_lr").get<double>();
    t.cfg_.target_mean_scale = c.at("target_mean_scale").get<double>();
    t.cfg_.target_sd = c.at("target_sd").get<double>();

    Rng dummy = Rng::seeded(0);
    t.field_ = VelocityField(hidden_geometry(t.cfg_), dummy);
    const ParamStore& loaded = ck.stores.at("field");
    if (!t.field_.params().same_geometry(loaded)) throw LoadError("hidden teacher geometry mismatch: " + path);
    t.field_.params() = loaded;
    return t;
}

// ----------------------------- styled physics -----------------------------

StyledPhysicsTeacher::StyledPhysicsTeacher(std::shared_ptr<const PhysicsTeacher> base, Tensor warp, Tensor offset,
                                           double extra_sd)
    : base_(std::move(base)), warp_(std::move(warp)), offset_(std::move(offset)), extra_sd_(extra_sd) {
    if (warp_.rows != base_->d() || warp_.cols != base_->d() || offset_.rows != base_->d()) {
        throw ConfigError("styled teacher warp/offset shape mismatch");
    }
}

Video StyledPhysicsTeacher::sample(Prompt prompt, Rng& rng) const {
    Video video = base_->sample(prompt, rng);
    for (Tensor& b : video.blocks) {
        b = matmul(warp_, b) + offset_ + Tensor::randn(b.rows, 1, rng, extra_sd_);
    }
    return video;
}

// ----------------------------- query pool -----------------------------

TeacherPool::TeacherPool(std::shared_ptr<const Teacher> inner, int pool_size, uint64_t seed)
    : inner_(std::move(inner)), pool_size_(pool_size), seed_(seed) {
    if (pool_size_ < 1) throw ConfigError("teacher pool size must be >= 1");
}

const Video& TeacherPool::draw(int prompt_id, long long counter) const {
    const int index = static_cast<int>(counter % pool_size_);
    const auto key = std::make_pair(prompt_id, index);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
        Rng rng = Rng::seeded(seed_).stream(0x7ea, (static_cast<uint64_t>(prompt_id) << 24) ^
                                                       static_cast<uint64_t>(index));
        it = cache_.emplace(key, inner_->sample(Prompt{prompt_id}, rng)).first;
    }
    return it->second;
}

}  // namespace afd
