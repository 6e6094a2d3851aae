#include "afd/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "afd/errors.hpp"

namespace afd {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& scope) {
    if (!j.is_object()) throw ConfigError(scope + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) throw ConfigError(scope + ": unknown key '" + it.key() + "'");
    }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for '" + key + "'");
    }
}

StudentGeometry parse_geometry(const json& j) {
    reject_unknown(j, {"K", "d", "n_prompts", "enc_dim", "temb_dim", "prompt_dim", "hidden"}, "student");
    StudentGeometry g;
    g.K = get_or(j, "K", g.K);
    g.d = get_or(j, "d", g.d);
    g.n_prompts = get_or(j, "n_prompts", g.n_prompts);
    g.enc_dim = get_or(j, "enc_dim", g.enc_dim);
    g.temb_dim = get_or(j, "temb_dim", g.temb_dim);
    g.prompt_dim = get_or(j, "prompt_dim", g.prompt_dim);
    g.hidden = get_or(j, "hidden", g.hidden);
    return g;
}

json geometry_to_json(const StudentGeometry& g) {
    return {{"K", g.K},         {"d", g.d},           {"n_prompts", g.n_prompts}, {"enc_dim", g.enc_dim},
            {"temb_dim", g.temb_dim}, {"prompt_dim", g.prompt_dim}, {"hidden", g.hidden}};
}

TeacherSpec parse_teacher(const json& j) {
    reject_unknown(j,
                   {"kind", "omega_lo", "omega_hi", "decay", "init_radius", "init_sd", "obs_sd", "style_scale",
                    "style_rot", "style_offset", "style_extra_sd", "mixture_sd", "mixture_sep",
                    "hidden_checkpoint", "hidden_seed"},
                   "teacher");
    TeacherSpec t;
    t.kind = get_or<std::string>(j, "kind", t.kind);
    t.omega_lo = get_or(j, "omega_lo", t.omega_lo);
    t.omega_hi = get_or(j, "omega_hi", t.omega_hi);
    t.decay = get_or(j, "decay", t.decay);
    t.init_radius = get_or(j, "init_radius", t.init_radius);
    t.init_sd = get_or(j, "init_sd", t.init_sd);
    t.obs_sd = get_or(j, "obs_sd", t.obs_sd);
    t.style_scale = get_or(j, "style_scale", t.style_scale);
    t.style_rot = get_or(j, "style_rot", t.style_rot);
    t.style_offset = get_or(j, "style_offset", t.style_offset);
    t.style_extra_sd = get_or(j, "style_extra_sd", t.style_extra_sd);
    t.mixture_sd = get_or(j, "mixture_sd", t.mixture_sd);
    t.mixture_sep = get_or(j, "mixture_sep", t.mixture_sep);
    t.hidden_checkpoint = get_or<std::string>(j, "hidden_checkpoint", t.hidden_checkpoint);
    t.hidden_seed = get_or(j, "hidden_seed", t.hidden_seed);
    return t;
}

json teacher_to_json(const TeacherSpec& t) {
    return {{"kind", t.kind},
            {"omega_lo", t.omega_lo},
            {"omega_hi", t.omega_hi},
            {"decay", t.decay},
            {"init_radius", t.init_radius},
            {"init_sd", t.init_sd},
            {"obs_sd", t.obs_sd},
            {"style_scale", t.style_scale},
            {"style_rot", t.style_rot},
            {"style_offset", t.style_offset},
            {"style_extra_sd", t.style_extra_sd},
            {"mixture_sd", t.mixture_sd},
            {"mixture_sep", t.mixture_sep},
            {"hidden_checkpoint", t.hidden_checkpoint},
            {"hidden_seed", t.hidden_seed}};
}

AFDConfig parse_afd(const json& j) {
    reject_unknown(j, {"beta", "lambda_prior", "clip_max", "ema_decay"}, "afd");
    AFDConfig a;
    a.beta = get_or(j, "beta", a.beta);
    a.lambda_prior = get_or(j, "lambda_prior", a.lambda_prior);
    a.clip_max = get_or(j, "clip_max", a.clip_max);
    a.ema_decay = get_or(j, "ema_decay", a.ema_decay);
    return a;
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& j) {
    reject_unknown(j,
                   {"schema_version", "arm", "seed", "steps", "batch", "lr_student", "lr_disc", "disc_loss",
                    "afd", "student", "sample_steps", "rollout_policy", "schedule", "teacher",
                    "base_checkpoint", "teacher_pool", "checkpoint_every", "on_policy"},
                   "run config");
    RunConfig cfg;
    cfg.schema_version = get_or(j, "schema_version", 1);
    cfg.arm = arm_from_name(get_or<std::string>(j, "arm", "afd"));
    cfg.seed = get_or<uint64_t>(j, "seed", 0);
    cfg.steps = get_or(j, "steps", cfg.steps);
    cfg.batch = get_or(j, "batch", cfg.batch);
    cfg.lr_student = get_or(j, "lr_student", cfg.lr_student);
    cfg.lr_disc = get_or(j, "lr_disc", cfg.lr_disc);
    const std::string dl = get_or<std::string>(j, "disc_loss", "bt");
    if (dl == "bt") {
        cfg.disc_loss = DiscLoss::bt;
    } else if (dl == "gan") {
        cfg.disc_loss = DiscLoss::gan;
    } else {
        throw ConfigError("disc_loss must be 'bt' or 'gan'");
    }
    if (j.contains("afd")) cfg.afd = parse_afd(j.at("afd"));
    if (j.contains("student")) cfg.geom = parse_geometry(j.at("student"));
    cfg.sample_steps = get_or(j, "sample_steps", cfg.sample_steps);
    const std::string rp = get_or<std::string>(j, "rollout_policy", "live");
    if (rp == "live") {
        cfg.rollout_policy = RolloutPolicy::live;
    } else if (rp == "ema") {
        cfg.rollout_policy = RolloutPolicy::ema;
    } else {
        throw ConfigError("rollout_policy must be 'live' or 'ema'");
    }
    cfg.schedule = get_or<std::string>(j, "schedule", cfg.schedule);
    if (j.contains("teacher")) cfg.teacher = parse_teacher(j.at("teacher"));
    cfg.base_checkpoint = get_or<std::string>(j, "base_checkpoint", "");
    cfg.teacher_pool = get_or(j, "teacher_pool", cfg.teacher_pool);
    cfg.checkpoint_every = get_or(j, "checkpoint_every", cfg.checkpoint_every);
    if (j.contains("on_policy")) cfg.on_policy = j.at("on_policy").get<bool>();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse failure in " + path + ": " + e.what());
    }
    return parse_run_config(j);
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["schema_version"] = cfg.schema_version;
    j["arm"] = arm_name(cfg.arm);
    j["seed"] = cfg.seed;
    j["steps"] = cfg.steps;
    j["batch"] = cfg.batch;
    j["lr_student"] = cfg.lr_student;
    j["lr_disc"] = cfg.lr_disc;
    j["disc_loss"] = cfg.disc_loss == DiscLoss::bt ? "bt" : "gan";
    j["afd"] = {{"beta", cfg.afd.beta},
                {"lambda_prior", cfg.afd.lambda_prior},
                {"clip_max", cfg.afd.clip_max},
                {"ema_decay", cfg.afd.ema_decay}};
    j["student"] = geometry_to_json(cfg.geom);
    j["sample_steps"] = cfg.sample_steps;
    j["rollout_policy"] = cfg.rollout_policy == RolloutPolicy::live ? "live" : "ema";
    j["schedule"] = cfg.schedule;
    j["teacher"] = teacher_to_json(cfg.teacher);
    j["base_checkpoint"] = cfg.base_checkpoint;
    j["teacher_pool"] = cfg.teacher_pool;
    j["checkpoint_every"] = cfg.checkpoint_every;
    if (cfg.on_policy.has_value()) j["on_policy"] = *cfg.on_policy;
    return j;
}

PretrainConfig parse_pretrain_config(const nlohmann::json& j) {
    reject_unknown(j, {"schema_version", "student", "teacher", "steps", "batch", "lr", "seed", "schedule"},
                   "pretrain config");
    if (get_or(j, "schema_version", 1) != 1) throw ConfigError("unsupported schema_version");
    PretrainConfig cfg;
    if (j.contains("student")) cfg.geom = parse_geometry(j.at("student"));
    if (j.contains("teacher")) cfg.teacher = parse_teacher(j.at("teacher"));
    cfg.steps = get_or(j, "steps", cfg.steps);
    cfg.batch = get_or(j, "batch", cfg.batch);
    cfg.lr = get_or(j, "lr", cfg.lr);
    cfg.seed = get_or<uint64_t>(j, "seed", cfg.seed);
    cfg.schedule = get_or<std::string>(j, "schedule", cfg.schedule);
    if (cfg.steps < 0 || cfg.batch < 1 || cfg.lr < 0.0) throw ConfigError("bad pretrain settings");
    return cfg;
}

PretrainConfig load_pretrain_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse failure in " + path + ": " + e.what());
    }
    return parse_pretrain_config(j);
}

nlohmann::json pretrain_config_to_json(const PretrainConfig& cfg) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["student"] = geometry_to_json(cfg.geom);
    j["teacher"] = teacher_to_json(cfg.teacher);
    j["steps"] = cfg.steps;
    j["batch"] = cfg.batch;
    j["lr"] = cfg.lr;
    j["seed"] = cfg.seed;
    j["schedule"] = cfg.schedule;
    return j;
}

}  // namespace afd
