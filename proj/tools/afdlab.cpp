#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "afd/config.hpp"
#include "afd/errors.hpp"
#include "afd/eval.hpp"
#include "afd/report.hpp"
#include "afd/trainer.hpp"

namespace {

using namespace afd;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitVerification = 3;

struct CommonOpts {
    std::string config;
    std::string out;
    std::string arm;
    int steps = -1;
    long long seed = -1;
};

void apply_overrides(RunConfig& cfg, const CommonOpts& opts) {
    if (!opts.arm.empty()) cfg.arm = arm_from_name(opts.arm);
    if (opts.steps >= 0) cfg.steps = opts.steps;
    if (opts.seed >= 0) cfg.seed = static_cast<uint64_t>(opts.seed);
}

int cmd_pretrain(const CommonOpts& opts) {
    if (opts.config.empty() || opts.out.empty()) throw ConfigError("pretrain needs --config and --out");
    PretrainConfig cfg = load_pretrain_config(opts.config);
    if (opts.steps >= 0) cfg.steps = opts.steps;
    if (opts.seed >= 0) cfg.seed = static_cast<uint64_t>(opts.seed);
    VelocityField field = pretrain_student(cfg);
    std::filesystem::create_directories(std::filesystem::path(opts.out).parent_path().string().empty()
                                            ? "."
                                            : std::filesystem::path(opts.out).parent_path().string());
    save_field_checkpoint(field, opts.out);
    std::printf("pretrained student written to %s\n", opts.out.c_str());
    return kExitOk;
}

int cmd_distill(const CommonOpts& opts, const std::string& resume) {
    if (opts.config.empty() || opts.out.empty()) throw ConfigError("distill needs --config and --out");
    RunConfig cfg = load_run_config(opts.config);
    apply_overrides(cfg, opts);
    RunResult result = run_distill(cfg, opts.out, resume);
    std::printf("run complete: %s (sw_ema=%.4f residual_ema=%.4f)\n", result.dir.c_str(),
                result.final_ema.sliced_w, result.final_ema.residual);
    return kExitOk;
}

int cmd_ablate_disc_lr(const CommonOpts& opts, const std::string& rates_text) {
    if (opts.config.empty() || opts.out.empty()) throw ConfigError("ablate-disc-lr needs --config and --out");
    RunConfig cfg = load_run_config(opts.config);
    apply_overrides(cfg, opts);
    std::vector<double> rates;
    std::stringstream ss(rates_text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) rates.push_back(std::stod(tok));
    }
    DiscLrAblation ab = run_disc_lr_ablation(cfg, rates, opts.out);
    for (size_t r = 0; r < ab.rates.size(); ++r) {
        std::printf("lr_disc=%-8g terminal mean reward %.4f, mean w %.4f\n", ab.rates[r],
                    ab.terminal_reward[r], ab.terminal_weight[r]);
    }
    return kExitOk;
}

int cmd_ablate_disc_loss(const CommonOpts& opts) {
    if (opts.config.empty() || opts.out.empty()) throw ConfigError("ablate-disc-loss needs --config and --out");
    RunConfig cfg = load_run_config(opts.config);
    apply_overrides(cfg, opts);
    DiscLossAblation ab = run_disc_loss_ablation(cfg, opts.out);
    std::printf("bt : residual=%.4f sw=%.4f\n", ab.bt.final_ema.residual, ab.bt.final_ema.sliced_w);
    std::printf("gan: residual=%.4f sw=%.4f\n", ab.gan.final_ema.residual, ab.gan.final_ema.sliced_w);
    return kExitOk;
}

VerifyTolerances load_tolerances(const std::string& path) {
    VerifyTolerances tol;
    if (path.empty()) return tol;
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open tolerance config: " + path);
    nlohmann::json j = nlohmann::json::parse(is, nullptr, true);
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k == "ratio_max_err") {
            tol.ratio_max_err = it.value().get<double>();
        } else if (k == "ratio_zero_err") {
            tol.ratio_zero_err = it.value().get<double>();
        } else if (k == "tilt_exact_err") {
            tol.tilt_exact_err = it.value().get<double>();
        } else if (k == "tilt_trained_tv") {
            tol.tilt_trained_tv = it.value().get<double>();
        } else if (k == "cond_velocity_err") {
            tol.cond_velocity_err = it.value().get<double>();
        } else if (k == "reverse_kl_tv") {
            tol.reverse_kl_tv = it.value().get<double>();
        } else {
            throw ConfigError("tolerances: unknown key '" + k + "'");
        }
    }
    tol.validate();
    return tol;
}

int cmd_verify(const std::string& suite, const std::string& data_dir, const std::string& tol_config,
               long long seed_opt) {
    const VerifyTolerances tol = load_tolerances(tol_config);
    tol.validate();
    const uint64_t seed = seed_opt >= 0 ? static_cast<uint64_t>(seed_opt) : 20240901ull;
    bool all_pass = true;
    auto line = [&](const std::string& name, bool pass, const std::string& detail) {
        std::printf("[%s] %-22s %s\n", pass ? "pass" : "FAIL", name.c_str(), detail.c_str());
        all_pass = all_pass && pass;
    };
    auto wants = [&](const std::string& name) { return suite == "all" || suite == name; };
    char buf[256];

    if (wants("algebra")) {
        AlgebraReport r = verify_vpm_algebra(seed);
        std::snprintf(buf, sizeof(buf),
                      "value_err=%.3g grad_ratio_err=%.3g/%.3g neutral_norm=%.3g sg_composite=%.3g",
                      r.value_err, r.plus_ratio_err, r.minus_ratio_err, r.neutral_grad_norm,
                      r.sg_composite_err);
        line("algebra", r.pass, buf);
    }
    if (wants("gradcheck")) {
        GradCheckSuiteReport r = verify_grad_checks(seed);
        std::snprintf(buf, sizeof(buf), "worst=%.3g (%s), tol 0.0001", r.worst, r.worst_loss.c_str());
        line("gradcheck", r.pass, buf);
    }
    if (wants("ratio")) {
        RatioRecoveryReport r = verify_ratio_recovery(tol, seed);
        std::snprintf(buf, sizeof(buf), "max_err=%.4f (tol %.2f) zero=%.4f (tol %.2f) mixture=%.4f (tol 0.15)",
                      r.max_abs_err, tol.ratio_max_err, r.max_abs_zero, tol.ratio_zero_err, r.mixture_max_err);
        line("ratio-recovery", r.pass, buf);
    }
    if (wants("tilted")) {
        bool pass = true;
        std::string detail;
        for (const std::string toy_name : {"toy8_a", "toy8_b"}) {
            DiscreteToy toy = DiscreteToy::load(data_dir + "/" + toy_name + ".json");
            TiltedLawReport r = verify_tilted_law(toy, tol, seed);
            std::snprintf(buf, sizeof(buf), "%s: exact=%.3g tv=%.4f (tol %.2f)  ", toy_name.c_str(),
                          r.exact_max_err, r.trained_tv, tol.tilt_trained_tv);
            detail += buf;
            pass = pass && r.pass;
        }
        line("tilted-law", pass, detail);
    }
    if (wants("velocity")) {
        bool pass = true;
        std::string detail;
        for (const std::string toy_name : {"support2", "support4"}) {
            SupportToy toy = SupportToy::load(data_dir + "/" + toy_name + ".json");
            CondVelocityReport r = verify_conditional_velocity(toy, tol, seed);
            std::snprintf(buf, sizeof(buf), "%s: max_err=%.4f over %d pts (tol %.2f)  ", toy_name.c_str(),
                          r.max_abs_err, r.grid_points, tol.cond_velocity_err);
            detail += buf;
            pass = pass && r.pass;
        }
        line("conditional-velocity", pass, detail);
    }
    if (wants("reverse-kl")) {
        bool pass = true;
        std::string detail;
        for (const std::string toy_name : {"toy8_a", "toy8_b"}) {
            DiscreteToy toy = DiscreteToy::load(data_dir + "/" + toy_name + ".json");
            ReverseKlReport r = verify_reverse_kl(toy, tol, seed);
            std::snprintf(buf, sizeof(buf), "%s: tv=%.2e (tol %.0e) gap=%.2e spread=%.2e  ", toy_name.c_str(),
                          r.argmax_tv, tol.reverse_kl_tv, r.grid_gap, r.identity_spread);
            detail += buf;
            pass = pass && r.pass;
        }
        line("reverse-kl", pass, detail);
    }
    return all_pass ? kExitOk : kExitVerification;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& out) {
    if (out.empty()) throw ConfigError("report needs --out");
    write_report(dirs, out);
    std::printf("report written to %s\n", out.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale adversarial flow distillation lab"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string resume;
    std::string rates = "0,1e-6,5e-6,1e-5,5e-5";
    std::string suite = "all";
    std::string data_dir = "data/toys";
    std::string tol_config;
    std::vector<std::string> report_dirs;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        if (needs_config) cmd->add_option("--config", opts.config, "configuration file (json)");
        cmd->add_option("--out", opts.out, "output path");
        cmd->add_option("--seed", opts.seed, "seed override");
        cmd->add_option("--steps", opts.steps, "step-count override");
    };

    CLI::App* pretrain = app.add_subcommand("pretrain", "train a base student by flow matching");
    add_common(pretrain, true);

    CLI::App* distill = app.add_subcommand("distill", "run one distillation arm");
    add_common(distill, true);
    distill->add_option("--arm", opts.arm, "arm override: base|sft|gan|dmd_scaffold|afd");
    distill->add_option("--resume", resume, "resume from a train-state checkpoint");

    CLI::App* ablate_lr = app.add_subcommand("ablate-disc-lr", "discriminator learning-rate sweep");
    add_common(ablate_lr, true);
    ablate_lr->add_option("--rates", rates, "comma-separated learning rates");

    CLI::App* ablate_loss = app.add_subcommand("ablate-disc-loss", "bt vs gan discriminator loss");
    add_common(ablate_loss, true);

    CLI::App* verify = app.add_subcommand("verify", "run the analytic verification suites");
    verify->add_option("--suite", suite, "all|algebra|gradcheck|ratio|tilted|velocity|reverse-kl");
    verify->add_option("--data", data_dir, "directory with toy instance files");
    verify->add_option("--config", tol_config, "tolerance overrides (json)");
    verify->add_option("--seed", opts.seed, "seed override");

    CLI::App* report = app.add_subcommand("report", "comparison tables and curves from run dirs");
    report->add_option("--out", opts.out, "output directory");
    report->add_option("dirs", report_dirs, "completed run directories");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (pretrain->parsed()) return cmd_pretrain(opts);
        if (distill->parsed()) return cmd_distill(opts, resume);
        if (ablate_lr->parsed()) return cmd_ablate_disc_lr(opts, rates);
        if (ablate_loss->parsed()) return cmd_ablate_disc_loss(opts);
        if (verify->parsed()) return cmd_verify(suite, data_dir, tol_config, opts.seed);
        if (report->parsed()) return cmd_report(report_dirs, opts.out);
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitValidation;
    }
    return kExitOk;
}
