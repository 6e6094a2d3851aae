#include "afd/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "afd/config.hpp"
#include "afd/errors.hpp"
#include "afd/svg.hpp"

namespace fs = std::filesystem;

namespace afd {

namespace {

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot write: " + path);
    os << text;
}

nlohmann::json policy_eval_json(const PolicyEval& pe) {
    return {{"sliced_wasserstein", pe.sliced_w},
            {"physics_residual", pe.residual},
            {"teacher_residual", pe.teacher_residual}};
}

PolicyEval run_policy_eval(const Trainer& trainer, const VelocityField& field) {
    Rng rng = Rng::seeded(trainer.config().seed ^ 0xe7a7);
    return evaluate_policy(field, trainer.teacher(), trainer.config().sample_steps, 160, 64, rng);
}

std::string lr_tag(double rate) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", rate);
    std::string s(buf);
    for (char& c : s) {
        if (c == '.' || c == '-' || c == '+') c = '_';
    }
    return s;
}

}  // namespace

double terminal_mean(const std::vector<StepMetrics>& metrics, double StepMetrics::*field) {
    if (metrics.empty()) throw InputError("terminal_mean: no metrics");
    const size_t start = metrics.size() - std::max<size_t>(1, metrics.size() / 4);
    double s = 0.0;
    for (size_t i = start; i < metrics.size(); ++i) s += metrics[i].*field;
    return s / static_cast<double>(metrics.size() - start);
}

RunResult run_distill(const RunConfig& cfg, const std::string& out_dir, const std::string& resume_from) {
    cfg.validate();
    fs::create_directories(out_dir);

    RunResult result;
    result.dir = out_dir;
    result.cfg = cfg;

    write_text(out_dir + "/config.json", run_config_to_json(cfg).dump(2) + "\n");

    Trainer trainer(cfg);
    const bool resuming = !resume_from.empty();
    if (resuming) trainer.load_state(resume_from);

    std::ofstream csv(out_dir + "/metrics.csv", resuming ? std::ios::app : std::ios::out);
    if (!csv) throw InputError("cannot write metrics: " + out_dir);
    if (!resuming) csv << StepMetrics::csv_header() << '\n';

    try {
        while (trainer.state().step < cfg.steps) {
            StepMetrics m = trainer.step();
            result.metrics.push_back(m);
            csv << m.csv_row() << '\n';
            if (cfg.checkpoint_every > 0 && trainer.state().step % cfg.checkpoint_every == 0 &&
                trainer.state().step < cfg.steps) {
                char name[64];
                std::snprintf(name, sizeof(name), "/state_%06lld.ckpt", trainer.state().step);
                trainer.save_state(out_dir + name);
            }
        }
    } catch (const NumericalError&) {
        csv.flush();
        trainer.save_state(out_dir + "/state_abort.ckpt");
        throw;
    }
    csv.flush();

    trainer.save_state(out_dir + "/state_final.ckpt");
    save_field_checkpoint(trainer.state().field, out_dir + "/student_final.ckpt");
    save_field_checkpoint(trainer.ema_field(), out_dir + "/ema_final.ckpt");

    result.final_live = run_policy_eval(trainer, trainer.state().field);
    result.final_ema = run_policy_eval(trainer, trainer.ema_field());

    nlohmann::json summary;
    summary["arm"] = arm_name(cfg.arm);
    summary["seed"] = cfg.seed;
    summary["steps"] = cfg.steps;
    summary["live"] = policy_eval_json(result.final_live);
    summary["ema"] = policy_eval_json(result.final_ema);
    if (!result.metrics.empty()) {
        summary["terminal_mean_reward"] = terminal_mean(result.metrics, &StepMetrics::mean_reward);
        summary["terminal_mean_w"] = terminal_mean(result.metrics, &StepMetrics::mean_w);
        summary["final_disc_loss"] = result.metrics.back().disc_loss;
        summary["final_student_loss"] = result.metrics.back().student_loss;
    }
    write_text(out_dir + "/summary.json", summary.dump(2) + "\n");
    return result;
}

DiscLrAblation run_disc_lr_ablation(RunConfig base_cfg, const std::vector<double>& rates,
                                    const std::string& out_dir) {
    if (rates.empty()) throw ConfigError("disc-lr ablation needs a nonempty rate list");
    fs::create_directories(out_dir);
    DiscLrAblation ab;
    ab.rates = rates;
    for (double rate : rates) {
        RunConfig cfg = base_cfg;
        cfg.lr_disc = rate;
        ab.runs.push_back(run_distill(cfg, out_dir + "/lr_" + lr_tag(rate)));
        ab.terminal_reward.push_back(terminal_mean(ab.runs.back().metrics, &StepMetrics::mean_reward));
        ab.terminal_weight.push_back(terminal_mean(ab.runs.back().metrics, &StepMetrics::mean_w));
    }

    // long-form reward trajectories
    std::ostringstream series;
    series << "lr_disc,step,mean_reward,mean_w\n";
    for (size_t r = 0; r < rates.size(); ++r) {
        for (const StepMetrics& m : ab.runs[r].metrics) {
            series << g17(rates[r]) << ',' << m.step << ',' << g17(m.mean_reward) << ',' << g17(m.mean_w)
                   << '\n';
        }
    }
    write_text(out_dir + "/reward_series.csv", series.str());

    std::vector<PlotSeries> plot;
    for (size_t r = 0; r < rates.size(); ++r) {
        PlotSeries s;
        s.label = "lr_D=" + lr_tag(rates[r]);
        for (const StepMetrics& m : ab.runs[r].metrics) {
            s.xs.push_back(static_cast<double>(m.step));
            s.ys.push_back(m.mean_reward);
        }
        plot.push_back(std::move(s));
    }
    write_line_plot(out_dir + "/reward_curves.svg", "discriminator reward on rollouts", "step", "mean reward",
                    plot);

    nlohmann::json summary;
    for (size_t r = 0; r < rates.size(); ++r) {
        summary["arms"].push_back({{"lr_disc", rates[r]},
                                   {"terminal_mean_reward", ab.terminal_reward[r]},
                                   {"terminal_mean_w", ab.terminal_weight[r]}});
    }
    write_text(out_dir + "/ablation_summary.json", summary.dump(2) + "\n");
    return ab;
}

DiscLossAblation run_disc_loss_ablation(RunConfig base_cfg, const std::string& out_dir) {
    fs::create_directories(out_dir);
    DiscLossAblation ab;
    RunConfig bt_cfg = base_cfg;
    bt_cfg.disc_loss = DiscLoss::bt;
    ab.bt = run_distill(bt_cfg, out_dir + "/bt");
    RunConfig gan_cfg = base_cfg;
    gan_cfg.disc_loss = DiscLoss::gan;
    ab.gan = run_distill(gan_cfg, out_dir + "/gan");

    nlohmann::json summary;
    summary["bt"] = {{"physics_residual", ab.bt.final_ema.residual},
                     {"sliced_wasserstein", ab.bt.final_ema.sliced_w}};
    summary["gan"] = {{"physics_residual", ab.gan.final_ema.residual},
                      {"sliced_wasserstein", ab.gan.final_ema.sliced_w}};
    write_text(out_dir + "/ablation_summary.json", summary.dump(2) + "\n");

    std::vector<PlotSeries> plot(2);
    plot[0].label = "bt";
    plot[1].label = "gan";
    for (const StepMetrics& m : ab.bt.metrics) {
        plot[0].xs.push_back(static_cast<double>(m.step));
        plot[0].ys.push_back(m.disc_loss);
    }
    for (const StepMetrics& m : ab.gan.metrics) {
        plot[1].xs.push_back(static_cast<double>(m.step));
        plot[1].ys.push_back(m.disc_loss);
    }
    write_line_plot(out_dir + "/disc_loss_curves.svg", "discriminator loss, bt vs gan", "step", "loss", plot);
    return ab;
}

void write_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
    if (run_dirs.empty()) throw InputError("report: no run directories given");
    fs::create_directories(out_dir);

    struct Row {
        std::string dir;
        nlohmann::json summary;
        nlohmann::json config;
    };
    std::vector<Row> rows;
    for (const std::string& dir : run_dirs) {
        Row row;
        row.dir = dir;
        std::ifstream s(dir + "/summary.json");
        std::ifstream c(dir + "/config.json");
        if (!s || !c) throw InputError("report: missing run artifacts in " + dir);
        s >> row.summary;
        c >> row.config;
        rows.push_back(std::move(row));
    }

    std::ostringstream csv;
    csv << "run,arm,seed,steps,sliced_wasserstein_ema,physics_residual_ema,sliced_wasserstein_live,"
           "physics_residual_live,terminal_mean_reward\n";
    std::ostringstream txt;
    txt << "run  arm  sw(ema)  residual(ema)  sw(live)  residual(live)\n";
    for (const Row& row : rows) {
        const auto& ema = row.summary.at("ema");
        const auto& live = row.summary.at("live");
        csv << row.dir << ',' << row.summary.at("arm").get<std::string>() << ','
            << row.summary.at("seed").get<uint64_t>() << ',' << row.summary.at("steps").get<int>() << ','
            << g17(ema.at("sliced_wasserstein").get<double>()) << ','
            << g17(ema.at("physics_residual").get<double>()) << ','
            << g17(live.at("sliced_wasserstein").get<double>()) << ','
            << g17(live.at("physics_residual").get<double>()) << ','
            << g17(row.summary.value("terminal_mean_reward", 0.0)) << '\n';
        char line[256];
        std::snprintf(line, sizeof(line), "%s  %s  %.4f  %.4f  %.4f  %.4f\n", row.dir.c_str(),
                      row.summary.at("arm").get<std::string>().c_str(),
                      ema.at("sliced_wasserstein").get<double>(), ema.at("physics_residual").get<double>(),
                      live.at("sliced_wasserstein").get<double>(), live.at("physics_residual").get<double>());
        txt << line;
    }
    write_text(out_dir + "/table.csv", csv.str());
    write_text(out_dir + "/table.txt", txt.str());

    // loss and reward curves across runs
    std::vector<PlotSeries> reward_plot;
    std::vector<PlotSeries> loss_plot;
    for (const Row& row : rows) {
        std::ifstream ms(row.dir + "/metrics.csv");
        if (!ms) continue;
        PlotSeries rs, ls;
        rs.label = ls.label = row.summary.at("arm").get<std::string>() + ":" + row.dir;
        std::string line;
        std::getline(ms, line);  // header
        while (std::getline(ms, line)) {
            std::istringstream ls_in(line);
            std::string tok;
            std::vector<std::string> cols;
            while (std::getline(ls_in, tok, ',')) cols.push_back(tok);
            if (cols.size() < 10) continue;
            const double step = std::stod(cols[0]);
            rs.xs.push_back(step);
            rs.ys.push_back(std::stod(cols[6]));
            ls.xs.push_back(step);
            ls.ys.push_back(std::stod(cols[3]));
        }
        reward_plot.push_back(std::move(rs));
        loss_plot.push_back(std::move(ls));
    }
    if (!reward_plot.empty()) {
        write_line_plot(out_dir + "/reward_curves.svg", "mean reward", "step", "mean reward", reward_plot);
        write_line_plot(out_dir + "/loss_curves.svg", "student loss", "step", "loss", loss_plot);
    }
}

}  // namespace afd
