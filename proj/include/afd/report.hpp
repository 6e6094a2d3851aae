#pragma once

#include <string>
#include <vector>

#include "afd/eval.hpp"
#include "afd/trainer.hpp"

namespace afd {

struct RunResult {
    std::string dir;
    RunConfig cfg;
    std::vector<StepMetrics> metrics;
    PolicyEval final_live;
    PolicyEval final_ema;
};

// Full distillation run: writes config snapshot, per-step metrics CSV,
// cadenced checkpoints, final checkpoints and summary.json into out_dir.
// On a numerical abort the partial artifacts and an abort checkpoint are
// preserved before the error propagates.
RunResult run_distill(const RunConfig& cfg, const std::string& out_dir, const std::string& resume_from = "");

// Discriminator learning-rate sweep; one sub-run per rate with a shared
// seed, plus a reward-trajectory CSV and an overlay plot.
struct DiscLrAblation {
    std::vector<double> rates;
    std::vector<RunResult> runs;
    std::vector<double> terminal_reward;  // mean of mean_reward over the final quarter
    std::vector<double> terminal_weight;  // same for mean_w
};

DiscLrAblation run_disc_lr_ablation(RunConfig base_cfg, const std::vector<double>& rates,
                                    const std::string& out_dir);

// BT-vs-GAN discriminator loss comparison (same data, same seeds).
struct DiscLossAblation {
    RunResult bt;
    RunResult gan;
};

DiscLossAblation run_disc_loss_ablation(RunConfig base_cfg, const std::string& out_dir);

// Comparison tables and curves from completed run directories.
void write_report(const std::vector<std::string>& run_dirs, const std::string& out_dir);

// Terminal mean of a metric column over the final quarter of steps.
double terminal_mean(const std::vector<StepMetrics>& metrics, double StepMetrics::*field);

}  // namespace afd
