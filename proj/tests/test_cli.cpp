#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "afd/config.hpp"
#include "afd/errors.hpp"

using namespace afd;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
};

CliResult run_cli(const std::string& args) {
    static int counter = 0;
    const std::string log = (fs::temp_directory_path() / ("afd_cli_" + std::to_string(counter++) + ".log")).string();
    const std::string cmd = std::string(AFDLAB_BIN) + " " + args + " > " + log + " 2>&1";
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.code = WEXITSTATUS(raw);
    std::ifstream is(log);
    std::stringstream ss;
    ss << is.rdbuf();
    r.out = ss.str();
    fs::remove(log);
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path sandbox() {
    const fs::path dir = fs::temp_directory_path() / "afd_cli_sandbox";
    fs::create_directories(dir);
    return dir;
}

nlohmann::json tiny_run_json(const std::string& base_ckpt) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["arm"] = "afd";
    j["seed"] = 7;
    j["steps"] = 3;
    j["batch"] = 4;
    j["lr_student"] = 1e-4;
    j["lr_disc"] = 1e-4;
    j["student"] = {{"K", 3},        {"d", 2},          {"n_prompts", 2}, {"enc_dim", 4},
                    {"temb_dim", 4}, {"prompt_dim", 4}, {"hidden", {16}}};
    j["sample_steps"] = 2;
    j["teacher"] = {{"kind", "physics"}, {"omega_lo", 0.8}, {"omega_hi", 1.0}};
    j["teacher_pool"] = 8;
    j["checkpoint_every"] = 0;
    j["base_checkpoint"] = base_ckpt;
    return j;
}

nlohmann::json tiny_pretrain_json() {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["student"] = {{"K", 3},        {"d", 2},          {"n_prompts", 2}, {"enc_dim", 4},
                    {"temb_dim", 4}, {"prompt_dim", 4}, {"hidden", {16}}};
    j["teacher"] = {{"kind", "physics"}, {"omega_lo", 0.5}, {"omega_hi", 0.7}};
    j["steps"] = 30;
    j["batch"] = 8;
    j["lr"] = 1e-3;
    j["seed"] = 3;
    return j;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream os(path);
    os << j.dump(2) << '\n';
}

}  // namespace

TEST_CASE("config parsing: strict keys and round trip") {
    nlohmann::json j = tiny_run_json("base.ckpt");
    RunConfig cfg = parse_run_config(j);
    CHECK(cfg.arm == Arm::afd);
    CHECK(cfg.batch == 4);
    CHECK(cfg.geom.hidden == std::vector<int>{16});

    nlohmann::json round = run_config_to_json(cfg);
    RunConfig cfg2 = parse_run_config(round);
    CHECK(cfg2.seed == cfg.seed);
    CHECK(cfg2.teacher.omega_lo == cfg.teacher.omega_lo);

    j["misspelled_key"] = 1;
    CHECK_THROWS_AS(parse_run_config(j), ConfigError);

    nlohmann::json j2 = tiny_run_json("base.ckpt");
    j2["teacher"]["typo"] = true;
    CHECK_THROWS_AS(parse_run_config(j2), ConfigError);

    nlohmann::json j3 = tiny_run_json("base.ckpt");
    j3["disc_loss"] = "hinge";
    CHECK_THROWS_AS(parse_run_config(j3), ConfigError);
}

TEST_CASE("cli: pretrain then distill produces a deterministic run directory") {
    const fs::path dir = sandbox();
    write_json(dir / "pretrain.json", tiny_pretrain_json());
    const std::string base = (dir / "base.ckpt").string();

    CliResult pre = run_cli("pretrain --config " + (dir / "pretrain.json").string() + " --out " + base);
    CHECK(pre.code == 0);
    CHECK(fs::exists(base));

    write_json(dir / "run.json", tiny_run_json(base));
    const std::string out1 = (dir / "run1").string();
    const std::string out2 = (dir / "run2").string();
    CliResult r1 = run_cli("distill --config " + (dir / "run.json").string() + " --out " + out1);
    CHECK(r1.code == 0);
    CHECK(fs::exists(out1 + "/config.json"));
    CHECK(fs::exists(out1 + "/metrics.csv"));
    CHECK(fs::exists(out1 + "/summary.json"));
    CHECK(fs::exists(out1 + "/student_final.ckpt"));

    // identical config and seed: bit-identical metrics
    CliResult r2 = run_cli("distill --config " + (dir / "run.json").string() + " --out " + out2);
    CHECK(r2.code == 0);
    CHECK(slurp(out1 + "/metrics.csv") == slurp(out2 + "/metrics.csv"));

    // metrics rows: header + one per step
    std::istringstream csv(slurp(out1 + "/metrics.csv"));
    std::string line;
    int lines = 0;
    while (std::getline(csv, line)) ++lines;
    CHECK(lines == 4);

    // report over the finished run: single-row table plus header
    const std::string rep = (dir / "report").string();
    CliResult rr = run_cli("report --out " + rep + " " + out1);
    CHECK(rr.code == 0);
    std::istringstream table(slurp(rep + "/table.csv"));
    int table_lines = 0;
    while (std::getline(table, line)) ++table_lines;
    CHECK(table_lines == 2);
}

TEST_CASE("cli: validation failures exit with code 1") {
    const fs::path dir = sandbox();

    // unknown key in the config
    nlohmann::json bad = tiny_run_json("missing.ckpt");
    bad["not_a_key"] = 5;
    write_json(dir / "bad.json", bad);
    CliResult r = run_cli("distill --config " + (dir / "bad.json").string() + " --out " + (dir / "x").string());
    CHECK(r.code == 1);
    CHECK(r.out.find("unknown key") != std::string::npos);

    // sft with the on-policy flag set contradicts the arm
    nlohmann::json contra = tiny_run_json("missing.ckpt");
    contra["arm"] = "sft";
    contra["on_policy"] = true;
    write_json(dir / "contra.json", contra);
    CliResult r2 =
        run_cli("distill --config " + (dir / "contra.json").string() + " --out " + (dir / "y").string());
    CHECK(r2.code == 1);

    // missing run directory for report
    CliResult r3 = run_cli("report --out " + (dir / "rep2").string() + " " + (dir / "no_such_run").string());
    CHECK(r3.code == 1);

    // missing base checkpoint path
    nlohmann::json nob = tiny_run_json("");
    write_json(dir / "nob.json", nob);
    CliResult r4 = run_cli("distill --config " + (dir / "nob.json").string() + " --out " + (dir / "z").string());
    CHECK(r4.code == 1);
}

TEST_CASE("cli: verify subcommand selectors and exit codes") {
    // fast suites pass
    CliResult ok = run_cli("verify --suite reverse-kl --data " + std::string(AFDLAB_DATA_DIR));
    CHECK(ok.code == 0);
    CHECK(ok.out.find("[pass] reverse-kl") != std::string::npos);
    // selector runs only the selected check
    CHECK(ok.out.find("algebra") == std::string::npos);

    CliResult alg = run_cli("verify --suite algebra");
    CHECK(alg.code == 0);
    CHECK(alg.out.find("[pass] algebra") != std::string::npos);

    const fs::path dir = sandbox();
    // corrupted (negative) tolerance: configuration error, exit 1
    write_json(dir / "tol_bad.json", nlohmann::json{{"reverse_kl_tv", -0.5}});
    CliResult bad = run_cli("verify --suite reverse-kl --data " + std::string(AFDLAB_DATA_DIR) + " --config " +
                            (dir / "tol_bad.json").string());
    CHECK(bad.code == 1);

    // absurdly tight tolerance: genuine verification failure, exit 3
    write_json(dir / "tol_tight.json", nlohmann::json{{"reverse_kl_tv", 1e-300}});
    CliResult tight = run_cli("verify --suite reverse-kl --data " + std::string(AFDLAB_DATA_DIR) + " --config " +
                              (dir / "tol_tight.json").string());
    CHECK(tight.code == 3);
    CHECK(tight.out.find("FAIL") != std::string::npos);
}

TEST_CASE("cli: distill resume continues in place") {
    const fs::path dir = sandbox();
    write_json(dir / "pretrain2.json", tiny_pretrain_json());
    const std::string base = (dir / "base2.ckpt").string();
    CHECK(run_cli("pretrain --config " + (dir / "pretrain2.json").string() + " --out " + base).code == 0);

    nlohmann::json j = tiny_run_json(base);
    j["steps"] = 4;
    j["checkpoint_every"] = 2;
    write_json(dir / "run_resume.json", j);

    const std::string full = (dir / "full").string();
    CHECK(run_cli("distill --config " + (dir / "run_resume.json").string() + " --out " + full).code == 0);

    // run to completion once, then replay the tail from the mid checkpoint
    const std::string half = (dir / "half").string();
    nlohmann::json j2 = j;
    j2["steps"] = 2;
    write_json(dir / "run_half.json", j2);
    CHECK(run_cli("distill --config " + (dir / "run_half.json").string() + " --out " + half).code == 0);

    const std::string resumed = (dir / "resumed").string();
    CHECK(run_cli("distill --config " + (dir / "run_resume.json").string() + " --out " + resumed + " --resume " +
                  half + "/state_final.ckpt")
              .code == 0);

    // the resumed segment reproduces rows 2..3 of the straight run
    std::istringstream full_csv(slurp(full + "/metrics.csv"));
    std::vector<std::string> full_rows;
    std::string line;
    while (std::getline(full_csv, line)) full_rows.push_back(line);
    std::istringstream res_csv(slurp(resumed + "/metrics.csv"));
    std::vector<std::string> res_rows;
    while (std::getline(res_csv, line)) res_rows.push_back(line);
    REQUIRE(full_rows.size() == 5);  // header + 4
    REQUIRE(res_rows.size() == 2);   // resumed tail only
    CHECK(res_rows[0] == full_rows[3]);
    CHECK(res_rows[1] == full_rows[4]);
}
