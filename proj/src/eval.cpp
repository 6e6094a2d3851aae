#include "afd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "afd/errors.hpp"

namespace afd {

double wasserstein1_1d(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw InputError("wasserstein1_1d: empty sample set");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    // integrate |Fa^{-1}(q) - Fb^{-1}(q)| over q by walking both quantile steps
    const size_t n = a.size();
    const size_t m = b.size();
    size_t i = 0;
    size_t j = 0;
    double q = 0.0;
    double total = 0.0;
    while (i < n && j < m) {
        const double qa = static_cast<double>(i + 1) / static_cast<double>(n);
        const double qb = static_cast<double>(j + 1) / static_cast<double>(m);
        const double qn = std::min(qa, qb);
        total += (qn - q) * std::abs(a[i] - b[j]);
        q = qn;
        if (qa <= qn) ++i;
        if (qb <= qn) ++j;
    }
    return total;
}

double sliced_wasserstein(const std::vector<Tensor>& a, const std::vector<Tensor>& b, int n_projections, Rng& rng) {
    if (a.empty() || b.empty()) throw InputError("sliced_wasserstein: empty sample set");
    const int dim = a[0].rows;
    for (const Tensor& t : a) {
        if (t.rows != dim || t.cols != 1) throw InputError("sliced_wasserstein: dimension mismatch in a");
    }
    for (const Tensor& t : b) {
        if (t.rows != dim || t.cols != 1) throw InputError("sliced_wasserstein: dimension mismatch in b");
    }
    double total = 0.0;
    std::vector<double> pa(a.size());
    std::vector<double> pb(b.size());
    for (int p = 0; p < n_projections; ++p) {
        Tensor u = Tensor::randn(dim, 1, rng);
        const double norm = std::sqrt(squared_norm(u));
        for (double& x : u.data) x /= norm;
        for (size_t i = 0; i < a.size(); ++i) pa[i] = dot(u, a[i]);
        for (size_t i = 0; i < b.size(); ++i) pb[i] = dot(u, b[i]);
        total += wasserstein1_1d(pa, pb);
    }
    return total / static_cast<double>(n_projections);
}

double physics_residual(const Video& video, const OscillatorParams& dynamics) {
    if (video.K() < 2) throw InputError("physics_residual: need at least 2 blocks");
    const Tensor A = dynamics.transition();
    double sq = 0.0;
    for (int k = 1; k < video.K(); ++k) {
        Tensor r = video.blocks[k] - matmul(A, video.blocks[k - 1]);
        sq += squared_norm(r);
    }
    return sq / (static_cast<double>(video.K() - 1) * video.d());
}

void VerifyTolerances::validate() const {
    const double all[] = {ratio_max_err, ratio_zero_err, tilt_exact_err,
                          tilt_trained_tv, cond_velocity_err, reverse_kl_tv};
    for (double t : all) {
        if (!(t > 0.0)) throw ConfigError("verification tolerances must be positive");
    }
}

// ----------------------------- toy instances -----------------------------

void DiscreteToy::validate() const {
    if (outcomes.empty() || outcomes.size() > 32) throw ConfigError("discrete toy needs 1..32 outcomes");
    if (pi_theta.size() != outcomes.size() || pi_T.size() != outcomes.size()) {
        throw ConfigError("discrete toy: table sizes disagree");
    }
    double st = 0.0;
    double sT = 0.0;
    for (size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].rows != d || outcomes[i].cols != 1) throw ConfigError("discrete toy: outcome shape");
        if (pi_theta[i] <= 0.0 || pi_T[i] <= 0.0) throw ConfigError("discrete toy: probabilities must be > 0");
        st += pi_theta[i];
        sT += pi_T[i];
    }
    if (std::abs(st - 1.0) > 1e-9 || std::abs(sT - 1.0) > 1e-9) {
        throw ConfigError("discrete toy: tables must sum to 1");
    }
}

DiscreteToy DiscreteToy::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw LoadError("cannot open toy file: " + path);
    nlohmann::json j = nlohmann::json::parse(is);
    DiscreteToy toy;
    toy.d = j.at("d").get<int>();
    for (const auto& o : j.at("outcomes")) toy.outcomes.push_back(Tensor::column(o.get<std::vector<double>>()));
    toy.pi_theta = j.at("pi_theta").get<std::vector<double>>();
    toy.pi_T = j.at("pi_T").get<std::vector<double>>();
    toy.validate();
    return toy;
}

void DiscreteToy::save(const std::string& path) const {
    nlohmann::json j;
    j["d"] = d;
    for (const Tensor& o : outcomes) j["outcomes"].push_back(o.data);
    j["pi_theta"] = pi_theta;
    j["pi_T"] = pi_T;
    std::ofstream os(path);
    if (!os) throw InputError("cannot write toy file: " + path);
    os << j.dump(2) << '\n';
}

std::vector<double> SupportToy::tilt() const {
    std::vector<double> p(x0.size());
    double total = 0.0;
    for (size_t j = 0; j < x0.size(); ++j) {
        p[j] = base_prob[j] * (2.0 * weight[j] - 1.0);
        total += p[j];
    }
    for (double& v : p) v /= total;
    return p;
}

void SupportToy::validate() const {
    if (x0.empty() || x0.size() != base_prob.size() || x0.size() != weight.size()) {
        throw ConfigError("support toy: size mismatch");
    }
    double s = 0.0;
    for (size_t j = 0; j < x0.size(); ++j) {
        if (base_prob[j] <= 0.0) throw ConfigError("support toy: base probabilities must be > 0");
        if (!(weight[j] > 0.5 && weight[j] <= 1.0)) {
            throw ConfigError("support toy: weights must lie in (0.5, 1] for a positive tilt");
        }
        s += base_prob[j];
    }
    if (std::abs(s - 1.0) > 1e-9) throw ConfigError("support toy: base probabilities must sum to 1");
}

SupportToy SupportToy::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw LoadError("cannot open toy file: " + path);
    nlohmann::json j = nlohmann::json::parse(is);
    SupportToy toy;
    toy.x0 = j.at("x0").get<std::vector<double>>();
    toy.base_prob = j.at("base_prob").get<std::vector<double>>();
    toy.weight = j.at("weight").get<std::vector<double>>();
    toy.validate();
    return toy;
}

void SupportToy::save(const std::string& path) const {
    nlohmann::json j;
    j["x0"] = x0;
    j["base_prob"] = base_prob;
    j["weight"] = weight;
    std::ofstream os(path);
    if (!os) throw InputError("cannot write toy file: " + path);
    os << j.dump(2) << '\n';
}

// ----------------------------- policy evaluation -----------------------------

PolicyEval evaluate_policy(const VelocityField& field, const Teacher& teacher, int sample_steps, int n_rollouts,
                           int n_projections, Rng& rng) {
    PolicyEval out;
    const auto* physics = dynamic_cast<const PhysicsTeacher*>(&teacher);
    double sw = 0.0;
    double res = 0.0;
    double teacher_res = 0.0;
    long long res_count = 0;
    const int P = teacher.n_prompts();
    for (int p = 0; p < P; ++p) {
        std::vector<Tensor> student_flat;
        std::vector<Tensor> teacher_flat;
        Rng roll_rng = rng.stream(0xe7a1, p);
        Rng teach_rng = rng.stream(0xe7a2, p);
        for (int i = 0; i < n_rollouts; ++i) {
            Video sv = field.rollout(Prompt{p}, teacher.K(), sample_steps, roll_rng);
            Video tv = teacher.sample(Prompt{p}, teach_rng);
            student_flat.push_back(sv.flatten());
            teacher_flat.push_back(tv.flatten());
            if (physics != nullptr) {
                res += physics_residual(sv, physics->dynamics(p));
                teacher_res += physics_residual(tv, physics->dynamics(p));
                ++res_count;
            }
        }
        Rng proj_rng = rng.stream(0xe7a3, p);
        sw += sliced_wasserstein(student_flat, teacher_flat, n_projections, proj_rng);
    }
    out.sliced_w = sw / P;
    if (res_count > 0) {
        out.residual = res / static_cast<double>(res_count);
        out.teacher_residual = teacher_res / static_cast<double>(res_count);
    }
    return out;
}

}  // namespace afd
