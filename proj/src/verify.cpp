#include <cmath>

#include "afd/baselines.hpp"
#include "afd/errors.hpp"
#include "afd/eval.hpp"
#include "afd/objective.hpp"

namespace afd {

namespace {

double log_normal(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * std::log(2.0 * M_PI) - std::log(sd) - 0.5 * z * z;
}

Video one_block_video(const Tensor& block, int prompt_id, Source source) {
    Video v;
    v.blocks = {block};
    v.prompt_id = prompt_id;
    v.source = source;
    return v;
}

// Small BT discriminator trained on two 1-block samplers; head starts at
// zero so the unidentified constant stays pinned near 0.
Discriminator train_bt_disc(int d, const std::function<Tensor(Rng&)>& teacher_draw,
                            const std::function<Tensor(Rng&)>& student_draw, int steps, int batch, double lr,
                            uint64_t seed) {
    DiscGeometry geom;
    geom.K = 1;
    geom.d = d;
    geom.n_prompts = 1;
    geom.enc_dim = 16;
    geom.prompt_dim = 4;
    geom.hidden = {64, 64};
    Rng init = Rng::seeded(seed).stream(0xd0);
    Discriminator disc(geom, init);
    disc.params().get("mlp.out.W") = Tensor(1, geom.hidden.back());
    disc.params().get("mlp.out.b") = Tensor(1, 1);

    AdamW::Options opt;
    opt.lr = lr;
    opt.weight_decay = 1e-4;
    opt.clip_norm = 0.0;
    AdamW adam(opt);
    Rng rng = Rng::seeded(seed).stream(0xd1);
    for (int s = 0; s < steps; ++s) {
        std::vector<VideoPair> pairs;
        pairs.reserve(batch);
        for (int i = 0; i < batch; ++i) {
            VideoPair p;
            p.teacher = one_block_video(teacher_draw(rng), 0, Source::teacher);
            p.student = one_block_video(student_draw(rng), 0, Source::student);
            pairs.push_back(std::move(p));
        }
        disc_step(disc, adam, pairs, DiscLoss::bt);
    }
    return disc;
}

double grid_logit_err(const Discriminator& disc, double lo, double hi, int n,
                      const std::function<double(double)>& true_ratio) {
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = lo + (hi - lo) * i / (n - 1);
        const double logit = disc.score(one_block_video(Tensor::column({x}), 0, Source::student));
        worst = std::max(worst, std::abs(logit - true_ratio(x)));
    }
    return worst;
}

}  // namespace

RatioRecoveryReport verify_ratio_recovery(const VerifyTolerances& tol, uint64_t seed) {
    tol.validate();
    RatioRecoveryReport report;

    // N(1,1) teacher vs N(0,1) student: log ratio = x - 0.5
    {
        Discriminator disc = train_bt_disc(
            1, [](Rng& r) { return Tensor::column({r.normal(1.0, 1.0)}); },
            [](Rng& r) { return Tensor::column({r.normal(0.0, 1.0)}); }, 6000, 128, 2e-3, seed);
        report.max_abs_err = grid_logit_err(disc, -2.0, 3.0, 101, [](double x) { return x - 0.5; });
    }

    // identical distributions: ratio is identically 0
    {
        Discriminator disc = train_bt_disc(
            1, [](Rng& r) { return Tensor::column({r.normal(0.0, 1.0)}); },
            [](Rng& r) { return Tensor::column({r.normal(0.0, 1.0)}); }, 3000, 128, 2e-3, seed + 1);
        report.max_abs_zero = grid_logit_err(disc, -2.0, 2.0, 81, [](double) { return 0.0; });
    }

    // two-component mixture teacher vs N(0,1) student
    {
        const double w0 = 0.5;
        const double m0 = -1.0, s0 = 0.8;
        const double m1 = 1.2, s1 = 0.7;
        auto teacher_draw = [=](Rng& r) {
            const bool first = r.uniform() < w0;
            return Tensor::column({first ? r.normal(m0, s0) : r.normal(m1, s1)});
        };
        auto true_ratio = [=](double x) {
            const double num =
                w0 * std::exp(log_normal(x, m0, s0)) + (1.0 - w0) * std::exp(log_normal(x, m1, s1));
            return std::log(num) - log_normal(x, 0.0, 1.0);
        };
        Discriminator disc = train_bt_disc(
            1, teacher_draw, [](Rng& r) { return Tensor::column({r.normal(0.0, 1.0)}); }, 6000, 128, 2e-3,
            seed + 2);
        report.mixture_max_err = grid_logit_err(disc, -2.0, 2.2, 85, true_ratio);
    }

    report.pass = report.max_abs_err < tol.ratio_max_err && report.max_abs_zero < tol.ratio_zero_err &&
                  report.mixture_max_err < 0.15;
    return report;
}

TiltedLawReport verify_tilted_law(const DiscreteToy& toy, const VerifyTolerances& tol, uint64_t seed) {
    tol.validate();
    toy.validate();
    TiltedLawReport report;
    const int n = toy.size();

    // (a) exact ratio: the normalized tilt r * pi_theta recovers pi_T
    {
        std::vector<double> tilt(n);
        double total = 0.0;
        for (int j = 0; j < n; ++j) {
            tilt[j] = (toy.pi_T[j] / toy.pi_theta[j]) * toy.pi_theta[j];
            total += tilt[j];
        }
        for (int j = 0; j < n; ++j) {
            report.exact_max_err = std::max(report.exact_max_err, std::abs(tilt[j] / total - toy.pi_T[j]));
        }
    }

    // (b) trained ratio from a BT discriminator on categorical samples
    {
        auto categorical = [&](const std::vector<double>& probs, Rng& r) {
            const double u = r.uniform();
            double acc = 0.0;
            for (int j = 0; j < n; ++j) {
                acc += probs[j];
                if (u < acc) return toy.outcomes[j];
            }
            return toy.outcomes[n - 1];
        };
        Discriminator disc = train_bt_disc(
            toy.d, [&](Rng& r) { return categorical(toy.pi_T, r); },
            [&](Rng& r) { return categorical(toy.pi_theta, r); }, 4000, 64, 2e-3, seed);

        std::vector<double> tilt(n);
        double total = 0.0;
        for (int j = 0; j < n; ++j) {
            const double logit = disc.score(one_block_video(toy.outcomes[j], 0, Source::student));
            tilt[j] = std::exp(logit) * toy.pi_theta[j];
            total += tilt[j];
        }
        double tv = 0.0;
        for (int j = 0; j < n; ++j) tv += std::abs(tilt[j] / total - toy.pi_T[j]);
        report.trained_tv = 0.5 * tv;
    }

    report.pass = report.exact_max_err < tol.tilt_exact_err && report.trained_tv < tol.tilt_trained_tv;
    return report;
}

double tilted_conditional_velocity(const SupportToy& toy, const Schedule& sched, double x_t, double t) {
    toy.validate();
    const std::vector<double> tilt = toy.tilt();
    const double a = sched.alpha(t);
    const double s = sched.sigma(t);
    const double ad = sched.alpha_dot(t);
    const double sd = sched.sigma_dot(t);
    // posterior over support points given x_t, then the velocity of the
    // (x0_j, eps_j) pair consistent with x_t
    double num = 0.0;
    double den = 0.0;
    for (int j = 0; j < toy.size(); ++j) {
        const double w = tilt[j] * std::exp(log_normal(x_t, a * toy.x0[j], s));
        const double eps_j = (x_t - a * toy.x0[j]) / s;
        const double v_j = ad * toy.x0[j] + sd * eps_j;
        num += w * v_j;
        den += w;
    }
    return num / den;
}

CondVelocityReport verify_conditional_velocity(const SupportToy& toy, const VerifyTolerances& tol, uint64_t seed) {
    tol.validate();
    toy.validate();
    const Schedule sched = Schedule::rectified_flow();

    StudentGeometry geom;
    geom.K = 1;
    geom.d = 1;
    geom.n_prompts = 1;
    geom.enc_dim = 8;
    geom.temb_dim = 16;
    geom.prompt_dim = 4;
    geom.hidden = {64, 64};
    Rng init = Rng::seeded(seed).stream(0xcf);
    VelocityField field(geom, init);

    AdamW::Options opt;
    opt.lr = 1e-3;
    opt.weight_decay = 0.0;
    opt.clip_norm = 0.0;
    AdamW adam(opt);
    Rng rng = Rng::seeded(seed).stream(0xce);
    const double beta = 0.1;
    const int steps = 6000;
    const int batch = 128;

    for (int s = 0; s < steps; ++s) {
        std::vector<ConditionedState> states;
        std::vector<double> weights;
        states.reserve(batch);
        for (int i = 0; i < batch; ++i) {
            const double u = rng.uniform();
            int j = 0;
            double acc = 0.0;
            for (; j < toy.size(); ++j) {
                acc += toy.base_prob[j];
                if (u < acc) break;
            }
            j = std::min(j, toy.size() - 1);
            ConditionedState cs;
            const double t = rng.uniform();
            Tensor eps = Tensor::randn(1, 1, rng);
            cs.sample = forward_noise(Tensor::column({toy.x0[j]}), t, eps, sched);
            cs.prompt_id = 0;
            states.push_back(std::move(cs));
            weights.push_back(toy.weight[j]);
        }
        Tape tape;
        FieldBinding fb = field.bind(tape);
        Value loss = nft_loss(tape, field, fb, states, weights, beta);
        tape.backward(loss);
        adam.step(field.params(), tape.param_grads(field.params()));
    }

    // evaluation grid: (t, x_t) points where the base noised marginal has mass
    CondVelocityReport report;
    const std::vector<double> ts = {0.2, 0.35, 0.5, 0.65, 0.8};
    for (double t : ts) {
        const double a = sched.alpha(t);
        const double s = sched.sigma(t);
        for (double x = -2.0; x <= 2.0 + 1e-12; x += 0.2) {
            double marginal = 0.0;
            for (int j = 0; j < toy.size(); ++j) {
                marginal += toy.base_prob[j] * std::exp(log_normal(x, a * toy.x0[j], s));
            }
            if (marginal < 0.08) continue;
            const double oracle = tilted_conditional_velocity(toy, sched, x, t);
            const Tensor v = field.eval(Tensor::column({x}), t, {}, 0);
            report.max_abs_err = std::max(report.max_abs_err, std::abs(v.data[0] - oracle));
            ++report.grid_points;
        }
    }
    report.pass = report.grid_points > 20 && report.max_abs_err < tol.cond_velocity_err;
    return report;
}

ReverseKlReport verify_reverse_kl(const DiscreteToy& toy, const VerifyTolerances& tol, uint64_t seed) {
    tol.validate();
    toy.validate();
    ReverseKlReport report;
    const int n = toy.size();

    std::vector<double> rho(n);
    for (int j = 0; j < n; ++j) rho[j] = std::log(toy.pi_T[j] / toy.pi_theta[j]);

    // J(pi) = E_pi[rho] - KL(pi || pi_old), pi_old = pi_theta
    auto objective = [&](const std::vector<double>& pi) {
        double J = 0.0;
        for (int j = 0; j < n; ++j) {
            if (pi[j] <= 0.0) continue;
            J += pi[j] * rho[j] - pi[j] * std::log(pi[j] / toy.pi_theta[j]);
        }
        return J;
    };
    auto kl_to_teacher = [&](const std::vector<double>& pi) {
        double kl = 0.0;
        for (int j = 0; j < n; ++j) {
            if (pi[j] <= 0.0) continue;
            kl += pi[j] * std::log(pi[j] / toy.pi_T[j]);
        }
        return kl;
    };

    // closed-form maximizer: softmax(log pi_old + rho)
    std::vector<double> argmax(n);
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
        argmax[j] = toy.pi_theta[j] * std::exp(rho[j]);
        total += argmax[j];
    }
    double tv = 0.0;
    for (int j = 0; j < n; ++j) {
        argmax[j] /= total;
        tv += std::abs(argmax[j] - toy.pi_T[j]);
    }
    report.argmax_tv = 0.5 * tv;

    const double J_star = objective(argmax);

    // exhaustive candidate sweep over the simplex
    Rng rng = Rng::seeded(seed).stream(0x8c);
    double best_gap = -1e300;
    auto consider = [&](const std::vector<double>& pi) { best_gap = std::max(best_gap, objective(pi) - J_star); };
    consider(toy.pi_theta);
    consider(toy.pi_T);
    for (int c = 0; c < 4000; ++c) {
        std::vector<double> pi(n);
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            pi[j] = -std::log(1.0 - rng.uniform());
            s += pi[j];
        }
        for (double& p : pi) p /= s;
        consider(pi);
    }
    report.grid_gap = best_gap;

    // the chain of equalities: J(pi) + KL(pi || pi_T) is pi-independent
    // (identically zero when pi_old = pi_theta)
    for (int c = 0; c < 64; ++c) {
        std::vector<double> pi(n);
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            pi[j] = rng.uniform() + 1e-3;
            s += pi[j];
        }
        for (double& p : pi) p /= s;
        report.identity_spread = std::max(report.identity_spread, std::abs(objective(pi) + kl_to_teacher(pi)));
    }

    report.pass = report.argmax_tv < tol.reverse_kl_tv && report.grid_gap <= 1e-9 &&
                  report.identity_spread < 1e-9;
    return report;
}

// ----------------------------- algebra / gradient checks -----------------------------

namespace {

StudentGeometry tiny_geometry() {
    StudentGeometry g;
    g.K = 3;
    g.d = 2;
    g.n_prompts = 3;
    g.enc_dim = 4;
    g.temb_dim = 4;
    g.prompt_dim = 4;
    g.hidden = {8, 8};
    return g;
}

DiscGeometry tiny_disc_geometry() {
    DiscGeometry g;
    g.K = 3;
    g.d = 2;
    g.n_prompts = 3;
    g.enc_dim = 4;
    g.prompt_dim = 4;
    g.hidden = {8, 8};
    return g;
}

std::vector<ConditionedState> tiny_states(const StudentGeometry& g, Rng& rng, int count) {
    const Schedule sched = Schedule::rectified_flow();
    std::vector<ConditionedState> states;
    for (int i = 0; i < count; ++i) {
        ConditionedState cs;
        const int k = i % g.K;
        cs.history.reserve(k);
        for (int j = 0; j < k; ++j) cs.history.push_back(Tensor::randn(g.d, 1, rng));
        cs.sample = forward_noise(Tensor::randn(g.d, 1, rng), 0.1 + 0.8 * rng.uniform(),
                                  Tensor::randn(g.d, 1, rng), sched);
        cs.prompt_id = i % g.n_prompts;
        states.push_back(std::move(cs));
    }
    return states;
}

std::unordered_map<std::string, Tensor> field_grads_of(const VelocityField& field,
                                                       const std::function<Value(Tape&, const FieldBinding&)>& build) {
    Tape tape;
    FieldBinding fb = field.bind(tape);
    Value loss = build(tape, fb);
    tape.backward(loss);
    return tape.param_grads(field.params());
}

double grad_relation_err(const std::unordered_map<std::string, Tensor>& lhs,
                         const std::unordered_map<std::string, Tensor>& rhs, double factor) {
    // max over entries of |lhs - factor * rhs| / max(|lhs|, |factor*rhs|, 1e-12)
    double worst = 0.0;
    for (const auto& [name, g] : rhs) {
        const Tensor& l = lhs.at(name);
        for (size_t i = 0; i < g.data.size(); ++i) {
            const double want = factor * g.data[i];
            const double den = std::max({std::abs(l.data[i]), std::abs(want), 1e-12});
            worst = std::max(worst, std::abs(l.data[i] - want) / den);
        }
    }
    return worst;
}

}  // namespace

AlgebraReport verify_vpm_algebra(uint64_t seed) {
    AlgebraReport report;
    const double beta = 0.1;
    StudentGeometry g = tiny_geometry();
    Rng init = Rng::seeded(seed).stream(0xa1);
    VelocityField field(g, init);
    Rng rng = Rng::seeded(seed).stream(0xa2);
    const auto states = tiny_states(g, rng, 6);

    // forward values of v+/v- equal v exactly
    {
        Tape tape;
        FieldBinding fb = field.bind(tape);
        const ConditionedState& cs = states[0];
        Value h = field.history_summary(fb, cs.history);
        Value v = field.eval(fb, tape.leaf(cs.sample.x_t), cs.sample.t, h, cs.prompt_id);
        Value vp = v_plus(tape, v, beta);
        Value vm = v_minus(tape, v, beta);
        report.value_err = std::max(max_abs_diff(tape.value(vp), tape.value(v)),
                                    max_abs_diff(tape.value(vm), tape.value(v)));
    }

    // gradient of |v+- - target|^2 is +-beta times the plain FM gradient
    auto sq_loss = [&](int sign) {
        return [&, sign](Tape& tape, const FieldBinding& fb) {
            std::vector<Value> terms;
            for (const ConditionedState& cs : states) {
                Value h = field.history_summary(fb, cs.history);
                Value v = field.eval(fb, tape.leaf(cs.sample.x_t), cs.sample.t, h, cs.prompt_id);
                Value vv = sign == 0 ? v : (sign > 0 ? v_plus(tape, v, beta) : v_minus(tape, v, beta));
                terms.push_back(tape.squared_norm(tape.sub(vv, tape.leaf(cs.sample.v))));
            }
            return tape.mean(tape.concat_rows(terms));
        };
    };
    const auto plain = field_grads_of(field, sq_loss(0));
    const auto plus = field_grads_of(field, sq_loss(+1));
    const auto minus = field_grads_of(field, sq_loss(-1));
    report.plus_ratio_err = grad_relation_err(plus, plain, beta);
    report.minus_ratio_err = grad_relation_err(minus, plain, -beta);

    // w = 0.5 neutrality: exact zero NFT gradient
    {
        Tape tape;
        FieldBinding fb = field.bind(tape);
        std::vector<double> weights(states.size(), 0.5);
        Value loss = nft_loss(tape, field, fb, states, weights, beta);
        tape.backward(loss);
        double sq = 0.0;
        for (const auto& [name, gr] : tape.param_grads(field.params())) sq += squared_norm(gr);
        report.neutral_grad_norm = std::sqrt(sq);
    }

    // grad_scale agrees with the literal composite (1-b) sg(x) + b x
    {
        Rng r = Rng::seeded(seed).stream(0xa3);
        ParamStore store;
        store.create("x", Tensor::randn(5, 1, r));
        auto literal = [&](Tape& tape, const ParamStore& p) {
            Value x = tape.param(p, "x");
            Value composite = tape.add(tape.scale(tape.stop_gradient(x), 1.0 - beta), tape.scale(x, beta));
            return tape.squared_norm(composite);
        };
        auto scaled = [&](Tape& tape, const ParamStore& p) {
            Value x = tape.param(p, "x");
            return tape.squared_norm(tape.grad_scale(x, beta));
        };
        Tape t1;
        Value l1 = literal(t1, store);
        t1.backward(l1);
        Tape t2;
        Value l2 = scaled(t2, store);
        t2.backward(l2);
        report.sg_composite_err =
            grad_relation_err(t1.param_grads(store), t2.param_grads(store), 1.0);
    }

    report.pass = report.value_err == 0.0 && report.plus_ratio_err < 1e-12 && report.minus_ratio_err < 1e-12 &&
                  report.neutral_grad_norm < 1e-12 && report.sg_composite_err < 1e-12;
    return report;
}

GradCheckSuiteReport verify_grad_checks(uint64_t seed, double tol) {
    GradCheckSuiteReport report;
    StudentGeometry g = tiny_geometry();
    const Schedule sched = Schedule::rectified_flow();

    Rng init = Rng::seeded(seed).stream(0xb1);
    VelocityField field(g, init);
    Rng init_ref = Rng::seeded(seed).stream(0xb2);
    VelocityField ref(g, init_ref);
    Rng init_disc = Rng::seeded(seed).stream(0xb3);
    Discriminator disc(tiny_disc_geometry(), init_disc);

    Rng rng = Rng::seeded(seed).stream(0xb4);
    const auto states = tiny_states(g, rng, 5);
    std::vector<double> weights;
    for (size_t i = 0; i < states.size(); ++i) weights.push_back(0.1 + 0.2 * static_cast<double>(i));

    std::vector<VideoPair> pairs;
    for (int i = 0; i < 3; ++i) {
        VideoPair p;
        p.teacher.prompt_id = p.student.prompt_id = i % g.n_prompts;
        p.teacher.source = Source::teacher;
        p.student.source = Source::student;
        for (int k = 0; k < g.K; ++k) {
            p.teacher.blocks.push_back(Tensor::randn(g.d, 1, rng));
            p.student.blocks.push_back(Tensor::randn(g.d, 1, rng));
        }
        pairs.push_back(std::move(p));
    }

    auto run = [&](const std::string& name, ParamStore& store, const LossBuilder& builder) {
        GradCheckReport r = grad_check(builder, store, 1e-5, tol);
        report.per_loss.emplace_back(name, r.max_rel_err);
        if (r.max_rel_err > report.worst) {
            report.worst = r.max_rel_err;
            report.worst_loss = name;
        }
    };

    // discriminator losses
    run("bt", disc.params(), [&](Tape& tape, const ParamStore&) {
        ModelBinding mb = disc.bind(tape);
        return bt_loss(tape, disc, mb, pairs);
    });
    run("gan", disc.params(), [&](Tape& tape, const ParamStore&) {
        ModelBinding mb = disc.bind(tape);
        std::vector<Video> batch;
        for (const VideoPair& p : pairs) {
            batch.push_back(p.teacher);
            batch.push_back(p.student);
        }
        return gan_loss(tape, disc, mb, batch);
    });

    // flow-matching style losses on the student
    run("fm", field.params(), [&](Tape& tape, const ParamStore&) {
        FieldBinding fb = field.bind(tape);
        return fm_loss_on_states(tape, field, fb, states);
    });
    run("sft", field.params(), [&](Tape& tape, const ParamStore&) {
        FieldBinding fb = field.bind(tape);
        std::vector<FmItem> items = fm_items_from_video(pairs[0].teacher);
        Rng r = Rng::seeded(seed).stream(0xb5);
        return fm_loss(tape, field, fb, items, sched, r);
    });
    run("dmd_scaffold", field.params(), [&](Tape& tape, const ParamStore&) {
        FieldBinding fb = field.bind(tape);
        return weighted_fm_loss(tape, field, fb, states, weights);
    });
    run("prior", field.params(), [&](Tape& tape, const ParamStore&) {
        FieldBinding fb = field.bind(tape);
        FieldBinding rb = ref.bind(tape);
        return prior_loss(tape, field, fb, ref, rb, states, weights);
    });

    // NFT and AFD contain stop-gradients, so finite differences are run
    // against the sg-aware form: the sg branch frozen at the base point.
    VelocityField frozen = field.clone();
    const double beta = 0.1;
    auto sg_aware_nft = [&](Tape& tape, const FieldBinding& fb) {
        std::vector<Value> terms;
        for (size_t i = 0; i < states.size(); ++i) {
            const ConditionedState& cs = states[i];
            Value h = field.history_summary(fb, cs.history);
            Value v = field.eval(fb, tape.leaf(cs.sample.x_t), cs.sample.t, h, cs.prompt_id);
            Value v0 = tape.leaf(frozen.eval(cs.sample.x_t, cs.sample.t, cs.history, cs.prompt_id));
            Value vp = tape.add(tape.scale(v0, 1.0 - beta), tape.scale(v, beta));
            Value vm = tape.sub(tape.scale(v0, 1.0 + beta), tape.scale(v, beta));
            Value target = tape.leaf(cs.sample.v);
            Value pos = tape.squared_norm(tape.sub(vp, target));
            Value neg = tape.squared_norm(tape.sub(vm, target));
            terms.push_back(tape.add(tape.scale(pos, weights[i]), tape.scale(neg, 1.0 - weights[i])));
        }
        return tape.mean(tape.concat_rows(terms));
    };
    run("nft", field.params(), [&](Tape& tape, const ParamStore&) {
        FieldBinding fb = field.bind(tape);
        return sg_aware_nft(tape, fb);
    });
    run("afd", field.params(), [&](Tape& tape, const ParamStore&) {
        FieldBinding fb = field.bind(tape);
        FieldBinding rb = ref.bind(tape);
        Value nft = sg_aware_nft(tape, fb);
        Value prior = prior_loss(tape, field, fb, ref, rb, states, weights);
        return tape.add(nft, tape.scale(prior, 1e-4));
    });

    // GAN generator: backprop through a one-step rollout into a fixed scorer
    run("gan_generator", field.params(), [&](Tape& tape, const ParamStore&) {
        FieldBinding fb = field.bind(tape);
        ModelBinding mb = disc.bind(tape);
        Rng r = Rng::seeded(seed).stream(0xb6);
        std::vector<Value> blocks = field.rollout_on_tape(fb, Prompt{1}, g.K, 1, r);
        return tape.scale(disc.score(mb, blocks, 1), -1.0);
    });

    report.pass = report.worst < tol;
    return report;
}

}  // namespace afd
