#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "afd/discriminator.hpp"
#include "afd/errors.hpp"

using namespace afd;

namespace {

// Linear scorer over 1-block, d=1 videos: D(x) = x. No hidden layers, the
// encoder passes the coordinate through, prompt embedding zeroed.
Discriminator linear_disc() {
    DiscGeometry g;
    g.K = 1;
    g.d = 1;
    g.n_prompts = 2;
    g.enc_dim = 4;
    g.prompt_dim = 2;
    g.hidden = {};
    Rng rng = Rng::seeded(1);
    Discriminator disc(g, rng);
    Tensor enc_w(g.enc_dim, 1);
    enc_w.data[0] = 1.0;
    disc.params().get("enc.W") = enc_w;
    disc.params().get("enc.b") = Tensor(g.enc_dim, 1);
    disc.params().get("pemb") = Tensor(g.prompt_dim, g.n_prompts);
    Tensor out_w(1, g.input_dim());
    out_w.data[0] = 1.0;
    disc.params().get("mlp.out.W") = out_w;
    disc.params().get("mlp.out.b") = Tensor(1, 1);
    return disc;
}

Video vid(double x, int prompt, Source source) {
    Video v;
    v.blocks = {Tensor::column({x})};
    v.prompt_id = prompt;
    v.source = source;
    return v;
}

Discriminator random_disc(uint64_t seed = 5) {
    DiscGeometry g;
    g.K = 2;
    g.d = 2;
    g.n_prompts = 3;
    g.enc_dim = 6;
    g.prompt_dim = 4;
    g.hidden = {12, 12};
    Rng rng = Rng::seeded(seed);
    return Discriminator(g, rng);
}

std::vector<VideoPair> random_pairs(int n, int K, int d, int n_prompts, uint64_t seed) {
    Rng rng = Rng::seeded(seed);
    std::vector<VideoPair> pairs;
    for (int i = 0; i < n; ++i) {
        VideoPair p;
        p.teacher.prompt_id = p.student.prompt_id = i % n_prompts;
        p.teacher.source = Source::teacher;
        p.student.source = Source::student;
        for (int k = 0; k < K; ++k) {
            p.teacher.blocks.push_back(Tensor::randn(d, 1, rng));
            p.student.blocks.push_back(Tensor::randn(d, 1, rng));
        }
        pairs.push_back(std::move(p));
    }
    return pairs;
}

}  // namespace

TEST_CASE("bt loss closed-form anchors") {
    Discriminator disc = linear_disc();

    // equal logits: loss = log 2
    std::vector<VideoPair> tie = {{vid(0.7, 0, Source::teacher), vid(0.7, 0, Source::student)}};
    CHECK(bt_loss_value(disc, tie) == doctest::Approx(0.6931471805599453).epsilon(1e-14));

    // margin 2: loss = -log sigma(2)
    std::vector<VideoPair> m2 = {{vid(2.0, 0, Source::teacher), vid(0.0, 0, Source::student)}};
    CHECK(bt_loss_value(disc, m2) == doctest::Approx(0.12692801104297263).epsilon(1e-14));

    // strictly decreasing in the margin
    double prev = 1e300;
    for (double margin : {-1.0, 0.0, 1.0, 2.0, 4.0}) {
        std::vector<VideoPair> pm = {{vid(margin, 0, Source::teacher), vid(0.0, 0, Source::student)}};
        const double loss = bt_loss_value(disc, pm);
        CHECK(loss < prev);
        prev = loss;
    }

    // prompt mismatch within a pair is rejected
    std::vector<VideoPair> bad = {{vid(1.0, 0, Source::teacher), vid(0.0, 1, Source::student)}};
    CHECK_THROWS_AS(bt_loss_value(disc, bad), InputError);
    CHECK_THROWS_AS(bt_loss_value(disc, {}), InputError);
}

TEST_CASE("gan loss closed-form anchors") {
    Discriminator disc = linear_disc();

    // perfectly separated logits
    std::vector<Video> sep = {vid(20.0, 0, Source::teacher), vid(-20.0, 0, Source::student)};
    CHECK(gan_loss_value(disc, sep) < 1e-8);

    // zero logits everywhere: log 2
    std::vector<Video> zero = {vid(0.0, 0, Source::teacher), vid(0.0, 0, Source::student)};
    CHECK(gan_loss_value(disc, zero) == doctest::Approx(0.6931471805599453).epsilon(1e-14));

    // hand case: teacher logits {0, 2}, student logit {-2}
    // mean BCE = (log 2 + softplus(-2) + softplus(-2)) / 3
    std::vector<Video> hand = {vid(0.0, 0, Source::teacher), vid(2.0, 0, Source::teacher),
                               vid(-2.0, 0, Source::student)};
    CHECK(gan_loss_value(disc, hand) == doctest::Approx(0.3156677342152969).epsilon(1e-14));
}

TEST_CASE("log_ratio returns the raw logit") {
    Discriminator disc = linear_disc();
    CHECK(log_ratio(disc, vid(1.5, 0, Source::student), 0) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(log_ratio(disc, vid(-0.25, 0, Source::student), 0) == doctest::Approx(-0.25).epsilon(1e-14));
}

TEST_CASE("advantage: baselines, normalization, logistic weights") {
    Discriminator disc = linear_disc();

    // equal scores: zero advantage, weight one half
    {
        AdvantageTracker tracker(2);
        std::vector<Video> batch = {vid(1.3, 0, Source::student), vid(1.3, 0, Source::student)};
        auto adv = advantage(disc, batch, tracker, 5.0);
        for (const Advantage& a : adv) {
            CHECK(a.clipped == 0.0);
            CHECK(a.weight == doctest::Approx(0.5).epsilon(1e-15));
        }
    }

    // scores {1, 3} with a fresh tracker (running std 1): w = sigma(-1), sigma(1)
    {
        AdvantageTracker tracker(2);
        std::vector<Video> batch = {vid(1.0, 0, Source::student), vid(3.0, 0, Source::student)};
        auto adv = advantage(disc, batch, tracker, 5.0);
        CHECK(adv[0].score == doctest::Approx(1.0));
        CHECK(adv[0].baseline == doctest::Approx(2.0));
        CHECK(adv[0].weight == doctest::Approx(0.2689414213699951).epsilon(1e-12));
        CHECK(adv[1].weight == doctest::Approx(0.7310585786300049).epsilon(1e-12));
    }

    // raw advantages have zero mean within each prompt group
    {
        AdvantageTracker tracker(2);
        std::vector<Video> batch = {vid(0.2, 0, Source::student), vid(1.7, 0, Source::student),
                                    vid(-0.4, 0, Source::student), vid(2.0, 1, Source::student),
                                    vid(0.5, 1, Source::student)};
        auto adv = advantage(disc, batch, tracker, 5.0);
        double sum0 = 0.0;
        double sum1 = 0.0;
        for (size_t i = 0; i < batch.size(); ++i) {
            if (batch[i].prompt_id == 0) sum0 += adv[i].score - adv[i].baseline;
            if (batch[i].prompt_id == 1) sum1 += adv[i].score - adv[i].baseline;
        }
        CHECK(std::abs(sum0) < 1e-12);
        CHECK(std::abs(sum1) < 1e-12);
    }

    // singleton prompt falls back to the whole-batch mean
    {
        AdvantageTracker tracker(2);
        std::vector<Video> batch = {vid(1.0, 0, Source::student), vid(3.0, 0, Source::student),
                                    vid(5.0, 1, Source::student)};
        auto adv = advantage(disc, batch, tracker, 5.0);
        CHECK(adv[2].baseline == doctest::Approx(3.0));  // (1 + 3 + 5) / 3
        CHECK(adv[0].baseline == doctest::Approx(2.0));  // per-prompt group mean
    }

    // clipping bounds the normalized advantage
    {
        AdvantageTracker tracker(2);
        std::vector<Video> batch = {vid(100.0, 0, Source::student), vid(-100.0, 0, Source::student)};
        auto adv = advantage(disc, batch, tracker, 5.0);
        CHECK(adv[0].clipped == 5.0);
        CHECK(adv[1].clipped == -5.0);
        CHECK(adv[0].weight == doctest::Approx(1.0 / (1.0 + std::exp(-5.0))).epsilon(1e-12));
    }

    AdvantageTracker tracker(2);
    std::vector<Video> empty;
    CHECK_THROWS_AS(advantage(disc, empty, tracker, 5.0), InputError);
}

TEST_CASE("bt loss and advantages are invariant to a constant logit shift") {
    Discriminator disc = random_disc();
    auto pairs = random_pairs(6, 2, 2, 3, 77);
    std::vector<Video> students;
    for (const auto& p : pairs) students.push_back(p.student);

    const double loss_before = bt_loss_value(disc, pairs);
    AdvantageTracker t1(3);
    auto adv_before = advantage(disc, students, t1, 5.0);

    disc.params().get("mlp.out.b").data[0] += 3.7;
    const double loss_after = bt_loss_value(disc, pairs);
    AdvantageTracker t2(3);
    auto adv_after = advantage(disc, students, t2, 5.0);

    CHECK(loss_after == doctest::Approx(loss_before).epsilon(1e-12));
    for (size_t i = 0; i < adv_before.size(); ++i) {
        CHECK(adv_after[i].score - adv_after[i].baseline ==
              doctest::Approx(adv_before[i].score - adv_before[i].baseline).epsilon(1e-9));
        CHECK(adv_after[i].weight == doctest::Approx(adv_before[i].weight).epsilon(1e-9));
    }
}

TEST_CASE("monotone ranking within a prompt group") {
    Discriminator disc = linear_disc();
    AdvantageTracker tracker(2);
    std::vector<Video> batch = {vid(0.1, 0, Source::student), vid(0.9, 0, Source::student),
                                vid(-0.5, 0, Source::student), vid(0.4, 0, Source::student)};
    auto adv = advantage(disc, batch, tracker, 5.0);
    for (size_t i = 0; i < batch.size(); ++i) {
        for (size_t j = 0; j < batch.size(); ++j) {
            if (adv[i].score > adv[j].score) CHECK(adv[i].weight > adv[j].weight);
        }
    }
}

TEST_CASE("disc_step: frozen at lr 0, descends at small lr") {
    auto pairs = random_pairs(8, 2, 2, 3, 88);

    {
        Discriminator disc = random_disc(6);
        ParamStore before = disc.params();
        AdamW::Options opt;
        opt.lr = 0.0;
        AdamW adam(opt);
        disc_step(disc, adam, pairs, DiscLoss::bt);
        for (const auto& [name, t] : before.arrays()) {
            CHECK(max_abs_diff(disc.params().get(name), t) == 0.0);
        }
    }

    {
        Discriminator disc = random_disc(6);
        const double before = bt_loss_value(disc, pairs);
        AdamW::Options opt;
        opt.lr = 1e-4;
        AdamW adam(opt);
        disc_step(disc, adam, pairs, DiscLoss::bt);
        CHECK(bt_loss_value(disc, pairs) < before);
    }

    {
        Discriminator disc = random_disc(6);
        const double before = gan_loss_value(disc, [&] {
            std::vector<Video> b;
            for (const auto& p : pairs) {
                b.push_back(p.teacher);
                b.push_back(p.student);
            }
            return b;
        }());
        AdamW::Options opt;
        opt.lr = 1e-4;
        AdamW adam(opt);
        disc_step(disc, adam, pairs, DiscLoss::gan);
        std::vector<Video> b;
        for (const auto& p : pairs) {
            b.push_back(p.teacher);
            b.push_back(p.student);
        }
        CHECK(gan_loss_value(disc, b) < before);
    }
}

TEST_CASE("advantage tracker: fallbacks and serialization") {
    AdvantageTracker tracker(3, 0.99, 10);
    CHECK(tracker.std_for(0) == 1.0);  // nothing observed yet

    for (int i = 0; i < 12; ++i) tracker.observe(0, 2.0);
    CHECK(tracker.std_for(0) == doctest::Approx(2.0).epsilon(1e-6));
    // prompt 1 has no observations but the global tracker is warm
    CHECK(tracker.std_for(1) == doctest::Approx(2.0).epsilon(1e-6));

    const std::string text = tracker.serialize();
    AdvantageTracker restored = AdvantageTracker::deserialize(text);
    CHECK(restored.std_for(0) == tracker.std_for(0));
    CHECK(restored.std_for(2) == tracker.std_for(2));
    CHECK_THROWS_AS(tracker.std_for(99), InputError);
}

TEST_CASE("bt gradient matches finite differences") {
    Discriminator disc = random_disc(9);
    auto pairs = random_pairs(3, 2, 2, 3, 99);
    GradCheckReport r = grad_check(
        [&](Tape& tape, const ParamStore&) {
            ModelBinding mb = disc.bind(tape);
            return bt_loss(tape, disc, mb, pairs);
        },
        disc.params(), 1e-5, 1e-4);
    CHECK(r.max_rel_err < 1e-4);
}
