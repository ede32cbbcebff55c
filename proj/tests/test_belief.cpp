#include <doctest.h>

#include <cmath>

#include "darap/allocator.hpp"
#include "darap/belief.hpp"
#include "darap/model.hpp"

using namespace darap;

namespace {

double gaussian_pdf(double x, double mean, double var) {
    const double d = x - mean;
    return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * M_PI * var);
}

Observation make_obs(int stage, std::vector<double> values, std::vector<double> effort) {
    Observation obs;
    obs.stage = stage;
    obs.values = std::move(values);
    obs.effort = std::move(effort);
    obs.observed.assign(obs.values.size(), 1);
    return obs;
}

}  // namespace

TEST_CASE("initial belief matches the prior") {
    ModelParams p = make_params(1000, 5, 1000.0);
    const BeliefState b = belief_init(p);
    CHECK(b.stage == 1);
    CHECK(b.flavor == BeliefState::Flavor::predicted);
    CHECK(b.probs[0] == doctest::Approx(0.01));
    CHECK(b.means[500] == doctest::Approx(1.0));
    CHECK(b.vars[999] == doctest::Approx(1.0 / 36.0));
}

TEST_CASE("zero prior probability is clamped, zero prior variance rejected") {
    ModelParams p = make_params(10, 2, 10.0);
    p.prior_prob = 0.0;
    const BeliefState b = belief_init(p);
    for (double v : b.probs) CHECK(v == kProbClamp);

    p.amp_std = 0.0;
    CHECK_THROWS_AS(belief_init(p), std::invalid_argument);
}

TEST_CASE("no effort and masked rows leave the belief untouched") {
    ModelParams p = make_params(8, 2, 8.0);
    const BeliefState prior = belief_init(p);

    SUBCASE("zero effort everywhere") {
        Observation obs = make_obs(1, std::vector<double>(8, 1.5),
                                   std::vector<double>(8, 0.0));
        const BeliefState post = belief_update(p, prior, obs);
        CHECK(post.flavor == BeliefState::Flavor::updated);
        for (int i = 0; i < 8; ++i) {
            CHECK(post.probs[i] == prior.probs[i]);
            CHECK(post.means[i] == prior.means[i]);
            CHECK(post.vars[i] == prior.vars[i]);
        }
    }

    SUBCASE("masked row") {
        Observation obs = make_obs(1, std::vector<double>(8, 1.5),
                                   std::vector<double>(8, 1.0));
        obs.observed.assign(8, 0);
        const BeliefState post = belief_update(p, prior, obs);
        for (int i = 0; i < 8; ++i) {
            CHECK(post.probs[i] == prior.probs[i]);
            CHECK(post.means[i] == prior.means[i]);
            CHECK(post.vars[i] == prior.vars[i]);
        }
    }
}

TEST_CASE("scalar update agrees with direct Bayes evaluation") {
    ModelParams p = make_params(1, 2, 4.0);
    p.prior_prob = 0.5;
    p.amp_mean = 1.0;
    p.amp_std = 0.5;  // prior variance 0.25
    p.noise_var = 1.0;
    const BeliefState prior = belief_init(p);
    const double lam = 4.0;
    const double y = 2.0;
    const Observation obs = make_obs(1, {y}, {lam});
    const BeliefState post = belief_update(p, prior, obs);

    // independent oracle: direct numeric evaluation of the update formulas
    const double s = lam * 0.25 + 1.0;
    const double l1 = gaussian_pdf(y, std::sqrt(lam) * 1.0, s);
    const double l0 = gaussian_pdf(y, 0.0, 1.0);
    const double p_expect = 0.5 * l1 / (0.5 * l1 + 0.5 * l0);
    const double gain = 0.25 * std::sqrt(lam) / s;
    const double mu_expect = 1.0 + gain * (y - std::sqrt(lam) * 1.0);
    const double var_expect = 1.0 / (1.0 / 0.25 + lam);

    CHECK(post.probs[0] == doctest::Approx(p_expect).epsilon(1e-12));
    CHECK(post.means[0] == doctest::Approx(mu_expect).epsilon(1e-12));
    CHECK(post.vars[0] == doctest::Approx(var_expect).epsilon(1e-12));
}

TEST_CASE("posterior variance identity holds for any effort") {
    ModelParams p = make_params(1, 2, 4.0);
    const BeliefState prior = belief_init(p);
    for (double lam : {0.5, 1.0, 3.7, 25.0, 400.0}) {
        const Observation obs = make_obs(1, {0.3}, {lam});
        const BeliefState post = belief_update(p, prior, obs);
        const double expected = p.noise_var / (p.noise_var / prior.vars[0] + lam);
        CHECK(post.vars[0] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("posterior precision never decreases with effort") {
    ModelParams p = make_params(1, 2, 4.0);
    const BeliefState prior = belief_init(p);
    double last = 0.0;
    for (double lam : {0.0, 0.1, 1.0, 10.0, 100.0}) {
        Observation obs = make_obs(1, {1.0}, {lam});
        const BeliefState post = belief_update(p, prior, obs);
        const double c = post.precision(0, p.noise_var);
        CHECK(c >= last);
        last = c;
    }
}

TEST_CASE("large observations drive the presence probability toward one") {
    ModelParams p = make_params(1, 2, 4.0);
    const BeliefState prior = belief_init(p);
    const Observation obs = make_obs(1, {40.0}, {100.0});
    const BeliefState post = belief_update(p, prior, obs);
    CHECK(post.probs[0] > 0.999);
    CHECK(post.probs[0] <= 1.0 - kProbClamp);  // clamp keeps odds finite
}

TEST_CASE("static prediction is the identity") {
    ModelParams p = make_params(16, 2, 16.0);
    p.stay_prob = 1.0;
    p.amp_walk_std = 0.0;
    BeliefState b = belief_init(p);
    b.flavor = BeliefState::Flavor::updated;
    const BeliefState next = belief_predict(p, b);
    CHECK(next.stage == 2);
    for (int i = 0; i < 16; ++i) {
        CHECK(next.probs[i] == doctest::Approx(b.probs[i]).epsilon(1e-15));
        CHECK(next.means[i] == b.means[i]);
        CHECK(next.vars[i] == b.vars[i]);
    }
}

TEST_CASE("an isolated certainty spreads per the transition kernel") {
    ModelParams p = make_params(9, 2, 9.0);
    BeliefState b = belief_init(p);
    b.flavor = BeliefState::Flavor::updated;
    for (int i = 0; i < 9; ++i) b.probs[i] = kProbClamp;
    b.probs[4] = 1.0 - kProbClamp;
    const BeliefState next = belief_predict(p, b);
    CHECK(next.probs[4] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(next.probs[3] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(next.probs[5] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(next.probs[0] < 1e-11);
}

TEST_CASE("torus prediction spreads mass over four neighbors and conserves it") {
    ModelParams p = make_params(25, 2, 25.0);
    p.neighbor_count = 4;
    BeliefState b = belief_init(p);
    b.flavor = BeliefState::Flavor::updated;
    for (int i = 0; i < 25; ++i) b.probs[i] = kProbClamp;
    b.probs[12] = 1.0 - kProbClamp;
    const BeliefState next = belief_predict(p, b);
    CHECK(next.probs[12] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    for (int j : neighbor_set(p, 12))
        CHECK(next.probs[static_cast<std::size_t>(j)] ==
              doctest::Approx((2.0 / 3.0) / 4.0).epsilon(1e-9));
    double total = 0.0;
    for (double v : next.probs) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("probability mass is conserved through prediction") {
    ModelParams p = make_params(50, 2, 50.0);
    p.death_prob = 0.2;
    p.birth_prob = 0.3;
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        BeliefState b = belief_init(p);
        b.flavor = BeliefState::Flavor::updated;
        double before = 0.0;
        for (int i = 0; i < 50; ++i) {
            b.probs[i] = 0.02 + 0.5 * rng.uniform();
            before += b.probs[i];
        }
        const BeliefState next = belief_predict(p, b);
        double after = 0.0;
        for (double v : next.probs) after += v;
        const double expected = (1.0 - p.death_prob) * before + p.birth_prob;
        CHECK(after == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("full static episode matches the per-cell scalar recursion") {
    // Independent oracle: with pi0=1 and no births/deaths the posterior
    // factors exactly; each cell follows a scalar update/predict recursion.
    ModelParams p = make_params(6, 8, 12.0);
    p.stay_prob = 1.0;
    p.death_prob = 0.0;
    p.birth_prob = 0.0;
    Rng scene_rng(41);
    Rng noise_rng(43);
    SceneState scene = sample_initial_scene(p, scene_rng);

    BeliefState belief = belief_init(p);
    std::vector<double> op(6, p.prior_prob), om(6, p.amp_mean), ov(6, p.prior_var());

    for (int t = 1; t <= p.horizon; ++t) {
        const Allocation alloc = uniform_allocate(6, 12.0, t);
        scene.stage = t;
        const Observation obs = observe(p, scene, alloc, noise_rng);
        belief = belief_update(p, belief, obs);

        for (int i = 0; i < 6; ++i) {
            const double lam = alloc.effort[static_cast<std::size_t>(i)];
            const double y = obs.values[static_cast<std::size_t>(i)];
            const double s = lam * ov[i] + p.noise_var;
            const double l1 = gaussian_pdf(y, std::sqrt(lam) * om[i], s);
            const double l0 = gaussian_pdf(y, 0.0, p.noise_var);
            op[i] = op[i] * l1 / (op[i] * l1 + (1.0 - op[i]) * l0);
            om[i] += ov[i] * std::sqrt(lam) / s * (y - std::sqrt(lam) * om[i]);
            ov[i] = p.noise_var / (p.noise_var / ov[i] + lam);

            CHECK(belief.probs[i] == doctest::Approx(op[i]).epsilon(1e-10));
            CHECK(belief.means[i] == doctest::Approx(om[i]).epsilon(1e-10));
            CHECK(belief.vars[i] == doctest::Approx(ov[i]).epsilon(1e-10));
        }
        if (t < p.horizon) {
            belief = belief_predict(p, belief);
            for (int i = 0; i < 6; ++i) ov[i] += p.walk_var();
        }
    }
}

TEST_CASE("probabilities never saturate to exactly zero or one") {
    ModelParams p = make_params(1, 2, 1000.0);
    const BeliefState prior = belief_init(p);
    const Observation hot = make_obs(1, {1000.0}, {1000.0});
    CHECK(belief_update(p, prior, hot).probs[0] == 1.0 - kProbClamp);
    const Observation cold = make_obs(1, {0.0}, {1000.0});
    CHECK(belief_update(p, prior, cold).probs[0] >= kProbClamp);
}

TEST_CASE("omniscient oracle belief is atomic") {
    ModelParams p = make_params(10, 2, 10.0);
    const std::vector<double> means(10, 1.0), vars(10, 0.01);
    const BeliefState b =
        oracle_belief(p, OracleMode::omniscient, {7}, 3, means, vars);
    for (int i = 0; i < 10; ++i) {
        if (i == 7)
            CHECK(b.probs[i] == 1.0 - kProbClamp);
        else
            CHECK(b.probs[i] == kProbClamp);
    }
}

TEST_CASE("previous-location oracle spreads per the kernel") {
    ModelParams p = make_params(10, 2, 10.0);
    const std::vector<double> means(10, 1.0), vars(10, 0.01);
    const BeliefState b =
        oracle_belief(p, OracleMode::semi_omniscient, {7}, 3, means, vars);
    CHECK(b.probs[7] == doctest::Approx(1.0 / 3.0));
    CHECK(b.probs[6] == doctest::Approx(1.0 / 3.0));
    CHECK(b.probs[8] == doctest::Approx(1.0 / 3.0));
    CHECK(b.probs[0] == kProbClamp);
}

TEST_CASE("oracle precisions accumulate effort over the closed neighborhood") {
    // With a constant amplitude, precision in the vicinity of the target
    // grows by exactly the effort spent on the target cell.
    ModelParams p = make_params(10, 4, 10.0);
    p.amp_walk_std = 0.0;
    OracleFilter filter(p, OracleMode::omniscient);
    Rng rng(53);
    SceneState scene;
    scene.targets = {{4, 1.0}};

    double expected_c = p.noise_var / p.prior_var();
    for (int t = 1; t <= 3; ++t) {
        scene.stage = t;
        Allocation alloc = omniscient_allocate(scene, 10.0, 10);
        const Observation obs = observe(p, scene, alloc, rng);
        filter.update(obs);
        expected_c += 10.0;
        filter.predict(scene.positions());
        for (int i : closed_neighborhood(p, 4)) {
            const double c = p.noise_var / filter.vars()[static_cast<std::size_t>(i)];
            CHECK(c == doctest::Approx(expected_c).epsilon(1e-12));
        }
    }
}
