#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "darap/allocator.hpp"
#include "darap/model.hpp"

using namespace darap;

namespace {

ModelParams table_params(int q = 1000, int horizon = 5, double budget = 1000.0) {
    return make_params(q, horizon, budget);
}

bool scene_respects_spacing(const ModelParams& p, const SceneState& scene) {
    for (std::size_t a = 0; a < scene.targets.size(); ++a) {
        std::vector<int> others;
        for (std::size_t b = 0; b < scene.targets.size(); ++b)
            if (b != a) others.push_back(scene.targets[b].cell);
        if (neighborhood_conflict(p, others, scene.targets[a].cell)) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("ring neighbors wrap around") {
    ModelParams p = table_params();
    CHECK(neighbor_set(p, 0) == std::vector<int>{1, 999});
    CHECK(neighbor_set(p, 500) == std::vector<int>{499, 501});
    CHECK(neighbor_set(p, 999) == std::vector<int>{0, 998});
}

TEST_CASE("torus neighbors enumerated by hand") {
    ModelParams p = table_params(100, 5, 100.0);
    p.neighbor_count = 4;
    // row-major 10x10: cell 0 touches 1 (right), 9 (left wrap), 10 (down), 90 (up wrap)
    CHECK(neighbor_set(p, 0) == std::vector<int>{1, 9, 10, 90});
    CHECK(neighbor_set(p, 55) == std::vector<int>{45, 54, 56, 65});
}

TEST_CASE("four-neighbor topology rejects non-square grids") {
    ModelParams p = table_params(1000, 5, 1000.0);
    p.neighbor_count = 4;
    CHECK_THROWS_AS(p.validate(), config_error);
}

TEST_CASE("candidate sites follow the binomial prior") {
    ModelParams p = table_params();
    Rng rng(42);
    const int draws = 10000;
    double total = 0.0;
    for (int i = 0; i < draws; ++i)
        total += static_cast<double>(sample_candidate_sites(p, rng).size());
    const double mean = total / draws;
    const double expected = p.q * p.prior_prob;
    const double std_dev = std::sqrt(p.q * p.prior_prob * (1.0 - p.prior_prob));
    CHECK(std::abs(mean - expected) < 3.0 * std_dev / 100.0);
}

TEST_CASE("degenerate priors") {
    ModelParams p = table_params();
    p.prior_prob = 0.0;
    Rng rng(1);
    CHECK(sample_initial_scene(p, rng).targets.empty());

    ModelParams one = table_params(1, 5, 10.0);
    one.prior_prob = 1.0;
    Rng rng2(2);
    const SceneState scene = sample_initial_scene(one, rng2);
    REQUIRE(scene.targets.size() == 1);
    CHECK(scene.targets[0].cell == 0);
    CHECK(std::abs(scene.targets[0].amplitude - 1.0) < 1.0);  // ~N(1, 1/36)
}

TEST_CASE("initial scenes respect the spacing constraint") {
    ModelParams p = table_params(200, 5, 100.0);
    p.prior_prob = 0.05;  // enough density to force rejections
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const SceneState scene = sample_initial_scene(p, rng);
        CHECK(scene_respects_spacing(p, scene));
    }
}

TEST_CASE("static dynamics are the identity") {
    ModelParams p = table_params();
    p.stay_prob = 1.0;
    p.amp_walk_std = 0.0;
    Rng rng(5);
    const SceneState scene = sample_initial_scene(p, rng);
    const SceneState next = step_scene(p, scene, rng);
    CHECK(next.stage == scene.stage + 1);
    REQUIRE(next.targets.size() == scene.targets.size());
    for (std::size_t i = 0; i < scene.targets.size(); ++i) {
        CHECK(next.targets[i].cell == scene.targets[i].cell);
        CHECK(next.targets[i].amplitude == scene.targets[i].amplitude);  // bit exact
    }
}

TEST_CASE("certain death empties the scene") {
    ModelParams p = table_params();
    p.death_prob = 1.0;
    Rng rng(6);
    SceneState scene = sample_initial_scene(p, rng);
    scene = step_scene(p, scene, rng);
    CHECK(scene.targets.empty());
}

TEST_CASE("transition frequencies of an isolated target") {
    ModelParams p = table_params();
    Rng rng(11);
    const int steps = 100000;
    int stay = 0, left = 0, right = 0;
    SceneState scene;
    scene.targets = {{500, 1.0}};
    for (int i = 0; i < steps; ++i) {
        scene.stage = 1;
        SceneState moved = step_scene(p, scene, rng);
        REQUIRE(moved.targets.size() == 1);
        const int cell = moved.targets[0].cell;
        if (cell == 500)
            ++stay;
        else if (cell == 499)
            ++left;
        else if (cell == 501)
            ++right;
        else
            FAIL("target jumped more than one cell");
    }
    CHECK(std::abs(stay / double(steps) - 1.0 / 3.0) < 0.005);
    CHECK(std::abs(left / double(steps) - 1.0 / 3.0) < 0.005);
    CHECK(std::abs(right / double(steps) - 1.0 / 3.0) < 0.005);
}

TEST_CASE("survival mass matches 1 - alpha") {
    ModelParams p = table_params();
    p.death_prob = 0.3;
    Rng rng(14);
    const int steps = 100000;
    int survived = 0;
    for (int i = 0; i < steps; ++i) {
        SceneState scene;
        scene.targets = {{500, 1.0}};
        scene = step_scene(p, scene, rng);
        if (!scene.targets.empty()) ++survived;
    }
    const double freq = survived / double(steps);
    const double sd = std::sqrt(0.3 * 0.7 / steps);
    CHECK(std::abs(freq - 0.7) < 3.0 * sd);
}

TEST_CASE("spacing constraint survives long runs with births and deaths") {
    ModelParams p = table_params(100, 5, 100.0);
    p.prior_prob = 0.05;
    p.birth_prob = 0.5;
    p.death_prob = 0.1;
    Rng rng(17);
    SceneState scene = sample_initial_scene(p, rng);
    for (int t = 0; t < 500; ++t) {
        scene = step_scene(p, scene, rng);
        REQUIRE(scene_respects_spacing(p, scene));
    }
}

TEST_CASE("spacing constraint holds on the torus as well") {
    ModelParams p = table_params(144, 5, 100.0);
    p.neighbor_count = 4;
    p.prior_prob = 0.04;
    p.birth_prob = 0.3;
    p.death_prob = 0.05;
    Rng rng(18);
    SceneState scene = sample_initial_scene(p, rng);
    REQUIRE(scene_respects_spacing(p, scene));
    for (int t = 0; t < 300; ++t) {
        scene = step_scene(p, scene, rng);
        REQUIRE(scene_respects_spacing(p, scene));
    }
}

TEST_CASE("observation channel noise statistics") {
    ModelParams p = table_params(4, 1, 16.0);
    Rng rng(19);
    SceneState empty;
    empty.stage = 1;
    Allocation alloc = uniform_allocate(4, 16.0, 1);

    SUBCASE("pure noise at zero signal") {
        const int draws = 100000;
        double sum = 0.0, sumsq = 0.0;
        for (int i = 0; i < draws; ++i) {
            const Observation obs = observe(p, empty, alloc, rng);
            sum += obs.values[0];
            sumsq += obs.values[0] * obs.values[0];
        }
        const double mean = sum / draws;
        const double var = sumsq / draws - mean * mean;
        CHECK(std::abs(mean) < 0.02);
        CHECK(std::abs(var - 1.0) < 0.02);
    }

    SUBCASE("noiseless observation equals sqrt(effort) times amplitude") {
        ModelParams quiet = p;
        quiet.noise_var = 1e-12;
        SceneState scene;
        scene.stage = 1;
        scene.targets = {{0, 1.0}};
        const Observation obs = observe(quiet, scene, alloc, rng);
        CHECK(obs.values[0] == doctest::Approx(2.0).epsilon(1e-4));
    }

    SUBCASE("variance around a fixed target equals the noise variance") {
        SceneState scene;
        scene.stage = 1;
        scene.targets = {{0, 1.0}};
        const int draws = 100000;
        double sum = 0.0, sumsq = 0.0;
        for (int i = 0; i < draws; ++i) {
            const Observation obs = observe(p, scene, alloc, rng);
            sum += obs.values[0];
            sumsq += obs.values[0] * obs.values[0];
        }
        const double mean = sum / draws;
        const double var = sumsq / draws - mean * mean;
        CHECK(mean == doctest::Approx(2.0).epsilon(0.01));
        CHECK(var == doctest::Approx(1.0).epsilon(0.02));
    }
}

TEST_CASE("masked cells are flagged and carry no value") {
    ModelParams p = table_params(4, 2, 8.0);
    p.observability = {{1, 1, 1, 1}, {0, 0, 0, 0}};
    Rng rng(23);
    SceneState scene;
    scene.stage = 2;
    const Allocation alloc = uniform_allocate(4, 8.0, 2);
    const Observation obs = observe(p, scene, alloc, rng);
    for (int i = 0; i < 4; ++i) {
        CHECK(obs.observed[static_cast<std::size_t>(i)] == 0);
        CHECK(std::isnan(obs.values[static_cast<std::size_t>(i)]));
    }
}

TEST_CASE("identical seeds give identical trajectories") {
    ModelParams p = table_params(200, 5, 200.0);
    p.birth_prob = 0.2;
    p.death_prob = 0.05;
    auto run = [&](std::uint64_t seed) {
        Rng rng(seed);
        SceneState scene = sample_initial_scene(p, rng);
        std::vector<SceneState> history = {scene};
        for (int t = 0; t < 20; ++t) {
            scene = step_scene(p, scene, rng);
            history.push_back(scene);
        }
        return history;
    };
    const auto a = run(99);
    const auto b = run(99);
    REQUIRE(a.size() == b.size());
    for (std::size_t t = 0; t < a.size(); ++t) {
        REQUIRE(a[t].targets.size() == b[t].targets.size());
        for (std::size_t i = 0; i < a[t].targets.size(); ++i) {
            CHECK(a[t].targets[i].cell == b[t].targets[i].cell);
            CHECK(a[t].targets[i].amplitude == b[t].targets[i].amplitude);
        }
    }
}
