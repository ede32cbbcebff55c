#include "darap/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "darap/allocator.hpp"

namespace darap {

void ModelParams::validate() const {
    auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (q <= 0) throw config_error("model.q must be positive");
    if (!prob_ok(prior_prob)) throw config_error("model.p0 must be in [0,1]");
    if (!prob_ok(stay_prob)) throw config_error("model.pi0 must be in [0,1]");
    if (!prob_ok(death_prob)) throw config_error("model.alpha must be in [0,1]");
    if (!prob_ok(birth_prob)) throw config_error("model.beta must be in [0,1]");
    if (amp_std < 0.0) throw config_error("model.sigma0 must be nonnegative");
    if (amp_walk_std < 0.0) throw config_error("model.delta must be nonnegative");
    if (!(noise_var > 0.0)) throw config_error("model.sigma2 must be positive");
    if (neighbor_count != 2 && neighbor_count != 4)
        throw config_error("model.neighbors must be 2 or 4");
    if (neighbor_count == 4) {
        const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(q))));
        if (side * side != q)
            throw config_error("model.neighbors=4 requires q to be a perfect square");
    }
    if (horizon <= 0) throw config_error("model.horizon must be positive");
    if (budgets.size() != static_cast<std::size_t>(horizon))
        throw config_error("model.budgets must have one entry per stage");
    for (double b : budgets)
        if (!(b > 0.0)) throw config_error("model.budgets entries must be positive");
    if (stage_weights.size() != static_cast<std::size_t>(horizon))
        throw config_error("model.gamma must have one entry per stage");
    bool any_positive = false;
    for (double g : stage_weights) {
        if (g < 0.0) throw config_error("model.gamma entries must be nonnegative");
        if (g > 0.0) any_positive = true;
    }
    if (!any_positive) throw config_error("model.gamma needs a positive entry");
    if (!observability.empty()) {
        if (observability.size() != static_cast<std::size_t>(horizon))
            throw config_error("model.observability must have one row per stage");
        for (const auto& row : observability)
            if (row.size() != static_cast<std::size_t>(q))
                throw config_error("model.observability rows must have q entries");
    }
}

ModelParams make_params(int q, int horizon, double budget_per_stage) {
    ModelParams p;
    p.q = q;
    p.horizon = horizon;
    p.budgets.assign(static_cast<std::size_t>(horizon), budget_per_stage);
    p.stage_weights.assign(static_cast<std::size_t>(horizon), 0.0);
    p.stage_weights.back() = 1.0;
    return p;
}

std::vector<std::uint8_t> SceneState::occupancy(int q) const {
    std::vector<std::uint8_t> occ(static_cast<std::size_t>(q), 0);
    for (const auto& t : targets) occ[static_cast<std::size_t>(t.cell)] = 1;
    return occ;
}

bool SceneState::occupied(int cell) const {
    for (const auto& t : targets)
        if (t.cell == cell) return true;
    return false;
}

std::vector<int> SceneState::positions() const {
    std::vector<int> pos;
    pos.reserve(targets.size());
    for (const auto& t : targets) pos.push_back(t.cell);
    return pos;
}

int neighbors_inline(const ModelParams& params, int cell, int buf[4]) {
    if (cell < 0 || cell >= params.q) throw std::invalid_argument("cell out of range");
    int cand[4];
    int n = 0;
    if (params.neighbor_count == 2) {
        const int q = params.q;
        cand[n++] = ((cell - 1) % q + q) % q;
        cand[n++] = (cell + 1) % q;
    } else {
        const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(params.q))));
        if (side * side != params.q)
            throw config_error("neighbors=4 requires q to be a perfect square");
        const int r = cell / side;
        const int c = cell % side;
        cand[n++] = ((r - 1 + side) % side) * side + c;
        cand[n++] = ((r + 1) % side) * side + c;
        cand[n++] = r * side + (c - 1 + side) % side;
        cand[n++] = r * side + (c + 1) % side;
    }
    std::sort(cand, cand + n);
    int count = 0;
    for (int i = 0; i < n; ++i) {
        if (cand[i] == cell) continue;
        if (count > 0 && buf[count - 1] == cand[i]) continue;
        buf[count++] = cand[i];
    }
    return count;
}

std::vector<int> neighbor_set(const ModelParams& params, int cell) {
    int buf[4];
    const int n = neighbors_inline(params, cell, buf);
    return std::vector<int>(buf, buf + n);
}

std::vector<int> closed_neighborhood(const ModelParams& params, int cell) {
    std::vector<int> out = neighbor_set(params, cell);
    out.push_back(cell);
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

bool closed_sets_intersect(const std::vector<int>& a, const std::vector<int>& b) {
    // both sorted, sizes <= 5
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) return true;
        if (a[i] < b[j])
            ++i;
        else
            ++j;
    }
    return false;
}

}  // namespace

bool neighborhood_conflict(const ModelParams& params, const std::vector<int>& existing,
                           int cell) {
    const std::vector<int> h = closed_neighborhood(params, cell);
    for (int pos : existing) {
        if (closed_sets_intersect(h, closed_neighborhood(params, pos))) return true;
    }
    return false;
}

std::vector<int> sample_candidate_sites(const ModelParams& params, Rng& rng) {
    std::vector<int> sites;
    for (int i = 0; i < params.q; ++i) {
        if (rng.uniform() <= params.prior_prob) sites.push_back(i);
    }
    return sites;
}

SceneState sample_initial_scene(const ModelParams& params, Rng& rng) {
    SceneState scene;
    scene.stage = 1;
    std::vector<int> kept;
    for (int site : sample_candidate_sites(params, rng)) {
        if (!neighborhood_conflict(params, kept, site)) kept.push_back(site);
    }
    scene.targets.reserve(kept.size());
    for (int cell : kept)
        scene.targets.push_back({cell, rng.normal(params.amp_mean, params.amp_std)});
    return scene;
}

SceneState step_scene(const ModelParams& params, const SceneState& scene, Rng& rng) {
    SceneState next;
    next.stage = scene.stage + 1;

    // deaths, in cell order
    std::vector<Target> alive;
    alive.reserve(scene.targets.size());
    for (const auto& t : scene.targets) {
        if (params.death_prob > 0.0 && rng.uniform() <= params.death_prob) continue;
        alive.push_back(t);
    }

    // moves, in cell order; a move that would break the one-target-per-
    // neighborhood constraint is cancelled
    std::vector<int> cells;
    cells.reserve(alive.size());
    for (const auto& t : alive) cells.push_back(t.cell);
    for (std::size_t n = 0; n < alive.size(); ++n) {
        const double u = rng.uniform();
        if (u <= params.stay_prob) continue;
        const std::vector<int> nb = neighbor_set(params, alive[n].cell);
        if (nb.empty()) continue;
        const double v = (u - params.stay_prob) / (1.0 - params.stay_prob);
        std::size_t k = static_cast<std::size_t>(v * static_cast<double>(nb.size()));
        if (k >= nb.size()) k = nb.size() - 1;
        const int dest = nb[k];
        std::vector<int> others;
        others.reserve(cells.size() - 1);
        for (std::size_t m = 0; m < cells.size(); ++m)
            if (m != n) others.push_back(cells[m]);
        if (!neighborhood_conflict(params, others, dest)) {
            cells[n] = dest;
            alive[n].cell = dest;
        }
    }

    // amplitude random walk for survivors
    for (auto& t : alive) t.amplitude += rng.normal(0.0, params.amp_walk_std);

    // at most one birth per stage, resampled on collision
    if (params.birth_prob > 0.0 && rng.uniform() <= params.birth_prob) {
        for (int attempt = 0; attempt < 100; ++attempt) {
            const int cell = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(params.q)));
            const double amp = rng.normal(params.amp_mean, params.amp_std);
            if (!neighborhood_conflict(params, cells, cell)) {
                alive.push_back({cell, amp});
                break;
            }
        }
    }

    std::sort(alive.begin(), alive.end(),
              [](const Target& a, const Target& b) { return a.cell < b.cell; });
    next.targets = std::move(alive);
    return next;
}

Observation observe(const ModelParams& params, const SceneState& scene,
                    const Allocation& alloc, Rng& rng) {
    if (alloc.stage != scene.stage)
        throw std::invalid_argument("allocation stage does not match scene stage");
    Observation obs;
    obs.stage = scene.stage;
    obs.effort = alloc.effort;
    obs.observed.assign(static_cast<std::size_t>(params.q), 0);
    obs.values.assign(static_cast<std::size_t>(params.q),
                      std::numeric_limits<double>::quiet_NaN());
    const auto occ = scene.occupancy(params.q);
    std::vector<double> amp(static_cast<std::size_t>(params.q), 0.0);
    for (const auto& t : scene.targets) amp[static_cast<std::size_t>(t.cell)] = t.amplitude;
    const double noise_std = std::sqrt(params.noise_var);
    for (int i = 0; i < params.q; ++i) {
        if (!params.observable(scene.stage, i)) continue;
        const auto ui = static_cast<std::size_t>(i);
        obs.observed[ui] = 1;
        double signal = 0.0;
        if (occ[ui]) signal = std::sqrt(alloc.effort[ui]) * amp[ui];
        obs.values[ui] = signal + noise_std * rng.normal();
    }
    return obs;
}

}  // namespace darap
