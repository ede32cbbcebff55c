#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "darap/rng.hpp"

namespace darap {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Scalar model and planning parameters. Defaults reproduce the standard
// simulation setting: Q=1000 cells, sparse prior p0=0.01, unit-mean target
// amplitudes, ring topology, last-stage cost weighting.
struct ModelParams {
    int q = 1000;                    // number of cells
    double prior_prob = 0.01;        // p0
    double amp_mean = 1.0;           // mu0
    double amp_std = 1.0 / 6.0;      // sigma0
    double amp_walk_std = 1.0 / 20.0;  // Delta
    double noise_var = 1.0;          // sigma^2
    double stay_prob = 1.0 / 3.0;    // pi0
    double death_prob = 0.0;         // alpha
    double birth_prob = 0.0;         // beta
    int neighbor_count = 2;          // |G|, 2 (ring) or 4 (torus)
    int horizon = 20;                // T
    std::vector<double> budgets;       // Lambda(t), length T
    std::vector<double> stage_weights;  // gamma(t), length T
    // Observability mask, horizon x q. Empty means fully observable.
    std::vector<std::vector<std::uint8_t>> observability;

    double prior_var() const { return amp_std * amp_std; }
    double walk_var() const { return amp_walk_std * amp_walk_std; }

    bool observable(int stage, int cell) const {
        if (observability.empty()) return true;
        return observability[static_cast<std::size_t>(stage - 1)]
                            [static_cast<std::size_t>(cell)] != 0;
    }

    bool stage_observable(int stage) const {
        if (observability.empty()) return true;
        const auto& row = observability[static_cast<std::size_t>(stage - 1)];
        for (auto v : row)
            if (v) return true;
        return false;
    }

    void validate() const;
};

// Fills budgets with a constant per-stage value and stage_weights with the
// last-stage-only weighting, for a horizon of T stages.
ModelParams make_params(int q, int horizon, double budget_per_stage);

struct Target {
    int cell = 0;
    double amplitude = 0.0;
};

// Ground truth at one stage. Targets are kept sorted by cell.
struct SceneState {
    int stage = 1;
    std::vector<Target> targets;

    std::vector<std::uint8_t> occupancy(int q) const;
    bool occupied(int cell) const;
    std::vector<int> positions() const;
};

struct Observation {
    int stage = 1;
    std::vector<double> values;
    std::vector<double> effort;
    std::vector<std::uint8_t> observed;
};

// Open neighborhood G(cell): the ring neighbors for |G|=2, the von Neumann
// torus neighbors for |G|=4 (q must be a perfect square). Sorted, deduplicated.
std::vector<int> neighbor_set(const ModelParams& params, int cell);

// Allocation-free variant: writes the sorted neighbors into buf (capacity 4),
// returns the count. Degenerate scenes (q <= 2) dedupe naturally.
int neighbors_inline(const ModelParams& params, int cell, int buf[4]);

// Closed neighborhood H(cell) = {cell} u G(cell).
std::vector<int> closed_neighborhood(const ModelParams& params, int cell);

// True when placing a target at `cell` would put two targets inside one
// closed neighborhood, i.e. H(cell) intersects H(existing) for some existing
// target position.
bool neighborhood_conflict(const ModelParams& params, const std::vector<int>& existing,
                           int cell);

// Raw Bernoulli(p0) site draw in cell order, before collision rejection.
std::vector<int> sample_candidate_sites(const ModelParams& params, Rng& rng);

// Initial scene: candidate sites filtered by a first-kept rejection pass,
// amplitudes drawn Normal(mu0, sigma0^2) in cell order.
SceneState sample_initial_scene(const ModelParams& params, Rng& rng);

// One stage of dynamics: deaths, moves (blocked moves cancelled), amplitude
// random walk, then at most one birth (resampled up to 100 times on
// collision, then skipped).
SceneState step_scene(const ModelParams& params, const SceneState& scene, Rng& rng);

struct Allocation;  // defined in allocator.hpp

// Effort-weighted measurement of every observable cell at the given stage;
// unobservable cells are flagged and carry NaN.
Observation observe(const ModelParams& params, const SceneState& scene,
                    const Allocation& alloc, Rng& rng);

}  // namespace darap
