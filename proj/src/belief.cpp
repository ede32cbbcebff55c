#include "darap/belief.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace darap {

double clamp_prob(double p) {
    return std::min(1.0 - kProbClamp, std::max(kProbClamp, p));
}

BeliefState belief_init(const ModelParams& params) {
    if (!(params.amp_std > 0.0))
        throw std::invalid_argument("belief requires sigma0 > 0");
    BeliefState b;
    b.stage = 1;
    b.flavor = BeliefState::Flavor::predicted;
    const auto q = static_cast<std::size_t>(params.q);
    b.probs.assign(q, clamp_prob(params.prior_prob));
    b.means.assign(q, params.amp_mean);
    b.vars.assign(q, params.prior_var());
    return b;
}

BeliefState belief_update(const ModelParams& params, const BeliefState& belief,
                          const Observation& obs) {
    if (belief.flavor != BeliefState::Flavor::predicted)
        throw std::invalid_argument("belief_update expects a predicted belief");
    if (belief.stage != obs.stage)
        throw std::invalid_argument("belief/observation stage mismatch");

    BeliefState out = belief;
    out.flavor = BeliefState::Flavor::updated;
    const double s2 = params.noise_var;
    for (int i = 0; i < params.q; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double lam = obs.effort[ui];
        if (!obs.observed[ui] || !(lam > 0.0)) continue;
        const double y = obs.values[ui];
        if (!std::isfinite(y)) throw std::invalid_argument("non-finite observation value");
        const double p = belief.probs[ui];
        const double mu = belief.means[ui];
        const double v = belief.vars[ui];
        const double root_lam = std::sqrt(lam);
        const double s = lam * v + s2;  // innovation variance under presence

        // Presence posterior via the log likelihood ratio.
        const double resid = y - root_lam * mu;
        const double llr = 0.5 * (y * y / s2 - resid * resid / s) - 0.5 * std::log(s / s2);
        const double logit_prior = std::log(p) - std::log1p(-p);
        const double logit_post = logit_prior + llr;
        double p_post;
        if (logit_post > 0.0)
            p_post = 1.0 / (1.0 + std::exp(-logit_post));
        else {
            const double e = std::exp(logit_post);
            p_post = e / (1.0 + e);
        }
        out.probs[ui] = clamp_prob(p_post);

        // Conjugate Gaussian update of the amplitude moments.
        const double gain = v * root_lam / s;
        out.means[ui] = mu + gain * resid;
        out.vars[ui] = s2 / (s2 / v + lam);
    }
    return out;
}

BeliefState belief_predict(const ModelParams& params, const BeliefState& belief) {
    if (belief.flavor != BeliefState::Flavor::updated)
        throw std::invalid_argument("belief_predict expects an updated belief");

    BeliefState out;
    out.stage = belief.stage + 1;
    out.flavor = BeliefState::Flavor::predicted;
    const auto q = static_cast<std::size_t>(params.q);
    out.probs.resize(q);
    out.means.resize(q);
    out.vars.resize(q);

    const double survive = 1.0 - params.death_prob;
    const double birth_mass = params.birth_prob / static_cast<double>(params.q);
    int nb0[4];
    const int degree = params.q > 1 ? neighbors_inline(params, 0, nb0) : 0;
    // Motion mass that cannot leave (degenerate scenes with no neighbors)
    // stays put, so the stay share absorbs it.
    const double stay_share = degree > 0 ? params.stay_prob : 1.0;
    const double move_share = degree > 0 ? (1.0 - params.stay_prob) / degree : 0.0;

    for (int i = 0; i < params.q; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        int nb[4];
        const int n = neighbors_inline(params, i, nb);

        const double self_mass = survive * stay_share * belief.probs[ui];
        double best_mass = self_mass;
        int best_source = i;
        double total = self_mass;
        for (int k = 0; k < n; ++k) {
            const int j = nb[k];
            const double m = survive * move_share * belief.probs[static_cast<std::size_t>(j)];
            total += m;
            if (m > best_mass) {
                best_mass = m;
                best_source = j;
            }
        }
        const bool from_birth = birth_mass > best_mass;
        total += birth_mass;

        out.probs[ui] = clamp_prob(total);
        if (from_birth) {
            out.means[ui] = params.amp_mean;
            out.vars[ui] = params.prior_var();
        } else {
            const auto us = static_cast<std::size_t>(best_source);
            out.means[ui] = belief.means[us];
            out.vars[ui] = belief.vars[us] + params.walk_var();
        }
    }
    return out;
}

BeliefState oracle_belief(const ModelParams& params, OracleMode mode,
                          const std::vector<int>& positions, int stage,
                          const std::vector<double>& means,
                          const std::vector<double>& vars) {
    if (mode == OracleMode::none)
        throw std::invalid_argument("oracle_belief requires an oracle mode");
    BeliefState b;
    b.stage = stage;
    b.flavor = BeliefState::Flavor::predicted;
    const auto q = static_cast<std::size_t>(params.q);
    b.probs.assign(q, clamp_prob(0.0));
    b.means = means;
    b.vars = vars;
    if (mode == OracleMode::omniscient) {
        for (int cell : positions) b.probs[static_cast<std::size_t>(cell)] = clamp_prob(1.0);
    } else {
        const double move_share =
            params.neighbor_count > 0 ? (1.0 - params.stay_prob) / params.neighbor_count : 0.0;
        for (int cell : positions) {
            b.probs[static_cast<std::size_t>(cell)] = clamp_prob(params.stay_prob);
            for (int j : neighbor_set(params, cell))
                b.probs[static_cast<std::size_t>(j)] = clamp_prob(move_share);
        }
    }
    return b;
}

OracleFilter::OracleFilter(const ModelParams& params, OracleMode mode)
    : params_(&params), mode_(mode) {
    const auto q = static_cast<std::size_t>(params.q);
    means_.assign(q, params.amp_mean);
    vars_.assign(q, params.prior_var());
}

BeliefState OracleFilter::planning_belief(const std::vector<int>& current,
                                          const std::vector<int>& previous) const {
    if (mode_ == OracleMode::omniscient)
        return oracle_belief(*params_, mode_, current, stage_, means_, vars_);
    if (stage_ == 1) {
        // No previous locations exist yet; fall back to the uniform prior.
        BeliefState b;
        b.stage = 1;
        b.flavor = BeliefState::Flavor::predicted;
        b.probs.assign(static_cast<std::size_t>(params_->q),
                       clamp_prob(params_->prior_prob));
        b.means = means_;
        b.vars = vars_;
        return b;
    }
    return oracle_belief(*params_, mode_, previous, stage_, means_, vars_);
}

void OracleFilter::update(const Observation& obs) {
    if (obs.stage != stage_) throw std::invalid_argument("oracle filter stage mismatch");
    const double s2 = params_->noise_var;
    for (int i = 0; i < params_->q; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double lam = obs.effort[ui];
        if (!obs.observed[ui] || !(lam > 0.0)) continue;
        const double root_lam = std::sqrt(lam);
        const double v = vars_[ui];
        const double s = lam * v + s2;
        const double gain = v * root_lam / s;
        means_[ui] += gain * (obs.values[ui] - root_lam * means_[ui]);
        vars_[ui] = s2 / (s2 / v + lam);
    }
}

void OracleFilter::predict(const std::vector<int>& current_positions) {
    std::vector<double> next_means = means_;
    std::vector<double> next_vars = vars_;
    for (int cell : current_positions) {
        const auto us = static_cast<std::size_t>(cell);
        for (int i : closed_neighborhood(*params_, cell)) {
            const auto ui = static_cast<std::size_t>(i);
            next_means[ui] = means_[us];
            next_vars[ui] = vars_[us] + params_->walk_var();
        }
    }
    means_ = std::move(next_means);
    vars_ = std::move(next_vars);
    ++stage_;
}

}  // namespace darap
