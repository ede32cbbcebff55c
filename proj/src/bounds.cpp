#include "darap/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "darap/model.hpp"

namespace darap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// (sqrt(1 + x) - 1) / (x / 2): stable for tiny x, tends to 2/sqrt(x) for
// large x. Callers use it as (sqrt(1+4r)-1)/(2r) = half_ratio(4r).
double half_ratio(double x) { return 2.0 / (1.0 + std::sqrt(1.0 + x)); }

}  // namespace

BoundInputs BoundInputs::from_params(const ModelParams& params) {
    BoundInputs in;
    in.p0 = params.prior_prob;
    in.q = params.q;
    in.noise_var = params.noise_var;
    in.prior_var = params.prior_var();
    in.walk_var = params.walk_var();
    in.stay_prob = params.stay_prob;
    in.neighbor_count = params.neighbor_count;
    in.budget = params.budgets.empty() ? 0.0 : params.budgets.front();
    in.gamma = params.stage_weights;
    in.horizon = params.horizon;
    return in;
}

double BoundInputs::r_static(int t) const {
    return noise_var * static_cast<double>(q) / (prior_var * cumulative_budget(t));
}

double BoundInputs::r_dynamic() const {
    return noise_var * static_cast<double>(q) / (walk_var * budget);
}

double BoundInputs::q_dynamic() const {
    return (1.0 + static_cast<double>(neighbor_count)) * r_dynamic();
}

double BoundInputs::exploration_margin() const {
    if (stay_prob >= 1.0) return kInf;
    return std::sqrt(static_cast<double>(neighbor_count) * stay_prob / (1.0 - stay_prob)) -
           1.0;
}

double BoundInputs::critical_precision(double num_targets) const {
    const double e = exploration_margin();
    if (e == kInf) return 0.0;  // high-precision branch always applies
    if (e <= 0.0) return e < 0.0 ? -kInf : kInf;
    return budget / (num_targets * e);
}

double BoundInputs::sparsity_limit() const {
    return 1.0 / (p0 + (1.0 - p0) / static_cast<double>(q));
}

double gain(double uniform_cost, double policy_cost) {
    if (!(policy_cost > 0.0)) throw std::invalid_argument("policy cost must be positive");
    if (!(uniform_cost > 0.0)) throw std::invalid_argument("uniform cost must be positive");
    return uniform_cost / policy_cost;
}

double gain_db(double uniform_cost, double policy_cost) {
    return 10.0 * std::log10(gain(uniform_cost, policy_cost));
}

StaticBound bound_omniscient_static(const BoundInputs& in) {
    if (in.gamma.size() != static_cast<std::size_t>(in.horizon))
        throw std::invalid_argument("gamma length must match horizon");
    const double qd = static_cast<double>(in.q);
    double num = 0.0;
    double den = 0.0;
    for (int t = 1; t <= in.horizon; ++t) {
        const double w = in.gamma[static_cast<std::size_t>(t - 1)];
        if (w == 0.0) continue;
        const double r = in.r_static(t);
        const double scale = w / in.cumulative_budget(t);
        num += scale / (1.0 + r);
        const double d = 1.0 + in.p0 * r;
        den += scale * (in.p0 / d + (1.0 - in.p0) / qd / (d * d * d) -
                        (1.0 - in.p0) * (1.0 - 2.0 * in.p0) / (qd * qd) * r /
                            (d * d * d * d));
    }
    StaticBound out;
    out.bound = num / den;
    out.limit = in.sparsity_limit();
    return out;
}

CbarResult cbar_recursion(const BoundInputs& in, double num_targets, int t_max) {
    if (!(num_targets >= 1.0)) throw std::invalid_argument("need at least one target");
    if (t_max < 1) throw std::invalid_argument("t_max must be >= 1");
    CbarResult out;
    const double g = static_cast<double>(in.neighbor_count);
    // tolerance keeps the pi0 = 1/(1+|G|) boundary case on the valid side
    out.assumption_ok = in.stay_prob >= (1.0 - in.stay_prob) / g - 1e-12;

    const double pi0 = in.stay_prob;
    const double low_coef = (std::pow(pi0, 1.5) + std::pow(1.0 - pi0, 1.5) / std::sqrt(g)) /
                            (std::sqrt(pi0) + std::sqrt(g * (1.0 - pi0)));
    const double c_crit = in.critical_precision(num_targets);
    const double per_target = in.budget / num_targets;

    out.values.reserve(static_cast<std::size_t>(t_max));
    double c = in.noise_var / in.prior_var;
    out.values.push_back(c);
    for (int t = 2; t <= t_max; ++t) {
        if (c < c_crit)
            c = low_coef * ((1.0 + g) * c + per_target);
        else
            c = c + pi0 * per_target;
        out.values.push_back(c);
    }
    return out;
}

CbarResult cbar_recursion_dynamic(const BoundInputs& in, double num_targets, int t_max) {
    if (!(in.walk_var > 0.0))
        throw std::invalid_argument("dynamic recursion needs walk_var > 0");
    if (!(num_targets >= 1.0)) throw std::invalid_argument("need at least one target");
    if (t_max < 1) throw std::invalid_argument("t_max must be >= 1");
    CbarResult out;
    const double g = static_cast<double>(in.neighbor_count);
    out.assumption_ok = in.stay_prob >= (1.0 - in.stay_prob) / g - 1e-12;

    const double pi0 = in.stay_prob;
    const double low_coef = (std::pow(pi0, 1.5) + std::pow(1.0 - pi0, 1.5) / std::sqrt(g)) /
                            (std::sqrt(pi0) + std::sqrt(g * (1.0 - pi0)));
    const double c_crit = in.critical_precision(num_targets);
    const double per_target = in.budget / num_targets;
    const double a = in.noise_var / in.walk_var;  // sigma^2 / Delta^2

    out.values.reserve(static_cast<std::size_t>(t_max));
    double c = in.noise_var / in.prior_var;
    out.values.push_back(c);
    for (int t = 2; t <= t_max; ++t) {
        if (c < c_crit) {
            c = low_coef * ((1.0 + g) * c + per_target);
        } else {
            const double refreshed = c + per_target;
            c = pi0 * a * refreshed / (a + refreshed) + (1.0 - pi0) * a * c / (a + c);
        }
        out.values.push_back(c);
    }
    return out;
}

SemiStaticBound bound_semi_static(const BoundInputs& in, int t) {
    SemiStaticBound out;
    const double qd = static_cast<double>(in.q);
    out.per_stage_cost_floor = in.p0 * qd * (in.p0 * qd + 1.0 - in.p0) /
                               (in.stay_prob * in.budget * static_cast<double>(t));
    out.gain_limit = in.stay_prob * in.sparsity_limit();
    return out;
}

double steady_state_variance(double walk_var, double noise_var, double lambda_per_target) {
    if (!(walk_var > 0.0)) throw std::invalid_argument("walk variance must be positive");
    if (!(lambda_per_target > 0.0)) return kInf;
    return 0.5 * walk_var *
           (1.0 + std::sqrt(1.0 + 4.0 * noise_var / (walk_var * lambda_per_target)));
}

DynamicBound bound_omniscient_dynamic(const BoundInputs& in) {
    const double r = in.r_dynamic();
    const double qd = static_cast<double>(in.q);
    const double num = half_ratio(4.0 * r);
    const double root = std::sqrt(1.0 + 4.0 * in.p0 * r);
    const double den = in.p0 * half_ratio(4.0 * in.p0 * r) +
                       (1.0 - in.p0) / qd * (1.0 + 3.0 * in.p0 * r) / (root * root * root) -
                       (1.0 - in.p0) * (1.0 - 2.0 * in.p0) / (qd * qd) * r *
                           (1.0 + 2.0 * in.p0 * r) / std::pow(1.0 + 4.0 * in.p0 * r, 2.5);
    DynamicBound out;
    out.bound = num / den;
    out.limit = in.sparsity_limit();
    return out;
}

ConditionedBound bound_semi_dynamic(const BoundInputs& in) {
    const double r = in.r_dynamic();
    const double qp = in.q_dynamic();
    const double qd = static_cast<double>(in.q);
    const double g = static_cast<double>(in.neighbor_count);
    const double spread =
        std::sqrt(in.stay_prob) + std::sqrt(g * (1.0 - in.stay_prob));
    const double num = half_ratio(4.0 * r) / (spread * spread);
    const double d = 1.0 + in.p0 * qp;
    const double den = in.p0 / d + (1.0 - in.p0) / qd / (d * d * d) -
                       (1.0 - in.p0) * (1.0 - 2.0 * in.p0) / (qd * qd) * qp /
                           (d * d * d * d);
    ConditionedBound out;
    out.bound = num / den;
    const double margin = in.exploration_margin();
    out.condition_ok = margin < kInf && r * (margin + 1.0) <= 1.0;
    return out;
}

ConditionedBound bound_semi_small(const BoundInputs& in) {
    ConditionedBound out;
    out.bound = std::sqrt(in.stay_prob / in.p0);
    const double margin = in.exploration_margin();
    if (margin == kInf) {
        out.condition_ok = true;
        return out;
    }
    const double scale = std::sqrt(in.stay_prob * in.noise_var / (in.walk_var * in.budget));
    out.condition_ok = scale * margin >= 1.0;
    return out;
}

double steady_state_inverse_precision_trig(double stay_prob, double a1, double a2) {
    const double arg = 1.5 * std::sqrt(3.0 * stay_prob) * a2 / (a1 + a2) *
                       std::sqrt(a1 / (a1 + a2));
    const double clipped = std::min(1.0, std::max(-1.0, arg));
    return 2.0 * std::sqrt(a1 * (a1 + a2) / (3.0 * stay_prob)) *
           std::cos(std::acos(clipped) / 3.0);
}

double steady_state_inverse_precision_bisect(double stay_prob, double a1, double a2) {
    auto f = [&](double x) {
        return stay_prob * x * x * x - a1 * (a1 + a2) * x - a1 * a1 * a2;
    };
    double lo = 0.0;
    double hi = 1.0;
    while (f(hi) < 0.0) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

CombinedBound combined_bound(const BoundInputs& in) {
    CombinedBound out;
    out.omniscient = bound_omniscient_dynamic(in).bound;
    const ConditionedBound semi = bound_semi_dynamic(in);
    out.semi = semi.bound;
    out.semi_condition_ok = semi.condition_ok;
    out.used_semi = out.semi <= out.omniscient;
    out.bound = std::min(out.omniscient, out.semi);
    return out;
}

}  // namespace darap
