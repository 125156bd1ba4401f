#include "stopirl/search_forward.hpp"

#include <cmath>

namespace stopirl {

void search_environment_set::validate() const {
    std::size_t X = prior.size();
    if (X < 2) throw dimension_mismatch("need at least two locations");
    if (obs.alpha.size() != X) throw dimension_mismatch("one reveal probability per location");
    for (double a : obs.alpha)
        if (!(a > 0.0) || !(a <= 1.0))
            throw error("reveal probabilities must lie in (0,1]");
    if (costs.size() < 2) throw dimension_mismatch("need at least two environments");
    for (const auto& l : costs) {
        if (l.l.size() != X) throw dimension_mismatch("one search cost per location");
        l.validate(true);
    }
    bool all_same = true;
    for (std::size_t m = 1; m < costs.size() && all_same; ++m)
        all_same = costs[m].l == costs[0].l;
    if (all_same) throw degenerate_dataset("environments need distinct search costs");
}

std::size_t search_index_action(const belief& b, const search_observation_model& obs,
                                const search_cost_vector& cost) {
    if (b.size() != obs.num_locations() || b.size() != cost.l.size())
        throw dimension_mismatch("belief, reveal and cost sizes must agree");
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t a = 0; a < b.size(); ++a) {
        double v = b[a] * obs.alpha[a] / cost.l[a];
        if (v > best) {
            best = v;
            arg = a;
        }
    }
    return arg;
}

search_trial_record run_search_trial(const search_environment_set& es, std::size_t env_index,
                                     std::size_t true_state, rng& gen, std::size_t step_cap) {
    if (env_index >= es.num_envs()) throw dimension_mismatch("environment index out of range");
    if (true_state >= es.num_locations()) throw dimension_mismatch("location out of range");
    search_trial_record rec;
    rec.environment = env_index;
    rec.true_state = true_state;
    belief b = es.prior;
    for (std::size_t t = 1; t <= step_cap; ++t) {
        std::size_t a = search_index_action(b, es.obs, es.costs[env_index]);
        rec.actions.push_back(a);
        if (a == true_state && gen.bernoulli(es.obs.alpha[a])) {
            rec.stopping_time = t;
            return rec;
        }
        b = bayes_update_search(b, a, search_outcome::not_found, es.obs);
    }
    throw horizon_exceeded("target not found within the step cap");
}

namespace {

template <typename Sink>
void for_each_search_trial(const search_environment_set& es, std::size_t trials_per_state,
                           std::uint64_t seed, std::size_t step_cap, Sink&& sink) {
    es.validate();
    if (trials_per_state == 0) throw usage_error("need at least one trial per stratum");
    std::size_t X = es.num_locations();
    for (std::size_t m = 0; m < es.num_envs(); ++m)
        for (std::size_t x = 0; x < X; ++x)
            for (std::size_t k = 0; k < trials_per_state; ++k) {
                rng gen(derive_seed(seed, m, x, k));
                sink(run_search_trial(es, m, x, gen, step_cap));
            }
}

}  // namespace

dataset simulate_search(const search_environment_set& es, std::size_t trials_per_state,
                        std::uint64_t seed, std::size_t step_cap) {
    search_aggregator agg(es.num_envs(), es.num_locations());
    for_each_search_trial(es, trials_per_state, seed, step_cap,
                          [&](const search_trial_record& t) { agg.add(t); });
    return agg.finish(es.prior);
}

std::vector<search_trial_record> simulate_search_records(const search_environment_set& es,
                                                         std::size_t trials_per_state,
                                                         std::uint64_t seed,
                                                         std::size_t step_cap) {
    std::vector<search_trial_record> out;
    out.reserve(es.num_envs() * es.num_locations() * trials_per_state);
    for_each_search_trial(es, trials_per_state, seed, step_cap,
                          [&](const search_trial_record& t) { out.push_back(t); });
    return out;
}

std::vector<double> search_occupation_exact(const search_environment_set& es,
                                            std::size_t env_index, double tail_tol,
                                            std::size_t step_cap) {
    es.validate();
    if (env_index >= es.num_envs()) throw dimension_mismatch("environment index out of range");
    std::size_t X = es.num_locations();
    std::vector<double> g(X * X, 0.0);
    // The all-miss belief path is deterministic and shared by every true
    // location; conditioning on the target at x only thins survival at each
    // visit to x.
    for (std::size_t x = 0; x < X; ++x) {
        belief b = es.prior;
        double survive = 1.0;
        std::size_t t = 0;
        while (survive >= tail_tol) {
            if (++t > step_cap) throw horizon_exceeded("occupation tail did not vanish");
            std::size_t a = search_index_action(b, es.obs, es.costs[env_index]);
            g[x * X + a] += survive;
            if (a == x) survive *= 1.0 - es.obs.alpha[x];
            b = bayes_update_search(b, a, search_outcome::not_found, es.obs);
        }
    }
    return g;
}

}  // namespace stopirl
