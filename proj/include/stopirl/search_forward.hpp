#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "stopirl/dataset.hpp"
#include "stopirl/model.hpp"
#include "stopirl/rng.hpp"

namespace stopirl {

// A family of Bayesian search environments sharing the prior and per-location
// detection probabilities; environments differ only in their per-search cost
// vectors (first entry normalized to 1).
struct search_environment_set {
    belief prior;
    search_observation_model obs;
    std::vector<search_cost_vector> costs;  // one vector per env

    std::size_t num_locations() const { return obs.num_locations(); }
    std::size_t num_envs() const { return costs.size(); }
    void validate() const;
};

// Myopic index rule, optimal for independent-detection search: search the
// location maximizing pi(a) * alpha(a) / l(a), ties to the lowest index.
std::size_t search_index_action(const belief& b, const search_observation_model& obs,
                                const search_cost_vector& cost);

// One trajectory with the target at true_state: search, observe miss, update
// the belief, repeat until the target is found. Throws horizon_exceeded past
// step_cap searches.
search_trial_record run_search_trial(const search_environment_set& es,
                                     std::size_t env_index,
                                     std::size_t true_state, rng& gen,
                                     std::size_t step_cap = 1000000);

// trials_per_state trajectories per (environment, true state) stratum with
// seeds derived per stratum, aggregated into a search dataset.
dataset simulate_search(const search_environment_set& es,
                        std::size_t trials_per_state, std::uint64_t seed,
                        std::size_t step_cap = 1000000);

// Same trajectories as simulate_search, returned as raw records.
std::vector<search_trial_record> simulate_search_records(
    const search_environment_set& es, std::size_t trials_per_state,
    std::uint64_t seed, std::size_t step_cap = 1000000);

// Population value of the occupation matrix entry g(x, a) for the index
// policy, by exact episode enumeration: follows the deterministic action
// sequence from the prior and accumulates miss-path probabilities until the
// residual mass is below tail_tol. Reference oracle for simulate_search.
std::vector<double> search_occupation_exact(const search_environment_set& es,
                                            std::size_t env_index,
                                            double tail_tol = 1e-12,
                                            std::size_t step_cap = 1000000);

}  // namespace stopirl
