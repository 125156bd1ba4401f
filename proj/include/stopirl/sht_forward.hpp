#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "stopirl/dataset.hpp"
#include "stopirl/model.hpp"
#include "stopirl/rng.hpp"

namespace stopirl {

// A family of sequential hypothesis testing environments sharing the prior,
// the per-state Gaussian observation channels and the unit continue cost;
// environments differ only in their misclassification cost matrices.
struct sht_environment_set {
    belief prior;
    gaussian_observation_model obs;  // one channel per state
    double continue_cost = 1.0;
    std::vector<stop_cost_matrix> stop_costs;  // one square matrix per env

    std::size_t num_states() const { return prior.size(); }
    std::size_t num_envs() const { return stop_costs.size(); }
    // Requires M >= 2 environments, not all with identical cost matrices.
    void validate() const;
};

// Stationary stop/continue rule over the belief simplex.
//
// Two states: parameterized by thresholds in the pi(x=2) coordinate; continue
// iff beta < pi(x=2) <= alpha, declare action_low at or below beta and
// action_high above alpha.
// Three or more states: a barycentric lattice of side `resolution`, each cell
// holding -1 (continue) or the stop action; queries snap to the nearest
// lattice point.
struct threshold_policy {
    std::size_t num_states = 2;
    double beta = 0.0;
    double alpha = 1.0;
    std::size_t action_low = 0;
    std::size_t action_high = 1;
    std::size_t resolution = 0;
    std::vector<int> cells;

    // -1 = continue, otherwise the stop action.
    int decide(const belief& b) const;
};

// Barycentric lattice over the (num_states-1)-simplex: points with
// nonnegative integer coordinates summing to `resolution`.
std::size_t lattice_size(std::size_t num_states, std::size_t resolution);
std::size_t lattice_index(const std::vector<int>& coords, std::size_t resolution);
std::vector<int> lattice_coords(std::size_t index, std::size_t num_states,
                                std::size_t resolution);
belief lattice_point(const std::vector<int>& coords, std::size_t resolution);
std::size_t nearest_lattice_index(const belief& b, std::size_t resolution);

// Belief-grid value iteration for the optimal stationary policy of each
// environment. The observation stage (belief update and interpolation
// weights) is shared across environments; only the stop-cost envelope
// differs. grid_points is the one-dimensional resolution for X = 2
// (at least 101 points) and the lattice side for X >= 3. Throws
// no_convergence if the sup-norm change fails to drop below tol within
// max_sweeps.
std::vector<threshold_policy> solve_sht_policies(const sht_environment_set& es,
                                                 std::size_t grid_points,
                                                 double tol = 1e-9,
                                                 std::size_t max_sweeps = 10000);
threshold_policy solve_sht_policy(const sht_environment_set& es,
                                  std::size_t env_index,
                                  std::size_t grid_points,
                                  double tol = 1e-9,
                                  std::size_t max_sweeps = 10000);

// Expected total cost (continue plus declaration) of the optimal policy
// started from the prior.
double sht_optimal_value(const sht_environment_set& es, std::size_t env_index,
                         std::size_t grid_points, double tol = 1e-9,
                         std::size_t max_sweeps = 10000);

// One trajectory from the given true state. Observations arrive at
// t = 1, 2, ... and the policy is consulted after each belief update, so
// tau counts paid observations and is always >= 1; a policy whose continue
// region is empty stops at tau = 1 with an action driven by the first
// posterior. Throws horizon_exceeded past step_cap observations.
trial_record run_sht_trial(const sht_environment_set& es,
                           const threshold_policy& policy,
                           std::size_t env_index, std::size_t true_state,
                           rng& gen, std::size_t step_cap = 10000);

// trials_per_state trajectories per (environment, true state) stratum, each
// trial seeded from (seed, environment, state, trial index), aggregated into
// an sht dataset (tau_max = the largest observed stopping time).
dataset simulate_sht(const sht_environment_set& es, std::size_t grid_points,
                     std::size_t trials_per_state, std::uint64_t seed,
                     std::size_t step_cap = 10000);

// Same trajectories as simulate_sht, returned as raw records.
std::vector<trial_record> simulate_sht_records(const sht_environment_set& es,
                                               std::size_t grid_points,
                                               std::size_t trials_per_state,
                                               std::uint64_t seed,
                                               std::size_t step_cap = 10000);

}  // namespace stopirl
