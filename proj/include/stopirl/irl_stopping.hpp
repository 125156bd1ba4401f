#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "stopirl/dataset.hpp"
#include "stopirl/feasibility.hpp"
#include "stopirl/model.hpp"

namespace stopirl {

// p_m(x | a) via Bayes from the prior and the observed policy; zero_evidence
// if action a is never chosen in environment m.
belief posterior_from_policy(const dataset& d, std::size_t m, std::size_t a);

// No-improving-action residuals: for every environment m and action pair
// (a, b) with p_m(a) > 0, the posterior-expected regret of a against b,
// sum_x p_m(x|a) (s_m(x,a) - s_m(x,b)). Keys "nias:m=..:a=..:b=..";
// <= 0 means rationalizable.
std::map<std::string, double> nias_residuals(
    const dataset& d, const std::vector<stop_cost_matrix>& costs);

// Expected stop cost of environment m's data under environment n's cost
// matrix when every action is relabeled to the best response under the
// revealed posteriors: sum_a p_m(a) min_b sum_x p_m(x|a) s_n(x,b).
double surrogate_stopping_cost(const dataset& d, std::size_t m, std::size_t n,
                               const std::vector<stop_cost_matrix>& costs);

// Expected stop cost actually incurred in environment m:
// sum_{x,a} prior(x) p_m(a|x) s_m(x,a).
double chosen_stopping_cost(const dataset& d, std::size_t m,
                            const std::vector<stop_cost_matrix>& costs);

// Sum over consecutive cycle pairs (m, next) of
// chosen(m) - surrogate(m, next); <= 0 on every directed simple cycle is the
// no-improving-attention-cycle condition. The cycle lists distinct
// environment indices; length >= 2 (length-1 cycles are identities).
double niac_cycle_residual(const dataset& d,
                           const std::vector<stop_cost_matrix>& costs,
                           const std::vector<std::size_t>& cycle);

enum class niac_mode { cycles, potentials };

niac_mode niac_mode_from_string(const std::string& s);

struct stopping_options {
    niac_mode mode = niac_mode::potentials;
    // Environments above this cap make the cycles mode intractable.
    std::size_t max_envs_for_cycles = 8;
    double tol = 1e-7;
    // Optional sharpening: force zero-diagonal witnesses (correct stops cost
    // nothing). Off by default; the plain system accepts action-constant
    // matrices and is feasible for any dataset.
    bool zero_diagonal = false;
};

// Rationalizability of a stopping dataset by environment-specific stop cost
// matrices (normalized to unit off-diagonal sum) and, in potentials mode,
// nonnegative per-environment continue-cost potentials. cycles mode checks
// every directed simple cycle by row generation; potentials mode checks the
// equivalent one-potential-per-environment system. Residual keys:
// "nias:...", "niac:cycle=m1-m2-...", "sumcost:m=..:n=..".
feasibility_result check_feasibility_stopping(const dataset& d,
                                              const stopping_options& opt = {});

// Per-environment continue-cost potentials consistent with the given stop
// costs, normalized so the smallest is zero; infeasible_sumcost if none
// exist.
std::vector<double> reconstruct_continue_costs(
    const dataset& d, const std::vector<stop_cost_matrix>& costs);

struct grid_spec {
    double lo = 0.0;
    double hi = 1.0;
    std::size_t steps = 21;  // points per axis
};

// 2-state feasibility slice: scan (cost_1, cost_2) = (s_env(1,2), s_env(2,1))
// over the grid while the other environments keep the supplied matrices, and
// test the raw (unnormalized) joint system. costs[env_index] is ignored.
std::vector<region_point> sample_feasible_region(
    const dataset& d, std::size_t env_index,
    const std::vector<stop_cost_matrix>& costs, const grid_spec& grid,
    const stopping_options& opt = {});

}  // namespace stopirl
