#pragma once

#include <cstddef>
#include <vector>

#include "stopirl/dataset.hpp"
#include "stopirl/feasibility.hpp"
#include "stopirl/irl_stopping.hpp"
#include "stopirl/model.hpp"

namespace stopirl {

// Expected total search cost of environment policy_env's occupation matrix
// under the cost vector l: sum_{x,a} prior(x) g(x,a) l(a).
double expected_search_cost(const dataset& d, std::size_t policy_env,
                            const search_cost_vector& l);

struct search_options {
    // Strict inequalities are enforced with this uniform margin.
    double strict_margin = 1e-9;
    // Cost entries are kept strictly positive with this floor.
    double cost_floor = 1e-6;
    // Residuals up to this tolerance count as satisfied.
    double tol = 1e-7;
};

// Rationalizability of a search dataset by per-environment positive cost
// vectors with l_m(1) = 1: each environment's own occupation matrix must be
// strictly cheaper under its own costs than every other environment's,
// sum_{x,a} prior(x) (g_m(x,a) - g_n(x,a)) l_m(a) < 0 for all n != m.
// degenerate_dataset if all environments share one occupation matrix.
// Residual keys "niacdagger:m=..:n=.." hold the left-hand side plus the
// margin (<= 0 satisfied).
feasibility_result check_feasibility_search(const dataset& d,
                                            const search_options& opt = {});

// 3-location feasibility slice for environment env_index: scan
// (cost_1, cost_2) = (l(2), l(3)) with l(1) = 1 while the other environments
// keep the supplied vectors. costs[env_index] is ignored.
std::vector<region_point> sample_search_region(
    const dataset& d, std::size_t env_index,
    const std::vector<search_cost_vector>& costs, const grid_spec& grid,
    const search_options& opt = {});

}  // namespace stopirl
