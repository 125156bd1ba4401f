#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "stopirl/dataset.hpp"
#include "stopirl/feasibility.hpp"
#include "stopirl/model.hpp"

namespace stopirl {

// Gain of environment m's policy over environment n's when both are priced
// at environment m's costs, including the observation-cost difference:
// sum_{x,a} prior(x) (p_n(a|x) - p_m(a|x)) s_m(x,a) + C_n - C_m where C_m is
// the recorded mean stopping time. >= 0 for all ordered pairs is the
// no-improving-attention condition specialized to unit continue cost.
double niac_star_margin(const dataset& d,
                        const std::vector<stop_cost_matrix>& costs,
                        std::size_t m, std::size_t n);

struct sht_options {
    double tol = 1e-7;
    // Scale variables gamma_m multiplying the mean-stopping-time differences
    // are bounded to keep the joint system linear and bounded.
    double gamma_min = 1e-9;
    double gamma_max = 1e12;
};

// Rationalizability of an sht dataset by positive, zero-diagonal,
// unit-off-diagonal-sum stop cost matrices together with per-environment
// cost scales. Feasible iff some raw-scale matrices satisfy the
// no-improving-action and no-improving-attention conditions; the returned
// witness carries the normalized matrices and the scales in
// witness_continue_costs. degenerate_dataset if all environments share one
// policy and mean stopping time. Residual keys "nias:..." and
// "niacstar:m=..:n=.." (niacstar residual = violation, <= 0 satisfied).
feasibility_result check_feasibility_sht(const dataset& d,
                                         const sht_options& opt = {});

// Point estimate maximizing the sum of pairwise no-improving-attention
// margins minus lambda * squared Frobenius norm of the off-diagonal costs.
// The objective separates per entry, giving the closed form
// L = max(0, c / (2 lambda)) with c the summed posterior-flow coefficient.
// lambda = 0 requires a box bound ||L||_inf <= box (bang-bang solution);
// unbounded_objective if lambda = 0 and no box is given.
struct sht_point_estimate {
    std::vector<stop_cost_matrix> costs;  // zero diagonal
    double objective = 0.0;               // attained value of the program
};
sht_point_estimate regularized_point_estimate(
    const dataset& d, double lambda,
    std::optional<double> box = std::nullopt);

}  // namespace stopirl
