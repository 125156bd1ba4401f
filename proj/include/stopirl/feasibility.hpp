#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "stopirl/model.hpp"

namespace stopirl {

enum class solver_status { optimal, infeasible, numerical_failure };

std::string to_string(solver_status s);

// Outcome of a rationalizability test. Residuals are normalized so that
// <= 0 means the named constraint is satisfied by the witness (or, when
// infeasible, by the best attempt). witness_costs carry per-environment stop
// cost matrices normalized to unit off-diagonal sum; witness_continue_costs
// carry the paired continue-cost scale per environment (the witness
// rationalizes the data with stop costs witness_costs[m] and continue cost
// witness_continue_costs[m] per observation). Search tests fill
// witness_search_costs instead.
struct feasibility_result {
    bool feasible = false;
    std::vector<stop_cost_matrix> witness_costs;
    std::vector<double> witness_continue_costs;
    std::vector<search_cost_vector> witness_search_costs;
    std::map<std::string, double> residuals;
    solver_status status = solver_status::numerical_failure;
    // Largest uniform slack achievable across all constraints; positive iff
    // strictly feasible, near zero on the boundary.
    double margin = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace stopirl
