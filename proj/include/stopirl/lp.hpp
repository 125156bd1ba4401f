#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace stopirl {

enum class lp_status { optimal, infeasible, unbounded, numerical_failure };

enum class row_sense { le, ge, eq };

// min c'x subject to rows and finite lower bounds (upper bounds optional).
// All lower bounds must be finite; +inf upper bound means unbounded above.
struct lp_problem {
    struct row {
        std::vector<std::pair<std::size_t, double>> coeffs;
        row_sense sense = row_sense::le;
        double rhs = 0.0;
    };

    std::size_t num_vars = 0;
    std::vector<double> objective;    // size num_vars; empty means 0
    std::vector<double> lower;        // size num_vars; finite
    std::vector<double> upper;        // size num_vars; may be +inf
    std::vector<row> rows;

    std::size_t add_var(double lo, double hi, double obj = 0.0);
    void add_row(row r);
};

struct lp_solution {
    lp_status status = lp_status::numerical_failure;
    std::vector<double> x;
    double objective = 0.0;
};

// Dense two-phase primal simplex. Deterministic; Dantzig pricing with a
// Bland fallback against cycling.
lp_solution lp_solve(const lp_problem& p);

}  // namespace stopirl
