#include "stopirl/lp.hpp"

#include <cmath>
#include <limits>

namespace stopirl {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-8;
constexpr double kZeroTol = 1e-11;
constexpr std::size_t kMaxIters = 200000;

struct tableau {
    std::size_t m = 0;      // constraint rows
    std::size_t n = 0;      // total columns (structural + slack + artificial)
    std::vector<double> a;  // row-major m x (n + 1); last column is rhs
    std::vector<std::size_t> basis;  // size m

    double& at(std::size_t i, std::size_t j) { return a[i * (n + 1) + j]; }
    double at(std::size_t i, std::size_t j) const { return a[i * (n + 1) + j]; }
    double& rhs(std::size_t i) { return a[i * (n + 1) + n]; }
    double rhs(std::size_t i) const { return a[i * (n + 1) + n]; }

    void pivot(std::size_t pr, std::size_t pc) {
        const double pv = at(pr, pc);
        const double inv = 1.0 / pv;
        for (std::size_t j = 0; j <= n; ++j) at(pr, j) *= inv;
        at(pr, pc) = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == pr) continue;
            const double f = at(i, pc);
            if (std::abs(f) < kZeroTol) {
                at(i, pc) = 0.0;
                continue;
            }
            for (std::size_t j = 0; j <= n; ++j) at(i, j) -= f * at(pr, j);
            at(i, pc) = 0.0;
        }
        basis[pr] = pc;
    }
};

// Runs simplex iterations for objective `cost` (minimization); `allowed`
// masks columns eligible to enter. Returns status.
lp_status run_simplex(tableau& t, const std::vector<double>& cost,
                      const std::vector<bool>& allowed) {
    const std::size_t m = t.m, n = t.n;
    std::vector<double> z(n + 1, 0.0);  // reduced costs and objective value
    auto recompute = [&] {
        for (std::size_t j = 0; j <= n; ++j) z[j] = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double cb = cost[t.basis[i]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j <= n; ++j) z[j] += cb * t.at(i, j);
        }
        for (std::size_t j = 0; j < n; ++j) z[j] = cost[j] - z[j];
    };
    recompute();

    std::size_t stall = 0;
    double last_obj = std::numeric_limits<double>::infinity();
    for (std::size_t iter = 0; iter < kMaxIters; ++iter) {
        const bool bland = stall > 64;
        std::size_t pc = n;
        double best = -kPivotTol;
        for (std::size_t j = 0; j < n; ++j) {
            if (!allowed[j]) continue;
            if (z[j] < best) {
                best = z[j];
                pc = j;
                if (bland) break;  // first eligible column
            }
        }
        if (pc == n) return lp_status::optimal;

        std::size_t pr = m;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) {
            const double aij = t.at(i, pc);
            if (aij > kPivotTol) {
                const double ratio = t.rhs(i) / aij;
                if (ratio < best_ratio - 1e-12 ||
                    (bland && ratio < best_ratio + 1e-12 &&
                     (pr == m || t.basis[i] < t.basis[pr]))) {
                    best_ratio = ratio;
                    pr = i;
                }
            }
        }
        if (pr == m) return lp_status::unbounded;

        t.pivot(pr, pc);
        recompute();

        const double obj = z[n];
        if (obj < last_obj - 1e-12) {
            stall = 0;
            last_obj = obj;
        } else {
            ++stall;
        }
    }
    return lp_status::numerical_failure;
}

}  // namespace

std::size_t lp_problem::add_var(double lo, double hi, double obj) {
    lower.push_back(lo);
    upper.push_back(hi);
    objective.push_back(obj);
    return num_vars++;
}

void lp_problem::add_row(row r) { rows.push_back(std::move(r)); }

lp_solution lp_solve(const lp_problem& p) {
    lp_solution out;
    const std::size_t nv = p.num_vars;

    // Shift x = lower + x'; finite upper bounds become extra <= rows.
    std::vector<lp_problem::row> rows(p.rows);
    for (std::size_t v = 0; v < nv; ++v) {
        if (std::isfinite(p.upper[v])) {
            lp_problem::row r;
            r.coeffs = {{v, 1.0}};
            r.sense = row_sense::le;
            r.rhs = p.upper[v];
            rows.push_back(std::move(r));
        }
    }

    const std::size_t m = rows.size();
    std::vector<double> shifted_rhs(m);
    std::vector<int> sign(m, 1);
    std::vector<row_sense> sense(m);
    for (std::size_t i = 0; i < m; ++i) {
        double rhs = rows[i].rhs;
        for (const auto& [v, c] : rows[i].coeffs) rhs -= c * p.lower[v];
        sense[i] = rows[i].sense;
        if (rhs < 0.0) {
            sign[i] = -1;
            rhs = -rhs;
            if (sense[i] == row_sense::le)
                sense[i] = row_sense::ge;
            else if (sense[i] == row_sense::ge)
                sense[i] = row_sense::le;
        }
        shifted_rhs[i] = rhs;
    }

    std::size_t num_slack = 0, num_art = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (sense[i] != row_sense::eq) ++num_slack;
        if (sense[i] != row_sense::le) ++num_art;
    }

    tableau t;
    t.m = m;
    t.n = nv + num_slack + num_art;
    t.a.assign(m * (t.n + 1), 0.0);
    t.basis.assign(m, 0);

    std::size_t slack_at = nv, art_at = nv + num_slack;
    std::vector<bool> is_art(t.n, false);
    for (std::size_t i = 0; i < m; ++i) {
        for (const auto& [v, c] : rows[i].coeffs) t.at(i, v) += sign[i] * c;
        t.rhs(i) = shifted_rhs[i];
        if (sense[i] == row_sense::le) {
            t.at(i, slack_at) = 1.0;
            t.basis[i] = slack_at++;
        } else if (sense[i] == row_sense::ge) {
            t.at(i, slack_at) = -1.0;
            ++slack_at;
            t.at(i, art_at) = 1.0;
            is_art[art_at] = true;
            t.basis[i] = art_at++;
        } else {
            t.at(i, art_at) = 1.0;
            is_art[art_at] = true;
            t.basis[i] = art_at++;
        }
    }

    std::vector<bool> allowed(t.n, true);

    if (num_art > 0) {
        std::vector<double> phase1(t.n, 0.0);
        for (std::size_t j = 0; j < t.n; ++j)
            if (is_art[j]) phase1[j] = 1.0;
        const lp_status st = run_simplex(t, phase1, allowed);
        if (st == lp_status::numerical_failure) {
            out.status = st;
            return out;
        }
        double art_sum = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            if (is_art[t.basis[i]]) art_sum += t.rhs(i);
        if (art_sum > kFeasTol) {
            out.status = lp_status::infeasible;
            return out;
        }
        // Drive residual zero-valued artificials out of the basis.
        for (std::size_t i = 0; i < m; ++i) {
            if (!is_art[t.basis[i]]) continue;
            std::size_t pc = t.n;
            for (std::size_t j = 0; j < nv + num_slack; ++j) {
                if (std::abs(t.at(i, j)) > kPivotTol) {
                    pc = j;
                    break;
                }
            }
            if (pc != t.n) t.pivot(i, pc);
        }
        for (std::size_t j = 0; j < t.n; ++j)
            if (is_art[j]) allowed[j] = false;
    }

    bool zero_objective = true;
    for (double c : p.objective)
        if (c != 0.0) zero_objective = false;

    if (!zero_objective) {
        std::vector<double> phase2(t.n, 0.0);
        for (std::size_t v = 0; v < nv; ++v) phase2[v] = p.objective[v];
        const lp_status st = run_simplex(t, phase2, allowed);
        if (st != lp_status::optimal) {
            out.status = st;
            return out;
        }
    }

    out.status = lp_status::optimal;
    out.x.assign(nv, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        if (t.basis[i] < nv) out.x[t.basis[i]] = t.rhs(i);
    for (std::size_t v = 0; v < nv; ++v) out.x[v] += p.lower[v];
    out.objective = 0.0;
    for (std::size_t v = 0; v < nv; ++v)
        out.objective += (v < p.objective.size() ? p.objective[v] : 0.0) * out.x[v];
    return out;
}

}  // namespace stopirl
