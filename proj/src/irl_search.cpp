#include "stopirl/irl_search.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include "stopirl/errors.hpp"
#include "stopirl/lp.hpp"

namespace stopirl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMarginBox = 1e6;

void require_search_kind(const dataset& d) {
    if (d.kind != dataset_kind::search)
        throw usage_error("occupation conditions require a search dataset");
    if (d.num_states != d.num_actions)
        throw dimension_mismatch("search datasets index locations by state");
    for (const auto& e : d.envs)
        if (e.search_policy.size() != d.num_states * d.num_actions)
            throw dimension_mismatch("occupation matrix shape");
}

void require_options(const search_options& opt) {
    if (opt.strict_margin < 0.0)
        throw usage_error("strict margin must be nonnegative");
    if (!(opt.cost_floor > 0.0))
        throw usage_error("cost floor must be positive");
}

std::string niacdagger_key(std::size_t m, std::size_t n) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "niacdagger:m=%zu:n=%zu", m, n);
    return buf;
}

// Prior-weighted occupation gap sum_{x,a} prior(x) (g_m - g_n)(x,a) l(a).
double occupation_gap(const dataset& d, std::size_t m, std::size_t n,
                      const search_cost_vector& l) {
    double v = 0.0;
    for (std::size_t x = 0; x < d.num_states; ++x)
        for (std::size_t a = 0; a < d.num_actions; ++a)
            v += d.prior[x] * (d.g_at(m, x, a) - d.g_at(n, x, a)) * l.l[a];
    return v;
}

bool all_occupations_identical(const dataset& d) {
    for (std::size_t m = 1; m < d.num_envs(); ++m)
        if (d.envs[m].search_policy != d.envs[0].search_policy) return false;
    return true;
}

}  // namespace

double expected_search_cost(const dataset& d, std::size_t policy_env,
                            const search_cost_vector& l) {
    require_search_kind(d);
    if (policy_env >= d.num_envs())
        throw dimension_mismatch("environment out of range");
    if (l.l.size() != d.num_actions)
        throw dimension_mismatch("one cost per location");
    double v = 0.0;
    for (std::size_t x = 0; x < d.num_states; ++x)
        for (std::size_t a = 0; a < d.num_actions; ++a)
            v += d.prior[x] * d.g_at(policy_env, x, a) * l.l[a];
    return v;
}

feasibility_result check_feasibility_search(const dataset& d,
                                            const search_options& opt) {
    require_search_kind(d);
    require_options(opt);
    const std::size_t M = d.num_envs();
    const std::size_t A = d.num_actions;
    if (M < 2)
        throw degenerate_dataset("need at least two environments to compare");
    if (all_occupations_identical(d))
        throw degenerate_dataset(
            "environments share one occupation matrix; strict comparisons "
            "cannot hold");

    // Variables: l_m(a) for a >= 1 (l_m(0) is pinned to 1), plus the common
    // slack tau maximized through the objective.
    lp_problem lp;
    std::vector<std::size_t> lvar(M * A, 0);
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t a = 1; a < A; ++a)
            lvar[m * A + a] = lp.add_var(opt.cost_floor, kInf);
    const std::size_t tau = lp.add_var(-kMarginBox, kMarginBox, -1.0);

    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t n = 0; n < M; ++n) {
            if (m == n) continue;
            lp_problem::row r;
            r.sense = row_sense::le;
            double constant = 0.0;
            for (std::size_t a = 0; a < A; ++a) {
                double coeff = 0.0;
                for (std::size_t x = 0; x < d.num_states; ++x)
                    coeff += d.prior[x] * (d.g_at(m, x, a) - d.g_at(n, x, a));
                if (a == 0)
                    constant = coeff;
                else if (coeff != 0.0)
                    r.coeffs.push_back({lvar[m * A + a], coeff});
            }
            r.coeffs.push_back({tau, 1.0});
            r.rhs = -opt.strict_margin - constant;
            lp.rows.push_back(std::move(r));
        }

    feasibility_result res;
    lp_solution sol = lp_solve(lp);
    if (sol.status != lp_status::optimal) {
        res.status = solver_status::numerical_failure;
        return res;
    }
    res.margin = sol.x[tau];

    res.witness_search_costs.resize(M);
    for (std::size_t m = 0; m < M; ++m) {
        res.witness_search_costs[m].l.assign(A, 1.0);
        for (std::size_t a = 1; a < A; ++a)
            res.witness_search_costs[m].l[a] =
                std::max(opt.cost_floor, sol.x[lvar[m * A + a]]);
    }

    bool ok = true;
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t n = 0; n < M; ++n) {
            if (m == n) continue;
            const double r =
                occupation_gap(d, m, n, res.witness_search_costs[m]) +
                opt.strict_margin;
            res.residuals[niacdagger_key(m, n)] = r;
            if (r > opt.tol) ok = false;
        }
    res.feasible = ok;
    res.status = ok ? solver_status::optimal : solver_status::infeasible;
    return res;
}

std::vector<region_point> sample_search_region(
    const dataset& d, std::size_t env_index,
    const std::vector<search_cost_vector>& costs, const grid_spec& grid,
    const search_options& opt) {
    require_search_kind(d);
    require_options(opt);
    if (d.num_actions != 3)
        throw usage_error("region sampling scans a 3-location cost vector");
    if (env_index >= d.num_envs())
        throw dimension_mismatch("environment out of range");
    if (costs.size() != d.num_envs())
        throw dimension_mismatch("one cost vector per environment");
    for (std::size_t n = 0; n < costs.size(); ++n)
        if (n != env_index && costs[n].l.size() != 3)
            throw dimension_mismatch("one cost per location");
    if (grid.steps < 2 || !(grid.hi > grid.lo))
        throw usage_error("grid needs at least two points per axis");

    const double step = (grid.hi - grid.lo) / static_cast<double>(grid.steps - 1);
    std::vector<region_point> out(grid.steps * grid.steps);

    auto evaluate = [&](std::size_t i, std::size_t j) {
        region_point pt;
        pt.cost_1 = grid.lo + step * static_cast<double>(i);
        pt.cost_2 = grid.lo + step * static_cast<double>(j);
        pt.feasible = false;
        if (pt.cost_1 < opt.cost_floor || pt.cost_2 < opt.cost_floor) return pt;

        std::vector<search_cost_vector> trial = costs;
        trial[env_index] = search_cost_vector{{1.0, pt.cost_1, pt.cost_2}};
        for (std::size_t m = 0; m < d.num_envs(); ++m)
            for (std::size_t n = 0; n < d.num_envs(); ++n) {
                if (m == n) continue;
                if (occupation_gap(d, m, n, trial[m]) + opt.strict_margin >
                    opt.tol)
                    return pt;
            }
        pt.feasible = true;
        return pt;
    };

    std::size_t workers = std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    workers = std::min<std::size_t>(workers, 8);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t k = w; k < out.size(); k += workers)
                out[k] = evaluate(k / grid.steps, k % grid.steps);
        });
    for (auto& th : pool) th.join();
    return out;
}

}  // namespace stopirl
