#include "stopirl/irl_sht.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "stopirl/errors.hpp"
#include "stopirl/irl_stopping.hpp"
#include "stopirl/lp.hpp"

namespace stopirl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMarginBox = 1e6;

void require_sht_shape(const dataset& d) {
    if (d.kind != dataset_kind::sht)
        throw usage_error("sequential-test conditions require an sht dataset");
    if (d.num_states != d.num_actions)
        throw dimension_mismatch("declare-state datasets are square");
    if (d.num_states < 2)
        throw usage_error("need at least two states to misclassify");
    for (const auto& e : d.envs)
        if (!std::isfinite(e.mean_stopping_time))
            throw usage_error("every environment needs a mean stopping time");
}

void require_cost_dims(const dataset& d,
                       const std::vector<stop_cost_matrix>& costs) {
    if (costs.size() != d.num_envs())
        throw dimension_mismatch("one stop cost matrix per environment");
    for (const auto& s : costs)
        if (s.num_states != d.num_states || s.num_actions != d.num_actions)
            throw dimension_mismatch("stop cost matrix shape");
}

std::string niacstar_key(std::size_t m, std::size_t n) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "niacstar:m=%zu:n=%zu", m, n);
    return buf;
}

// Policy part of the margin: sum_{x,a} prior(x) (p_n(a|x) - p_m(a|x)) s_m(x,a).
double policy_gain(const dataset& d, const stop_cost_matrix& s_m,
                   std::size_t m, std::size_t n) {
    double v = 0.0;
    for (std::size_t x = 0; x < d.num_states; ++x)
        for (std::size_t a = 0; a < d.num_actions; ++a)
            v += d.prior[x] * (d.policy_at(n, x, a) - d.policy_at(m, x, a)) *
                 s_m.at(x, a);
    return v;
}

}  // namespace

double niac_star_margin(const dataset& d,
                        const std::vector<stop_cost_matrix>& costs,
                        std::size_t m, std::size_t n) {
    require_sht_shape(d);
    require_cost_dims(d, costs);
    if (m >= d.num_envs() || n >= d.num_envs() || m == n)
        throw usage_error("the margin compares two distinct environments");
    return policy_gain(d, costs[m], m, n) + d.envs[n].mean_stopping_time -
           d.envs[m].mean_stopping_time;
}

feasibility_result check_feasibility_sht(const dataset& d,
                                         const sht_options& opt) {
    require_sht_shape(d);
    if (!(opt.gamma_min > 0.0) || !(opt.gamma_max >= opt.gamma_min))
        throw usage_error("scale bounds must satisfy 0 < gamma_min <= gamma_max");
    const std::size_t M = d.num_envs();
    const std::size_t X = d.num_states;
    const std::size_t A = d.num_actions;
    if (M < 2) throw degenerate_dataset("need at least two environments");
    bool all_same = true;
    for (std::size_t m = 1; m < M && all_same; ++m)
        all_same = d.envs[m].policy == d.envs[0].policy &&
                   d.envs[m].mean_stopping_time == d.envs[0].mean_stopping_time;
    if (all_same)
        throw degenerate_dataset(
            "environments share one policy and stopping time");

    lp_problem p;
    std::vector<std::size_t> svar(M * X * A);
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t x = 0; x < X; ++x)
            for (std::size_t a = 0; a < A; ++a)
                svar[(m * X + x) * A + a] = p.add_var(0.0, x == a ? 0.0 : kInf);
    std::vector<std::size_t> gvar(M);
    for (std::size_t m = 0; m < M; ++m)
        gvar[m] = p.add_var(opt.gamma_min, opt.gamma_max);
    const std::size_t tau = p.add_var(-kMarginBox, kMarginBox, -1.0);
    auto s_idx = [&](std::size_t m, std::size_t x, std::size_t a) {
        return svar[(m * X + x) * A + a];
    };

    for (std::size_t m = 0; m < M; ++m) {
        lp_problem::row norm;
        for (std::size_t x = 0; x < X; ++x)
            for (std::size_t a = 0; a < A; ++a)
                if (x != a) norm.coeffs.push_back({s_idx(m, x, a), 1.0});
        norm.sense = row_sense::eq;
        norm.rhs = 1.0;
        p.add_row(std::move(norm));
    }

    // NIAS rows: posterior regret of the declared action plus the margin
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t a = 0; a < A; ++a) {
            double marg = 0.0;
            for (std::size_t x = 0; x < X; ++x)
                marg += d.prior[x] * d.policy_at(m, x, a);
            if (marg <= 0.0) continue;
            for (std::size_t b = 0; b < A; ++b) {
                if (b == a) continue;
                lp_problem::row row;
                for (std::size_t x = 0; x < X; ++x) {
                    const double q = d.prior[x] * d.policy_at(m, x, a) / marg;
                    if (q == 0.0) continue;
                    row.coeffs.push_back({s_idx(m, x, a), q});
                    row.coeffs.push_back({s_idx(m, x, b), -q});
                }
                row.coeffs.push_back({tau, 1.0});
                row.sense = row_sense::le;
                row.rhs = 0.0;
                p.add_row(std::move(row));
            }
        }

    // NIAC* rows: policy gain plus the scaled stopping-time difference
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t n = 0; n < M; ++n) {
            if (m == n) continue;
            lp_problem::row row;
            for (std::size_t x = 0; x < X; ++x)
                for (std::size_t a = 0; a < A; ++a) {
                    if (x == a) continue;
                    const double c =
                        d.prior[x] *
                        (d.policy_at(n, x, a) - d.policy_at(m, x, a));
                    if (c != 0.0) row.coeffs.push_back({s_idx(m, x, a), -c});
                }
            const double dc =
                d.envs[n].mean_stopping_time - d.envs[m].mean_stopping_time;
            if (dc != 0.0) row.coeffs.push_back({gvar[m], -dc});
            row.coeffs.push_back({tau, 1.0});
            row.sense = row_sense::le;
            row.rhs = 0.0;
            p.add_row(std::move(row));
        }

    feasibility_result res;
    lp_solution sol = lp_solve(p);
    if (sol.status != lp_status::optimal) {
        res.status = solver_status::numerical_failure;
        return res;
    }
    res.margin = sol.x[tau];
    res.witness_costs.reserve(M);
    for (std::size_t m = 0; m < M; ++m) {
        stop_cost_matrix s = stop_cost_matrix::zeros(X, A);
        for (std::size_t x = 0; x < X; ++x)
            for (std::size_t a = 0; a < A; ++a)
                if (x != a) s.at(x, a) = std::max(0.0, sol.x[s_idx(m, x, a)]);
        res.witness_costs.push_back(std::move(s));
    }
    res.witness_continue_costs.resize(M);
    for (std::size_t m = 0; m < M; ++m)
        res.witness_continue_costs[m] = sol.x[gvar[m]];

    res.residuals = nias_residuals(d, res.witness_costs);
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t n = 0; n < M; ++n) {
            if (m == n) continue;
            const double dc =
                d.envs[n].mean_stopping_time - d.envs[m].mean_stopping_time;
            res.residuals[niacstar_key(m, n)] =
                -(policy_gain(d, res.witness_costs[m], m, n) +
                  res.witness_continue_costs[m] * dc);
        }
    res.feasible = true;
    for (const auto& [key, v] : res.residuals)
        if (v > opt.tol) res.feasible = false;
    res.status =
        res.feasible ? solver_status::optimal : solver_status::infeasible;
    return res;
}

sht_point_estimate regularized_point_estimate(const dataset& d, double lambda,
                                              std::optional<double> box) {
    require_sht_shape(d);
    if (d.num_envs() < 2)
        throw degenerate_dataset("need at least two environments");
    if (lambda < 0.0)
        throw usage_error("regularization weight must be nonnegative");
    if (box && !(*box > 0.0)) throw usage_error("cost box must be positive");
    if (lambda == 0.0 && !box)
        throw unbounded_objective(
            "the unregularized margin is linear; configure a cost box");

    const std::size_t M = d.num_envs();
    sht_point_estimate est;
    est.costs.reserve(M);
    for (std::size_t m = 0; m < M; ++m) {
        stop_cost_matrix s =
            stop_cost_matrix::zeros(d.num_states, d.num_actions);
        for (std::size_t x = 0; x < d.num_states; ++x)
            for (std::size_t a = 0; a < d.num_actions; ++a) {
                if (x == a) continue;
                double c = 0.0;
                for (std::size_t n = 0; n < M; ++n)
                    if (n != m)
                        c += d.policy_at(n, x, a) - d.policy_at(m, x, a);
                c *= d.prior[x];
                double v;
                if (lambda > 0.0) {
                    v = std::max(0.0, c / (2.0 * lambda));
                    if (box) v = std::min(v, *box);
                } else {
                    v = c > 0.0 ? *box : 0.0;
                }
                s.at(x, a) = v;
                est.objective += c * v - lambda * v * v;
            }
        est.costs.push_back(std::move(s));
    }
    return est;
}

}  // namespace stopirl
