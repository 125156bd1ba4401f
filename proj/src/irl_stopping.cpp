#include "stopirl/irl_stopping.hpp"

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

void require_stopping_kind(const dataset& d) {
    if (d.kind == dataset_kind::search)
        throw usage_error(
            "stopping feasibility requires a stopping or sht dataset");
}

void require_cost_dims(const dataset& d,
                       const std::vector<stop_cost_matrix>& costs) {
    if (costs.size() != d.num_envs())
        throw dimension_mismatch("one stop cost matrix per environment");
    for (const auto& s : costs)
        if (s.num_states != d.num_states || s.num_actions != d.num_actions)
            throw dimension_mismatch("stop cost matrix shape");
}

std::string nias_key(std::size_t m, std::size_t a, std::size_t b) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "nias:m=%zu:a=%zu:b=%zu", m, a, b);
    return buf;
}

std::string sumcost_key(std::size_t m, std::size_t n) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "sumcost:m=%zu:n=%zu", m, n);
    return buf;
}

std::string cycle_key(const std::vector<std::size_t>& cycle) {
    std::string key = "niac:cycle=";
    for (std::size_t i = 0; i < cycle.size(); ++i) {
        if (i) key += '-';
        key += std::to_string(cycle[i]);
    }
    return key;
}

// Unconditional action probabilities and revealed posteriors for every
// environment; posteriors are valid only where the marginal is positive.
struct policy_stats {
    std::size_t M = 0, X = 0, A = 0;
    std::vector<double> marg;  // M*A
    std::vector<double> post;  // M*A*X

    double marginal(std::size_t m, std::size_t a) const {
        return marg[m * A + a];
    }
    double posterior(std::size_t m, std::size_t a, std::size_t x) const {
        return post[(m * A + a) * X + x];
    }
};

policy_stats compute_stats(const dataset& d) {
    policy_stats st;
    st.M = d.num_envs();
    st.X = d.num_states;
    st.A = d.num_actions;
    st.marg.assign(st.M * st.A, 0.0);
    st.post.assign(st.M * st.A * st.X, 0.0);
    for (std::size_t m = 0; m < st.M; ++m)
        for (std::size_t a = 0; a < st.A; ++a) {
            double p = 0.0;
            for (std::size_t x = 0; x < st.X; ++x)
                p += d.prior[x] * d.policy_at(m, x, a);
            st.marg[m * st.A + a] = p;
            if (p <= 0.0) continue;
            for (std::size_t x = 0; x < st.X; ++x)
                st.post[(m * st.A + a) * st.X + x] =
                    d.prior[x] * d.policy_at(m, x, a) / p;
        }
    return st;
}

bool all_policies_identical(const dataset& d) {
    for (std::size_t m = 1; m < d.num_envs(); ++m)
        if (d.envs[m].policy != d.envs[0].policy) return false;
    return true;
}

// Directed simple cycles over {0..M-1}, length >= 2, keyed by their smallest
// index first so each cycle appears exactly once up to rotation.
void extend_cycles(std::size_t M, std::vector<std::size_t>& cur,
                   std::vector<bool>& used,
                   std::vector<std::vector<std::size_t>>& out) {
    if (cur.size() >= 2) out.push_back(cur);
    for (std::size_t v = cur.front() + 1; v < M; ++v) {
        if (used[v]) continue;
        used[v] = true;
        cur.push_back(v);
        extend_cycles(M, cur, used, out);
        cur.pop_back();
        used[v] = false;
    }
}

std::vector<std::vector<std::size_t>> enumerate_cycles(std::size_t M) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<bool> used(M, false);
    for (std::size_t first = 0; first + 1 < M; ++first) {
        std::vector<std::size_t> cur{first};
        std::fill(used.begin(), used.end(), false);
        used[first] = true;
        extend_cycles(M, cur, used, out);
    }
    return out;
}

// w(m, n) = chosen(m) - surrogate(m, n); a cycle residual is the sum of w
// over its consecutive pairs.
std::vector<double> edge_weights(const dataset& d,
                                 const std::vector<stop_cost_matrix>& costs) {
    const std::size_t M = d.num_envs();
    std::vector<double> w(M * M, 0.0);
    std::vector<double> chosen(M);
    for (std::size_t m = 0; m < M; ++m)
        chosen[m] = chosen_stopping_cost(d, m, costs);
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t n = 0; n < M; ++n) {
            if (m == n) continue;
            w[m * M + n] = chosen[m] - surrogate_stopping_cost(d, m, n, costs);
        }
    return w;
}

double cycle_sum(const std::vector<double>& w, std::size_t M,
                 const std::vector<std::size_t>& cycle) {
    double s = 0.0;
    for (std::size_t i = 0; i < cycle.size(); ++i)
        s += w[cycle[i] * M + cycle[(i + 1) % cycle.size()]];
    return s;
}

// Difference-constraint solve for potentials: find C >= 0 with
// C_m - C_n <= surrogate(n, m) - chosen(m) + slack for all m != n.
// Returns min-normalized potentials or an empty vector when a negative cycle
// exists.
std::vector<double> solve_potentials(const dataset& d,
                                     const std::vector<stop_cost_matrix>& costs,
                                     double slack) {
    const std::size_t M = d.num_envs();
    std::vector<double> bound(M * M, kInf);  // C_m - C_n <= bound[n*M+m]
    for (std::size_t m = 0; m < M; ++m) {
        const double chosen = chosen_stopping_cost(d, m, costs);
        for (std::size_t n = 0; n < M; ++n) {
            if (m == n) continue;
            bound[n * M + m] =
                surrogate_stopping_cost(d, n, m, costs) - chosen + slack;
        }
    }
    std::vector<double> dist(M, 0.0);  // virtual source at 0 to every node
    for (std::size_t pass = 0; pass <= M; ++pass) {
        bool changed = false;
        for (std::size_t n = 0; n < M; ++n)
            for (std::size_t m = 0; m < M; ++m) {
                if (m == n || !std::isfinite(bound[n * M + m])) continue;
                double cand = dist[n] + bound[n * M + m];
                if (cand < dist[m] - 1e-15) {
                    dist[m] = cand;
                    changed = true;
                }
            }
        if (!changed) break;
        if (pass == M) return {};  // negative cycle
    }
    const double lo = *std::min_element(dist.begin(), dist.end());
    for (double& v : dist) v -= lo;
    return dist;
}

// Shared LP skeleton: normalized costs, NIAS rows with a shared margin
// variable, and min-epigraph variables for every (data env, cost env) pair.
struct stopping_lp {
    lp_problem p;
    std::size_t M = 0, X = 0, A = 0;
    std::size_t tau = 0;               // margin variable
    std::vector<std::size_t> s;        // M*X*A cost entries
    std::vector<std::size_t> t;        // M*M*A epigraph vars (data, cost, a)
    const policy_stats* stats = nullptr;

    std::size_t s_idx(std::size_t m, std::size_t x, std::size_t a) const {
        return s[(m * X + x) * A + a];
    }
    std::size_t t_idx(std::size_t n, std::size_t m, std::size_t a) const {
        return t[(n * M + m) * A + a];
    }

    // chosen stopping cost of environment m as coefficients on s_m
    void add_chosen_terms(lp_problem::row& row, const dataset& d,
                          std::size_t m, double scale) const {
        for (std::size_t x = 0; x < X; ++x)
            for (std::size_t a = 0; a < A; ++a) {
                const double c = d.prior[x] * d.policy_at(m, x, a);
                if (c > 0.0) row.coeffs.push_back({s_idx(m, x, a), scale * c});
            }
    }

    // -surrogate(data n, costs m) as epigraph coefficients
    void add_surrogate_terms(lp_problem::row& row, std::size_t n,
                             std::size_t m, double scale) const {
        for (std::size_t a = 0; a < A; ++a) {
            const double p = stats->marginal(n, a);
            if (p > 0.0) row.coeffs.push_back({t_idx(n, m, a), -scale * p});
        }
    }
};

stopping_lp build_stopping_lp(const dataset& d, const policy_stats& st,
                              bool zero_diagonal) {
    stopping_lp b;
    b.M = st.M;
    b.X = st.X;
    b.A = st.A;
    b.stats = &st;

    b.s.resize(b.M * b.X * b.A);
    for (std::size_t m = 0; m < b.M; ++m)
        for (std::size_t x = 0; x < b.X; ++x)
            for (std::size_t a = 0; a < b.A; ++a) {
                const double hi = (zero_diagonal && x == a) ? 0.0 : kInf;
                b.s[(m * b.X + x) * b.A + a] = b.p.add_var(0.0, hi);
            }
    b.tau = b.p.add_var(-kMarginBox, kMarginBox, -1.0);  // maximize margin

    // cross-section normalization: unit off-diagonal mass per environment
    for (std::size_t m = 0; m < b.M; ++m) {
        lp_problem::row norm;
        for (std::size_t x = 0; x < b.X; ++x)
            for (std::size_t a = 0; a < b.A; ++a)
                if (x != a) norm.coeffs.push_back({b.s_idx(m, x, a), 1.0});
        if (norm.coeffs.empty())
            throw usage_error("no off-diagonal cost entries to normalize");
        norm.sense = row_sense::eq;
        norm.rhs = 1.0;
        b.p.add_row(std::move(norm));
    }

    // NIAS rows with margin
    for (std::size_t m = 0; m < b.M; ++m)
        for (std::size_t a = 0; a < b.A; ++a) {
            if (st.marginal(m, a) <= 0.0) continue;
            for (std::size_t bb = 0; bb < b.A; ++bb) {
                if (bb == a) continue;
                lp_problem::row row;
                for (std::size_t x = 0; x < b.X; ++x) {
                    const double q = st.posterior(m, a, x);
                    if (q == 0.0) continue;
                    row.coeffs.push_back({b.s_idx(m, x, a), q});
                    row.coeffs.push_back({b.s_idx(m, x, bb), -q});
                }
                row.coeffs.push_back({b.tau, 1.0});
                row.sense = row_sense::le;
                row.rhs = 0.0;
                b.p.add_row(std::move(row));
            }
        }

    // epigraph vars t(n, m, a) <= sum_x post_n(x|a) s_m(x, b) for every b
    b.t.assign(b.M * b.M * b.A, 0);
    for (std::size_t n = 0; n < b.M; ++n)
        for (std::size_t m = 0; m < b.M; ++m) {
            if (n == m) continue;
            for (std::size_t a = 0; a < b.A; ++a) {
                if (st.marginal(n, a) <= 0.0) continue;
                const std::size_t v = b.p.add_var(0.0, kInf);
                b.t[(n * b.M + m) * b.A + a] = v;
                for (std::size_t bb = 0; bb < b.A; ++bb) {
                    lp_problem::row row;
                    row.coeffs.push_back({v, 1.0});
                    for (std::size_t x = 0; x < b.X; ++x) {
                        const double q = st.posterior(n, a, x);
                        if (q > 0.0)
                            row.coeffs.push_back({b.s_idx(m, x, bb), -q});
                    }
                    row.sense = row_sense::le;
                    row.rhs = 0.0;
                    b.p.add_row(std::move(row));
                }
            }
        }
    return b;
}

std::vector<stop_cost_matrix> extract_witness(const stopping_lp& b,
                                              const std::vector<double>& x) {
    std::vector<stop_cost_matrix> out;
    out.reserve(b.M);
    for (std::size_t m = 0; m < b.M; ++m) {
        stop_cost_matrix s = stop_cost_matrix::zeros(b.X, b.A);
        for (std::size_t xx = 0; xx < b.X; ++xx)
            for (std::size_t a = 0; a < b.A; ++a)
                s.at(xx, a) = std::max(0.0, x[b.s_idx(m, xx, a)]);
        out.push_back(std::move(s));
    }
    return out;
}

feasibility_result check_potentials_mode(const dataset& d,
                                         const policy_stats& st,
                                         const stopping_options& opt) {
    stopping_lp b = build_stopping_lp(d, st, opt.zero_diagonal);
    std::vector<std::size_t> c_vars(b.M);
    for (std::size_t m = 0; m < b.M; ++m) c_vars[m] = b.p.add_var(0.0, kInf);

    for (std::size_t m = 0; m < b.M; ++m)
        for (std::size_t n = 0; n < b.M; ++n) {
            if (m == n) continue;
            lp_problem::row row;
            b.add_chosen_terms(row, d, m, 1.0);
            b.add_surrogate_terms(row, n, m, 1.0);
            row.coeffs.push_back({c_vars[m], 1.0});
            row.coeffs.push_back({c_vars[n], -1.0});
            row.coeffs.push_back({b.tau, 1.0});
            row.sense = row_sense::le;
            row.rhs = 0.0;
            b.p.add_row(std::move(row));
        }

    feasibility_result res;
    lp_solution sol = lp_solve(b.p);
    if (sol.status != lp_status::optimal) {
        res.status = solver_status::numerical_failure;
        return res;
    }
    res.margin = sol.x[b.tau];
    res.witness_costs = extract_witness(b, sol.x);
    res.witness_continue_costs.resize(b.M);
    double c_lo = kInf;
    for (std::size_t m = 0; m < b.M; ++m)
        c_lo = std::min(c_lo, sol.x[c_vars[m]]);
    for (std::size_t m = 0; m < b.M; ++m)
        res.witness_continue_costs[m] = sol.x[c_vars[m]] - c_lo;

    res.residuals = nias_residuals(d, res.witness_costs);
    for (std::size_t m = 0; m < b.M; ++m) {
        const double chosen = chosen_stopping_cost(d, m, res.witness_costs);
        for (std::size_t n = 0; n < b.M; ++n) {
            if (m == n) continue;
            res.residuals[sumcost_key(m, n)] =
                chosen + res.witness_continue_costs[m] -
                surrogate_stopping_cost(d, n, m, res.witness_costs) -
                res.witness_continue_costs[n];
        }
    }
    res.feasible = true;
    for (const auto& [key, v] : res.residuals)
        if (v > opt.tol) res.feasible = false;
    res.status =
        res.feasible ? solver_status::optimal : solver_status::infeasible;
    return res;
}

feasibility_result check_cycles_mode(const dataset& d, const policy_stats& st,
                                     const stopping_options& opt) {
    const auto cycles = enumerate_cycles(st.M);
    stopping_lp b = build_stopping_lp(d, st, opt.zero_diagonal);

    std::vector<bool> added(cycles.size(), false);
    auto add_cycle_row = [&](const std::vector<std::size_t>& cycle) {
        lp_problem::row row;
        for (std::size_t i = 0; i < cycle.size(); ++i) {
            const std::size_t m = cycle[i];
            const std::size_t n = cycle[(i + 1) % cycle.size()];
            b.add_chosen_terms(row, d, m, 1.0);
            b.add_surrogate_terms(row, m, n, 1.0);
        }
        row.coeffs.push_back({b.tau, 1.0});
        row.sense = row_sense::le;
        row.rhs = 0.0;
        b.p.add_row(std::move(row));
    };
    for (std::size_t i = 0; i < cycles.size(); ++i)
        if (cycles[i].size() == 2) {
            added[i] = true;
            add_cycle_row(cycles[i]);
        }

    feasibility_result res;
    for (int round = 0; round < 200; ++round) {
        lp_solution sol = lp_solve(b.p);
        if (sol.status != lp_status::optimal) {
            res.status = solver_status::numerical_failure;
            return res;
        }
        const double tau = sol.x[b.tau];
        auto witness = extract_witness(b, sol.x);
        const auto w = edge_weights(d, witness);

        // violated cycles relative to the incumbent margin
        std::vector<std::pair<double, std::size_t>> viol;
        for (std::size_t i = 0; i < cycles.size(); ++i) {
            if (added[i]) continue;
            const double r = cycle_sum(w, st.M, cycles[i]);
            if (r > -tau + 1e-9) viol.push_back({r, i});
        }
        if (viol.empty()) {
            res.margin = tau;
            res.witness_costs = std::move(witness);
            res.residuals = nias_residuals(d, res.witness_costs);
            for (const auto& cycle : cycles)
                res.residuals[cycle_key(cycle)] = cycle_sum(w, st.M, cycle);
            res.feasible = true;
            for (const auto& [key, v] : res.residuals)
                if (v > opt.tol) res.feasible = false;
            res.status = res.feasible ? solver_status::optimal
                                      : solver_status::infeasible;
            if (res.feasible) {
                auto c = solve_potentials(d, res.witness_costs, 0.0);
                if (!c.empty()) res.witness_continue_costs = std::move(c);
            }
            return res;
        }
        std::sort(viol.rbegin(), viol.rend());
        const std::size_t cap = std::min<std::size_t>(viol.size(), 64);
        for (std::size_t k = 0; k < cap; ++k) {
            added[viol[k].second] = true;
            add_cycle_row(cycles[viol[k].second]);
        }
    }
    res.status = solver_status::numerical_failure;
    return res;
}

}  // namespace

belief posterior_from_policy(const dataset& d, std::size_t m, std::size_t a) {
    require_stopping_kind(d);
    if (m >= d.num_envs() || a >= d.num_actions)
        throw dimension_mismatch("environment or action out of range");
    double p = 0.0;
    for (std::size_t x = 0; x < d.num_states; ++x)
        p += d.prior[x] * d.policy_at(m, x, a);
    if (p <= 0.0)
        throw unsupported_action("action never chosen in this environment");
    belief out;
    out.p.resize(d.num_states);
    for (std::size_t x = 0; x < d.num_states; ++x)
        out.p[x] = d.prior[x] * d.policy_at(m, x, a) / p;
    return out;
}

std::map<std::string, double> nias_residuals(
    const dataset& d, const std::vector<stop_cost_matrix>& costs) {
    require_stopping_kind(d);
    require_cost_dims(d, costs);
    const policy_stats st = compute_stats(d);
    std::map<std::string, double> out;
    for (std::size_t m = 0; m < st.M; ++m)
        for (std::size_t a = 0; a < st.A; ++a) {
            if (st.marginal(m, a) <= 0.0) continue;
            for (std::size_t b = 0; b < st.A; ++b) {
                if (b == a) continue;
                double r = 0.0;
                for (std::size_t x = 0; x < st.X; ++x)
                    r += st.posterior(m, a, x) *
                         (costs[m].at(x, a) - costs[m].at(x, b));
                out[nias_key(m, a, b)] = r;
            }
        }
    return out;
}

double surrogate_stopping_cost(const dataset& d, std::size_t m, std::size_t n,
                               const std::vector<stop_cost_matrix>& costs) {
    require_stopping_kind(d);
    require_cost_dims(d, costs);
    if (m >= d.num_envs() || n >= d.num_envs())
        throw dimension_mismatch("environment out of range");
    const policy_stats st = compute_stats(d);
    double total = 0.0;
    for (std::size_t a = 0; a < st.A; ++a) {
        const double p = st.marginal(m, a);
        if (p <= 0.0) continue;
        double best = kInf;
        for (std::size_t b = 0; b < st.A; ++b) {
            double inner = 0.0;
            for (std::size_t x = 0; x < st.X; ++x)
                inner += st.posterior(m, a, x) * costs[n].at(x, b);
            best = std::min(best, inner);
        }
        total += p * best;
    }
    return total;
}

double chosen_stopping_cost(const dataset& d, std::size_t m,
                            const std::vector<stop_cost_matrix>& costs) {
    require_stopping_kind(d);
    require_cost_dims(d, costs);
    if (m >= d.num_envs()) throw dimension_mismatch("environment out of range");
    double total = 0.0;
    for (std::size_t x = 0; x < d.num_states; ++x)
        for (std::size_t a = 0; a < d.num_actions; ++a)
            total += d.prior[x] * d.policy_at(m, x, a) * costs[m].at(x, a);
    return total;
}

double niac_cycle_residual(const dataset& d,
                           const std::vector<stop_cost_matrix>& costs,
                           const std::vector<std::size_t>& cycle) {
    require_stopping_kind(d);
    require_cost_dims(d, costs);
    if (cycle.size() < 2) throw invalid_cycle("cycle length must be >= 2");
    std::vector<bool> seen(d.num_envs(), false);
    for (std::size_t m : cycle) {
        if (m >= d.num_envs())
            throw invalid_cycle("cycle index out of range");
        if (seen[m]) throw invalid_cycle("cycle indices must be distinct");
        seen[m] = true;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < cycle.size(); ++i) {
        const std::size_t m = cycle[i];
        const std::size_t n = cycle[(i + 1) % cycle.size()];
        total += chosen_stopping_cost(d, m, costs) -
                 surrogate_stopping_cost(d, m, n, costs);
    }
    return total;
}

niac_mode niac_mode_from_string(const std::string& s) {
    if (s == "cycles") return niac_mode::cycles;
    if (s == "potentials") return niac_mode::potentials;
    throw usage_error("unknown niac mode: " + s);
}

feasibility_result check_feasibility_stopping(const dataset& d,
                                              const stopping_options& opt) {
    require_stopping_kind(d);
    if (d.num_envs() < 2 || all_policies_identical(d))
        throw degenerate_dataset(
            "identical policies across environments are unidentifiable");
    if (opt.mode == niac_mode::cycles &&
        d.num_envs() > opt.max_envs_for_cycles)
        throw too_many_environments(
            "cycles mode is capped; use potentials mode");
    const policy_stats st = compute_stats(d);
    return opt.mode == niac_mode::cycles ? check_cycles_mode(d, st, opt)
                                         : check_potentials_mode(d, st, opt);
}

std::vector<double> reconstruct_continue_costs(
    const dataset& d, const std::vector<stop_cost_matrix>& costs) {
    require_stopping_kind(d);
    require_cost_dims(d, costs);
    auto c = solve_potentials(d, costs, 0.0);
    if (c.empty())
        throw infeasible_sumcost(
            "no continue-cost potentials exist for these stop costs");
    return c;
}

std::vector<region_point> sample_feasible_region(
    const dataset& d, std::size_t env_index,
    const std::vector<stop_cost_matrix>& costs, const grid_spec& grid,
    const stopping_options& opt) {
    require_stopping_kind(d);
    require_cost_dims(d, costs);
    if (d.num_states != 2 || d.num_actions != 2)
        throw usage_error("region sampling scans a 2x2 cost matrix");
    if (env_index >= d.num_envs())
        throw dimension_mismatch("environment out of range");
    if (grid.steps < 2 || !(grid.hi > grid.lo))
        throw usage_error("grid needs at least two points per axis");
    if (opt.mode == niac_mode::cycles &&
        d.num_envs() > opt.max_envs_for_cycles)
        throw too_many_environments(
            "cycles mode is capped; use potentials mode");

    const auto cycles = enumerate_cycles(d.num_envs());
    const double step = (grid.hi - grid.lo) / static_cast<double>(grid.steps - 1);
    std::vector<region_point> out(grid.steps * grid.steps);

    auto evaluate = [&](std::size_t i, std::size_t j) {
        region_point pt;
        pt.cost_1 = grid.lo + step * static_cast<double>(i);
        pt.cost_2 = grid.lo + step * static_cast<double>(j);
        pt.feasible = false;
        if (pt.cost_1 < 0.0 || pt.cost_2 < 0.0) return pt;
        if (pt.cost_1 == 0.0 && pt.cost_2 == 0.0) return pt;  // excluded cone tip

        std::vector<stop_cost_matrix> trial = costs;
        trial[env_index] = stop_cost_matrix{
            2, 2, {0.0, pt.cost_1, pt.cost_2, 0.0}};
        for (const auto& [key, r] : nias_residuals(d, trial))
            if (r > opt.tol) return pt;
        if (opt.mode == niac_mode::cycles) {
            const auto w = edge_weights(d, trial);
            for (const auto& cycle : cycles)
                if (cycle_sum(w, d.num_envs(), cycle) >
                    opt.tol * static_cast<double>(cycle.size()))
                    return pt;
            pt.feasible = true;
        } else {
            pt.feasible = !solve_potentials(d, trial, opt.tol).empty();
        }
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
