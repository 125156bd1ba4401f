#include "stopirl/sht_forward.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

namespace stopirl {

namespace {

// Gauss-Hermite nodes/weights for integrals against exp(-t^2): Newton
// iteration on the orthonormal Hermite recurrence.
struct gh_rule {
    std::vector<double> t;
    std::vector<double> w;
};

gh_rule gauss_hermite(std::size_t n) {
    gh_rule r;
    r.t.assign(n, 0.0);
    r.w.assign(n, 0.0);
    const double pim4 = 0.7511255444649425;  // pi^{-1/4}
    std::size_t m = (n + 1) / 2;
    double z = 0.0, pp = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(n, 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * r.t[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * r.t[1];
        } else {
            z = 2.0 * z - r.t[i - 2];
        }
        for (int it = 0; it < 100; ++it) {
            double p1 = pim4, p2 = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        r.t[i] = z;
        r.t[n - 1 - i] = -z;
        r.w[i] = 2.0 / (pp * pp);
        r.w[n - 1 - i] = r.w[i];
    }
    return r;
}

constexpr std::size_t gh_nodes = 32;
const double inv_sqrt_pi = 0.5641895835477563;

struct interp_term {
    std::uint32_t idx;
    double coef;
};

// Kuhn-simplex linear interpolation of a lattice function at belief b:
// at most num_states vertices with affine-exact weights.
void kuhn_weights(const belief& b, std::size_t r,
                  std::vector<std::pair<std::size_t, double>>& out) {
    std::size_t X = b.size();
    std::size_t d = X - 1;
    out.clear();
    std::vector<double> c(d);
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        acc += b[k];
        c[k] = std::clamp(acc * static_cast<double>(r), 0.0, static_cast<double>(r));
        if (k > 0) c[k] = std::max(c[k], c[k - 1]);
    }
    std::vector<std::size_t> f(d);
    std::vector<double> t(d);
    for (std::size_t k = 0; k < d; ++k) {
        double fl = std::floor(c[k]);
        if (fl > static_cast<double>(r) - 1.0) fl = static_cast<double>(r) - 1.0;
        if (fl < 0.0) fl = 0.0;
        f[k] = static_cast<std::size_t>(fl);
        if (k > 0 && f[k] < f[k - 1]) f[k] = f[k - 1];
        t[k] = std::clamp(c[k] - static_cast<double>(f[k]), 0.0, 1.0);
    }
    // Order of unit increments: by descending fraction, later dimension first
    // on ties so every vertex keeps cumulative coordinates nondecreasing.
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (t[i] != t[j]) return t[i] > t[j];
        return i > j;
    });
    std::vector<std::size_t> cum(f);
    std::vector<int> coords(X);
    auto emit = [&](double w) {
        if (w <= 0.0) return;
        coords[0] = static_cast<int>(cum[0]);
        for (std::size_t k = 1; k < d; ++k) coords[k] = static_cast<int>(cum[k] - cum[k - 1]);
        coords[d] = static_cast<int>(r - cum[d - 1]);
        out.emplace_back(lattice_index(coords, r), w);
    };
    emit(d > 0 ? 1.0 - t[order[0]] : 1.0);
    for (std::size_t j = 0; j < d; ++j) {
        cum[order[j]] += 1;
        double w = (j + 1 < d) ? t[order[j]] - t[order[j + 1]] : t[order[j]];
        emit(w);
    }
}

// Shared-across-environments observation stage: for every lattice point,
// state and quadrature node, the interpolation terms of the updated belief
// scaled by belief(state) * node weight.
struct observation_stage {
    std::size_t num_points = 0;
    std::size_t terms_per_point = 0;
    std::vector<interp_term> terms;  // num_points * terms_per_point
};

observation_stage prepare_observation_stage(const gaussian_observation_model& obs,
                                            std::size_t r) {
    std::size_t X = obs.num_states();
    observation_stage st;
    st.num_points = lattice_size(X, r);
    st.terms_per_point = X * gh_nodes * X;
    st.terms.assign(st.num_points * st.terms_per_point, interp_term{0, 0.0});
    gh_rule gh = gauss_hermite(gh_nodes);
    std::vector<double> like(X);
    std::vector<std::pair<std::size_t, double>> w;
    for (std::size_t p = 0; p < st.num_points; ++p) {
        belief bp = lattice_point(lattice_coords(p, X, r), r);
        std::size_t base = p * st.terms_per_point;
        for (std::size_t x = 0; x < X; ++x) {
            if (bp[x] <= 0.0) continue;
            for (std::size_t n = 0; n < gh_nodes; ++n) {
                double y = obs.mean[x] + std::sqrt(2.0 * obs.variance[x]) * gh.t[n];
                for (std::size_t s = 0; s < X; ++s) like[s] = obs.density(y, s);
                belief post = bayes_update(bp, like);
                kuhn_weights(post, r, w);
                double scale = bp[x] * gh.w[n] * inv_sqrt_pi;
                std::size_t slot = base + (x * gh_nodes + n) * X;
                for (std::size_t v = 0; v < w.size(); ++v)
                    st.terms[slot + v] = {static_cast<std::uint32_t>(w[v].first),
                                          scale * w[v].second};
            }
        }
    }
    return st;
}

double continue_value(const observation_stage& st, const std::vector<double>& value,
                      std::size_t p, double c) {
    const interp_term* t = st.terms.data() + p * st.terms_per_point;
    double acc = 0.0;
    for (std::size_t k = 0; k < st.terms_per_point; ++k) acc += t[k].coef * value[t[k].idx];
    return c + acc;
}

// Stop-cost envelope at a belief: cheapest declaration and its action.
std::pair<double, std::size_t> stop_envelope(const belief& b, const stop_cost_matrix& s) {
    double best = 0.0;
    std::size_t arg = 0;
    for (std::size_t a = 0; a < s.num_actions; ++a) {
        double v = 0.0;
        for (std::size_t x = 0; x < s.num_states; ++x) v += b[x] * s.at(x, a);
        if (a == 0 || v < best) {
            best = v;
            arg = a;
        }
    }
    return {best, arg};
}

std::vector<double> iterate_values(const observation_stage& st,
                                   const std::vector<double>& stop_value, double c,
                                   double tol, std::size_t max_sweeps) {
    std::vector<double> value(stop_value);
    std::vector<double> next(value.size());
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double diff = 0.0;
        for (std::size_t p = 0; p < st.num_points; ++p) {
            double cv = continue_value(st, value, p, c);
            next[p] = std::min(stop_value[p], cv);
            diff = std::max(diff, std::abs(next[p] - value[p]));
        }
        value.swap(next);
        if (diff < tol) return value;
    }
    throw no_convergence("value iteration did not settle");
}

// Continue value at an arbitrary 2-state belief, from the converged grid.
double continue_value_offgrid(const gaussian_observation_model& obs,
                              const std::vector<double>& value, std::size_t r,
                              double q, double c) {
    std::size_t X = 2;
    belief b = validate_simplex({1.0 - q, q});
    gh_rule gh = gauss_hermite(gh_nodes);
    std::vector<double> like(X);
    std::vector<std::pair<std::size_t, double>> w;
    double acc = 0.0;
    for (std::size_t x = 0; x < X; ++x) {
        if (b[x] <= 0.0) continue;
        for (std::size_t n = 0; n < gh_nodes; ++n) {
            double y = obs.mean[x] + std::sqrt(2.0 * obs.variance[x]) * gh.t[n];
            for (std::size_t s = 0; s < X; ++s) like[s] = obs.density(y, s);
            belief post = bayes_update(b, like);
            kuhn_weights(post, r, w);
            double interp = 0.0;
            for (const auto& [idx, wt] : w) interp += wt * value[idx];
            acc += b[x] * gh.w[n] * inv_sqrt_pi * interp;
        }
    }
    return c + acc;
}

}  // namespace

void sht_environment_set::validate() const {
    std::size_t X = prior.size();
    if (X < 2) throw dimension_mismatch("need at least two states");
    if (obs.num_states() != X || obs.variance.size() != X)
        throw dimension_mismatch("one observation channel per state");
    if (stop_costs.size() < 2) throw dimension_mismatch("need at least two environments");
    if (!(continue_cost > 0.0)) throw error("continue cost must be positive");
    bool all_same = true;
    for (std::size_t m = 1; m < stop_costs.size() && all_same; ++m)
        all_same = stop_costs[m].c == stop_costs[0].c;
    if (all_same) throw degenerate_dataset("environments need distinct stop costs");
    for (std::size_t x = 0; x < X; ++x)
        if (!(obs.variance[x] > 0.0) || !std::isfinite(obs.mean[x]))
            throw error("observation channels need finite mean and positive variance");
    for (std::size_t x = 0; x + 1 < X; ++x)
        for (std::size_t y = x + 1; y < X; ++y)
            if (obs.mean[x] == obs.mean[y] && obs.variance[x] == obs.variance[y])
                throw error("observation channels must differ across states");
    for (const auto& s : stop_costs) {
        if (s.num_states != X || s.num_actions != X)
            throw dimension_mismatch("stop cost matrices must be X by X");
        s.validate(true);
    }
}

int threshold_policy::decide(const belief& b) const {
    if (b.size() != num_states) throw dimension_mismatch("belief size mismatch");
    if (num_states == 2) {
        double q = b[1];
        if (q <= beta) return static_cast<int>(action_low);
        if (q > alpha) return static_cast<int>(action_high);
        return -1;
    }
    return cells[nearest_lattice_index(b, resolution)];
}

std::size_t lattice_size(std::size_t num_states, std::size_t resolution) {
    // C(resolution + num_states - 1, num_states - 1)
    std::size_t n = resolution + num_states - 1, k = num_states - 1;
    std::size_t out = 1;
    for (std::size_t i = 1; i <= k; ++i) out = out * (n - k + i) / i;
    return out;
}

std::size_t lattice_index(const std::vector<int>& coords, std::size_t resolution) {
    std::size_t X = coords.size();
    long long rest = static_cast<long long>(resolution);
    std::size_t idx = 0;
    for (std::size_t k = 0; k + 1 < X; ++k) {
        int c = coords[k];
        if (c < 0 || c > rest) throw dimension_mismatch("lattice coordinates out of range");
        for (int v = 0; v < c; ++v)
            idx += lattice_size(X - 1 - k, static_cast<std::size_t>(rest - v));
        rest -= c;
    }
    if (coords.back() != rest) throw dimension_mismatch("lattice coordinates must sum to the side");
    return idx;
}

std::vector<int> lattice_coords(std::size_t index, std::size_t num_states,
                                std::size_t resolution) {
    std::vector<int> coords(num_states, 0);
    std::size_t rest = resolution;
    for (std::size_t k = 0; k + 1 < num_states; ++k) {
        int c = 0;
        while (true) {
            std::size_t block = lattice_size(num_states - 1 - k, rest - c);
            if (index < block) break;
            index -= block;
            ++c;
        }
        coords[k] = c;
        rest -= c;
    }
    coords[num_states - 1] = static_cast<int>(rest);
    return coords;
}

belief lattice_point(const std::vector<int>& coords, std::size_t resolution) {
    std::vector<double> p(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i)
        p[i] = static_cast<double>(coords[i]) / static_cast<double>(resolution);
    return validate_simplex(p);
}

std::size_t nearest_lattice_index(const belief& b, std::size_t resolution) {
    std::size_t X = b.size();
    std::vector<int> cum(X - 1);
    double acc = 0.0;
    long long prev = 0;
    for (std::size_t k = 0; k + 1 < X; ++k) {
        acc += b[k];
        long long v = std::llround(acc * static_cast<double>(resolution));
        v = std::clamp(v, prev, static_cast<long long>(resolution));
        cum[k] = static_cast<int>(v);
        prev = v;
    }
    std::vector<int> coords(X);
    coords[0] = cum[0];
    for (std::size_t k = 1; k + 1 < X; ++k) coords[k] = cum[k] - cum[k - 1];
    coords[X - 1] = static_cast<int>(resolution) - cum[X - 2];
    return lattice_index(coords, resolution);
}

namespace {

std::size_t lattice_side(const sht_environment_set& es, std::size_t grid_points) {
    if (es.num_states() == 2) {
        if (grid_points < 101) throw usage_error("need at least 101 grid points");
        return grid_points - 1;
    }
    if (grid_points < 2) throw usage_error("grid too coarse");
    return grid_points;
}

threshold_policy solve_one_policy(const observation_stage& st, const sht_environment_set& es,
                                  std::size_t m, std::size_t r, double tol,
                                  std::size_t max_sweeps) {
    std::size_t X = es.num_states();
    std::size_t P = st.num_points;
    const auto& s = es.stop_costs[m];
    std::vector<double> stop_value(P);
    std::vector<std::size_t> stop_action(P);
    for (std::size_t p = 0; p < P; ++p) {
        belief bp = lattice_point(lattice_coords(p, X, r), r);
        auto [v, a] = stop_envelope(bp, s);
        stop_value[p] = v;
        stop_action[p] = a;
    }
    std::vector<double> value = iterate_values(st, stop_value, es.continue_cost, tol, max_sweeps);

    threshold_policy pol;
    pol.num_states = X;
    {
        if (X == 2) {
            // continue iff the continue value beats the stop envelope
            auto continues = [&](double q) {
                belief b = validate_simplex({1.0 - q, q});
                double sv = stop_envelope(b, s).first;
                double cv = continue_value_offgrid(es.obs, value, r, q, es.continue_cost);
                return cv < sv;
            };
            std::vector<char> cont(P);
            for (std::size_t p = 0; p < P; ++p) {
                double q = static_cast<double>(p) / static_cast<double>(r);
                cont[p] = continues(q) ? 1 : 0;
            }
            std::size_t first = P, last = P;
            for (std::size_t p = 0; p < P; ++p)
                if (cont[p]) {
                    if (first == P) first = p;
                    last = p;
                }
            auto bisect = [&](double lo, double hi, bool want_hi_cont) {
                for (int it = 0; it < 60; ++it) {
                    double mid = 0.5 * (lo + hi);
                    if (continues(mid) == want_hi_cont)
                        hi = mid;
                    else
                        lo = mid;
                }
                return 0.5 * (lo + hi);
            };
            pol.action_low = stop_envelope(validate_simplex({1.0, 0.0}), s).second;
            pol.action_high = stop_envelope(validate_simplex({0.0, 1.0}), s).second;
            if (first == P) {
                // no continue region: split at the declaration crossover
                double lo = 0.0, hi = 1.0;
                for (int it = 0; it < 60; ++it) {
                    double mid = 0.5 * (lo + hi);
                    belief b = validate_simplex({1.0 - mid, mid});
                    if (stop_envelope(b, s).second == pol.action_low)
                        lo = mid;
                    else
                        hi = mid;
                }
                pol.beta = pol.alpha = 0.5 * (lo + hi);
            } else {
                double qfirst = static_cast<double>(first) / static_cast<double>(r);
                double qlast = static_cast<double>(last) / static_cast<double>(r);
                pol.beta = (first == 0)
                               ? -1.0
                               : bisect(qfirst - 1.0 / static_cast<double>(r), qfirst, true);
                pol.alpha = (last + 1 == P)
                                ? 2.0
                                : bisect(qlast, qlast + 1.0 / static_cast<double>(r), false);
            }
        } else {
            pol.resolution = r;
            pol.cells.assign(P, -1);
            for (std::size_t p = 0; p < P; ++p) {
                double cv = continue_value(st, value, p, es.continue_cost);
                pol.cells[p] =
                    (cv < stop_value[p]) ? -1 : static_cast<int>(stop_action[p]);
            }
        }
    }
    return pol;
}

}  // namespace

std::vector<threshold_policy> solve_sht_policies(const sht_environment_set& es,
                                                 std::size_t grid_points, double tol,
                                                 std::size_t max_sweeps) {
    es.validate();
    std::size_t r = lattice_side(es, grid_points);
    observation_stage st = prepare_observation_stage(es.obs, r);
    std::vector<threshold_policy> policies;
    policies.reserve(es.num_envs());
    for (std::size_t m = 0; m < es.num_envs(); ++m)
        policies.push_back(solve_one_policy(st, es, m, r, tol, max_sweeps));
    return policies;
}

threshold_policy solve_sht_policy(const sht_environment_set& es, std::size_t env_index,
                                  std::size_t grid_points, double tol,
                                  std::size_t max_sweeps) {
    es.validate();
    if (env_index >= es.num_envs()) throw dimension_mismatch("environment index out of range");
    std::size_t r = lattice_side(es, grid_points);
    observation_stage st = prepare_observation_stage(es.obs, r);
    return solve_one_policy(st, es, env_index, r, tol, max_sweeps);
}

double sht_optimal_value(const sht_environment_set& es, std::size_t env_index,
                         std::size_t grid_points, double tol, std::size_t max_sweeps) {
    es.validate();
    if (env_index >= es.num_envs()) throw dimension_mismatch("environment index out of range");
    std::size_t X = es.num_states();
    std::size_t r = lattice_side(es, grid_points);
    observation_stage st = prepare_observation_stage(es.obs, r);
    std::vector<double> stop_value(st.num_points);
    for (std::size_t p = 0; p < st.num_points; ++p)
        stop_value[p] = stop_envelope(lattice_point(lattice_coords(p, X, r), r),
                                      es.stop_costs[env_index]).first;
    std::vector<double> value =
        iterate_values(st, stop_value, es.continue_cost, tol, max_sweeps);
    std::vector<std::pair<std::size_t, double>> w;
    kuhn_weights(es.prior, r, w);
    double v = 0.0;
    for (const auto& [idx, wt] : w) v += wt * value[idx];
    return v;
}

trial_record run_sht_trial(const sht_environment_set& es, const threshold_policy& policy,
                           std::size_t env_index, std::size_t true_state, rng& gen,
                           std::size_t step_cap) {
    if (true_state >= es.num_states()) throw dimension_mismatch("state out of range");
    std::size_t X = es.num_states();
    belief b = es.prior;
    std::vector<double> like(X);
    for (std::size_t t = 1; t <= step_cap; ++t) {
        double y = es.obs.sample(gen, true_state);
        for (std::size_t s = 0; s < X; ++s) like[s] = es.obs.density(y, s);
        b = bayes_update(b, like);
        int a = policy.decide(b);
        if (a >= 0)
            return {env_index, true_state, static_cast<std::size_t>(a), t};
    }
    throw horizon_exceeded("no stop within the step cap");
}

namespace {

template <typename Sink>
void for_each_sht_trial(const sht_environment_set& es, std::size_t grid_points,
                        std::size_t trials_per_state, std::uint64_t seed,
                        std::size_t step_cap, Sink&& sink) {
    if (trials_per_state == 0) throw usage_error("need at least one trial per stratum");
    std::vector<threshold_policy> policies = solve_sht_policies(es, grid_points);
    std::size_t X = es.num_states();
    for (std::size_t m = 0; m < es.num_envs(); ++m)
        for (std::size_t x = 0; x < X; ++x)
            for (std::size_t k = 0; k < trials_per_state; ++k) {
                rng gen(derive_seed(seed, m, x, k));
                sink(run_sht_trial(es, policies[m], m, x, gen, step_cap));
            }
}

}  // namespace

dataset simulate_sht(const sht_environment_set& es, std::size_t grid_points,
                     std::size_t trials_per_state, std::uint64_t seed,
                     std::size_t step_cap) {
    std::size_t X = es.num_states();
    stopping_aggregator agg(es.num_envs(), X, X);
    for_each_sht_trial(es, grid_points, trials_per_state, seed, step_cap,
                       [&](const trial_record& t) { agg.add(t); });
    return agg.finish(es.prior, dataset_kind::sht);
}

std::vector<trial_record> simulate_sht_records(const sht_environment_set& es,
                                               std::size_t grid_points,
                                               std::size_t trials_per_state,
                                               std::uint64_t seed, std::size_t step_cap) {
    std::vector<trial_record> out;
    out.reserve(es.num_envs() * es.num_states() * trials_per_state);
    for_each_sht_trial(es, grid_points, trials_per_state, seed, step_cap,
                       [&](const trial_record& t) { out.push_back(t); });
    return out;
}

}  // namespace stopirl
