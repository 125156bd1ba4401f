#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>

#include "stopirl/sht_forward.hpp"

using namespace stopirl;

namespace {

stop_cost_matrix cost2(double l1, double l2) {
    return {2, 2, {0.0, l1, l2, 0.0}};
}

// Three-environment family: symmetric binary Gaussians, unit continue cost.
// Costs are low relative to the continue cost, so the cheap environments have
// empty continue regions and stop right after the first observation.
sht_environment_set classification_family() {
    sht_environment_set es;
    es.prior = validate_simplex({0.5, 0.5});
    es.obs = {{1.0, -1.0}, {2.0, 2.0}};
    es.continue_cost = 1.0;
    es.stop_costs = {cost2(2.0, 2.5), cost2(4.0, 3.0), cost2(6.0, 6.0)};
    return es;
}

// Same shape with costs scaled up tenfold: every environment has an interior
// continue region, so threshold geometry is informative.
sht_environment_set scaled_family() {
    sht_environment_set es = classification_family();
    es.stop_costs = {cost2(20.0, 25.0), cost2(40.0, 30.0), cost2(60.0, 60.0)};
    return es;
}

stop_cost_matrix cost3(std::vector<double> offdiag) {
    // offdiag row-major skipping the diagonal
    stop_cost_matrix s{3, 3, std::vector<double>(9, 0.0)};
    std::size_t k = 0;
    for (std::size_t x = 0; x < 3; ++x)
        for (std::size_t a = 0; a < 3; ++a)
            if (x != a) s.c[x * 3 + a] = offdiag[k++];
    return s;
}

sht_environment_set ternary_family() {
    sht_environment_set es;
    es.prior = validate_simplex({1.0 / 3, 1.0 / 3, 1.0 / 3});
    es.obs = {{-2.0, 0.0, 2.0}, {8.0, 8.0, 8.0}};
    es.continue_cost = 1.0;
    es.stop_costs = {cost3({5, 5, 5, 5, 5, 5}), cost3({4, 7, 6, 5, 8, 4})};
    return es;
}

}  // namespace

TEST_CASE("environment set validation") {
    sht_environment_set es = classification_family();
    CHECK_NOTHROW(es.validate());

    sht_environment_set one = es;
    one.stop_costs = {cost2(2.0, 2.5)};
    CHECK_THROWS_AS(one.validate(), dimension_mismatch);

    sht_environment_set same = es;
    same.stop_costs = {cost2(2.0, 2.5), cost2(2.0, 2.5)};
    CHECK_THROWS_AS(same.validate(), degenerate_dataset);

    sht_environment_set chan = es;
    chan.obs.mean[1] = chan.obs.mean[0]; chan.obs.variance[1] = chan.obs.variance[0];
    CHECK_THROWS_AS(chan.validate(), error);

    CHECK_THROWS_AS(solve_sht_policies(es, 51), usage_error);
}

TEST_CASE("symmetric costs give mirrored thresholds") {
    sht_environment_set es;
    es.prior = validate_simplex({0.5, 0.5});
    es.obs = {{1.0, -1.0}, {2.0, 2.0}};
    es.stop_costs = {cost2(50.0, 50.0), cost2(20.0, 20.0)};
    auto pols = solve_sht_policies(es, 1001);
    for (const auto& p : pols) {
        CHECK(p.beta > 0.0);
        CHECK(p.alpha < 1.0);
        CHECK(p.beta < p.alpha);
        CHECK(p.beta == doctest::Approx(1.0 - p.alpha).epsilon(1e-6));
        CHECK(p.action_low == 0);
        CHECK(p.action_high == 1);
    }
    // pricier mistakes widen the continue region
    CHECK(pols[0].beta < pols[1].beta);
    CHECK(pols[0].alpha > pols[1].alpha);
}

TEST_CASE("scaled family thresholds are interior and nested") {
    auto pols = solve_sht_policies(scaled_family(), 1001);
    for (const auto& p : pols) {
        CHECK(p.beta > 0.0);
        CHECK(p.alpha < 1.0);
        CHECK(p.beta < p.alpha);
    }
    // costs dominate entrywise: env 1 <= env 2 <= env 3
    CHECK(pols[2].beta <= pols[1].beta);
    CHECK(pols[1].beta <= pols[0].beta);
    CHECK(pols[0].alpha <= pols[1].alpha);
    CHECK(pols[1].alpha <= pols[2].alpha);
}

TEST_CASE("cheap environments stop after the first observation") {
    sht_environment_set es = classification_family();
    auto pols = solve_sht_policies(es, 1001);
    // declaring now costs at most 1.5 while one more draw costs 1 plus the
    // residual error, so the first two environments never continue
    CHECK(pols[0].beta == doctest::Approx(pols[0].alpha));
    CHECK(pols[1].beta == doctest::Approx(pols[1].alpha));
    CHECK(pols[2].beta < pols[2].alpha);

    rng gen(11);
    for (std::size_t k = 0; k < 16; ++k) {
        trial_record t = run_sht_trial(es, pols[0], 0, k % 2, gen);
        CHECK(t.stopping_time == 1);  // the first posterior is already decisive
    }

    dataset d = simulate_sht(es, 1001, 400, 11);
    CHECK(d.envs[0].mean_stopping_time == doctest::Approx(1.0));
    CHECK(d.envs[1].mean_stopping_time == doctest::Approx(1.0));
    CHECK(d.envs[2].mean_stopping_time > 1.0);
    // the single draw carries real evidence, so declarations track the state
    for (std::size_t m = 0; m < 2; ++m) {
        CHECK(d.policy_at(m, 0, 0) > 0.5);
        CHECK(d.policy_at(m, 1, 1) > 0.5);
    }
}

TEST_CASE("raising one off-diagonal cost shifts both thresholds away from it") {
    // Raising s(1,2) leaves the declare-1 stop cost unchanged while the
    // continuation value rises, so both thresholds move toward state 2; the
    // mirrored edit moves them toward state 1.  The optimal value never drops.
    sht_environment_set es = scaled_family();
    auto base = solve_sht_policy(es, 0, 1001);
    double vbase = sht_optimal_value(es, 0, 1001);
    double cell = 1e-3;

    es.stop_costs[0] = cost2(60.0, 25.0);
    auto right = solve_sht_policy(es, 0, 1001);
    CHECK(right.beta >= base.beta - cell);
    CHECK(right.alpha >= base.alpha - cell);
    CHECK(right.alpha > base.alpha + cell);  // declare-2 needs more evidence
    CHECK(sht_optimal_value(es, 0, 1001) >= vbase - 1e-9);

    es.stop_costs[0] = cost2(20.0, 75.0);
    auto left = solve_sht_policy(es, 0, 1001);
    CHECK(left.beta <= base.beta + cell);
    CHECK(left.alpha <= base.alpha + cell);
    CHECK(left.beta < base.beta - cell);  // declare-1 needs more evidence
    CHECK(sht_optimal_value(es, 0, 1001) >= vbase - 1e-9);
}

TEST_CASE("free stopping empties the continue region") {
    sht_environment_set es;
    es.prior = validate_simplex({0.5, 0.5});
    es.obs = {{1.0, -1.0}, {2.0, 2.0}};
    es.stop_costs = {stop_cost_matrix::zeros(2, 2), cost2(2.0, 2.5)};
    auto p = solve_sht_policy(es, 0, 1001);
    CHECK(p.beta == doctest::Approx(p.alpha));
    rng gen(1);
    trial_record t = run_sht_trial(es, p, 0, 1, gen);
    CHECK(t.stopping_time == 1);
    CHECK(t.action == 0);  // every declaration is free, ties break low
}

TEST_CASE("dynamic program matches simulated average cost") {
    sht_environment_set es = scaled_family();
    double v = sht_optimal_value(es, 0, 1001);
    CHECK(v > 1.0);  // at least one observation is always paid

    auto recs = simulate_sht_records(es, 1001, 4000, 99);
    double sum = 0.0, sumsq = 0.0;
    std::size_t n = 0;
    for (const auto& t : recs) {
        if (t.environment != 0) continue;
        double cost = static_cast<double>(t.stopping_time) * es.continue_cost +
                      es.stop_costs[0].at(t.true_state, t.action);
        sum += cost;
        sumsq += cost * cost;
        ++n;
    }
    double mean = sum / static_cast<double>(n);
    double se = std::sqrt((sumsq / n - mean * mean) / static_cast<double>(n));
    CHECK(std::abs(mean - v) <= 4.0 * se + 0.01);
}

TEST_CASE("simulation is deterministic and aggregation-consistent") {
    sht_environment_set es = classification_family();
    dataset a = simulate_sht(es, 301, 40, 7);
    dataset b = simulate_sht(es, 301, 40, 7);
    CHECK(dataset_to_json(a) == dataset_to_json(b));

    dataset c = simulate_sht(es, 301, 40, 8);
    CHECK(dataset_to_json(a) != dataset_to_json(c));

    auto recs = simulate_sht_records(es, 301, 40, 7);
    CHECK(recs.size() == 3 * 2 * 40);
    dataset d = aggregate_sht(es.prior, 3, 2, recs);
    CHECK(dataset_to_json(a) == dataset_to_json(d));

    rng g1(derive_seed(7, 1, 0, 3));
    rng g2(derive_seed(7, 1, 0, 3));
    auto pol = solve_sht_policy(es, 1, 301);
    trial_record t1 = run_sht_trial(es, pol, 1, 0, g1);
    trial_record t2 = run_sht_trial(es, pol, 1, 0, g2);
    CHECK(t1.action == t2.action);
    CHECK(t1.stopping_time == t2.stopping_time);
}

TEST_CASE("mean stopping times grow with cost scale") {
    sht_environment_set es = scaled_family();
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        dataset d = simulate_sht(es, 301, 2000, seed);
        CHECK(d.envs[0].mean_stopping_time > 1.0);
        CHECK(d.envs[2].mean_stopping_time >= d.envs[0].mean_stopping_time);
    }
}

TEST_CASE("sampling noise shrinks with more trials") {
    sht_environment_set es = classification_family();
    auto l2 = [&](const dataset& a, const dataset& b) {
        double s = 0.0;
        for (std::size_t m = 0; m < a.num_envs(); ++m)
            for (std::size_t i = 0; i < a.envs[m].policy.size(); ++i) {
                double d = a.envs[m].policy[i] - b.envs[m].policy[i];
                s += d * d;
            }
        return std::sqrt(s);
    };
    double small = 0.0, big = 0.0;
    for (std::uint64_t seed : {10ull, 20ull, 30ull}) {
        small += l2(simulate_sht(es, 301, 300, seed), simulate_sht(es, 301, 300, seed + 500));
        big += l2(simulate_sht(es, 301, 1200, seed), simulate_sht(es, 301, 1200, seed + 500));
    }
    CHECK(big < small);
}

TEST_CASE("ternary policies have connected stop regions and cover all actions") {
    sht_environment_set es = ternary_family();
    std::size_t r = 40;
    auto pols = solve_sht_policies(es, r);
    for (const auto& p : pols) {
        REQUIRE(p.resolution == r);
        std::size_t P = lattice_size(3, r);
        REQUIRE(p.cells.size() == P);
        // vertices declare their own state
        for (std::size_t x = 0; x < 3; ++x) {
            std::vector<int> corner(3, 0);
            corner[x] = static_cast<int>(r);
            CHECK(p.cells[lattice_index(corner, r)] == static_cast<int>(x));
        }
        std::set<int> values(p.cells.begin(), p.cells.end());
        CHECK(values.count(-1) == 1);
        for (int a = 0; a < 3; ++a) CHECK(values.count(a) == 1);

        // connectedness of each stop region on the lattice graph
        for (int a = 0; a < 3; ++a) {
            std::vector<std::size_t> region;
            for (std::size_t i = 0; i < P; ++i)
                if (p.cells[i] == a) region.push_back(i);
            REQUIRE(!region.empty());
            std::set<std::size_t> in(region.begin(), region.end());
            std::set<std::size_t> seen;
            std::queue<std::size_t> q;
            q.push(region[0]);
            seen.insert(region[0]);
            while (!q.empty()) {
                std::size_t i = q.front();
                q.pop();
                auto c = lattice_coords(i, 3, r);
                for (std::size_t u = 0; u < 3; ++u)
                    for (std::size_t v = 0; v < 3; ++v) {
                        if (u == v || c[u] == 0) continue;
                        auto c2 = c;
                        --c2[u];
                        ++c2[v];
                        std::size_t k = lattice_index(c2, r);
                        if (in.count(k) && !seen.count(k)) {
                            seen.insert(k);
                            q.push(k);
                        }
                    }
            }
            CHECK(seen.size() == region.size());
        }
    }
}

TEST_CASE("ternary trials run and aggregate") {
    sht_environment_set es = ternary_family();
    dataset d = simulate_sht(es, 30, 200, 5);
    CHECK(d.num_states == 3);
    CHECK(d.num_envs() == 2);
    for (const auto& e : d.envs) CHECK(e.mean_stopping_time >= 1.0);
}

TEST_CASE("a tiny step cap trips the horizon guard") {
    sht_environment_set es;
    es.prior = validate_simplex({0.5, 0.5});
    es.obs = {{1.0, -1.0}, {2.0, 2.0}};
    es.stop_costs = {cost2(1000.0, 1000.0), cost2(900.0, 900.0)};
    auto p = solve_sht_policy(es, 0, 1001);
    rng gen(3);
    CHECK_THROWS_AS(run_sht_trial(es, p, 0, 0, gen, 1), horizon_exceeded);
}

TEST_CASE("lattice indexing round-trips and interpolation helpers agree") {
    for (std::size_t X : {2, 3, 4}) {
        std::size_t r = 7;
        std::size_t P = lattice_size(X, r);
        for (std::size_t i = 0; i < P; ++i) {
            auto c = lattice_coords(i, X, r);
            CHECK(lattice_index(c, r) == i);
            int sum = std::accumulate(c.begin(), c.end(), 0);
            CHECK(sum == static_cast<int>(r));
            belief b = lattice_point(c, r);
            CHECK(nearest_lattice_index(b, r) == i);
        }
    }
}

TEST_CASE("optimal value is monotone in stop costs") {
    sht_environment_set es = classification_family();
    double v1 = sht_optimal_value(es, 0, 601);
    double v3 = sht_optimal_value(es, 2, 601);
    CHECK(v1 < v3);
}
