#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "stopirl/errors.hpp"
#include "stopirl/model.hpp"

namespace stopirl {

inline constexpr int dataset_schema_version = 1;

enum class dataset_kind { stopping, sht, search };

std::string to_string(dataset_kind k);
dataset_kind dataset_kind_from_string(const std::string& s);

// Aggregated inverse-learner observables for one task family.
//
// kind = stopping: per environment, the stop-action policy p(a|x) and the
//   per-state trial counts.
// kind = sht: additionally the mean stopping time per environment
//   (prior-weighted over per-state means) and optionally tau_max, an upper
//   bound on the stopping time used by the sample-complexity bounds.
//   The square policy matrix has the declare-state-a reading; identification
//   additionally presumes threshold strategies and a nondegenerate
//   threshold window (documentation-only hypotheses; nothing is computed
//   from them).
// kind = search: additionally the search occupation matrix g(x,a), the mean
//   number of searches of location a given the target at x; g(x,x) >= 1
//   because the finding search itself is counted. The policy matrix stores
//   terminal-action frequencies (the identity, since a search ends at the
//   target's location).
struct dataset {
    struct env {
        int id = 0;
        std::vector<double> policy;        // row-major p(a|x), a fastest
        std::vector<long long> counts;     // per-state trial counts
        double mean_stopping_time = std::numeric_limits<double>::quiet_NaN();
        std::vector<double> search_policy;  // row-major g(x,a), search only
    };

    dataset_kind kind = dataset_kind::stopping;
    belief prior;
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<env> envs;
    std::optional<double> tau_max;  // sht only

    std::size_t num_envs() const { return envs.size(); }
    double policy_at(std::size_t m, std::size_t x, std::size_t a) const {
        return envs[m].policy[x * num_actions + a];
    }
    double g_at(std::size_t m, std::size_t x, std::size_t a) const {
        return envs[m].search_policy[x * num_actions + a];
    }
    // Unconditional stop-action probability p_m(a).
    double action_prob(std::size_t m, std::size_t a) const;

    void validate() const;
};

// One simulated stopping/hypothesis-testing trial.
struct trial_record {
    std::size_t environment = 0;
    std::size_t true_state = 0;
    std::size_t action = 0;
    std::size_t stopping_time = 1;  // >= 1; decision epochs before stopping
};

// One simulated search trial; actions[t] is the location searched at step t
// (the last one equals true_state: the target was found there).
struct search_trial_record {
    std::size_t environment = 0;
    std::size_t true_state = 0;
    std::size_t stopping_time = 1;
    std::vector<std::size_t> actions;
};

// Streaming aggregators; missing_stratum if any (state, env) has no trials.
struct stopping_aggregator {
    std::size_t num_envs = 0, num_states = 0, num_actions = 0;
    std::vector<long long> action_counts;  // [m][x][a]
    std::vector<long long> state_counts;   // [m][x]
    std::vector<double> tau_sums;          // [m][x]
    std::size_t max_tau = 0;

    stopping_aggregator(std::size_t m, std::size_t x, std::size_t a);
    void add(const trial_record& t);
    // sht datasets record tau_max as the largest observed stopping time.
    dataset finish(const belief& prior, dataset_kind kind) const;
};

struct search_aggregator {
    std::size_t num_envs = 0, num_states = 0;
    std::vector<long long> state_counts;   // [m][x]
    std::vector<double> search_counts;     // [m][x][a]
    std::vector<long long> final_counts;   // [m][x][a], terminal action

    search_aggregator(std::size_t m, std::size_t x);
    void add(const search_trial_record& t);
    dataset finish(const belief& prior) const;
};

dataset aggregate_stopping(const belief& prior, std::size_t num_envs,
                           std::size_t num_states, std::size_t num_actions,
                           const std::vector<trial_record>& trials);
dataset aggregate_sht(const belief& prior, std::size_t num_envs,
                      std::size_t num_states,
                      const std::vector<trial_record>& trials);
dataset aggregate_search(const belief& prior, std::size_t num_envs,
                         std::size_t num_states,
                         const std::vector<search_trial_record>& trials);

// Canonical JSON round trip: fixed key order, floats at 17 significant
// digits, so identical datasets serialize to identical bytes.
std::string dataset_to_json(const dataset& d);
dataset dataset_from_json(const std::string& text);
void write_dataset(const dataset& d, const std::string& path);
dataset read_dataset(const std::string& path);

// Region-scan CSV: header "env,cost_1,cost_2,feasible".
struct region_point {
    double cost_1 = 0.0;
    double cost_2 = 0.0;
    bool feasible = false;
};
std::string region_to_csv(std::size_t env_index, const std::vector<region_point>& pts);

// Canonical float formatting used by every serializer (17 significant digits).
std::string format_double(double v);

}  // namespace stopirl
