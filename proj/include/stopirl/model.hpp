#pragma once

#include <cstddef>
#include <vector>

#include "stopirl/errors.hpp"
#include "stopirl/rng.hpp"

namespace stopirl {

// Absolute tolerance on the simplex sum; far below Monte Carlo noise at all
// supported sample sizes.
inline constexpr double simplex_tolerance = 1e-9;

// Probability vector over states (or locations). Entries >= 0, sum 1 within
// simplex_tolerance after construction.
struct belief {
    std::vector<double> p;

    std::size_t size() const { return p.size(); }
    double operator[](std::size_t i) const { return p[i]; }
};

// Checks simplex invariants and renormalizes sum drift <= simplex_tolerance.
belief validate_simplex(const std::vector<double>& raw);

// Per-state Gaussian observation densities. variance[x] > 0.
struct gaussian_observation_model {
    std::vector<double> mean;
    std::vector<double> variance;

    std::size_t num_states() const { return mean.size(); }
    double log_density(double y, std::size_t x) const;
    double density(double y, std::size_t x) const;
    double sample(rng& r, std::size_t x) const;
};

// Binary search observations: searching location a when the target is at a
// reveals it with probability alpha[a]; searching elsewhere reveals nothing.
struct search_observation_model {
    std::vector<double> alpha;  // entries in (0, 1]

    std::size_t num_locations() const { return alpha.size(); }
};

// Stop-action costs s(x, a), row x (state), column a (action). Entries >= 0
// and finite; in the hypothesis-testing role the diagonal is exactly 0 and
// the matrix is square.
struct stop_cost_matrix {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> c;  // row-major, c[x * num_actions + a]

    double at(std::size_t x, std::size_t a) const { return c[x * num_actions + a]; }
    double& at(std::size_t x, std::size_t a) { return c[x * num_actions + a]; }

    static stop_cost_matrix zeros(std::size_t x, std::size_t a) {
        return stop_cost_matrix{x, a, std::vector<double>(x * a, 0.0)};
    }
    bool zero_diagonal(double tol = 0.0) const;
    double offdiag_sum() const;
    void validate(bool sht_role) const;
};

// Per-location search costs l(a) > 0; the first entry is 1 when normalized.
struct search_cost_vector {
    std::vector<double> l;

    void validate(bool normalized_first) const;
    static search_cost_vector normalized(std::vector<double> raw);
};

// Posterior after one observation with per-state likelihoods.
// Throws zero_evidence when the normalizer is zero.
belief bayes_update(const belief& prior, const std::vector<double>& likelihoods);

enum class search_outcome { found, not_found };

// Posterior after an unsuccessful search of `action`: that location's mass is
// multiplied by (1 - alpha[action]) and the vector renormalized. A successful
// search ends the episode, so only not_found is a valid outcome here.
belief bayes_update_search(const belief& prior, std::size_t action,
                           search_outcome outcome,
                           const search_observation_model& model);

}  // namespace stopirl
