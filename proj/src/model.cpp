#include "stopirl/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace stopirl {

belief validate_simplex(const std::vector<double>& raw) {
    if (raw.empty()) throw not_a_simplex_point("empty vector");
    double sum = 0.0;
    for (double v : raw) {
        if (!std::isfinite(v)) throw not_a_simplex_point("non-finite entry");
        if (v < -simplex_tolerance)
            throw not_a_simplex_point("negative entry " + std::to_string(v));
        sum += v;
    }
    if (std::abs(sum - 1.0) > simplex_tolerance)
        throw not_a_simplex_point("sum " + std::to_string(sum) + " deviates from 1");
    belief b{raw};
    for (double& v : b.p) v = std::max(v, 0.0) / sum;
    return b;
}

double gaussian_observation_model::log_density(double y, std::size_t x) const {
    const double d = y - mean[x];
    const double v = variance[x];
    return -0.5 * d * d / v - 0.5 * std::log(6.283185307179586476925286766559 * v);
}

double gaussian_observation_model::density(double y, std::size_t x) const {
    return std::exp(log_density(y, x));
}

double gaussian_observation_model::sample(rng& r, std::size_t x) const {
    return mean[x] + std::sqrt(variance[x]) * r.normal();
}

bool stop_cost_matrix::zero_diagonal(double tol) const {
    const std::size_t n = std::min(num_states, num_actions);
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(at(i, i)) > tol) return false;
    return true;
}

double stop_cost_matrix::offdiag_sum() const {
    double s = 0.0;
    for (std::size_t x = 0; x < num_states; ++x)
        for (std::size_t a = 0; a < num_actions; ++a)
            if (x != a) s += at(x, a);
    return s;
}

void stop_cost_matrix::validate(bool sht_role) const {
    if (c.size() != num_states * num_actions)
        throw dimension_mismatch("stop cost matrix storage size");
    for (double v : c) {
        if (!std::isfinite(v) || v < 0.0)
            throw usage_error("stop costs must be finite and >= 0");
    }
    if (sht_role) {
        if (num_states != num_actions)
            throw dimension_mismatch("hypothesis-testing costs must be square");
        if (!zero_diagonal())
            throw usage_error("hypothesis-testing costs must have zero diagonal");
    }
}

void search_cost_vector::validate(bool normalized_first) const {
    if (l.empty()) throw dimension_mismatch("empty search cost vector");
    for (double v : l) {
        if (!std::isfinite(v) || v <= 0.0)
            throw usage_error("search costs must be finite and > 0");
    }
    if (normalized_first && std::abs(l[0] - 1.0) > 1e-12)
        throw usage_error("first search cost must be 1 under normalization");
}

search_cost_vector search_cost_vector::normalized(std::vector<double> raw) {
    search_cost_vector v{std::move(raw)};
    v.validate(false);
    const double first = v.l[0];
    for (double& e : v.l) e /= first;
    return v;
}

belief bayes_update(const belief& prior, const std::vector<double>& likelihoods) {
    if (likelihoods.size() != prior.size())
        throw dimension_mismatch("likelihood length != belief length");
    std::vector<double> post(prior.size());
    double z = 0.0;
    for (std::size_t x = 0; x < prior.size(); ++x) {
        post[x] = prior[x] * likelihoods[x];
        z += post[x];
    }
    if (!(z > 0.0)) throw zero_evidence("normalizer is zero");
    for (double& v : post) v /= z;
    return belief{std::move(post)};
}

belief bayes_update_search(const belief& prior, std::size_t action,
                           search_outcome outcome,
                           const search_observation_model& model) {
    if (action >= prior.size() || prior.size() != model.num_locations())
        throw dimension_mismatch("search update dimensions");
    if (outcome != search_outcome::not_found)
        throw usage_error("posterior update is only defined for not-found");
    std::vector<double> post(prior.p);
    post[action] *= 1.0 - model.alpha[action];
    double z = 0.0;
    for (double v : post) z += v;
    if (!(z > 0.0)) throw zero_evidence("not-found is impossible here");
    for (double& v : post) v /= z;
    return belief{std::move(post)};
}

}  // namespace stopirl
