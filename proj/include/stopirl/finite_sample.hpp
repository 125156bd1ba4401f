#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stopirl/dataset.hpp"
#include "stopirl/feasibility.hpp"

namespace stopirl {

// Finite-sample error bounds attached to a detector verdict. eps1 is the
// squared-L2 distance from the observables to the nearest rationalizable
// dataset (0 when already rationalizable); eps2 the distance to the nearest
// non-rationalizable one (+inf when every dataset of this shape is
// rationalizable). At most one is nonzero. posterior_type1_bound and
// posterior_type2_bound are the exponential posterior-probability bounds;
// type1_bound / type2_bound are the cross-mapped raw bounds
// x -> x / (1 - x), +inf when x >= 1. q, j are the sample-size condition
// terms; g, h, i, u the kind-specific constants (NaN when not applicable).
// operative names the bound that is meaningful for the verdict ("type2"
// under H0, "type1" under H1); vacuous flags an operative posterior
// bound >= 1. formula records the evaluated expressions for audit.
struct error_bounds {
    double eps1 = 0.0;
    double eps2 = 0.0;
    double posterior_type1_bound = 0.0;
    double posterior_type2_bound = 0.0;
    double type1_bound = 0.0;
    double type2_bound = 0.0;
    bool condition_ok = false;
    double q = 0.0, j = 0.0, g = 0.0, h = 0.0, i = 0.0, u = 0.0;
    bool vacuous = false;
    std::string operative;
    std::string formula;
};

std::string error_bounds_to_json(const error_bounds& eb);

struct perturbation_options {
    std::uint64_t seed = 1;
    std::size_t restarts = 16;      // alternating-minimization restarts
    std::size_t directions = 48;    // boundary-search directions
    std::size_t max_alt_iters = 120;
    double tol = 1e-8;              // convergence / bisection resolution
};

// Upper estimate of the minimum sum over environments of squared-L2
// perturbation of the observables (policies; for sht additionally the mean
// stopping times; for search the occupation matrices) needed to make the
// dataset pass its rationalizability test. 0 when it already passes.
double min_perturbation_feasible(const dataset& d,
                                 const perturbation_options& opt = {});

// Upper estimate of the minimum perturbation needed to make the dataset
// fail its test: bisection to the feasibility boundary along random
// perturbation directions, minimized over directions. 0 when it already
// fails; +inf when no failing dataset of this shape exists.
double min_perturbation_infeasible(const dataset& d,
                                   const perturbation_options& opt = {});

// Sample-size condition terms. counts[m][x] are the per-stratum trial
// counts. stopping kind: q = sum (X/2K) ln(2K/X) over strata, j =
// (sum X/2K) * min ln(2K/X). sht kind adds the stopping-time family with
// Kbar_m = K_m / tau_max^2: q += sum_m ln(2 Kbar_m)/(2 Kbar_m), j =
// min(j1, j2) * (sum X/2K + sum 1/(2 Kbar_m)) with j1, j2 the two family
// minima. search kind has no condition (q = j = 0, always ok).
// condition_ok = (eps_max >= q - j).
struct size_condition {
    bool condition_ok = false;
    double q = 0.0;
    double j = 0.0;
};
size_condition sample_size_condition(
    const std::vector<std::vector<long long>>& counts, dataset_kind kind,
    std::optional<double> tau_max, double eps_max);

// Pure bound evaluators on given counts and perturbation values.
error_bounds stopping_bounds_from_counts(
    const std::vector<std::vector<long long>>& counts, double eps1,
    double eps2);
error_bounds sht_bounds_from_counts(
    const std::vector<std::vector<long long>>& counts, double tau_max,
    double eps1, double eps2);
error_bounds search_bounds_from_counts(
    const std::vector<std::vector<long long>>& counts, double alpha_star,
    double eps1, double eps2);

// Dataset-level bounds: estimate eps1/eps2, then evaluate the matching
// formulas. The sht form requires tau_max (missing_tau_max otherwise);
// the search form requires alpha_star in (0,1) (invalid_alpha_star).
error_bounds stopping_error_bounds(const dataset& d,
                                   const perturbation_options& opt = {});
error_bounds sht_error_bounds(const dataset& d,
                              const perturbation_options& opt = {});
error_bounds search_error_bounds(const dataset& d, double alpha_star,
                                 const perturbation_options& opt = {});

// Rationalizability detector: H0 iff the feasibility set of the matching
// kind is nonempty, with the matching error bounds attached. kind must
// agree with the dataset; alpha_star is required for search data.
struct detector_result {
    bool h0 = false;
    error_bounds bounds;
};
detector_result irl_detector(const dataset& d, dataset_kind kind,
                             const perturbation_options& opt = {},
                             std::optional<double> alpha_star = std::nullopt);

}  // namespace stopirl
