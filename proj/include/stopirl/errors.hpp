#pragma once

#include <stdexcept>
#include <string>

namespace stopirl {

// Base for all library errors; CLI maps these to exit code 2.
struct error : std::runtime_error {
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Bayes normalizer is zero: the observation is impossible under the belief.
struct zero_evidence : error {
    using error::error;
};

// Raw vector is not a probability vector within tolerance.
struct not_a_simplex_point : error {
    using error::error;
};

// Value iteration failed to reach the configured tolerance.
struct no_convergence : error {
    using error::error;
};

// A simulated trial exceeded the hard step cap.
struct horizon_exceeded : error {
    using error::error;
};

// Aggregation saw zero trials for some (state, environment) stratum.
struct missing_stratum : error {
    using error::error;
};

// Dataset/config JSON violates the documented schema.
struct schema_violation : error {
    using error::error;
};

// Dataset schema_version differs from the supported version.
struct version_mismatch : error {
    using error::error;
};

// Posterior requested for an action with zero unconditional probability.
struct unsupported_action : error {
    using error::error;
};

// Cycles mode invoked above the environment cap.
struct too_many_environments : error {
    using error::error;
};

// All environment policies identical: costs are unidentifiable.
struct degenerate_dataset : error {
    using error::error;
};

// Cycle specification is malformed (length < 2 or repeated indices).
struct invalid_cycle : error {
    using error::error;
};

// Continue-cost reconstruction failed for a supposedly feasible witness.
struct infeasible_sumcost : error {
    using error::error;
};

// Matrix/vector dimensions do not agree with the dataset.
struct dimension_mismatch : error {
    using error::error;
};

// Point estimate with lambda = 0 and no cost box: objective is unbounded.
struct unbounded_objective : error {
    using error::error;
};

// SHT sample-complexity bound requested without a stopping-time bound.
struct missing_tau_max : error {
    using error::error;
};

// Reveal-probability lower bound outside (0, 1).
struct invalid_alpha_star : error {
    using error::error;
};

// Operation called outside its documented precondition.
struct usage_error : error {
    using error::error;
};

}  // namespace stopirl
