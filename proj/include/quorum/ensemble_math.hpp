#pragma once

#include <cstddef>

#include "quorum/types.hpp"

namespace quorum {

// Two-digit Euler–Mascheroni constant used by the log approximation of the
// harmonic sum. Kept at 0.577 (not 0.5772156649) so the relaxed objective
// matches the published reference curves digit for digit.
inline constexpr double kEulerGamma = 0.577;

// Sum_{j=1..m} 1/j by direct summation. Throws std::domain_error for m < 1.
double harmonic(int m);

// log(m) + 0.577 for real m >= 1. Throws std::domain_error for m < 1.
double harmonic_approx(double m);

// Gaussian tail Q(x) = P(N(0,1) > x) = 0.5 * erfc(x / sqrt(2)).
double q_function(double x);

// P(Bin(m, q) = k). Exact binomial coefficients up to m = 64, log-space
// (lgamma) beyond. Handles q in {0, 1} without special casing by callers.
double binomial_pmf(int m, int k, double q);

// MAP decision threshold k* = m/2 + log((1-w)/w) / (2 log(p/(1-p))).
// Accepts real-valued m (the relaxed objective differentiates through it).
// Throws DegenerateParameterError when p in {0, 0.5, 1} or w in {0, 1};
// use map_decide for those, it works from the likelihood ratio directly.
double map_threshold(double m, double p, double w);

// MAP estimate from k_true positive votes out of m. Evaluates the posterior
// log-ratio log(w/(1-w)) + (2k - m) log(p/(1-p)) and returns +1 when >= 0
// (ties decide +1), -1 otherwise. Degenerate parameters take their limits:
// w = 1 forces +1, w = 0 forces -1, p = 0.5 contributes no evidence, and
// p in {0, 1} with a vote count both certainties exclude throws
// InconsistentEvidenceError.
int map_decide(int k_true, int m, double p, double w);

// Aggregated accuracy of the MAP rule: probability mass of vote counts on
// which map_decide recovers the truth, weighted by the prior. Valid on the
// full parameter domain 0 <= p, w <= 1.
double joint_accuracy_exact(int m, double p, double w);

// Gaussian approximation with continuity correction,
//   w Q((k* - m p - 0.5)/s) + (1-w) Q((m(1-p) - k* + 0.5)/s),
// s = sqrt(m p (1-p)), clamped to [0, 1]. Real-valued m accepted.
// Throws DegenerateParameterError like map_threshold.
double joint_accuracy_gaussian(double m, double p, double w);

// Same approximation without the continuity correction, the large-m form
// the relaxed objective is built on (at w = 0.5 it collapses to a single
// Q of sqrt(m)(0.5 - p)/sqrt(p(1-p))).
double joint_accuracy_gaussian_uncorrected(double m, double p, double w);

// E[T_i] = t + harmonic(m)/mu: fixed processing plus the expected max of
// m iid exponential transmission delays.
double expected_cluster_response_time(const UserClusterSpec& spec, int m);

// E[W-bar_i] = (1/lambda_i) (sum_{l != i} lambda_l E[T_l] + 1): expected
// idle-plus-other-service time until user i's next query is admitted.
double expected_idle_wait(const SystemSpec& system, std::size_t user, int m);

// E[S_i] = (sum_l lambda_l E[T_l] + 1) / (lambda_i p_joint_i): expected
// spacing between consecutive correct deliveries to user i.
// Throws InfeasibleError when p_joint_i is zero.
double expected_system_time_user(const SystemSpec& system, std::size_t user, int m);

// E[S] = sum_i (lambda_i / sum lambda) E[S_i].
double expected_system_time_total(const SystemSpec& system, int m);

// sum_i 1/p_joint_i(m) + theta E[S](m). With use_approx_accuracy the
// per-user accuracy is the continuity-corrected Gaussian (harmonic stays
// exact). Throws InfeasibleError when any accuracy is zero,
// DegenerateParameterError when the approximation is requested outside
// its domain.
double objective(const SystemSpec& system, int m, bool use_approx_accuracy = false);

// The continuous relaxation: uncorrected Gaussian accuracy with k* from
// real m, and log(m) + 0.577 in place of the harmonic sum. m >= 1.
double objective_relaxed(const SystemSpec& system, double m);

// Smallest m beyond which the corrected Gaussian accuracy is concave in m:
// |A| / (p - 0.5) with A = log((1-w)/w)/(2 log(p/(1-p))) - 0.5.
// Requires p > 0.5 and 0 < w < 1.
double concavity_threshold(double p, double w);

// All per-user and system-level quantities for one m. Degenerate users get
// NaN in k_star / p_joint_approx and objective_approx becomes NaN.
EnsembleMetrics compute_metrics(const SystemSpec& system, int m);

}  // namespace quorum
