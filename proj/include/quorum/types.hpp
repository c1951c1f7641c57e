#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace quorum {

// Parameters of one user / agent-cluster pair: Poisson query rate, prior
// probability the query is true, per-agent correctness probability, fixed
// per-agent processing time, and the rate of the exponential transmission
// delay to each agent.
struct UserClusterSpec {
    double lambda = 1.0;
    double w = 0.5;
    double p = 0.5;
    double t = 0.0;
    double mu = 1.0;
};

struct SystemSpec {
    std::vector<UserClusterSpec> users;
    double theta = 0.0;  // weight on expected system time in the objective
};

// Thrown when a closed form is undefined at the given parameters
// (p in {0, 0.5, 1} or w in {0, 1} for the threshold/Gaussian forms).
class DegenerateParameterError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Thrown when certain evidence (p in {0, 1}) contradicts the observed
// vote count, e.g. p = 1 with 0 < k < m.
class InconsistentEvidenceError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Thrown when an aggregated accuracy of zero makes an expected system
// time infinite. Explicit so optimizers see infeasibility, not a number.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Throws std::invalid_argument naming the offending field.
void validate(const UserClusterSpec& spec, std::size_t index = 0);
void validate(const SystemSpec& system);

// Everything derived for one ensemble size m. Entries are per user;
// k_star and p_joint_approx are NaN where the threshold form is
// undefined (degenerate p or w).
struct EnsembleMetrics {
    int m = 0;
    std::vector<double> k_star;
    std::vector<double> p_joint;
    std::vector<double> p_joint_approx;
    std::vector<double> e_t;
    std::vector<double> e_s;
    double e_s_total = 0.0;
    double objective_exact = 0.0;
    double objective_approx = 0.0;
};

}  // namespace quorum
