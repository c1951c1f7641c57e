#include "quorum/ensemble_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace quorum {

namespace {

constexpr int kExactCoefficientLimit = 64;

bool is_degenerate_p(double p) { return p <= 0.0 || p >= 1.0 || p == 0.5; }
bool is_degenerate_w(double w) { return w <= 0.0 || w >= 1.0; }

// Binomial coefficients C(m, 0..m) as an exact Pascal row. C(64, 32) still
// fits a u128 with room to spare.
std::vector<unsigned __int128> pascal_row(int m) {
    std::vector<unsigned __int128> row(static_cast<std::size_t>(m) + 1, 1);
    for (int i = 1; i <= m; ++i) {
        for (int k = i - 1; k >= 1; --k) {
            row[static_cast<std::size_t>(k)] += row[static_cast<std::size_t>(k) - 1];
        }
    }
    return row;
}

}  // namespace

void validate(const UserClusterSpec& spec, std::size_t index) {
    const std::string at = "user " + std::to_string(index) + ": ";
    if (!(spec.lambda > 0.0) || !std::isfinite(spec.lambda))
        throw std::invalid_argument(at + "lambda must be positive");
    if (!(spec.mu > 0.0) || !std::isfinite(spec.mu))
        throw std::invalid_argument(at + "mu must be positive");
    if (!(spec.t >= 0.0) || !std::isfinite(spec.t))
        throw std::invalid_argument(at + "t must be nonnegative");
    if (!(spec.w >= 0.0 && spec.w <= 1.0))
        throw std::invalid_argument(at + "w must be in [0, 1]");
    if (!(spec.p >= 0.0 && spec.p <= 1.0))
        throw std::invalid_argument(at + "p must be in [0, 1]");
}

void validate(const SystemSpec& system) {
    if (system.users.empty())
        throw std::invalid_argument("system needs at least one user");
    if (!(system.theta >= 0.0) || !std::isfinite(system.theta))
        throw std::invalid_argument("theta must be nonnegative");
    for (std::size_t i = 0; i < system.users.size(); ++i) validate(system.users[i], i);
}

double harmonic(int m) {
    if (m < 1) throw std::domain_error("harmonic: m must be >= 1");
    // Small terms first so the running sum loses nothing to cancellation.
    double sum = 0.0;
    for (int j = m; j >= 1; --j) sum += 1.0 / j;
    return sum;
}

double harmonic_approx(double m) {
    if (!(m >= 1.0)) throw std::domain_error("harmonic_approx: m must be >= 1");
    return std::log(m) + kEulerGamma;
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

namespace {

double pmf_term(int m, int k, double q, const std::vector<unsigned __int128>* coeffs) {
    if (q <= 0.0) return k == 0 ? 1.0 : 0.0;
    if (q >= 1.0) return k == m ? 1.0 : 0.0;
    if (coeffs) {
        const long double coeff = static_cast<long double>((*coeffs)[static_cast<std::size_t>(k)]);
        return static_cast<double>(coeff * powl(static_cast<long double>(q), k) *
                                   powl(static_cast<long double>(1.0 - q), m - k));
    }
    const long double log_pmf = lgammal(static_cast<long double>(m) + 1) -
                                lgammal(static_cast<long double>(k) + 1) -
                                lgammal(static_cast<long double>(m - k) + 1) +
                                k * logl(static_cast<long double>(q)) +
                                (m - k) * logl(static_cast<long double>(1.0 - q));
    return static_cast<double>(expl(log_pmf));
}

// Full pmf row of Bin(m, q), one coefficient pass for the whole row.
std::vector<double> pmf_row(int m, double q) {
    std::vector<double> row(static_cast<std::size_t>(m) + 1);
    std::vector<unsigned __int128> coeffs;
    const bool exact = m <= kExactCoefficientLimit;
    if (exact) coeffs = pascal_row(m);
    for (int k = 0; k <= m; ++k)
        row[static_cast<std::size_t>(k)] = pmf_term(m, k, q, exact ? &coeffs : nullptr);
    return row;
}

}  // namespace

double binomial_pmf(int m, int k, double q) {
    if (m < 0 || k < 0 || k > m) throw std::domain_error("binomial_pmf: need 0 <= k <= m");
    if (m <= kExactCoefficientLimit && q > 0.0 && q < 1.0) {
        const auto coeffs = pascal_row(m);
        return pmf_term(m, k, q, &coeffs);
    }
    return pmf_term(m, k, q, nullptr);
}

double map_threshold(double m, double p, double w) {
    if (!(m >= 1.0)) throw std::domain_error("map_threshold: m must be >= 1");
    if (is_degenerate_p(p))
        throw DegenerateParameterError("map_threshold undefined at p = " + std::to_string(p));
    if (is_degenerate_w(w))
        throw DegenerateParameterError("map_threshold undefined at w = " + std::to_string(w));
    return m / 2.0 + std::log((1.0 - w) / w) / (2.0 * std::log(p / (1.0 - p)));
}

int map_decide(int k_true, int m, double p, double w) {
    if (m < 1) throw std::domain_error("map_decide: m must be >= 1");
    if (k_true < 0 || k_true > m) throw std::domain_error("map_decide: need 0 <= k <= m");
    if (!(p >= 0.0 && p <= 1.0) || !(w >= 0.0 && w <= 1.0))
        throw std::domain_error("map_decide: p and w must be in [0, 1]");

    if (w >= 1.0) return +1;
    if (w <= 0.0) return -1;
    if (p >= 1.0) {
        // Agents are always right: only unanimous outcomes have support.
        if (k_true == m) return +1;
        if (k_true == 0) return -1;
        throw InconsistentEvidenceError("map_decide: p = 1 with a split vote");
    }
    if (p <= 0.0) {
        if (k_true == 0) return +1;
        if (k_true == m) return -1;
        throw InconsistentEvidenceError("map_decide: p = 0 with a split vote");
    }
    // p = 0.5 makes the evidence term vanish; the prior decides
    // (ratio exactly 1 counts as +1).
    if (p == 0.5) return std::log((1.0 - w) / w) <= 0.0 ? +1 : -1;
    // The posterior log-ratio log(w/(1-w)) + (2k - m) log(p/(1-p)) >= 0 is
    // evaluated in its threshold form, sharing map_threshold's expression so
    // both sides of the rule round identically when k* lands on an integer.
    const double k_star =
        m / 2.0 + std::log((1.0 - w) / w) / (2.0 * std::log(p / (1.0 - p)));
    if (p > 0.5) return k_true >= k_star ? +1 : -1;
    return k_true <= k_star ? +1 : -1;
}

double joint_accuracy_exact(int m, double p, double w) {
    if (m < 1) throw std::domain_error("joint_accuracy_exact: m must be >= 1");
    if (!(p >= 0.0 && p <= 1.0) || !(w >= 0.0 && w <= 1.0))
        throw std::domain_error("joint_accuracy_exact: p and w must be in [0, 1]");
    // Under truth +1 the positive-vote count is Bin(m, p); under truth -1 it
    // is Bin(m, 1-p). A vote count is scored through the very same decision
    // rule the estimator uses, so fractional-threshold conventions cannot
    // drift apart. Zero-probability counts are skipped, which keeps the
    // certain-evidence cases (p in {0,1}) out of map_decide's error path.
    const std::vector<double> mass_true = pmf_row(m, p);
    const std::vector<double> mass_false = pmf_row(m, 1.0 - p);
    long double acc = 0.0L;
    for (int k = 0; k <= m; ++k) {
        const auto idx = static_cast<std::size_t>(k);
        if (mass_true[idx] == 0.0 && mass_false[idx] == 0.0) continue;
        const int decision = map_decide(k, m, p, w);
        if (decision == +1) {
            acc += static_cast<long double>(w) * mass_true[idx];
        } else {
            acc += static_cast<long double>(1.0 - w) * mass_false[idx];
        }
    }
    return std::min(1.0, static_cast<double>(acc));
}

namespace {

double gaussian_accuracy(double m, double p, double w, double correction) {
    if (!(m >= 1.0)) throw std::domain_error("joint_accuracy_gaussian: m must be >= 1");
    const double k_star = map_threshold(m, p, w);
    const double sigma = std::sqrt(m * p * (1.0 - p));
    const double val = w * q_function((k_star - m * p - correction) / sigma) +
                       (1.0 - w) * q_function((m * (1.0 - p) - k_star + correction) / sigma);
    return std::clamp(val, 0.0, 1.0);
}

}  // namespace

double joint_accuracy_gaussian(double m, double p, double w) {
    return gaussian_accuracy(m, p, w, 0.5);
}

double joint_accuracy_gaussian_uncorrected(double m, double p, double w) {
    return gaussian_accuracy(m, p, w, 0.0);
}

double expected_cluster_response_time(const UserClusterSpec& spec, int m) {
    return spec.t + harmonic(m) / spec.mu;
}

namespace {

// sum_l lambda_l (t_l + H_m / mu_l), optionally skipping one user.
double weighted_response_sum(const SystemSpec& system, int m,
                             std::size_t skip = static_cast<std::size_t>(-1)) {
    const double h = harmonic(m);
    double sum = 0.0;
    for (std::size_t l = 0; l < system.users.size(); ++l) {
        if (l == skip) continue;
        const auto& u = system.users[l];
        sum += u.lambda * (u.t + h / u.mu);
    }
    return sum;
}

}  // namespace

double expected_idle_wait(const SystemSpec& system, std::size_t user, int m) {
    if (user >= system.users.size()) throw std::out_of_range("expected_idle_wait: bad user index");
    return (weighted_response_sum(system, m, user) + 1.0) / system.users[user].lambda;
}

double expected_system_time_user(const SystemSpec& system, std::size_t user, int m) {
    if (user >= system.users.size())
        throw std::out_of_range("expected_system_time_user: bad user index");
    const auto& u = system.users[user];
    const double p_joint = joint_accuracy_exact(m, u.p, u.w);
    if (p_joint <= 0.0)
        throw InfeasibleError("expected_system_time_user: zero aggregated accuracy");
    return (weighted_response_sum(system, m) + 1.0) / (u.lambda * p_joint);
}

double expected_system_time_total(const SystemSpec& system, int m) {
    validate(system);
    const double numer = weighted_response_sum(system, m) + 1.0;
    double lambda_sum = 0.0;
    for (const auto& u : system.users) lambda_sum += u.lambda;
    double total = 0.0;
    for (const auto& u : system.users) {
        const double p_joint = joint_accuracy_exact(m, u.p, u.w);
        if (p_joint <= 0.0)
            throw InfeasibleError("expected_system_time_total: zero aggregated accuracy");
        total += numer / (p_joint * lambda_sum);
    }
    return total;
}

double objective(const SystemSpec& system, int m, bool use_approx_accuracy) {
    validate(system);
    // Factored form: sum_i (1/p_i)(1 + theta (sum_l lambda_l E[T_l] + 1)/sum lambda).
    const double numer = weighted_response_sum(system, m) + 1.0;
    double lambda_sum = 0.0;
    for (const auto& u : system.users) lambda_sum += u.lambda;
    const double time_factor = 1.0 + system.theta * numer / lambda_sum;
    double value = 0.0;
    for (const auto& u : system.users) {
        const double acc = use_approx_accuracy ? joint_accuracy_gaussian(m, u.p, u.w)
                                               : joint_accuracy_exact(m, u.p, u.w);
        if (acc <= 0.0) throw InfeasibleError("objective: zero aggregated accuracy");
        value += time_factor / acc;
    }
    return value;
}

double objective_relaxed(const SystemSpec& system, double m) {
    validate(system);
    if (!(m >= 1.0)) throw std::domain_error("objective_relaxed: m must be >= 1");
    const double log_h = harmonic_approx(m);
    double numer = 1.0;
    double lambda_sum = 0.0;
    for (const auto& u : system.users) {
        numer += u.lambda * (u.t + log_h / u.mu);
        lambda_sum += u.lambda;
    }
    const double time_factor = 1.0 + system.theta * numer / lambda_sum;
    double value = 0.0;
    for (const auto& u : system.users) {
        const double acc = joint_accuracy_gaussian_uncorrected(m, u.p, u.w);
        if (acc <= 0.0) throw InfeasibleError("objective_relaxed: zero aggregated accuracy");
        value += time_factor / acc;
    }
    return value;
}

double concavity_threshold(double p, double w) {
    if (!(p > 0.5)) throw std::domain_error("concavity_threshold: requires p > 0.5");
    if (is_degenerate_p(p) || is_degenerate_w(w))
        throw DegenerateParameterError("concavity_threshold: degenerate p or w");
    const double a = std::log((1.0 - w) / w) / (2.0 * std::log(p / (1.0 - p))) - 0.5;
    return std::abs(a) / (p - 0.5);
}

EnsembleMetrics compute_metrics(const SystemSpec& system, int m) {
    validate(system);
    EnsembleMetrics out;
    out.m = m;
    const std::size_t n = system.users.size();
    out.k_star.reserve(n);
    out.p_joint.reserve(n);
    out.p_joint_approx.reserve(n);
    out.e_t.reserve(n);
    out.e_s.reserve(n);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    bool any_degenerate = false;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& u = system.users[i];
        const bool degenerate = is_degenerate_p(u.p) || is_degenerate_w(u.w);
        any_degenerate |= degenerate;
        out.k_star.push_back(degenerate ? nan : map_threshold(m, u.p, u.w));
        out.p_joint.push_back(joint_accuracy_exact(m, u.p, u.w));
        out.p_joint_approx.push_back(degenerate ? nan : joint_accuracy_gaussian(m, u.p, u.w));
        out.e_t.push_back(expected_cluster_response_time(u, m));
        out.e_s.push_back(expected_system_time_user(system, i, m));
    }
    out.e_s_total = expected_system_time_total(system, m);
    out.objective_exact = objective(system, m, false);
    out.objective_approx = any_degenerate ? nan : objective(system, m, true);
    return out;
}

}  // namespace quorum
