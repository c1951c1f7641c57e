#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "quorum/types.hpp"

namespace quorum {

// Either run until N correct deliveries have been counted (after warmup) or
// until the next admission would pass the time horizon.
struct StopRule {
    enum class Kind { CorrectDeliveries, TimeHorizon };
    Kind kind = Kind::CorrectDeliveries;
    std::uint64_t deliveries = 0;
    double horizon = 0.0;

    static StopRule correct_deliveries(std::uint64_t n) {
        return StopRule{Kind::CorrectDeliveries, n, 0.0};
    }
    static StopRule time_horizon(double t) { return StopRule{Kind::TimeHorizon, 0, t}; }
};

struct SimConfig {
    SystemSpec system;
    int m = 1;
    std::uint64_t seed = 1;
    StopRule stop = StopRule::correct_deliveries(1);
    std::uint64_t warmup_deliveries = 0;
};

void validate(const SimConfig& config);

struct UserSimStats {
    std::uint64_t generated = 0;  // arrivals drawn from the Poisson stream
    std::uint64_t admitted = 0;
    std::uint64_t dropped = 0;
    std::uint64_t correct = 0;  // correct deliveries over the whole run
    double accuracy = 0.0;      // correct / admitted
    double accuracy_se = 0.0;
    // Inter-correct-delivery measurements. The first post-warmup correct
    // delivery only anchors the clock; it contributes no interval.
    std::uint64_t n_intervals = 0;
    double s_mean = 0.0;
    double s_se = 0.0;
    double interval_sum = 0.0;
    double epoch_time = 0.0;        // time of the anchoring delivery
    double last_correct_time = 0.0; // time of the latest measured delivery
    bool has_epoch = false;
    // Service times of this user's admitted jobs.
    double t_mean = 0.0;
    double t_se = 0.0;
};

struct SimReport {
    int m = 0;
    std::uint64_t seed = 0;
    std::vector<UserSimStats> users;
    double e_s_weighted = 0.0;  // lambda-weighted mean of s_mean
    bool e_s_valid = false;     // false if any user has no intervals
    double total_time = 0.0;
    std::uint64_t total_correct = 0;  // post-warmup correct deliveries
};

// One row per completed job. inter_correct is meaningful only when
// has_interval is set (a measured interval ended at this delivery).
struct TraceRow {
    double clock = 0.0;
    int user = 0;
    int truth = 0;
    int k_true = 0;
    int decision = 0;
    bool correct = false;
    bool has_interval = false;
    double inter_correct = 0.0;
};

// Sequential event loop: admit the earliest pending arrival when idle, fan
// out m exponential transmission delays plus the fixed processing time,
// aggregate the votes with the MAP rule, and drop every arrival that lands
// while the processor is busy. Deterministic given config.seed.
SimReport run_simulation(const SimConfig& config, std::vector<TraceRow>* trace = nullptr);

struct AccuracyCheckRow {
    std::size_t user = 0;
    double empirical = 0.0;
    double analytical = 0.0;
    double z = 0.0;
};

// Runs the simulation and scores each user's empirical aggregated accuracy
// against the closed form.
std::vector<AccuracyCheckRow> empirical_accuracy_check(const SimConfig& config);

struct TheoryComparisonRow {
    std::size_t user = 0;
    double s_empirical = 0.0;
    double s_theory = 0.0;
    double s_z = 0.0;
    bool s_available = false;
    double acc_empirical = 0.0;
    double acc_theory = 0.0;
    double acc_z = 0.0;
};

std::vector<TheoryComparisonRow> compare_with_theory(const SimReport& report,
                                                     const SystemSpec& system);

// Stable-ordered JSON document; identical configs serialize byte-identically.
nlohmann::ordered_json report_to_json(const SimReport& report, const SimConfig& config);

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows);

}  // namespace quorum
