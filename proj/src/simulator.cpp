#include "quorum/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "quorum/ensemble_math.hpp"
#include "quorum/rng.hpp"

namespace quorum {

namespace {

constexpr std::uint64_t kArrivalTag = 0x41525256ull;  // per-user arrival stream
constexpr std::uint64_t kTruthTag = 0x54525554ull;    // one stream for all truths
constexpr std::uint64_t kJobTag = 0x4A4F4242ull;      // one stream per admitted job

struct RunningStats {
    std::uint64_t n = 0;
    double sum = 0.0;
    double sum_sq = 0.0;

    void add(double x) {
        ++n;
        sum += x;
        sum_sq += x * x;
    }
    double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
    double se() const {
        if (n < 2) return 0.0;
        const double m = mean();
        const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) /
                                             static_cast<double>(n - 1));
        return std::sqrt(var / static_cast<double>(n));
    }
};

// Standard error via batch means: robust to leftover correlation between
// consecutive intervals. Falls back to the iid estimate when there are too
// few samples to fill 20 batches meaningfully.
double batch_means_se(const std::vector<double>& xs, int batches = 20) {
    const std::size_t n = xs.size();
    if (n < static_cast<std::size_t>(2 * batches)) {
        RunningStats s;
        for (double x : xs) s.add(x);
        return s.se();
    }
    const std::size_t per = n / static_cast<std::size_t>(batches);
    std::vector<double> means;
    means.reserve(static_cast<std::size_t>(batches));
    for (int b = 0; b < batches; ++b) {
        double sum = 0.0;
        for (std::size_t j = 0; j < per; ++j) sum += xs[static_cast<std::size_t>(b) * per + j];
        means.push_back(sum / static_cast<double>(per));
    }
    double mean = 0.0;
    for (double m : means) mean += m;
    mean /= static_cast<double>(batches);
    double var = 0.0;
    for (double m : means) var += (m - mean) * (m - mean);
    var /= static_cast<double>(batches - 1);
    return std::sqrt(var / static_cast<double>(batches));
}

}  // namespace

void validate(const SimConfig& config) {
    validate(config.system);
    if (config.m < 1) throw std::invalid_argument("simulation: m must be >= 1");
    if (config.stop.kind == StopRule::Kind::CorrectDeliveries) {
        if (config.stop.deliveries < 1)
            throw std::invalid_argument("simulation: delivery target must be >= 1");
    } else {
        if (!(config.stop.horizon > 0.0))
            throw std::invalid_argument("simulation: horizon must be positive");
    }
}

SimReport run_simulation(const SimConfig& config, std::vector<TraceRow>* trace) {
    validate(config);
    const auto& users = config.system.users;
    const std::size_t n = users.size();
    const int m = config.m;

    std::vector<SplitMix64> arrival_streams;
    arrival_streams.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        arrival_streams.emplace_back(derive_stream_seed(config.seed, kArrivalTag, i));
    SplitMix64 truth_stream(derive_stream_seed(config.seed, kTruthTag, 0));

    std::vector<double> next_arrival(n);
    for (std::size_t i = 0; i < n; ++i)
        next_arrival[i] = arrival_streams[i].exponential(users[i].lambda);

    std::vector<UserSimStats> stats(n);
    std::vector<std::vector<double>> intervals(n);
    std::vector<RunningStats> service(n);

    double clock = 0.0;
    std::uint64_t warmup_left = config.warmup_deliveries;
    std::uint64_t measured_correct = 0;
    std::uint64_t job_index = 0;

    const bool by_count = config.stop.kind == StopRule::Kind::CorrectDeliveries;
    while (true) {
        if (by_count && measured_correct >= config.stop.deliveries) break;

        std::size_t who = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (next_arrival[i] < next_arrival[who]) who = i;
        const double admit_time = next_arrival[who];
        if (!by_count && admit_time > config.stop.horizon) {
            clock = config.stop.horizon;
            break;
        }

        const auto& u = users[who];
        stats[who].generated += 1;
        stats[who].admitted += 1;
        next_arrival[who] = admit_time + arrival_streams[who].exponential(u.lambda);

        const int truth = truth_stream.bernoulli(u.w) ? +1 : -1;

        SplitMix64 job_stream(derive_stream_seed(config.seed, kJobTag, job_index++));
        double max_delay = 0.0;
        for (int j = 0; j < m; ++j) max_delay = std::max(max_delay, job_stream.exponential(u.mu));
        const double completion = admit_time + u.t + max_delay;
        service[who].add(u.t + max_delay);

        int k_true = 0;
        for (int j = 0; j < m; ++j) {
            const int response = job_stream.bernoulli(u.p) ? truth : -truth;
            if (response == +1) ++k_true;
        }
        const int decision = map_decide(k_true, m, u.p, u.w);
        const bool correct = decision == truth;

        TraceRow row;
        row.clock = completion;
        row.user = static_cast<int>(who);
        row.truth = truth;
        row.k_true = k_true;
        row.decision = decision;
        row.correct = correct;

        if (correct) {
            stats[who].correct += 1;
            if (warmup_left > 0) {
                --warmup_left;
            } else {
                ++measured_correct;
                if (!stats[who].has_epoch) {
                    stats[who].has_epoch = true;
                    stats[who].epoch_time = completion;
                    stats[who].last_correct_time = completion;
                } else {
                    const double gap = completion - stats[who].last_correct_time;
                    intervals[who].push_back(gap);
                    stats[who].interval_sum += gap;
                    stats[who].last_correct_time = completion;
                    row.has_interval = true;
                    row.inter_correct = gap;
                }
            }
        }
        if (trace) trace->push_back(row);

        clock = completion;
        // Everything that arrived while the processor was busy is dropped.
        for (std::size_t i = 0; i < n; ++i) {
            while (next_arrival[i] < completion) {
                stats[i].generated += 1;
                stats[i].dropped += 1;
                next_arrival[i] += arrival_streams[i].exponential(users[i].lambda);
            }
        }
    }

    SimReport report;
    report.m = m;
    report.seed = config.seed;
    report.total_time = clock;
    report.total_correct = measured_correct;
    report.users = std::move(stats);

    double lambda_sum = 0.0;
    for (const auto& u : users) lambda_sum += u.lambda;
    report.e_s_valid = true;
    report.e_s_weighted = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto& s = report.users[i];
        if (s.admitted > 0) {
            s.accuracy = static_cast<double>(s.correct) / static_cast<double>(s.admitted);
            s.accuracy_se =
                std::sqrt(s.accuracy * (1.0 - s.accuracy) / static_cast<double>(s.admitted));
        }
        s.n_intervals = intervals[i].size();
        if (s.n_intervals > 0) {
            s.s_mean = s.interval_sum / static_cast<double>(s.n_intervals);
            s.s_se = batch_means_se(intervals[i]);
        } else {
            report.e_s_valid = false;
        }
        s.t_mean = service[i].mean();
        s.t_se = service[i].se();
        report.e_s_weighted += users[i].lambda / lambda_sum * s.s_mean;
    }
    if (!report.e_s_valid) report.e_s_weighted = 0.0;
    return report;
}

std::vector<AccuracyCheckRow> empirical_accuracy_check(const SimConfig& config) {
    const SimReport report = run_simulation(config);
    std::vector<AccuracyCheckRow> rows;
    rows.reserve(report.users.size());
    for (std::size_t i = 0; i < report.users.size(); ++i) {
        const auto& s = report.users[i];
        const auto& u = config.system.users[i];
        AccuracyCheckRow row;
        row.user = i;
        row.empirical = s.accuracy;
        row.analytical = joint_accuracy_exact(config.m, u.p, u.w);
        row.z = s.accuracy_se > 0.0 ? (s.accuracy - row.analytical) / s.accuracy_se
                                    : (s.accuracy == row.analytical
                                           ? 0.0
                                           : std::numeric_limits<double>::infinity());
        rows.push_back(row);
    }
    return rows;
}

std::vector<TheoryComparisonRow> compare_with_theory(const SimReport& report,
                                                     const SystemSpec& system) {
    std::vector<TheoryComparisonRow> rows;
    rows.reserve(report.users.size());
    for (std::size_t i = 0; i < report.users.size(); ++i) {
        const auto& s = report.users[i];
        const auto& u = system.users[i];
        TheoryComparisonRow row;
        row.user = i;
        row.acc_empirical = s.accuracy;
        row.acc_theory = joint_accuracy_exact(report.m, u.p, u.w);
        row.acc_z = s.accuracy_se > 0.0 ? (s.accuracy - row.acc_theory) / s.accuracy_se
                                        : (s.accuracy == row.acc_theory
                                               ? 0.0
                                               : std::numeric_limits<double>::infinity());
        row.s_theory = expected_system_time_user(system, i, report.m);
        if (s.n_intervals > 0 && s.s_se > 0.0) {
            row.s_available = true;
            row.s_empirical = s.s_mean;
            row.s_z = (s.s_mean - row.s_theory) / s.s_se;
        }
        rows.push_back(row);
    }
    return rows;
}

nlohmann::ordered_json report_to_json(const SimReport& report, const SimConfig& config) {
    nlohmann::ordered_json doc;
    doc["m"] = report.m;
    doc["seed"] = report.seed;
    doc["warmup_deliveries"] = config.warmup_deliveries;
    if (config.stop.kind == StopRule::Kind::CorrectDeliveries) {
        doc["stop"] = {{"kind", "correct_deliveries"}, {"deliveries", config.stop.deliveries}};
    } else {
        doc["stop"] = {{"kind", "time_horizon"}, {"horizon", config.stop.horizon}};
    }
    doc["total_time"] = report.total_time;
    doc["total_correct"] = report.total_correct;
    auto user_docs = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < report.users.size(); ++i) {
        const auto& s = report.users[i];
        nlohmann::ordered_json uj;
        uj["user"] = i;
        uj["generated"] = s.generated;
        uj["admitted"] = s.admitted;
        uj["dropped"] = s.dropped;
        uj["correct"] = s.correct;
        if (s.admitted > 0) {
            uj["accuracy"] = s.accuracy;
            uj["accuracy_se"] = s.accuracy_se;
        } else {
            uj["accuracy"] = nullptr;
            uj["accuracy_se"] = nullptr;
        }
        uj["n_intervals"] = s.n_intervals;
        if (s.n_intervals > 0) {
            uj["s_mean"] = s.s_mean;
            uj["s_se"] = s.s_se;
            uj["epoch_time"] = s.epoch_time;
            uj["last_correct_time"] = s.last_correct_time;
            uj["interval_sum"] = s.interval_sum;
        } else {
            uj["s_mean"] = nullptr;
            uj["s_se"] = nullptr;
        }
        uj["t_mean"] = s.t_mean;
        uj["t_se"] = s.t_se;
        user_docs.push_back(std::move(uj));
    }
    doc["users"] = std::move(user_docs);
    if (report.e_s_valid) {
        doc["e_s_weighted"] = report.e_s_weighted;
    } else {
        doc["e_s_weighted"] = nullptr;
    }
    return doc;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
    out << "clock,user,truth,k_true,decision,correct,inter_correct_time\n";
    out.precision(17);
    for (const auto& r : rows) {
        out << r.clock << ',' << r.user << ',' << r.truth << ',' << r.k_true << ','
            << r.decision << ',' << (r.correct ? 1 : 0) << ',';
        if (r.has_interval) out << r.inter_correct;
        out << '\n';
    }
}

}  // namespace quorum
