#include "quorum/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "quorum/ensemble_math.hpp"
#include "quorum/rng.hpp"

namespace quorum {

namespace {

constexpr std::uint64_t kStartsTag = 0x53545254ull;
constexpr std::uint64_t kPerturbTag = 0x50455254ull;

void validate(const OptimizeRequest& request) {
    quorum::validate(request.system);
    if (request.m_min < 1 || request.m_min > request.m_max)
        throw std::invalid_argument("optimize: need 1 <= m_min <= m_max");
    if (request.starts < 1) throw std::invalid_argument("optimize: starts must be >= 1");
    if (!(request.step_tolerance > 0.0))
        throw std::invalid_argument("optimize: step_tolerance must be positive");
    if (request.max_iterations < 1)
        throw std::invalid_argument("optimize: max_iterations must be >= 1");
}

double relaxed_or_nan(const SystemSpec& system, double m) {
    try {
        return objective_relaxed(system, m);
    } catch (const InfeasibleError&) {
        return std::numeric_limits<double>::quiet_NaN();
    } catch (const DegenerateParameterError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

std::vector<CurvePoint> evaluate_curve(const OptimizeRequest& request) {
    std::vector<CurvePoint> curve;
    curve.reserve(static_cast<std::size_t>(request.m_max - request.m_min) + 1);
    for (int m = request.m_min; m <= request.m_max; ++m) {
        CurvePoint point;
        point.m = m;
        try {
            point.objective_exact = objective(request.system, m, false);
            point.feasible = true;
        } catch (const InfeasibleError&) {
            point.feasible = false;
        }
        point.objective_relaxed = relaxed_or_nan(request.system, static_cast<double>(m));
        curve.push_back(point);
    }
    return curve;
}

}  // namespace

double relaxed_objective_gradient(const SystemSpec& system, double m, double lo, double hi) {
    const double h = 1e-4 * std::max(1.0, m);
    const double up = std::min(m + h, hi);
    const double down = std::max(m - h, lo);
    if (up <= down) return 0.0;
    return (objective_relaxed(system, up) - objective_relaxed(system, down)) / (up - down);
}

OptimizeReport grid_search(const OptimizeRequest& request) {
    validate(request);
    OptimizeReport report;
    report.objective_curve = evaluate_curve(request);
    bool found = false;
    for (const auto& point : report.objective_curve) {
        if (!point.feasible) continue;
        if (!found || point.objective_exact < report.best_value_exact) {
            found = true;
            report.best_m_exact = point.m;
            report.best_value_exact = point.objective_exact;
        }
    }
    if (!found) throw InfeasibleError("grid_search: no feasible m in range");
    return report;
}

OptimizeReport relaxed_descent(const OptimizeRequest& request) {
    validate(request);
    const auto& system = request.system;
    const double lo = static_cast<double>(request.m_min);
    const double hi = static_cast<double>(request.m_max);

    SplitMix64 placement(derive_stream_seed(request.seed, kStartsTag, 0));
    std::vector<double> start_points;
    start_points.reserve(static_cast<std::size_t>(request.starts));
    for (int s = 0; s < request.starts; ++s) {
        const double u = placement.uniform01();
        start_points.push_back(std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo))));
    }
    SplitMix64 perturb(derive_stream_seed(request.seed, kPerturbTag, 0));

    OptimizeReport report;
    report.per_start_trajectories.reserve(start_points.size());

    for (double start_m : start_points) {
        StartTrajectory traj;
        traj.start_m = start_m;

        double m = start_m;
        double f = std::numeric_limits<double>::quiet_NaN();
        for (int attempt = 0; attempt <= 3; ++attempt) {
            f = relaxed_or_nan(system, m);
            if (std::isfinite(f)) break;
            m = std::clamp(m * (0.5 + perturb.uniform01()), lo, hi);
        }
        if (!std::isfinite(f)) {
            traj.converged_m = m;
            report.per_start_trajectories.push_back(std::move(traj));
            continue;
        }
        traj.value_history.push_back(f);

        double alpha = 1.0;
        int iter = 0;
        while (iter < request.max_iterations) {
            ++iter;
            const double grad = relaxed_objective_gradient(system, m, lo, hi);
            if (grad == 0.0) break;

            alpha = std::min(alpha * 2.0, 1e6);
            double m_new = m;
            double f_new = f;
            bool accepted = false;
            for (int back = 0; back < 60; ++back) {
                m_new = std::clamp(m - alpha * grad, lo, hi);
                const double step = m - m_new;
                if (std::abs(step) < 1e-18) break;
                const double trial = relaxed_or_nan(system, m_new);
                // Armijo sufficient decrease along the projected step.
                if (std::isfinite(trial) && trial <= f - 1e-4 * grad * step) {
                    f_new = trial;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) break;
            const double moved = std::abs(m_new - m);
            m = m_new;
            f = f_new;
            traj.value_history.push_back(f);
            if (moved < request.step_tolerance) break;
        }
        traj.converged_m = m;
        traj.value = f;
        traj.iterations = iter;
        report.per_start_trajectories.push_back(std::move(traj));
    }

    const StartTrajectory* best = nullptr;
    for (const auto& traj : report.per_start_trajectories) {
        if (!std::isfinite(traj.value)) continue;
        if (!best || traj.value < best->value) best = &traj;
    }
    if (!best) throw InfeasibleError("relaxed_descent: no start produced a finite objective");
    report.best_m_relaxed_real = best->converged_m;

    // Round by trying both neighbors under the exact objective.
    const int floor_m =
        std::clamp(static_cast<int>(std::floor(report.best_m_relaxed_real)), request.m_min,
                   request.m_max);
    const int ceil_m = std::clamp(static_cast<int>(std::ceil(report.best_m_relaxed_real)),
                                  request.m_min, request.m_max);
    double best_rounded_value = std::numeric_limits<double>::infinity();
    int best_rounded = 0;
    for (int candidate : {floor_m, ceil_m}) {
        try {
            const double value = objective(system, candidate, false);
            if (value < best_rounded_value ||
                (value == best_rounded_value && candidate < best_rounded)) {
                best_rounded_value = value;
                best_rounded = candidate;
            }
        } catch (const InfeasibleError&) {
        }
    }
    if (best_rounded == 0)
        throw InfeasibleError("relaxed_descent: rounded candidates are infeasible");
    report.best_m_relaxed_rounded = best_rounded;

    if (report.objective_curve.empty()) report.objective_curve = evaluate_curve(request);
    return report;
}

OptimizeReport optimize(const OptimizeRequest& request) {
    switch (request.method) {
        case OptimizeMethod::Grid:
            return grid_search(request);
        case OptimizeMethod::Relaxed:
            return relaxed_descent(request);
        case OptimizeMethod::Both: {
            OptimizeReport grid = grid_search(request);
            OptimizeReport relaxed = relaxed_descent(request);
            grid.best_m_relaxed_real = relaxed.best_m_relaxed_real;
            grid.best_m_relaxed_rounded = relaxed.best_m_relaxed_rounded;
            grid.per_start_trajectories = std::move(relaxed.per_start_trajectories);
            grid.methods_disagree =
                std::abs(grid.best_m_exact - grid.best_m_relaxed_rounded) > 2;
            return grid;
        }
    }
    throw std::logic_error("optimize: unknown method");
}

int relaxed_curve_argmin(const OptimizeReport& report) {
    int best_m = 0;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& point : report.objective_curve) {
        if (std::isfinite(point.objective_relaxed) && point.objective_relaxed < best) {
            best = point.objective_relaxed;
            best_m = point.m;
        }
    }
    return best_m;
}

}  // namespace quorum
