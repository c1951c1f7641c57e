#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "quorum/types.hpp"

namespace quorum {

enum class OptimizeMethod { Grid, Relaxed, Both };

struct OptimizeRequest {
    SystemSpec system;
    int m_min = 1;
    int m_max = 200;
    OptimizeMethod method = OptimizeMethod::Both;
    int starts = 16;
    double step_tolerance = 1e-6;
    int max_iterations = 10000;
    std::uint64_t seed = 1;  // placement of the log-uniform starts
};

struct StartTrajectory {
    double start_m = 0.0;
    double converged_m = 0.0;
    double value = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    std::vector<double> value_history;  // accepted objective values, nonincreasing
};

struct CurvePoint {
    int m = 0;
    double objective_exact = std::numeric_limits<double>::quiet_NaN();
    double objective_relaxed = std::numeric_limits<double>::quiet_NaN();
    bool feasible = false;
};

struct OptimizeReport {
    int best_m_exact = 0;
    double best_value_exact = std::numeric_limits<double>::quiet_NaN();
    double best_m_relaxed_real = std::numeric_limits<double>::quiet_NaN();
    int best_m_relaxed_rounded = 0;
    std::vector<StartTrajectory> per_start_trajectories;
    std::vector<CurvePoint> objective_curve;
    bool methods_disagree = false;  // set with method Both when the answers differ by > 2
};

// Exhaustive scan of the exact objective over integer m in [m_min, m_max].
// Infeasible m (zero accuracy) are excluded and marked in the curve; ties
// break toward smaller m. Throws InfeasibleError when every m is infeasible.
OptimizeReport grid_search(const OptimizeRequest& request);

// Projected descent on the relaxed objective over real m, central-difference
// gradients with Armijo backtracking, `starts` log-uniform initial points.
// Reports the best converged real m plus the better of floor/ceil under the
// exact objective.
OptimizeReport relaxed_descent(const OptimizeRequest& request);

// Dispatch on request.method; Both merges the two reports and flags
// disagreement of more than 2 between the integer answers.
OptimizeReport optimize(const OptimizeRequest& request);

// Integer argmin of the relaxed column of the objective curve (what the
// published approximate curves report). Returns 0 when no point is finite.
int relaxed_curve_argmin(const OptimizeReport& report);

// The derivative the descent uses: central difference of the relaxed
// objective with step 1e-4 * max(1, m), one-sided against [lo, hi].
double relaxed_objective_gradient(const SystemSpec& system, double m, double lo, double hi);

}  // namespace quorum
