#include "quorum/reporting.hpp"

#include <cmath>
#include <ostream>

#include "quorum/config.hpp"
#include "quorum/ensemble_math.hpp"

namespace quorum {

void write_accuracy_csv(std::ostream& out, const SystemSpec& system, int m_min, int m_max) {
    out << "m,user,p_joint_exact,p_joint_gaussian,k_star\n";
    out.precision(17);
    for (int m = m_min; m <= m_max; ++m) {
        const EnsembleMetrics metrics = compute_metrics(system, m);
        for (std::size_t i = 0; i < system.users.size(); ++i) {
            out << m << ',' << i << ',' << metrics.p_joint[i] << ','
                << metrics.p_joint_approx[i] << ',' << metrics.k_star[i] << '\n';
        }
    }
}

void write_objective_curve_csv(std::ostream& out, const OptimizeReport& report) {
    out << "m,objective_exact,objective_relaxed\n";
    out.precision(17);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& point : report.objective_curve) {
        out << point.m << ',' << (point.feasible ? point.objective_exact : nan) << ','
            << point.objective_relaxed << '\n';
    }
}

nlohmann::ordered_json optimize_report_to_json(const OptimizeReport& report,
                                               const OptimizeRequest& request) {
    nlohmann::ordered_json doc;
    doc["tool_version"] = kToolVersion;
    doc["config"] = system_to_json(request.system);
    doc["m_min"] = request.m_min;
    doc["m_max"] = request.m_max;
    doc["starts"] = request.starts;
    doc["seed"] = request.seed;

    doc["best_m_exact"] = report.best_m_exact;
    doc["best_value_exact"] = report.best_value_exact;
    if (std::isfinite(report.best_m_relaxed_real)) {
        doc["best_m_relaxed_real"] = report.best_m_relaxed_real;
        doc["best_m_relaxed_rounded"] = report.best_m_relaxed_rounded;
    } else {
        doc["best_m_relaxed_real"] = nullptr;
        doc["best_m_relaxed_rounded"] = nullptr;
    }
    const int curve_argmin = relaxed_curve_argmin(report);
    if (curve_argmin > 0) {
        doc["best_m_relaxed_curve"] = curve_argmin;
    } else {
        doc["best_m_relaxed_curve"] = nullptr;
    }
    doc["methods_disagree"] = report.methods_disagree;

    auto starts = nlohmann::ordered_json::array();
    for (const auto& traj : report.per_start_trajectories) {
        nlohmann::ordered_json tj;
        tj["start_m"] = traj.start_m;
        tj["converged_m"] = traj.converged_m;
        if (std::isfinite(traj.value)) {
            tj["value"] = traj.value;
        } else {
            tj["value"] = nullptr;
        }
        tj["iterations"] = traj.iterations;
        starts.push_back(std::move(tj));
    }
    doc["per_start_trajectories"] = std::move(starts);

    auto curve = nlohmann::ordered_json::array();
    for (const auto& point : report.objective_curve) {
        nlohmann::ordered_json pj;
        pj["m"] = point.m;
        if (point.feasible) {
            pj["objective_exact"] = point.objective_exact;
        } else {
            pj["objective_exact"] = nullptr;
        }
        if (std::isfinite(point.objective_relaxed)) {
            pj["objective_relaxed"] = point.objective_relaxed;
        } else {
            pj["objective_relaxed"] = nullptr;
        }
        curve.push_back(std::move(pj));
    }
    doc["objective_curve"] = std::move(curve);
    return doc;
}

}  // namespace quorum
