#pragma once

#include <iosfwd>

#include <json.hpp>

#include "quorum/optimizer.hpp"
#include "quorum/types.hpp"

namespace quorum {

// CSV `m,user,p_joint_exact,p_joint_gaussian,k_star`, one row per (m, user);
// degenerate users get nan in the threshold columns.
void write_accuracy_csv(std::ostream& out, const SystemSpec& system, int m_min, int m_max);

// CSV `m,objective_exact,objective_relaxed`; infeasible or undefined entries
// print as nan.
void write_objective_curve_csv(std::ostream& out, const OptimizeReport& report);

// Stable-ordered JSON (summary, trajectories, curve) with the resolved
// config and tool version embedded.
nlohmann::ordered_json optimize_report_to_json(const OptimizeReport& report,
                                               const OptimizeRequest& request);

}  // namespace quorum
