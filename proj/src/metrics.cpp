#include <algorithm>
#include <stdexcept>

#include "fic/scenario.hpp"

namespace fic::sim {

Metrics compute_metrics(const RunLog& log) {
  if (log.rows.empty()) throw std::invalid_argument("compute_metrics: empty log");
  Metrics m;
  std::size_t free_ticks = 0;
  std::size_t free_within = 0;
  const double x_b = log.meta.saturation_error;

  for (std::size_t k = 0; k < log.rows.size(); ++k) {
    const LogRow& r = log.rows[k];
    m.max_abs_error = m.max_abs_error.cwiseMax(r.error.cwiseAbs());
    m.max_task_force = std::max(m.max_task_force, r.task_force.cwiseAbs().maxCoeff());
    m.max_contact_force = std::max(m.max_contact_force, r.external_force.norm());
    if (r.external_force.isZero(0)) {
      ++free_ticks;
      if (r.error.norm() <= x_b) ++free_within;
    }
    if (k > 0) {
      const LogRow& p = log.rows[k - 1];
      // Work done by the controller: -F . de, trapezoidal in the error.
      m.energy_balance -= 0.5 * (r.task_force + p.task_force).dot(r.error - p.error);
      if (p.bond_attached && !r.bond_attached && !m.bond_break_time) m.bond_break_time = p.t;
    }
  }
  if (free_ticks > 0) m.free_motion_fraction = static_cast<double>(free_within) / static_cast<double>(free_ticks);
  return m;
}

nlohmann::json to_json(const Metrics& m) {
  nlohmann::json j = {{"max_abs_error", {m.max_abs_error.x(), m.max_abs_error.y(), m.max_abs_error.z()}},
                      {"free_motion_fraction", m.free_motion_fraction},
                      {"max_task_force", m.max_task_force},
                      {"max_contact_force", m.max_contact_force},
                      {"energy_balance", m.energy_balance}};
  j["bond_break_time"] = m.bond_break_time ? nlohmann::json(*m.bond_break_time) : nlohmann::json(nullptr);
  return j;
}

}  // namespace fic::sim
