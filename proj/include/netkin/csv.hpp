#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "netkin/integrate.hpp"
#include "netkin/mc.hpp"

namespace netkin {

/// Shortest text that reads back to the same double.
std::string format_number(double x);

/// Header: t, rho_i, mom_i, m_i, uchi_i, uint_i, total_mass, total_mom.
/// Undefined means (empty nodes) are written as empty fields.
void write_trajectory_csv(std::ostream &out, const Trajectory &traj);

/// Same columns plus rho_se_i and mom_se_i. A single replica reports its
/// within-ensemble errors; several replicas are averaged and report the
/// standard error of the replica mean.
void write_mc_csv(std::ostream &out, const std::vector<McTrajectory> &replicas);

} // namespace netkin
