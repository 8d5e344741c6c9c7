#include "cestrade/storage.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cestrade {

KappaGamma build_kappa_gamma(double tau, int slot_count) {
  if (slot_count < 1) throw std::invalid_argument("build_kappa_gamma: slot_count must be >= 1");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("build_kappa_gamma: tau must be in (0,1]");
  KappaGamma kg;
  kg.kappa.resize(slot_count);
  kg.gamma.assign(slot_count, std::vector<double>(slot_count, 0.0));
  for (int l = 1; l <= slot_count; ++l) {
    kg.kappa[l - 1] = std::pow(tau, l);
    for (int m = 1; m <= l; ++m) {
      kg.gamma[l - 1][m - 1] = std::pow(tau, l - m);
    }
  }
  return kg;
}

std::vector<double> charge_trajectory(const BatteryParams& params,
                                      const std::vector<double>& lplus,
                                      const std::vector<double>& lminus) {
  if (lplus.size() != lminus.size())
    throw std::invalid_argument("charge_trajectory: flow vectors differ in length");
  std::vector<double> q(lplus.size());
  double level = params.q0;
  for (std::size_t t = 0; t < lplus.size(); ++t) {
    level = params.tau * level + params.beta_plus * lplus[t] - params.beta_minus * lminus[t];
    q[t] = level;
  }
  return q;
}

FeasibilityReport check_feasible(const BatteryParams& params,
                                 const ChargeTrajectory& trajectory,
                                 double continuity_tol,
                                 double lower_bound) {
  FeasibilityReport report;
  report.lower_bound = lower_bound;
  report.continuity_tolerance = continuity_tol;
  for (std::size_t t = 0; t < trajectory.q.size(); ++t) {
    const double q = trajectory.q[t];
    if (q < lower_bound) {
      report.capacity_violations.push_back({static_cast<int>(t + 1), q, lower_bound});
    } else if (q > params.capacity) {
      report.capacity_violations.push_back({static_cast<int>(t + 1), q, params.capacity});
    }
  }
  const double q_end = trajectory.q.empty() ? params.q0 : trajectory.q.back();
  report.continuity_residual = std::abs(q_end - params.q0);
  report.continuity_ok = report.continuity_residual <= continuity_tol;
  report.feasible = report.capacity_violations.empty() && report.continuity_ok;
  return report;
}

FeasibilityReport check_feasible(const BatteryParams& params,
                                 const ChargeTrajectory& trajectory) {
  return check_feasible(params, trajectory, params.continuity_tolerance(),
                        params.lower_bound());
}

ChargeTrajectory split_flows(const BatteryParams& params,
                             const std::vector<double>& net) {
  ChargeTrajectory traj;
  traj.lplus.resize(net.size());
  traj.lminus.resize(net.size());
  for (std::size_t t = 0; t < net.size(); ++t) {
    traj.lplus[t] = std::max(net[t], 0.0);
    traj.lminus[t] = std::max(-net[t], 0.0);
  }
  traj.q = charge_trajectory(params, traj.lplus, traj.lminus);
  return traj;
}

double idle_compensation_inflow(const BatteryParams& params, int slot_count) {
  // Solve q_K = q0 for a constant effective inflow psi:
  //   tau^K q0 + psi * sum_m tau^(K-m) = q0.
  double weight = 0.0;
  for (int m = 1; m <= slot_count; ++m) weight += std::pow(params.tau, slot_count - m);
  const double loss = params.q0 * (1.0 - std::pow(params.tau, slot_count));
  return loss / weight;
}

bool idle_compensation_feasible(const BatteryParams& params, int slot_count) {
  const double psi = idle_compensation_inflow(params, slot_count);
  double level = params.q0;
  for (int t = 0; t < slot_count; ++t) {
    level = params.tau * level + psi;
    if (level < params.lower_bound() || level > params.capacity) return false;
  }
  return true;
}

}  // namespace cestrade
