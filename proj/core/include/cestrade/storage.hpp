#pragma once

// Community battery model: leakage/efficiency charge dynamics and the
// capacity/continuity feasibility checks used by the operator's dispatch.

#include <cstddef>
#include <vector>

namespace cestrade {

struct BatteryParams {
  double capacity = 0.0;    // B, kWh
  double q0 = 0.0;          // charge at start of day, kWh
  double tau = 1.0;         // per-slot retention fraction, (0,1]
  double beta_plus = 1.0;   // charging efficiency, (0,1]
  double beta_minus = 1.0;  // discharging efficiency, >= 1

  // Strict positivity "0 < q" is enforced numerically as q >= lower_bound().
  double lower_bound() const { return 1e-9 * capacity; }
  double continuity_tolerance() const { return 1e-6 * capacity; }
};

// Aggregate battery flows and the resulting charge trajectory.
// lplus/lminus are the per-slot charging/discharging energies (both >= 0,
// never simultaneously positive), q the end-of-slot charge levels.
struct ChargeTrajectory {
  std::vector<double> q;
  std::vector<double> lplus;
  std::vector<double> lminus;
};

struct CapacityViolation {
  int slot = 0;  // 1-based
  double q = 0.0;
  double bound = 0.0;  // the bound breached
};

struct FeasibilityReport {
  bool feasible = true;
  std::vector<CapacityViolation> capacity_violations;
  double continuity_residual = 0.0;  // |q_K - q0|
  bool continuity_ok = true;
  double lower_bound = 0.0;
  double continuity_tolerance = 0.0;
};

// kappa[l-1] = tau^l; gamma is KxK lower triangular with gamma[l][m] = tau^(l-m).
// Together they give the closed matrix form of the charge recursion:
//   q = q0 * kappa + gamma * (beta_plus * lplus - beta_minus * lminus).
struct KappaGamma {
  std::vector<double> kappa;
  std::vector<std::vector<double>> gamma;
};

KappaGamma build_kappa_gamma(double tau, int slot_count);

// q_t = tau * q_{t-1} + beta_plus * lplus_t - beta_minus * lminus_t, q_0 given.
std::vector<double> charge_trajectory(const BatteryParams& params,
                                      const std::vector<double>& lplus,
                                      const std::vector<double>& lminus);

// Reports violations of lower_bound <= q_t <= capacity and of the end-of-day
// continuity requirement |q_K - q0| <= continuity_tol. Non-throwing.
FeasibilityReport check_feasible(const BatteryParams& params,
                                 const ChargeTrajectory& trajectory,
                                 double continuity_tol,
                                 double lower_bound);

FeasibilityReport check_feasible(const BatteryParams& params,
                                 const ChargeTrajectory& trajectory);

// Sign decomposition of a net flow series: lplus_t = max(net_t, 0),
// lminus_t = max(-net_t, 0). Exactly one of the pair is nonzero per slot.
ChargeTrajectory split_flows(const BatteryParams& params,
                             const std::vector<double>& net);

// Constant per-slot effective inflow that restores q_K = q0 when the battery
// is otherwise idle (compensates leakage). Zero when tau == 1.
double idle_compensation_inflow(const BatteryParams& params, int slot_count);

// Whether the leakage-compensation trajectory stays within the charge bounds.
bool idle_compensation_feasible(const BatteryParams& params, int slot_count);

}  // namespace cestrade
