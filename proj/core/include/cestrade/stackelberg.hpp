#pragma once

// Leader-side optimization and full bilevel equilibrium assembly for a fixed
// participation profile: the storage operator picks per-slot trading prices
// and grid trades to maximize revenue against the users' slot equilibria,
// subject to the battery's capacity and end-of-day continuity constraints.

#include <cstdint>
#include <map>
#include <vector>

#include "cestrade/scenario.hpp"
#include "cestrade/slot_game.hpp"
#include "cestrade/storage.hpp"

namespace cestrade {

struct CesStrategy {
  std::vector<double> prices;       // a_t, $/kWh
  std::vector<double> grid_trades;  // l_Q,t, kWh
};

struct StackelbergSolution {
  CesStrategy strategy;  // as realized (after feasibility repair, if any)
  StartProfile h;
  std::vector<SlotNash> slots;               // per-slot outcomes; empty game when no one is active
  std::vector<std::vector<double>> user_trades;  // [participant][slot], 0 before the start slot
  std::vector<std::vector<double>> user_loads;   // [participant][slot] grid loads
  ChargeTrajectory trajectory;
  double revenue = 0.0;                 // realized operator revenue
  std::map<int, double> daily_costs;    // participant id -> realized daily cost
  double model_objective = 0.0;         // quadratic objective at the emitted strategy
  bool any_projected = false;           // some slot needed box clipping
  bool repaired = false;                // grid trades adjusted to restore battery feasibility
};

struct LeaderSolveOptions {
  int max_gradient_steps = 10000;
  double gradient_tolerance = 1e-8;
  int polish_sweeps = 500;
  int certificate_samples = 200;
  double certificate_step = 1e-3;
  double certificate_slack = 1e-8;  // relative improvement tolerated
  std::uint64_t certificate_seed = 0x0ce5u;
  int max_restarts = 50;
};

// Per-slot coefficients of the operator's quadratic objective
//   lambda1 a^2 + lambda2 a + lambda3 lq^2 + lambda4 lq
// and of the induced net battery flow z = flow_const + flow_a * a + flow_lq * lq
// under the users' closed-form slot response.
struct LeaderSlotCoefficients {
  int active = 0;          // players in the slot game
  double phi = 0.0;
  double delta = 0.0;
  double background = 0.0; // grid load outside the game (incl. inactive participants)
  double surplus_sum = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  double lambda4 = 0.0;
  double flow_const = 0.0;
  double flow_a = 0.0;
  double flow_lq = 0.0;
};

std::vector<LeaderSlotCoefficients> leader_slot_coefficients(const Scenario& scenario,
                                                             const StartProfile& h);

// Slot-game context induced by the operator's broadcast at slot t (1-based).
// Users who have not reached their start slot contribute their net demand to
// the background load.
SlotContext make_slot_context(const Scenario& scenario, const StartProfile& h, int t,
                              double price, double grid_trade);

// Operator objective under the closed-form (unclipped) user response.
// Evaluates both the quadratic form and the direct revenue substitution and
// cross-checks them to 1e-9 relative.
double leader_objective(const CesStrategy& strategy, const Scenario& scenario,
                        const StartProfile& h);

// Net battery flow per slot implied by the closed-form user response.
std::vector<double> model_net_flows(const CesStrategy& strategy, const Scenario& scenario,
                                    const StartProfile& h);

// Maximizes the operator objective subject to battery capacity and
// continuity. Deterministic; the returned strategy carries a seeded
// random-perturbation optimality certificate.
CesStrategy solve_leader(const Scenario& scenario, const StartProfile& h,
                         const LeaderSolveOptions& options = {});

// Full bilevel solve: optimal leader strategy, box-constrained slot equilibria,
// battery trajectory, realized revenue and per-user daily costs. When box
// clipping shifts realized flows off the solved trajectory, grid trades are
// re-fitted slot by slot to restore battery feasibility (flagged `repaired`).
StackelbergSolution solve_stackelberg(const Scenario& scenario, const StartProfile& h,
                                      const LeaderSolveOptions& options = {});

// Accessors recomputing from slot data; they agree with the stored fields to
// 1e-12. daily_cost throws std::out_of_range for an unknown participant id.
double revenue(const StackelbergSolution& solution);
double daily_cost(const StackelbergSolution& solution, int participant_id);

}  // namespace cestrade
