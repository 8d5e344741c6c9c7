#pragma once

// Single-slot non-cooperative game among the active participants: each user
// picks a battery trade inside its surplus box to minimize its own energy
// cost under the load-dependent grid tariff and the operator's posted price.

#include <span>
#include <vector>

#include "cestrade/scenario.hpp"

namespace cestrade {

struct SlotParticipant {
  int id = 0;
  double surplus = 0.0;  // s_{n,t} = pv - demand at this slot
  TradeBox box;          // admissible trade range
};

struct SlotContext {
  int t = 1;                    // 1-based slot index
  double phi = 0.0;             // quadratic tariff coefficient, > 0
  double delta = 0.0;           // tariff offset
  double ces_price = 0.0;       // operator's unit trading price a_t
  double operator_trade = 0.0;  // operator's grid trade l_Q,t
  double background_load = 0.0; // grid load of everyone outside the game
  std::vector<SlotParticipant> participants;  // active players only

  int player_count() const { return static_cast<int>(participants.size()); }
};

// One slot's equilibrium. `x` and `grid_loads` align with ctx.participants.
struct SlotNash {
  std::vector<double> x;
  std::vector<double> grid_loads;  // l_n = x_n - s_n
  double gamma = 0.0;              // common shift of the closed-form solution
  double total_load = 0.0;         // L_t including background and operator trade
  double price = 0.0;              // p_t = phi * L_t + delta
  bool projected = false;          // true when box clipping was required
};

// Coefficients of the user's cost as a quadratic w1*x^2 + w2*x + w3 in its
// own trade, with the other players' trades held fixed.
struct QuadCoeffs {
  double w1 = 0.0;
  double w2 = 0.0;
  double w3 = 0.0;
  double eval(double x) const { return (w1 * x + w2) * x + w3; }
};

// Cost of participant k trading x_k while the others trade x_profile[j]
// (entry k of x_profile is ignored). Direct tariff evaluation.
double user_cost(const SlotContext& ctx, std::size_t k, double x_k,
                 std::span<const double> x_profile);

QuadCoeffs cost_coefficients(const SlotContext& ctx, std::size_t k,
                             std::span<const double> x_profile);

// Simultaneous stationary point of all players' costs; valid for a single
// player as well. Ignores the trade boxes. Throws std::invalid_argument when
// there are no active players.
SlotNash nash_closed_form(const SlotContext& ctx);

// Box-constrained equilibrium: returns the closed form when it is already
// inside every box, otherwise runs cyclic best response with clipping to a
// fixed point (marked projected = true).
SlotNash project_nash(const SlotContext& ctx);

struct DeviationScan {
  double max_improvement = 0.0;  // largest unilateral cost decrease found
  int worst_participant = -1;    // index into ctx.participants, -1 if none
  bool accepted = true;          // improvement within tolerance for every user
};

// Scans each user's box on a uniform grid (bounds included) for a profitable
// unilateral deviation from `solution`. Equilibrium is accepted when every
// user's best improvement is <= 1e-6 * (1 + |cost|).
DeviationScan verify_nash(const SlotNash& solution, const SlotContext& ctx,
                          int grid_points);

}  // namespace cestrade
