#include "cestrade/slot_game.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cestrade/errors.hpp"

namespace cestrade {

namespace {

// Total grid load of everyone except player k, given the others' trades.
double load_excluding(const SlotContext& ctx, std::size_t k,
                      std::span<const double> x_profile) {
  double load = ctx.background_load + ctx.operator_trade;
  for (std::size_t j = 0; j < ctx.participants.size(); ++j) {
    if (j == k) continue;
    load += x_profile[j] - ctx.participants[j].surplus;
  }
  return load;
}

void finalize(const SlotContext& ctx, SlotNash& nash) {
  nash.grid_loads.resize(nash.x.size());
  nash.total_load = ctx.background_load + ctx.operator_trade;
  for (std::size_t j = 0; j < nash.x.size(); ++j) {
    nash.grid_loads[j] = nash.x[j] - ctx.participants[j].surplus;
    nash.total_load += nash.grid_loads[j];
  }
  nash.price = ctx.phi * nash.total_load + ctx.delta;
}

}  // namespace

double user_cost(const SlotContext& ctx, std::size_t k, double x_k,
                 std::span<const double> x_profile) {
  const double l_k = x_k - ctx.participants.at(k).surplus;
  const double total = load_excluding(ctx, k, x_profile) + l_k;
  const double price = ctx.phi * total + ctx.delta;
  return price * l_k - ctx.ces_price * x_k;
}

QuadCoeffs cost_coefficients(const SlotContext& ctx, std::size_t k,
                             std::span<const double> x_profile) {
  const double s = ctx.participants.at(k).surplus;
  const double other_load = load_excluding(ctx, k, x_profile);
  QuadCoeffs c;
  c.w1 = ctx.phi;
  c.w2 = ctx.phi * (other_load - 2.0 * s) + ctx.delta - ctx.ces_price;
  c.w3 = ctx.phi * s * (s - other_load) - ctx.delta * s;
  return c;
}

SlotNash nash_closed_form(const SlotContext& ctx) {
  const int n = ctx.player_count();
  if (n == 0) throw std::invalid_argument("nash_closed_form: no active participants");
  SlotNash nash;
  nash.gamma = ((ctx.ces_price - ctx.delta) / ctx.phi - ctx.background_load -
                ctx.operator_trade) /
               (n + 1);
  nash.x.resize(n);
  for (int j = 0; j < n; ++j) nash.x[j] = ctx.participants[j].surplus + nash.gamma;
  finalize(ctx, nash);
  return nash;
}

SlotNash project_nash(const SlotContext& ctx) {
  constexpr double kTol = 1e-10;
  constexpr int kMaxSweeps = 10000;

  SlotNash nash = nash_closed_form(ctx);
  bool in_box = true;
  for (std::size_t j = 0; j < nash.x.size(); ++j)
    in_box = in_box && ctx.participants[j].box.contains(nash.x[j]);
  if (in_box) return nash;

  for (std::size_t j = 0; j < nash.x.size(); ++j)
    nash.x[j] = ctx.participants[j].box.clamp(nash.x[j]);

  // Cyclic best response with clipping. Each step solves a 1-D quadratic
  // over an interval, so the sweep monotonically decreases a shared
  // potential and converges for any phi > 0.
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double max_change = 0.0;
    for (std::size_t k = 0; k < nash.x.size(); ++k) {
      const auto& player = ctx.participants[k];
      const double other_load = load_excluding(ctx, k, nash.x);
      const double unconstrained =
          player.surplus + (ctx.ces_price - ctx.delta - ctx.phi * other_load) / (2.0 * ctx.phi);
      const double clipped = player.box.clamp(unconstrained);
      max_change = std::max(max_change, std::abs(clipped - nash.x[k]));
      nash.x[k] = clipped;
    }
    if (max_change <= kTol) {
      nash.projected = true;
      finalize(ctx, nash);
      return nash;
    }
  }
  throw SolveError("project_nash: best-response sweep did not converge");
}

DeviationScan verify_nash(const SlotNash& solution, const SlotContext& ctx,
                          int grid_points) {
  if (grid_points < 3) throw std::invalid_argument("verify_nash: grid_points must be >= 3");
  DeviationScan scan;
  for (std::size_t k = 0; k < ctx.participants.size(); ++k) {
    const auto& box = ctx.participants[k].box;
    const double current = user_cost(ctx, k, solution.x[k], solution.x);
    double best = current;
    for (int g = 0; g < grid_points; ++g) {
      const double x = box.lo + (box.hi - box.lo) * g / (grid_points - 1);
      best = std::min(best, user_cost(ctx, k, x, solution.x));
    }
    const double improvement = current - best;
    if (improvement > scan.max_improvement) {
      scan.max_improvement = improvement;
      scan.worst_participant = static_cast<int>(k);
    }
    if (improvement > 1e-6 * (1.0 + std::abs(current))) scan.accepted = false;
  }
  return scan;
}

}  // namespace cestrade
