#include "cestrade/stackelberg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "cestrade/errors.hpp"

namespace cestrade {

namespace {

void validate_start_profile(const Scenario& scenario, const StartProfile& h) {
  if (static_cast<int>(h.size()) != scenario.participant_count())
    throw std::invalid_argument("start profile length does not match participant count");
  for (int start : h)
    if (start < 1 || start > scenario.grid.slot_count)
      throw std::invalid_argument("start slot " + std::to_string(start) + " outside 1..K");
}

// Objective of one slot after maximizing the trading price at a fixed net
// battery flow z: a separable strictly concave quadratic A z^2 + B z + C,
// with the maximizing price recovered as a0 + a1 * z.
struct ReducedSlot {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double a0 = 0.0;
  double a1 = 0.0;
};

ReducedSlot reduce_slot(const LeaderSlotCoefficients& lc) {
  ReducedSlot r;
  if (lc.active == 0) {
    // Price is irrelevant without players; pin it to the tariff offset.
    r.a0 = lc.delta;
    r.a1 = 0.0;
    r.A = lc.lambda3;
    r.B = lc.lambda4;
    r.C = 0.0;
    return r;
  }
  const double u = lc.flow_a;
  const double w = lc.flow_lq;
  const double denom = 2.0 * (lc.lambda1 + lc.lambda3 * u * u / (w * w));
  r.a1 = (2.0 * lc.lambda3 * u / (w * w)) / denom;
  r.a0 = (-lc.lambda2 + (u / w) * lc.lambda4 - 2.0 * lc.lambda3 * (u / (w * w)) * lc.flow_const) /
         denom;
  const double l0 = (-lc.flow_const - u * r.a0) / w;
  const double l1 = (1.0 - u * r.a1) / w;
  r.A = lc.lambda1 * r.a1 * r.a1 + lc.lambda3 * l1 * l1;
  r.B = 2.0 * lc.lambda1 * r.a0 * r.a1 + lc.lambda2 * r.a1 + 2.0 * lc.lambda3 * l0 * l1 +
        lc.lambda4 * l1;
  r.C = lc.lambda1 * r.a0 * r.a0 + lc.lambda2 * r.a0 + lc.lambda3 * l0 * l0 + lc.lambda4 * l0;
  return r;
}

// Cumulative-charge coordinates: with P_t = sum_{m<=t} tau^-m psi_m the
// charge is q_t = tau^t (q0 + P_t), so capacity bounds become per-coordinate
// boxes and end-of-day continuity pins P_K. psi_t is the effective inflow
// beta+ z+ - beta- z- of the net flow z_t.
struct ChargeCoordinates {
  int slots = 0;
  BatteryParams battery;
  std::vector<double> tau_pow;  // tau^t for t = 0..K
  std::vector<double> lo, hi;   // boxes for P_1..P_{K-1} (index by t)
  double p_end = 0.0;           // fixed P_K

  double net_from_inflow(double psi) const {
    return psi >= 0.0 ? psi / battery.beta_plus : psi / battery.beta_minus;
  }
  double inflow_slope(double psi) const {
    return psi >= 0.0 ? 1.0 / battery.beta_plus : 1.0 / battery.beta_minus;
  }
  double net_at(const std::vector<double>& p, int t) const {  // t in 1..K
    return net_from_inflow(tau_pow[t] * (p[t] - p[t - 1]));
  }
};

ChargeCoordinates build_coordinates(const BatteryParams& battery, int slots) {
  ChargeCoordinates cc;
  cc.slots = slots;
  cc.battery = battery;
  cc.tau_pow.resize(slots + 1);
  cc.tau_pow[0] = 1.0;
  for (int t = 1; t <= slots; ++t) cc.tau_pow[t] = cc.tau_pow[t - 1] * battery.tau;
  if (cc.tau_pow[slots] < 1e-280)
    throw SolveError("battery leakage too aggressive for this horizon");

  // Slightly tightened bounds so recomputed trajectories stay inside the
  // reported feasibility window after round-off.
  const double q_lo = 2.0 * battery.lower_bound();
  const double q_hi = battery.capacity * (1.0 - 1e-12);
  if (!(q_lo < q_hi)) throw SolveError("battery charge window is empty");

  cc.lo.assign(slots, 0.0);
  cc.hi.assign(slots, 0.0);
  for (int t = 1; t < slots; ++t) {
    cc.lo[t] = q_lo / cc.tau_pow[t] - battery.q0;
    cc.hi[t] = q_hi / cc.tau_pow[t] - battery.q0;
  }
  cc.p_end = battery.q0 / cc.tau_pow[slots] - battery.q0;
  return cc;
}

double objective_of_flows(const std::vector<ReducedSlot>& reduced,
                          const ChargeCoordinates& cc, const std::vector<double>& p) {
  double value = 0.0;
  for (int t = 1; t <= cc.slots; ++t) {
    const double z = cc.net_at(p, t);
    const auto& r = reduced[t - 1];
    value += (r.A * z + r.B) * z + r.C;
  }
  return value;
}

std::vector<double> objective_gradient(const std::vector<ReducedSlot>& reduced,
                                       const ChargeCoordinates& cc,
                                       const std::vector<double>& p) {
  std::vector<double> grad(cc.slots, 0.0);  // index t = 1..K-1 used
  for (int t = 1; t < cc.slots; ++t) {
    const double psi_t = cc.tau_pow[t] * (p[t] - p[t - 1]);
    const double psi_next = cc.tau_pow[t + 1] * (p[t + 1] - p[t]);
    const double z_t = cc.net_from_inflow(psi_t);
    const double z_next = cc.net_from_inflow(psi_next);
    const auto& rt = reduced[t - 1];
    const auto& rn = reduced[t];
    grad[t] = (2.0 * rt.A * z_t + rt.B) * cc.inflow_slope(psi_t) * cc.tau_pow[t] -
              (2.0 * rn.A * z_next + rn.B) * cc.inflow_slope(psi_next) * cc.tau_pow[t + 1];
  }
  return grad;
}

// Exact maximization of a shift s applied to the coordinate block
// P[t1..t2]: flows strictly inside the block are unchanged, so only slots t1
// and t2+1 respond. Their joint restriction is piecewise quadratic in s with
// breakpoints where either flow changes sign; every piece vertex, breakpoint
// and interval end is a candidate. t1 == t2 is the single-coordinate move;
// longer blocks cross the sign-change ridges a single coordinate cannot.
double best_block_shift(const std::vector<ReducedSlot>& reduced, const ChargeCoordinates& cc,
                        const std::vector<double>& p, int t1, int t2) {
  const auto& ra = reduced[t1 - 1];
  const auto& rb = reduced[t2];
  const double base_a = p[t1] - p[t1 - 1];  // psi_t1 = tau^t1 * (base_a + s)
  const double base_b = p[t2 + 1] - p[t2];  // psi_{t2+1} = tau^{t2+1} * (base_b - s)

  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (int t = t1; t <= t2; ++t) {
    lo = std::max(lo, cc.lo[t] - p[t]);
    hi = std::min(hi, cc.hi[t] - p[t]);
  }
  if (!(lo <= hi)) return 0.0;

  auto local = [&](double s) {
    const double z1 = cc.net_from_inflow(cc.tau_pow[t1] * (base_a + s));
    const double z2 = cc.net_from_inflow(cc.tau_pow[t2 + 1] * (base_b - s));
    return (ra.A * z1 + ra.B) * z1 + (rb.A * z2 + rb.B) * z2;
  };

  std::vector<double> edges{lo, hi};
  if (-base_a > lo && -base_a < hi) edges.push_back(-base_a);  // first flow crosses zero
  if (base_b > lo && base_b < hi) edges.push_back(base_b);     // second flow crosses zero
  std::sort(edges.begin(), edges.end());

  std::vector<double> candidates = edges;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double s0 = edges[i], s1 = edges[i + 1];
    if (!(s1 > s0)) continue;
    const double mid = 0.5 * (s0 + s1);
    const double beta1 =
        (base_a + mid) >= 0.0 ? cc.battery.beta_plus : cc.battery.beta_minus;
    const double beta2 =
        (base_b - mid) >= 0.0 ? cc.battery.beta_plus : cc.battery.beta_minus;
    const double e1 = cc.tau_pow[t1] / beta1;        // z1 = e1 * s + e1 * base_a
    const double e2 = -cc.tau_pow[t2 + 1] / beta2;   // z2 = e2 * s + f2
    const double f1 = e1 * base_a;
    const double f2 = (cc.tau_pow[t2 + 1] / beta2) * base_b;
    const double q2 = ra.A * e1 * e1 + rb.A * e2 * e2;
    const double q1 =
        2.0 * ra.A * e1 * f1 + ra.B * e1 + 2.0 * rb.A * e2 * f2 + rb.B * e2;
    if (q2 < 0.0) candidates.push_back(std::clamp(-q1 / (2.0 * q2), s0, s1));
  }

  double best_s = 0.0;
  double best_v = local(0.0);
  for (double s : candidates) {
    const double v = local(s);
    if (v > best_v) {
      best_v = v;
      best_s = s;
    }
  }
  return std::clamp(best_s, lo, hi);
}

struct LambdaEvaluator {
  const std::vector<LeaderSlotCoefficients>* coeffs;
  double operator()(const CesStrategy& s) const {
    double value = 0.0;
    for (std::size_t t = 0; t < coeffs->size(); ++t) {
      const auto& lc = (*coeffs)[t];
      const double a = s.prices[t];
      const double lq = s.grid_trades[t];
      value += lc.lambda1 * a * a + lc.lambda2 * a + lc.lambda3 * lq * lq + lc.lambda4 * lq;
    }
    return value;
  }
};

CesStrategy strategy_from_coordinates(const std::vector<LeaderSlotCoefficients>& coeffs,
                                      const std::vector<ReducedSlot>& reduced,
                                      const ChargeCoordinates& cc,
                                      const std::vector<double>& p) {
  CesStrategy s;
  s.prices.resize(cc.slots);
  s.grid_trades.resize(cc.slots);
  for (int t = 1; t <= cc.slots; ++t) {
    const double z = cc.net_at(p, t);
    const auto& lc = coeffs[t - 1];
    const auto& r = reduced[t - 1];
    const double a = r.a0 + r.a1 * z;
    s.prices[t - 1] = a;
    s.grid_trades[t - 1] = lc.active == 0 ? z : (z - lc.flow_const - lc.flow_a * a) / lc.flow_lq;
  }
  return s;
}

double uniform_pm1(std::mt19937_64& rng) {
  // Platform-independent uniform in [-1, 1).
  return 2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0;
}

}  // namespace

std::vector<LeaderSlotCoefficients> leader_slot_coefficients(const Scenario& scenario,
                                                             const StartProfile& h) {
  validate_start_profile(scenario, h);
  const int K = scenario.grid.slot_count;
  std::vector<LeaderSlotCoefficients> coeffs(K);
  for (int t = 1; t <= K; ++t) {
    auto& lc = coeffs[t - 1];
    lc.phi = scenario.prices.phi[t - 1];
    lc.delta = scenario.prices.delta[t - 1];
    lc.background = scenario.nonparticipant_load[t - 1];
    for (int j = 0; j < scenario.participant_count(); ++j) {
      const auto& user = scenario.participant(j);
      if (h[j] <= t) {
        ++lc.active;
        lc.surplus_sum += surplus(user, t);
      } else {
        lc.background += user.demand[t - 1] - user.pv[t - 1];
      }
    }
    const double n = lc.active;
    const double share = n / (n + 1.0);
    lc.lambda1 = -share / lc.phi;
    lc.lambda2 = share * (lc.background + lc.delta / lc.phi) - lc.surplus_sum;
    lc.lambda3 = -lc.phi / (n + 1.0);
    lc.lambda4 = -(lc.phi * lc.background + lc.delta) / (n + 1.0);
    lc.flow_const = lc.surplus_sum - share * (lc.delta / lc.phi + lc.background);
    lc.flow_a = share / lc.phi;
    lc.flow_lq = 1.0 / (n + 1.0);
  }
  return coeffs;
}

SlotContext make_slot_context(const Scenario& scenario, const StartProfile& h, int t,
                              double price, double grid_trade) {
  validate_start_profile(scenario, h);
  SlotContext ctx;
  ctx.t = t;
  ctx.phi = scenario.prices.phi[t - 1];
  ctx.delta = scenario.prices.delta[t - 1];
  ctx.ces_price = price;
  ctx.operator_trade = grid_trade;
  ctx.background_load = scenario.nonparticipant_load[t - 1];
  for (int j = 0; j < scenario.participant_count(); ++j) {
    const auto& user = scenario.participant(j);
    if (h[j] <= t) {
      const double s = surplus(user, t);
      ctx.participants.push_back({user.id, s, trade_box(s)});
    } else {
      ctx.background_load += user.demand[t - 1] - user.pv[t - 1];
    }
  }
  return ctx;
}

std::vector<double> model_net_flows(const CesStrategy& strategy, const Scenario& scenario,
                                    const StartProfile& h) {
  const auto coeffs = leader_slot_coefficients(scenario, h);
  std::vector<double> net(coeffs.size());
  for (std::size_t t = 0; t < coeffs.size(); ++t) {
    const auto& lc = coeffs[t];
    net[t] = lc.flow_const + lc.flow_a * strategy.prices[t] + lc.flow_lq * strategy.grid_trades[t];
  }
  return net;
}

double leader_objective(const CesStrategy& strategy, const Scenario& scenario,
                        const StartProfile& h) {
  const auto coeffs = leader_slot_coefficients(scenario, h);
  const int K = scenario.grid.slot_count;
  if (static_cast<int>(strategy.prices.size()) != K ||
      static_cast<int>(strategy.grid_trades.size()) != K)
    throw std::invalid_argument("strategy vectors must have K entries");

  const double quadratic = LambdaEvaluator{&coeffs}(strategy);

  // Cross-check: direct revenue under the closed-form user response.
  double direct = 0.0;
  for (int t = 1; t <= K; ++t) {
    const auto ctx = make_slot_context(scenario, h, t, strategy.prices[t - 1],
                                       strategy.grid_trades[t - 1]);
    double traded = 0.0;
    double total_load = ctx.background_load + ctx.operator_trade;
    if (!ctx.participants.empty()) {
      const auto nash = nash_closed_form(ctx);
      for (double x : nash.x) traded += x;
      total_load = nash.total_load;
    }
    const double price = ctx.phi * total_load + ctx.delta;
    direct += -strategy.prices[t - 1] * traded - price * strategy.grid_trades[t - 1];
  }
  if (std::abs(quadratic - direct) > 1e-9 * (1.0 + std::abs(quadratic)))
    throw std::logic_error("leader objective forms disagree beyond tolerance");
  return quadratic;
}

CesStrategy solve_leader(const Scenario& scenario, const StartProfile& h,
                         const LeaderSolveOptions& options) {
  validate_start_profile(scenario, h);
  const int K = scenario.grid.slot_count;
  const auto coeffs = leader_slot_coefficients(scenario, h);
  std::vector<ReducedSlot> reduced(K);
  for (int t = 0; t < K; ++t) reduced[t] = reduce_slot(coeffs[t]);
  const auto cc = build_coordinates(scenario.battery, K);

  // Feasible start: the constant-inflow trajectory that compensates leakage.
  std::vector<double> p(K + 1, 0.0);
  const double psi0 = idle_compensation_inflow(scenario.battery, K);
  for (int t = 1; t <= K; ++t) p[t] = p[t - 1] + psi0 / cc.tau_pow[t];
  p[K] = cc.p_end;
  for (int t = 1; t < K; ++t) p[t] = std::clamp(p[t], cc.lo[t], cc.hi[t]);

  const auto clamp_free = [&](std::vector<double>& v) {
    for (int t = 1; t < K; ++t) v[t] = std::clamp(v[t], cc.lo[t], cc.hi[t]);
  };

  // Conservative inverse curvature for the initial step size.
  double curvature = 1e-12;
  for (int t = 1; t <= K; ++t) {
    const double slope = cc.tau_pow[t] / scenario.battery.beta_plus;
    curvature = std::max(curvature, 4.0 * std::abs(reduced[t - 1].A) * slope * slope);
  }
  const double step0 = 1.0 / curvature;

  std::mt19937_64 rng(options.certificate_seed);
  int restarts = 0;
  while (true) {
    // Projected gradient ascent with backtracking.
    if (K > 1) {
      double value = objective_of_flows(reduced, cc, p);
      int stalled = 0;
      for (int iter = 0; iter < options.max_gradient_steps; ++iter) {
        const auto grad = objective_gradient(reduced, cc, p);
        std::vector<double> trial = p;
        for (int t = 1; t < K; ++t) trial[t] = p[t] + step0 * grad[t];
        clamp_free(trial);
        double residual = 0.0;
        for (int t = 1; t < K; ++t)
          residual = std::max(residual, std::abs(trial[t] - p[t]) / step0);
        if (residual <= options.gradient_tolerance) break;

        double alpha = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 60 && !accepted; ++bt) {
          std::vector<double> candidate = p;
          for (int t = 1; t < K; ++t) candidate[t] = p[t] + alpha * step0 * grad[t];
          clamp_free(candidate);
          double directional = 0.0;
          for (int t = 1; t < K; ++t) directional += grad[t] * (candidate[t] - p[t]);
          const double candidate_value = objective_of_flows(reduced, cc, candidate);
          if (candidate_value >= value + 1e-4 * directional) {
            const double gain = candidate_value - value;
            p = std::move(candidate);
            value = candidate_value;
            accepted = true;
            stalled = gain <= 1e-15 * (1.0 + std::abs(value)) ? stalled + 1 : 0;
          } else {
            alpha *= 0.5;
          }
        }
        // Tiny or collapsed steps: the exact coordinate polisher finishes up.
        if (!accepted || stalled >= 3) break;
      }

      // Cyclic exact block maximization to squeeze out the remainder: all
      // contiguous coordinate blocks, so sign-change ridges between adjacent
      // slots cannot trap the iterate.
      double scale = 1.0;
      for (int t = 1; t < K; ++t) scale = std::max(scale, std::abs(p[t]));
      for (int sweep = 0; sweep < options.polish_sweeps; ++sweep) {
        double moved = 0.0;
        for (int t1 = 1; t1 < K; ++t1)
          for (int t2 = t1; t2 < K; ++t2) {
            const double shift = best_block_shift(reduced, cc, p, t1, t2);
            if (shift == 0.0) continue;
            for (int t = t1; t <= t2; ++t) p[t] += shift;
            moved = std::max(moved, std::abs(shift));
          }
        if (moved <= 1e-13 * scale) break;
      }
    }

    // Seeded perturbation certificate: accept only if no feasible nearby
    // strategy improves the objective beyond slack.
    CesStrategy current = strategy_from_coordinates(coeffs, reduced, cc, p);
    const double current_value = LambdaEvaluator{&coeffs}(current);
    bool improved = false;
    for (int sample = 0; sample < options.certificate_samples && !improved; ++sample) {
      std::vector<double> trial = p;
      for (int t = 1; t < K; ++t)
        trial[t] += options.certificate_step * (1.0 + std::abs(p[t])) * uniform_pm1(rng);
      clamp_free(trial);
      CesStrategy candidate = strategy_from_coordinates(coeffs, reduced, cc, trial);
      for (int t = 0; t < K; ++t)
        if (coeffs[t].active > 0) {
          const double da =
              options.certificate_step * (1.0 + std::abs(candidate.prices[t])) * uniform_pm1(rng);
          const double z = cc.net_at(trial, t + 1);
          candidate.prices[t] += da;
          candidate.grid_trades[t] =
              (z - coeffs[t].flow_const - coeffs[t].flow_a * candidate.prices[t]) /
              coeffs[t].flow_lq;
        }
      const double candidate_value = LambdaEvaluator{&coeffs}(candidate);
      if (candidate_value >
          current_value + options.certificate_slack * (1.0 + std::abs(current_value))) {
        p = std::move(trial);
        improved = true;
      }
    }
    if (!improved) return current;
    if (++restarts > options.max_restarts)
      throw SolveError("solve_leader: certificate kept finding improvements");
  }
}

StackelbergSolution solve_stackelberg(const Scenario& scenario, const StartProfile& h,
                                      const LeaderSolveOptions& options) {
  const int K = scenario.grid.slot_count;
  StackelbergSolution sol;
  sol.h = h;
  sol.strategy = solve_leader(scenario, h, options);

  const auto target_net = model_net_flows(sol.strategy, scenario, h);

  auto solve_slot = [&](int t, double lq) {
    const auto ctx = make_slot_context(scenario, h, t, sol.strategy.prices[t - 1], lq);
    SlotNash nash;
    if (!ctx.participants.empty()) {
      nash = project_nash(ctx);
    } else {
      nash.total_load = ctx.background_load + ctx.operator_trade;
      nash.price = ctx.phi * nash.total_load + ctx.delta;
    }
    return nash;
  };
  auto realized_net = [](const SlotNash& nash, double lq) {
    double net = lq;
    for (double x : nash.x) net += x;
    return net;
  };

  sol.slots.resize(K);
  std::vector<double> net(K, 0.0);
  for (int t = 1; t <= K; ++t) {
    sol.slots[t - 1] = solve_slot(t, sol.strategy.grid_trades[t - 1]);
    net[t - 1] = realized_net(sol.slots[t - 1], sol.strategy.grid_trades[t - 1]);
  }

  // Box clipping can move the realized flows off the solved trajectory. When
  // it does, re-fit each slot's grid trade so the realized net flow matches
  // the solved one; the realized net flow is strictly increasing in the grid
  // trade, so bisection is safe.
  ChargeTrajectory trajectory = split_flows(scenario.battery, net);
  if (!check_feasible(scenario.battery, trajectory).feasible) {
    sol.repaired = true;
    for (int t = 1; t <= K; ++t) {
      const double target = target_net[t - 1];
      if (std::abs(net[t - 1] - target) <= 1e-12 * (1.0 + std::abs(target))) continue;
      const int players = static_cast<int>(sol.slots[t - 1].x.size());
      const double gap = std::abs(net[t - 1] - target);
      double lo = sol.strategy.grid_trades[t - 1] - (players + 1) * gap - 1.0;
      double hi = sol.strategy.grid_trades[t - 1] + (players + 1) * gap + 1.0;
      for (int iter = 0; iter < 100; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const auto nash = solve_slot(t, mid);
        if (realized_net(nash, mid) < target)
          lo = mid;
        else
          hi = mid;
      }
      sol.strategy.grid_trades[t - 1] = 0.5 * (lo + hi);
      sol.slots[t - 1] = solve_slot(t, sol.strategy.grid_trades[t - 1]);
      net[t - 1] = realized_net(sol.slots[t - 1], sol.strategy.grid_trades[t - 1]);
    }
    trajectory = split_flows(scenario.battery, net);
    if (!check_feasible(scenario.battery, trajectory).feasible)
      throw SolveError("solve_stackelberg: blocked follower response defeats battery repair");
  }
  sol.trajectory = std::move(trajectory);

  // Assemble realized trades, loads, costs and revenue over all slots.
  const int participants = scenario.participant_count();
  sol.user_trades.assign(participants, std::vector<double>(K, 0.0));
  sol.user_loads.assign(participants, std::vector<double>(K, 0.0));
  for (int j = 0; j < participants; ++j) sol.daily_costs[scenario.participant_ids[j]] = 0.0;

  for (int t = 1; t <= K; ++t) {
    const auto& nash = sol.slots[t - 1];
    sol.any_projected = sol.any_projected || nash.projected;
    const double price = nash.price;
    std::size_t active_index = 0;
    for (int j = 0; j < participants; ++j) {
      const auto& user = scenario.participant(j);
      double x = 0.0;
      double load;
      if (h[j] <= t) {
        x = nash.x.at(active_index);
        load = nash.grid_loads.at(active_index);
        ++active_index;
      } else {
        load = user.demand[t - 1] - user.pv[t - 1];
      }
      sol.user_trades[j][t - 1] = x;
      sol.user_loads[j][t - 1] = load;
      sol.daily_costs[user.id] += price * load - sol.strategy.prices[t - 1] * x;
    }
    double traded = 0.0;
    for (double x : nash.x) traded += x;
    sol.revenue += -sol.strategy.prices[t - 1] * traded - price * sol.strategy.grid_trades[t - 1];
  }
  sol.model_objective = leader_objective(sol.strategy, scenario, h);
  return sol;
}

double revenue(const StackelbergSolution& solution) {
  double total = 0.0;
  const int K = static_cast<int>(solution.strategy.prices.size());
  for (int t = 0; t < K; ++t) {
    double traded = 0.0;
    for (const auto& row : solution.user_trades) traded += row[t];
    total += -solution.strategy.prices[t] * traded -
             solution.slots[t].price * solution.strategy.grid_trades[t];
  }
  return total;
}

double daily_cost(const StackelbergSolution& solution, int participant_id) {
  const auto it = solution.daily_costs.find(participant_id);
  if (it == solution.daily_costs.end())
    throw std::out_of_range("unknown participant id " + std::to_string(participant_id));
  // daily_costs is keyed by ascending id, matching the row order of the
  // per-participant matrices.
  const auto j = static_cast<std::size_t>(std::distance(solution.daily_costs.begin(), it));
  double total = 0.0;
  const int K = static_cast<int>(solution.strategy.prices.size());
  for (int t = 0; t < K; ++t)
    total += solution.slots[t].price * solution.user_loads[j][t] -
             solution.strategy.prices[t] * solution.user_trades[j][t];
  return total;
}

}  // namespace cestrade
