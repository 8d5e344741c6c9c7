#include "cestrade/participation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

#include "cestrade/errors.hpp"

namespace cestrade {

namespace {

constexpr std::size_t kMaxTableSize = 1000000;

void validate_mixed_profile(const MixedProfile& y, const CostTable& table) {
  if (static_cast<int>(y.y.size()) != table.participants())
    throw std::invalid_argument("mixed profile has wrong participant count");
  for (int n = 0; n < table.participants(); ++n) {
    const auto& yn = y.y[n];
    if (yn.size() != table.action_sets()[n].size())
      throw std::invalid_argument("mixed profile row has wrong action count");
    double sum = 0.0;
    for (double v : yn) {
      if (v < -1e-12 || v > 1.0 + 1e-12)
        throw std::invalid_argument("mixed profile probability outside [0,1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("mixed profile row does not sum to 1");
  }
}

// Opponent-probability factors per (participant, action): plain probabilities
// for the objective model, Prelec-weighted through the evaluator's alpha for
// the prospect-theoretic one.
std::vector<std::vector<double>> opponent_weights(const MixedProfile& y, BehaviorModel model,
                                                  double alpha) {
  if (model == BehaviorModel::kEut || alpha == 1.0) return y.y;
  std::vector<std::vector<double>> w = y.y;
  for (auto& row : w)
    for (double& v : row) v = prelec_weight(std::clamp(v, 0.0, 1.0), alpha);
  return w;
}

// Expected cost of each pure start choice of `participant` against the other
// players' (possibly weighted) mixed strategies: one pass over the table.
std::vector<double> response_costs(int participant, const MixedProfile& y,
                                   const CostTable& table, BehaviorModel model,
                                   const PTParams& pt) {
  validate_mixed_profile(y, table);
  const double alpha = model == BehaviorModel::kPt ? pt.alpha.at(participant) : 1.0;
  const auto weights = opponent_weights(y, model, alpha);
  const auto& actions = table.action_sets()[participant];
  std::vector<double> costs(actions.size(), 0.0);
  for (std::size_t idx = 0; idx < table.size(); ++idx) {
    const auto h = table.profile_at(idx);
    double factor = 1.0;
    int own_action = 0;
    for (int r = 0; r < table.participants(); ++r) {
      const int ai = table.action_index(r, h[r]);
      if (r == participant)
        own_action = ai;
      else
        factor *= weights[r][ai];
    }
    costs[own_action] += factor * table.entry_at(idx).user_costs[participant];
  }
  return costs;
}

double profile_probability(const MixedProfile& y, const CostTable& table,
                           const StartProfile& h) {
  double prob = 1.0;
  for (int r = 0; r < table.participants(); ++r)
    prob *= y.y[r][table.action_index(r, h[r])];
  return prob;
}

int env_worker_count() {
  if (const char* env = std::getenv("CESTRADE_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace

CostTable::CostTable(std::vector<std::vector<int>> action_sets,
                     std::vector<CostTableEntry> entries)
    : action_sets_(std::move(action_sets)), entries_(std::move(entries)) {
  strides_.assign(action_sets_.size(), 1);
  std::size_t expected = 1;
  for (int n = static_cast<int>(action_sets_.size()) - 1; n >= 0; --n) {
    strides_[n] = expected;
    expected *= action_sets_[n].size();
  }
  if (entries_.size() != expected)
    throw std::invalid_argument("cost table entry count does not match the action space");
}

std::size_t CostTable::index_of(const StartProfile& h) const {
  if (h.size() != action_sets_.size())
    throw std::invalid_argument("start profile has wrong participant count");
  std::size_t index = 0;
  for (std::size_t n = 0; n < h.size(); ++n) {
    const int ai = action_index(static_cast<int>(n), h[n]);
    if (ai < 0)
      throw std::invalid_argument("start slot " + std::to_string(h[n]) +
                                  " not available to participant " + std::to_string(n + 1));
    index += strides_[n] * static_cast<std::size_t>(ai);
  }
  return index;
}

StartProfile CostTable::profile_at(std::size_t index) const {
  StartProfile h(action_sets_.size());
  for (std::size_t n = 0; n < action_sets_.size(); ++n)
    h[n] = action_sets_[n][(index / strides_[n]) % action_sets_[n].size()];
  return h;
}

int CostTable::action_index(int participant, int start_slot) const {
  const auto& actions = action_sets_.at(participant);
  const auto it = std::lower_bound(actions.begin(), actions.end(), start_slot);
  if (it == actions.end() || *it != start_slot) return -1;
  return static_cast<int>(it - actions.begin());
}

CostTable build_cost_table(const Scenario& scenario, const LeaderSolveOptions& options,
                           int workers) {
  std::vector<std::vector<int>> action_sets;
  std::size_t total = 1;
  for (int j = 0; j < scenario.participant_count(); ++j) {
    action_sets.push_back(scenario.participant(j).allowed_starts);
    total *= action_sets.back().size();
    if (total > kMaxTableSize)
      throw std::invalid_argument("joint action space exceeds the enumeration guard");
  }

  std::vector<CostTableEntry> entries(total);
  CostTable table(action_sets, std::move(entries));

  std::vector<CostTableEntry> results(total);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::string first_error;

  auto work = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= total) return;
      const auto h = table.profile_at(idx);
      try {
        const auto solution = solve_stackelberg(scenario, h, options);
        CostTableEntry entry;
        for (int j = 0; j < scenario.participant_count(); ++j)
          entry.user_costs.push_back(solution.daily_costs.at(scenario.participant_ids[j]));
        entry.revenue = solution.revenue;
        entry.load.resize(scenario.grid.slot_count);
        for (int t = 0; t < scenario.grid.slot_count; ++t)
          entry.load[t] = solution.slots[t].total_load;
        entry.par = peak_to_average(entry.load);
        results[idx] = std::move(entry);
      } catch (const std::exception& e) {
        std::scoped_lock lock(error_mutex);
        if (first_error.empty()) {
          std::string joint = "(";
          for (std::size_t j = 0; j < h.size(); ++j)
            joint += (j ? "," : "") + std::to_string(h[j]);
          joint += ")";
          first_error = "cost table solve failed at profile " + joint + ": " + e.what();
        }
        return;
      }
    }
  };

  int n_workers = workers > 0 ? workers : env_worker_count();
  n_workers = std::min<std::size_t>(n_workers, total);
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (!first_error.empty()) throw SolveError(first_error);
  return CostTable(std::move(action_sets), std::move(results));
}

MixedProfile uniform_profile(const CostTable& table) {
  MixedProfile y;
  for (const auto& actions : table.action_sets())
    y.y.emplace_back(actions.size(), 1.0 / actions.size());
  return y;
}

double prelec_weight(double y, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("prelec_weight: alpha must be in (0,1]");
  if (y < 0.0 || y > 1.0) throw std::invalid_argument("prelec_weight: probability outside [0,1]");
  if (alpha == 1.0) return y;  // exact identity, not just a numeric limit
  if (y == 0.0) return 0.0;
  if (y == 1.0) return 1.0;
  return std::exp(-std::pow(-std::log(y), alpha));
}

double eut_expected_cost(int participant, const MixedProfile& y, const CostTable& table) {
  validate_mixed_profile(y, table);
  double total = 0.0;
  for (std::size_t idx = 0; idx < table.size(); ++idx)
    total += table.entry_at(idx).user_costs.at(participant) *
             profile_probability(y, table, table.profile_at(idx));
  return total;
}

double pt_expected_cost(int participant, const MixedProfile& y, const CostTable& table,
                        const PTParams& pt) {
  const auto costs = response_costs(participant, y, table, BehaviorModel::kPt, pt);
  double total = 0.0;
  for (std::size_t a = 0; a < costs.size(); ++a) total += y.y[participant][a] * costs[a];
  return total;
}

double pure_response_cost(int participant, int start_slot, const MixedProfile& y,
                          const CostTable& table, BehaviorModel model, const PTParams& pt) {
  const int ai = table.action_index(participant, start_slot);
  if (ai < 0)
    throw std::invalid_argument("start slot " + std::to_string(start_slot) +
                                " not available to participant " + std::to_string(participant + 1));
  return response_costs(participant, y, table, model, pt)[ai];
}

std::vector<double> best_response_indicator(int participant, const MixedProfile& y,
                                            const CostTable& table, BehaviorModel model,
                                            const PTParams& pt) {
  const auto costs = response_costs(participant, y, table, model, pt);
  std::size_t best = 0;  // scan order is ascending start slot, so ties pick the earliest
  for (std::size_t a = 1; a < costs.size(); ++a)
    if (costs[a] < costs[best]) best = a;
  std::vector<double> v(costs.size(), 0.0);
  v[best] = 1.0;
  return v;
}

MixedProfile fictitious_step(const MixedProfile& y, int iteration, double eta,
                             const CostTable& table, BehaviorModel model, const PTParams& pt) {
  if (iteration < 1) throw std::invalid_argument("fictitious_step: iteration must be >= 1");
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("fictitious_step: eta must be in (0,1)");
  MixedProfile next = y;
  const double step = eta / iteration;
  for (int n = 0; n < table.participants(); ++n) {
    const auto v = best_response_indicator(n, y, table, model, pt);
    for (std::size_t a = 0; a < v.size(); ++a)
      next.y[n][a] = y.y[n][a] + step * (v[a] - y.y[n][a]);
  }
  return next;
}

EpsilonCheck check_epsilon_nash(const MixedProfile& y, const CostTable& table,
                                BehaviorModel model, const PTParams& pt, double eps) {
  EpsilonCheck check;
  for (int n = 0; n < table.participants(); ++n) {
    const auto costs = response_costs(n, y, table, model, pt);
    double current = 0.0;
    double best = costs[0];
    for (std::size_t a = 0; a < costs.size(); ++a) {
      current += y.y[n][a] * costs[a];
      best = std::min(best, costs[a]);
    }
    check.worst_deviation = std::max(check.worst_deviation, current - best);
  }
  check.is_epsilon_nash = check.worst_deviation <= eps;
  return check;
}

DynamicsResult run_dynamics(const CostTable& table, BehaviorModel model, const PTParams& pt,
                            double eta, const MixedProfile& y0, int max_iter, double eps) {
  validate_mixed_profile(y0, table);
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("run_dynamics: eta must be in (0,1)");
  if (model == BehaviorModel::kPt &&
      static_cast<int>(pt.alpha.size()) != table.participants())
    throw std::invalid_argument("run_dynamics: alpha count does not match participants");

  DynamicsResult result;
  result.trace.eta = eta;
  MixedProfile y = y0;

  MixedProfile best_profile = y;
  double best_eps = std::numeric_limits<double>::infinity();

  for (int i = 1; i <= max_iter + 1; ++i) {
    // Response costs serve both the epsilon check and the update.
    std::vector<std::vector<double>> costs(table.participants());
    double gap = 0.0;
    for (int n = 0; n < table.participants(); ++n) {
      costs[n] = response_costs(n, y, table, model, pt);
      double current = 0.0;
      double low = costs[n][0];
      for (std::size_t a = 0; a < costs[n].size(); ++a) {
        current += y.y[n][a] * costs[n][a];
        low = std::min(low, costs[n][a]);
      }
      gap = std::max(gap, current - low);
    }
    result.trace.iterates.push_back(y);
    result.trace.epsilons.push_back(gap);
    if (gap < best_eps) {
      best_eps = gap;
      best_profile = y;
    }
    if (gap <= eps) {
      result.trace.converged_at = i - 1;
      result.trace.epsilon_achieved = gap;
      result.profile = y;
      return result;
    }
    if (i > max_iter) break;

    const double step = eta / i;
    for (int n = 0; n < table.participants(); ++n) {
      std::size_t best_action = 0;
      for (std::size_t a = 1; a < costs[n].size(); ++a)
        if (costs[n][a] < costs[n][best_action]) best_action = a;
      for (std::size_t a = 0; a < costs[n].size(); ++a) {
        const double v = a == best_action ? 1.0 : 0.0;
        y.y[n][a] += step * (v - y.y[n][a]);
      }
    }
  }

  result.trace.epsilon_achieved = best_eps;
  result.profile = best_profile;
  return result;
}

double expected_revenue(const MixedProfile& y, const CostTable& table) {
  validate_mixed_profile(y, table);
  double total = 0.0;
  for (std::size_t idx = 0; idx < table.size(); ++idx)
    total += table.entry_at(idx).revenue * profile_probability(y, table, table.profile_at(idx));
  return total;
}

double peak_to_average(const std::vector<double>& load) {
  if (load.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  double peak = load[0];
  for (double v : load) {
    sum += v;
    peak = std::max(peak, v);
  }
  if (sum == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return peak * static_cast<double>(load.size()) / sum;
}

ExpectationMetrics expectation_metrics(const MixedProfile& y, const CostTable& table,
                                       const BaselineResult& baseline,
                                       const Scenario& scenario) {
  validate_mixed_profile(y, table);
  ExpectationMetrics metrics;
  const int participants = table.participants();
  metrics.expected_costs.assign(participants, 0.0);
  metrics.expected_par = 0.0;
  for (std::size_t idx = 0; idx < table.size(); ++idx) {
    const double prob = profile_probability(y, table, table.profile_at(idx));
    const auto& entry = table.entry_at(idx);
    for (int n = 0; n < participants; ++n)
      metrics.expected_costs[n] += prob * entry.user_costs[n];
    metrics.expected_par += prob * entry.par;
  }
  metrics.expected_revenue = expected_revenue(y, table);

  metrics.baseline_costs.resize(participants);
  metrics.savings_fraction.resize(participants);
  metrics.savings_absolute.resize(participants);
  for (int n = 0; n < participants; ++n) {
    const double base = baseline.cost_for_id(scenario, scenario.participant_ids[n]);
    metrics.baseline_costs[n] = base;
    metrics.savings_absolute[n] = base - metrics.expected_costs[n];
    metrics.savings_fraction[n] = base > 0.0 ? metrics.savings_absolute[n] / base
                                             : std::numeric_limits<double>::quiet_NaN();
  }
  metrics.baseline_par = peak_to_average(baseline.load);
  metrics.par_reduction_fraction =
      (metrics.baseline_par - metrics.expected_par) / metrics.baseline_par;
  return metrics;
}

}  // namespace cestrade
