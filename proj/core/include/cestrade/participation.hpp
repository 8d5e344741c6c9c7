#pragma once

// Participation-time selection game: each participant picks a trading start
// slot. Payoffs are the daily costs at the bilevel equilibrium for each joint
// choice, tabulated exhaustively; mixed strategies evolve by inertia-weighted
// fictitious play toward an epsilon-Nash equilibrium, under either objective
// (expected-utility) or Prelec-weighted (prospect-theoretic) beliefs.

#include <optional>
#include <vector>

#include "cestrade/scenario.hpp"
#include "cestrade/stackelberg.hpp"

namespace cestrade {

enum class BehaviorModel { kEut, kPt };

struct CostTableEntry {
  std::vector<double> user_costs;  // per participant, id order
  double revenue = 0.0;
  std::vector<double> load;  // total grid load per slot
  double par = 0.0;          // peak-to-average ratio of `load`
};

// Exhaustive payoff table over the product of the participants' candidate
// start slots, indexed in mixed radix (first participant varies slowest).
class CostTable {
 public:
  CostTable(std::vector<std::vector<int>> action_sets, std::vector<CostTableEntry> entries);

  const std::vector<std::vector<int>>& action_sets() const { return action_sets_; }
  int participants() const { return static_cast<int>(action_sets_.size()); }
  std::size_t size() const { return entries_.size(); }

  std::size_t index_of(const StartProfile& h) const;
  StartProfile profile_at(std::size_t index) const;
  int action_index(int participant, int start_slot) const;  // -1 when absent

  const CostTableEntry& entry(const StartProfile& h) const { return entries_[index_of(h)]; }
  const CostTableEntry& entry_at(std::size_t index) const { return entries_[index]; }

 private:
  std::vector<std::vector<int>> action_sets_;
  std::vector<std::size_t> strides_;
  std::vector<CostTableEntry> entries_;
};

// Solves the bilevel equilibrium once per joint start profile. Profiles are
// independent, so they are evaluated in parallel; `workers` <= 0 reads the
// CESTRADE_WORKERS environment variable, falling back to the hardware count.
CostTable build_cost_table(const Scenario& scenario,
                           const LeaderSolveOptions& options = {}, int workers = 0);

// Per-participant probability vectors over the candidate start slots.
struct MixedProfile {
  std::vector<std::vector<double>> y;
};

MixedProfile uniform_profile(const CostTable& table);

struct PTParams {
  std::vector<double> alpha;  // per participant, each in (0,1]

  static PTParams constant(double alpha, int participants) {
    return {std::vector<double>(static_cast<std::size_t>(participants), alpha)};
  }
};

// Prelec probability weighting w(y) = exp(-(-ln y)^alpha); identity at
// alpha = 1, fixed point at y = 1/e. Throws std::invalid_argument outside
// y in [0,1] or alpha in (0,1].
double prelec_weight(double y, double alpha);

double eut_expected_cost(int participant, const MixedProfile& y, const CostTable& table);
double pt_expected_cost(int participant, const MixedProfile& y, const CostTable& table,
                        const PTParams& pt);

// Expected cost of committing to start slot h_n against the others' mixed
// strategies (Prelec-weighted for the prospect-theoretic model).
double pure_response_cost(int participant, int start_slot, const MixedProfile& y,
                          const CostTable& table, BehaviorModel model, const PTParams& pt);

// Unit vector selecting the cheapest pure response; ties break toward the
// earliest start slot.
std::vector<double> best_response_indicator(int participant, const MixedProfile& y,
                                            const CostTable& table, BehaviorModel model,
                                            const PTParams& pt);

// One inertia-weighted update y <- y + (eta/i)(v - y), all participants
// stepped simultaneously from the same profile.
MixedProfile fictitious_step(const MixedProfile& y, int iteration, double eta,
                             const CostTable& table, BehaviorModel model, const PTParams& pt);

struct EpsilonCheck {
  bool is_epsilon_nash = false;
  double worst_deviation = 0.0;  // max over users of E_n(y) - min_h e_n(h, y_-n)
};

// Pure deviations suffice: the expected cost is affine in the player's own
// mixed strategy, so its minimum over the simplex sits at a vertex.
EpsilonCheck check_epsilon_nash(const MixedProfile& y, const CostTable& table,
                                BehaviorModel model, const PTParams& pt, double eps);

struct DynamicsTrace {
  std::vector<MixedProfile> iterates;   // includes the initial profile
  std::vector<double> epsilons;         // deviation gap at each iterate
  double eta = 0.0;
  std::optional<int> converged_at;      // iteration index into `iterates`
  double epsilon_achieved = 0.0;        // gap at the returned profile
};

struct DynamicsResult {
  MixedProfile profile;
  DynamicsTrace trace;
};

// Runs fictitious play until the epsilon check passes or max_iter is hit;
// non-convergence returns the best iterate found rather than throwing.
DynamicsResult run_dynamics(const CostTable& table, BehaviorModel model, const PTParams& pt,
                            double eta, const MixedProfile& y0, int max_iter, double eps);

// Operator's expected revenue under an equilibrium profile. Objective
// probabilities are used for both behavioral models.
double expected_revenue(const MixedProfile& y, const CostTable& table);

struct ExpectationMetrics {
  std::vector<double> expected_costs;    // per participant
  std::vector<double> baseline_costs;    // per participant
  std::vector<double> savings_fraction;  // NaN when the baseline cost is <= 0
  std::vector<double> savings_absolute;  // baseline - expected
  double expected_revenue = 0.0;
  double expected_par = 0.0;
  double baseline_par = 0.0;
  double par_reduction_fraction = 0.0;
};

double peak_to_average(const std::vector<double>& load);

ExpectationMetrics expectation_metrics(const MixedProfile& y, const CostTable& table,
                                       const BaselineResult& baseline,
                                       const Scenario& scenario);

}  // namespace cestrade
