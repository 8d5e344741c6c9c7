#pragma once

// Scenario data model: time grid, grid pricing, household PV/demand profiles,
// battery parameters, plus the derived quantities the games are built on
// (per-slot surplus, active participant sets, the no-battery baseline).

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "cestrade/storage.hpp"

namespace cestrade {

struct TimeGrid {
  int slot_count = 0;      // K, slots per control period
  double slot_hours = 0.0; // slot granularity in hours

  double control_period_hours() const { return slot_count * slot_hours; }
};

// Grid tariff p_t = phi_t * L_t + delta_t with L_t the total grid load.
struct PriceParams {
  std::vector<double> phi;    // $/kWh^2, per slot, > 0
  std::vector<double> delta;  // $/kWh, per slot
  std::set<int> peak_slots;   // 1-based slots billed at the peak coefficient
};

struct UserProfile {
  int id = 0;                       // 1-based, matches profile CSV columns
  std::vector<double> pv;           // generated energy per slot, kWh
  std::vector<double> demand;       // regular demand per slot, kWh
  bool participant = false;
  std::vector<int> allowed_starts;  // sorted candidate trading start slots; empty unless participant
};

struct Scenario {
  TimeGrid grid;
  PriceParams prices;
  std::vector<UserProfile> users;  // ascending id
  BatteryParams battery;

  std::vector<double> nonparticipant_load;  // per-slot demand sum over non-participants
  std::vector<int> participant_ids;         // ascending

  int participant_count() const { return static_cast<int>(participant_ids.size()); }
  int nonparticipant_count() const { return static_cast<int>(users.size()) - participant_count(); }
  const UserProfile& user_by_id(int id) const;
  const UserProfile& participant(int index) const;  // index into participant_ids
};

// Net generation g - e of a user at slot t (1-based). Sign classifies the
// user as a seller (>= 0) or buyer (< 0) toward the community battery.
double surplus(const UserProfile& user, int t);

// Per-slot trading bounds: [0, s] for sellers, [s, 0] for buyers.
struct TradeBox {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
  double clamp(double x) const;
};
TradeBox trade_box(double surplus_value);

// Start-slot assignment for participants, aligned with Scenario::participant_ids.
using StartProfile = std::vector<int>;

// Participants already trading at slot t, i.e. start_slot <= t. Returns ids.
std::vector<int> active_set(const Scenario& scenario, const StartProfile& h, int t);
int active_count(const Scenario& scenario, const StartProfile& h, int t);

// No-battery reference: every user trades its net load e - g directly with
// the grid under the same tariff. Surplus is sold back at the grid price.
struct BaselineResult {
  std::vector<double> user_costs;  // aligned with Scenario::users
  std::vector<double> load;        // total grid load per slot
  double cost_for_id(const Scenario& scenario, int id) const;
};
BaselineResult baseline_solve(const Scenario& scenario);

// Builds a tariff from an off-peak quadratic coefficient (peak slots get
// 1.5x) and a constant delta chosen so the mean baseline price equals
// target_avg_price. Throws ConfigError when the implied delta is <= 0.
PriceParams calibrate_prices(double base_phi_offpeak,
                             const std::set<int>& peak_slots,
                             double target_avg_price,
                             const Scenario& scenario);

// Loads and fully validates a scenario from a JSON config. Profile CSV paths
// are resolved relative to the config file's directory.
Scenario load_scenario(const std::filesystem::path& config_path);

// Recomputes the derived fields (participant ids, non-participant load) of a
// programmatically assembled scenario and validates it. Throws ConfigError
// listing every breached invariant.
void finalize_scenario(Scenario& scenario);

// Validation used by load_scenario and the validate command: returns the full
// list of invariant breaches (empty when the scenario is well-formed).
std::vector<std::string> validate_scenario(const Scenario& scenario);

}  // namespace cestrade
