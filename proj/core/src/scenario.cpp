#include "cestrade/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "cestrade/errors.hpp"

namespace cestrade {

namespace {

using nlohmann::json;

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

double parse_number(const std::string& field, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(field, &pos);
    while (pos < field.size() && std::isspace(static_cast<unsigned char>(field[pos]))) ++pos;
    if (pos != field.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("invalid numeric value '" + field + "' in " + where);
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct ProfileTable {
  int pv_users = 0;     // columns with PV data (users 1..pv_users)
  int total_users = 0;  // demand columns
  std::vector<std::vector<double>> pv;      // [user][slot]
  std::vector<std::vector<double>> demand;  // [user][slot]
};

ProfileTable read_profiles_csv(const std::filesystem::path& path, int slot_count) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profiles CSV: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ConfigError("profiles CSV is empty: " + path.string());
  const auto header = split_csv_line(line);
  if (header.empty() || trim(header[0]) != "slot")
    throw ConfigError("profiles CSV header must start with 'slot': " + path.string());

  ProfileTable table;
  std::size_t col = 1;
  while (col < header.size() && trim(header[col]).rfind("pv", 0) == 0) {
    ++table.pv_users;
    ++col;
  }
  while (col < header.size() && trim(header[col]).rfind("demand", 0) == 0) {
    ++table.total_users;
    ++col;
  }
  if (col != header.size())
    throw ConfigError("profiles CSV header must be slot,pv_*...,demand_*...: " + path.string());
  if (table.total_users < 1) throw ConfigError("profiles CSV has no demand columns");
  if (table.pv_users > table.total_users)
    throw ConfigError("profiles CSV has more pv columns than demand columns");

  table.pv.assign(table.total_users, std::vector<double>(slot_count, 0.0));
  table.demand.assign(table.total_users, std::vector<double>(slot_count, 0.0));

  const std::size_t expected_fields = 1 + table.pv_users + table.total_users;
  int row = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != expected_fields)
      throw ConfigError("ragged CSV row at line " + std::to_string(line_no) + ": expected " +
                        std::to_string(expected_fields) + " fields, got " +
                        std::to_string(fields.size()));
    if (row >= slot_count)
      throw ConfigError("profiles CSV has more than K=" + std::to_string(slot_count) + " data rows");
    const std::string where = path.filename().string() + ":" + std::to_string(line_no);
    const double slot = parse_number(trim(fields[0]), where);
    if (slot != row + 1)
      throw ConfigError("slot column must run 1..K in order; got " + trim(fields[0]) + " at " + where);
    for (int u = 0; u < table.pv_users; ++u)
      table.pv[u][row] = parse_number(trim(fields[1 + u]), where);
    for (int u = 0; u < table.total_users; ++u)
      table.demand[u][row] = parse_number(trim(fields[1 + table.pv_users + u]), where);
    ++row;
  }
  if (row != slot_count)
    throw ConfigError("profiles CSV has " + std::to_string(row) + " data rows, expected K=" +
                      std::to_string(slot_count));
  return table;
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError("missing '" + std::string(key) + "' in " + where);
  return j.at(key);
}

std::vector<int> parse_start_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + " must be an array of slots");
  std::vector<int> starts;
  for (const auto& v : j) starts.push_back(v.get<int>());
  std::sort(starts.begin(), starts.end());
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
  return starts;
}

}  // namespace

const UserProfile& Scenario::user_by_id(int id) const {
  for (const auto& u : users)
    if (u.id == id) return u;
  throw std::out_of_range("unknown user id " + std::to_string(id));
}

const UserProfile& Scenario::participant(int index) const {
  return user_by_id(participant_ids.at(index));
}

double surplus(const UserProfile& user, int t) {
  return user.pv.at(t - 1) - user.demand.at(t - 1);
}

double TradeBox::clamp(double x) const { return std::min(std::max(x, lo), hi); }

TradeBox trade_box(double surplus_value) {
  if (surplus_value >= 0.0) return {0.0, surplus_value};
  return {surplus_value, 0.0};
}

std::vector<int> active_set(const Scenario& scenario, const StartProfile& h, int t) {
  if (h.size() != scenario.participant_ids.size())
    throw std::invalid_argument("start profile length does not match participant count");
  std::vector<int> ids;
  for (std::size_t i = 0; i < h.size(); ++i)
    if (h[i] <= t) ids.push_back(scenario.participant_ids[i]);
  return ids;
}

int active_count(const Scenario& scenario, const StartProfile& h, int t) {
  return static_cast<int>(active_set(scenario, h, t).size());
}

double BaselineResult::cost_for_id(const Scenario& scenario, int id) const {
  for (std::size_t i = 0; i < scenario.users.size(); ++i)
    if (scenario.users[i].id == id) return user_costs[i];
  throw std::out_of_range("unknown user id " + std::to_string(id));
}

BaselineResult baseline_solve(const Scenario& scenario) {
  const int K = scenario.grid.slot_count;
  BaselineResult result;
  result.user_costs.assign(scenario.users.size(), 0.0);
  result.load.assign(K, 0.0);
  for (int t = 0; t < K; ++t) {
    for (const auto& u : scenario.users) result.load[t] += u.demand[t] - u.pv[t];
  }
  for (int t = 0; t < K; ++t) {
    const double price = scenario.prices.phi[t] * result.load[t] + scenario.prices.delta[t];
    for (std::size_t i = 0; i < scenario.users.size(); ++i) {
      const auto& u = scenario.users[i];
      result.user_costs[i] += price * (u.demand[t] - u.pv[t]);
    }
  }
  return result;
}

PriceParams calibrate_prices(double base_phi_offpeak,
                             const std::set<int>& peak_slots,
                             double target_avg_price,
                             const Scenario& scenario) {
  const int K = scenario.grid.slot_count;
  if (!(target_avg_price > 0.0)) throw ConfigError("target average price must be > 0");
  if (!(base_phi_offpeak > 0.0)) throw ConfigError("phi_offpeak must be > 0");
  for (int s : peak_slots)
    if (s < 1 || s > K) throw ConfigError("peak slot " + std::to_string(s) + " outside 1..K");

  PriceParams prices;
  prices.peak_slots = peak_slots;
  prices.phi.assign(K, base_phi_offpeak);
  for (int s : peak_slots) prices.phi[s - 1] = 1.5 * base_phi_offpeak;

  // Baseline load is tariff-independent, so the calibration is not circular.
  std::vector<double> load(K, 0.0);
  for (const auto& u : scenario.users)
    for (int t = 0; t < K; ++t) load[t] += u.demand[t] - u.pv[t];

  double mean_quadratic = 0.0;
  for (int t = 0; t < K; ++t) mean_quadratic += prices.phi[t] * load[t];
  mean_quadratic /= K;

  const double delta = target_avg_price - mean_quadratic;
  if (!(delta > 0.0))
    throw ConfigError("price calibration yields delta <= 0 (target average " +
                      std::to_string(target_avg_price) + " inconsistent with baseline load)");
  prices.delta.assign(K, delta);
  return prices;
}

std::vector<std::string> validate_scenario(const Scenario& scenario) {
  std::vector<std::string> issues;
  const int K = scenario.grid.slot_count;
  auto complain = [&issues](const std::string& msg) { issues.push_back(msg); };

  if (K < 1) complain("grid: K must be >= 1");
  if (!(scenario.grid.slot_hours > 0.0)) complain("grid: delta_hours must be > 0");
  if (K < 1) return issues;  // slot-indexed checks below would be meaningless

  if (static_cast<int>(scenario.prices.phi.size()) != K)
    complain("prices: phi must have K entries");
  else
    for (int t = 0; t < K; ++t)
      if (!(scenario.prices.phi[t] > 0.0))
        complain("prices: phi[" + std::to_string(t + 1) + "] must be > 0");
  if (static_cast<int>(scenario.prices.delta.size()) != K)
    complain("prices: delta must have K entries");
  else
    for (int t = 0; t < K; ++t)
      if (scenario.prices.delta[t] < 0.0)
        complain("prices: delta[" + std::to_string(t + 1) + "] must be >= 0");
  for (int s : scenario.prices.peak_slots)
    if (s < 1 || s > K) complain("prices: peak slot " + std::to_string(s) + " outside 1..K");

  const auto& b = scenario.battery;
  if (!(b.tau > 0.0 && b.tau <= 1.0)) complain("battery: 0 < tau <= 1 violated");
  if (!(b.beta_plus > 0.0 && b.beta_plus <= 1.0)) complain("battery: 0 < beta_plus <= 1 violated");
  if (!(b.beta_minus >= 1.0)) complain("battery: beta_minus >= 1 violated");
  if (!(b.capacity > 0.0)) complain("battery: capacity must be > 0");
  if (!(b.q0 > 0.0 && b.q0 <= b.capacity)) complain("battery: 0 < q0 <= capacity violated");

  if (scenario.users.empty()) complain("users: at least one user required");
  int participants = 0;
  for (const auto& u : scenario.users) {
    const std::string tag = "user " + std::to_string(u.id);
    if (static_cast<int>(u.pv.size()) != K) complain(tag + ": pv must have K entries");
    if (static_cast<int>(u.demand.size()) != K) complain(tag + ": demand must have K entries");
    for (double v : u.pv)
      if (!(v >= 0.0) || !std::isfinite(v)) { complain(tag + ": pv values must be >= 0"); break; }
    for (double v : u.demand)
      if (!(v >= 0.0) || !std::isfinite(v)) { complain(tag + ": demand values must be >= 0"); break; }
    if (u.participant) {
      ++participants;
      if (u.allowed_starts.empty()) complain(tag + ": participant needs allowed start slots");
      for (int s : u.allowed_starts)
        if (s < 1 || s > K) complain(tag + ": allowed start " + std::to_string(s) + " outside 1..K");
      if (!std::is_sorted(u.allowed_starts.begin(), u.allowed_starts.end()))
        complain(tag + ": allowed starts must be sorted");
    } else {
      if (!u.allowed_starts.empty()) complain(tag + ": non-participant has allowed starts");
      for (double v : u.pv)
        if (v != 0.0) { complain(tag + ": non-participant must have zero pv"); break; }
    }
  }
  if (participants == 0) complain("users: at least one participant required");

  if (static_cast<int>(scenario.nonparticipant_load.size()) != K)
    complain("derived: nonparticipant_load must have K entries");
  else
    for (double v : scenario.nonparticipant_load)
      if (v < 0.0) { complain("derived: nonparticipant_load must be >= 0"); break; }

  return issues;
}

Scenario load_scenario(const std::filesystem::path& config_path) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open config: " + config_path.string());
  json cfg;
  try {
    cfg = json::parse(in, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + config_path.string() + ": " + e.what());
  }

  Scenario scenario;
  const auto& grid = require(cfg, "grid", "config");
  scenario.grid.slot_count = require(grid, "K", "grid").get<int>();
  scenario.grid.slot_hours = require(grid, "delta_hours", "grid").get<double>();
  if (scenario.grid.slot_count < 1) throw ConfigError("grid: K must be >= 1");
  const int K = scenario.grid.slot_count;

  const auto& battery = require(cfg, "battery", "config");
  scenario.battery.capacity = require(battery, "capacity", "battery").get<double>();
  scenario.battery.q0 = require(battery, "q0", "battery").get<double>();
  scenario.battery.tau = require(battery, "tau", "battery").get<double>();
  scenario.battery.beta_plus = require(battery, "beta_plus", "battery").get<double>();
  scenario.battery.beta_minus = require(battery, "beta_minus", "battery").get<double>();

  const auto& users = require(cfg, "users", "config");
  const auto csv_rel = require(users, "profiles_csv", "users").get<std::string>();
  std::filesystem::path csv_path(csv_rel);
  if (csv_path.is_relative()) csv_path = config_path.parent_path() / csv_path;
  const auto table = read_profiles_csv(csv_path, K);

  std::set<int> participant_ids;
  for (const auto& v : require(users, "participant_ids", "users")) {
    const int id = v.get<int>();
    if (id < 1 || id > table.total_users)
      throw ConfigError("participant id " + std::to_string(id) + " outside 1.." +
                        std::to_string(table.total_users));
    participant_ids.insert(id);
  }

  const auto& starts_cfg = require(users, "allowed_starts", "users");
  for (int id = 1; id <= table.total_users; ++id) {
    UserProfile u;
    u.id = id;
    u.pv = table.pv[id - 1];
    u.demand = table.demand[id - 1];
    u.participant = participant_ids.count(id) > 0;
    if (u.participant) {
      if (starts_cfg.is_array()) {
        u.allowed_starts = parse_start_list(starts_cfg, "allowed_starts");
      } else if (starts_cfg.is_object()) {
        const std::string key = std::to_string(id);
        if (!starts_cfg.contains(key))
          throw ConfigError("allowed_starts map missing participant " + key);
        u.allowed_starts = parse_start_list(starts_cfg.at(key), "allowed_starts[" + key + "]");
      } else {
        throw ConfigError("allowed_starts must be an array or an id->array map");
      }
    }
    scenario.users.push_back(std::move(u));
  }

  const auto& prices = require(cfg, "prices", "config");
  std::set<int> peak_slots;
  if (prices.contains("peak_slots"))
    for (const auto& v : prices.at("peak_slots")) peak_slots.insert(v.get<int>());
  if (prices.contains("phi_offpeak")) {
    // Calibrated form: needs profiles, so prices are resolved last.
    scenario.prices = calibrate_prices(prices.at("phi_offpeak").get<double>(), peak_slots,
                                       require(prices, "target_avg_price", "prices").get<double>(),
                                       scenario);
  } else {
    scenario.prices.phi = require(prices, "phi", "prices").get<std::vector<double>>();
    scenario.prices.delta = require(prices, "delta", "prices").get<std::vector<double>>();
    scenario.prices.peak_slots = peak_slots;
  }

  try {
    finalize_scenario(scenario);
  } catch (const ConfigError& e) {
    throw ConfigError("invalid scenario " + config_path.string() + ":\n" + e.what());
  }
  return scenario;
}

void finalize_scenario(Scenario& scenario) {
  std::sort(scenario.users.begin(), scenario.users.end(),
            [](const UserProfile& a, const UserProfile& b) { return a.id < b.id; });
  scenario.participant_ids.clear();
  for (const auto& u : scenario.users)
    if (u.participant) scenario.participant_ids.push_back(u.id);
  const int K = scenario.grid.slot_count;
  scenario.nonparticipant_load.assign(std::max(K, 0), 0.0);
  for (const auto& u : scenario.users)
    if (!u.participant && static_cast<int>(u.demand.size()) == K)
      for (int t = 0; t < K; ++t) scenario.nonparticipant_load[t] += u.demand[t];

  const auto issues = validate_scenario(scenario);
  if (!issues.empty()) throw ConfigError("  " + join(issues, "\n  "));
}

}  // namespace cestrade
