#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cestrade/errors.hpp"
#include "cestrade/participation.hpp"
#include "cestrade/scenario.hpp"
#include "cestrade/stackelberg.hpp"

namespace cestrade::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::uint64_t fnv1a(std::uint64_t hash, const std::string& bytes) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ScenarioBundle {
  Scenario scenario;
  std::string hash;  // over the config and profile bytes, for provenance
  fs::path config_path;
};

ScenarioBundle load_bundle(const fs::path& config_path) {
  ScenarioBundle bundle;
  bundle.config_path = config_path;
  bundle.scenario = load_scenario(config_path);

  std::uint64_t hash = 1469598103934665603ull;
  const std::string config_bytes = read_file(config_path);
  hash = fnv1a(hash, config_bytes);
  try {
    const auto cfg = json::parse(config_bytes, nullptr, true, true);
    fs::path csv(cfg.at("users").at("profiles_csv").get<std::string>());
    if (csv.is_relative()) csv = config_path.parent_path() / csv;
    hash = fnv1a(hash, read_file(csv));
  } catch (const json::exception&) {
    // config already validated by load_scenario; hash the config alone
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  bundle.hash = buf;
  return bundle;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(std::stod(field));
  return out;
}

StartProfile parse_start_list(const std::string& text) {
  StartProfile out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(std::stoi(field));
  return out;
}

void write_text(const fs::path& path, const std::string& body) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << body;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------- validate

int cmd_validate(const fs::path& config_path) {
  Scenario scenario;
  try {
    scenario = load_scenario(config_path);
  } catch (const ConfigError& e) {
    std::cout << "INVALID: " << e.what() << "\n";
    return 1;
  }
  std::cout << "scenario: " << config_path.string() << "\n"
            << "  slots: " << scenario.grid.slot_count << " x " << scenario.grid.slot_hours
            << "h\n"
            << "  users: " << scenario.users.size() << " (" << scenario.participant_count()
            << " participants)\n";
  if (!idle_compensation_feasible(scenario.battery, scenario.grid.slot_count)) {
    std::cout << "INVALID: battery cannot hold its charge window over the horizon\n";
    return 1;
  }
  std::cout << "OK\n";
  return 0;
}

// ------------------------------------------------------------------- solve

void write_solution_files(const ScenarioBundle& bundle, const StackelbergSolution& sol,
                          const fs::path& out_dir) {
  const auto& s = bundle.scenario;
  const int K = s.grid.slot_count;

  std::ostringstream csv;
  csv << "slot,ces_price,grid_trade,charge,grid_price,total_load";
  for (int id : s.participant_ids) csv << ",trade_user" << id << ",load_user" << id;
  csv << "\n";
  for (int t = 0; t < K; ++t) {
    csv << (t + 1) << ',' << fmt(sol.strategy.prices[t]) << ',' << fmt(sol.strategy.grid_trades[t])
        << ',' << fmt(sol.trajectory.q[t]) << ',' << fmt(sol.slots[t].price) << ','
        << fmt(sol.slots[t].total_load);
    for (std::size_t j = 0; j < sol.user_trades.size(); ++j)
      csv << ',' << fmt(sol.user_trades[j][t]) << ',' << fmt(sol.user_loads[j][t]);
    csv << "\n";
  }
  write_text(out_dir / "solution.csv", csv.str());

  json summary;
  summary["command"] = "solve";
  summary["version"] = kVersion;
  summary["config_hash"] = bundle.hash;
  summary["h"] = sol.h;
  summary["revenue"] = sol.revenue;
  summary["model_objective"] = sol.model_objective;
  summary["any_projected"] = sol.any_projected;
  summary["repaired"] = sol.repaired;
  json costs;
  for (const auto& [id, cost] : sol.daily_costs) costs[std::to_string(id)] = cost;
  summary["daily_costs"] = costs;
  const auto report = check_feasible(s.battery, sol.trajectory);
  summary["charge"] = {
      {"end", sol.trajectory.q.empty() ? s.battery.q0 : sol.trajectory.q.back()},
      {"min", *std::min_element(sol.trajectory.q.begin(), sol.trajectory.q.end())},
      {"max", *std::max_element(sol.trajectory.q.begin(), sol.trajectory.q.end())},
      {"continuity_residual", report.continuity_residual},
      {"feasible", report.feasible},
  };
  write_json(out_dir / "summary.json", summary);
}

int cmd_solve(const fs::path& config_path, const StartProfile& h, const fs::path& out_dir) {
  const auto bundle = load_bundle(config_path);
  const auto& s = bundle.scenario;
  if (static_cast<int>(h.size()) != s.participant_count())
    throw ConfigError("--h needs " + std::to_string(s.participant_count()) +
                      " start slots (one per participant, ascending id)");
  for (int j = 0; j < s.participant_count(); ++j) {
    const auto& starts = s.participant(j).allowed_starts;
    if (std::find(starts.begin(), starts.end(), h[j]) == starts.end())
      throw ConfigError("start slot " + std::to_string(h[j]) + " is not in participant " +
                        std::to_string(s.participant_ids[j]) + "'s menu");
  }
  const auto sol = solve_stackelberg(s, h);
  write_solution_files(bundle, sol, out_dir);
  std::cout << "revenue " << fmt(sol.revenue) << ", files in " << out_dir.string() << "\n";
  return 0;
}

// ----------------------------------------------------------- participation

struct DynamicsSettings {
  double eta = 0.7;
  double eps = 1e-3;
  int max_iter = 5000;
  std::optional<std::vector<double>> y0;
};

MixedProfile initial_profile(const CostTable& table, const DynamicsSettings& settings) {
  MixedProfile y;
  for (const auto& actions : table.action_sets()) {
    if (settings.y0) {
      if (settings.y0->size() != actions.size())
        throw ConfigError("--y0 length does not match a participant's start menu");
      y.y.push_back(*settings.y0);
    } else if (actions.size() == 3) {
      y.y.push_back({0.3, 0.3, 0.4});
    } else {
      y.y.emplace_back(actions.size(), 1.0 / actions.size());
    }
  }
  return y;
}

std::vector<int> start_columns(const CostTable& table) {
  std::vector<int> columns;
  for (const auto& actions : table.action_sets())
    for (int s : actions)
      if (std::find(columns.begin(), columns.end(), s) == columns.end()) columns.push_back(s);
  std::sort(columns.begin(), columns.end());
  return columns;
}

std::string probability_row(const CostTable& table, const MixedProfile& y, int n,
                            const std::vector<int>& columns) {
  std::ostringstream row;
  for (int s : columns) {
    const int a = table.action_index(n, s);
    row << ',';
    if (a >= 0) row << fmt(y.y[n][a]);
  }
  return row.str();
}

struct RunOutcome {
  std::string model_label;  // "eut" or "pt"
  double alpha = 1.0;       // meaningful for pt only
  DynamicsResult dynamics;
  ExpectationMetrics metrics;
};

RunOutcome run_model(const CostTable& table, const BaselineResult& baseline,
                     const Scenario& scenario, BehaviorModel model,
                     const std::vector<double>& alphas, const DynamicsSettings& settings) {
  RunOutcome outcome;
  outcome.model_label = model == BehaviorModel::kEut ? "eut" : "pt";
  outcome.alpha = alphas.empty() ? 1.0 : alphas.front();
  PTParams pt{alphas};
  if (model == BehaviorModel::kEut) pt = PTParams::constant(1.0, table.participants());
  const auto y0 = initial_profile(table, settings);
  outcome.dynamics =
      run_dynamics(table, model, pt, settings.eta, y0, settings.max_iter, settings.eps);
  outcome.metrics = expectation_metrics(outcome.dynamics.profile, table, baseline, scenario);
  return outcome;
}

json metrics_json(const Scenario& scenario, const RunOutcome& outcome) {
  const auto& m = outcome.metrics;
  json per_user = json::array();
  double savings_sum = 0.0;
  int savings_count = 0;
  for (std::size_t n = 0; n < m.expected_costs.size(); ++n) {
    json u;
    u["id"] = scenario.participant_ids[n];
    u["expected_cost"] = m.expected_costs[n];
    u["baseline_cost"] = m.baseline_costs[n];
    u["savings_absolute"] = m.savings_absolute[n];
    if (std::isnan(m.savings_fraction[n]))
      u["savings_percent"] = nullptr;
    else {
      u["savings_percent"] = 100.0 * m.savings_fraction[n];
      savings_sum += 100.0 * m.savings_fraction[n];
      ++savings_count;
    }
    per_user.push_back(u);
  }
  json j;
  j["model"] = outcome.model_label;
  if (outcome.model_label == "pt") j["alpha"] = outcome.alpha;
  j["converged_at"] = outcome.dynamics.trace.converged_at
                          ? json(*outcome.dynamics.trace.converged_at)
                          : json(nullptr);
  j["epsilon_achieved"] = outcome.dynamics.trace.epsilon_achieved;
  j["iterations"] = outcome.dynamics.trace.iterates.size() - 1;
  j["expected_revenue"] = m.expected_revenue;
  j["expected_par"] = m.expected_par;
  j["baseline_par"] = m.baseline_par;
  j["par_reduction_percent"] = 100.0 * m.par_reduction_fraction;
  j["avg_savings_percent"] = savings_count ? json(savings_sum / savings_count) : json(nullptr);
  j["users"] = per_user;
  return j;
}

int cmd_participation(const fs::path& config_path, const std::string& model_name,
                      const std::string& alpha_text, const DynamicsSettings& settings,
                      const fs::path& out_dir) {
  const auto bundle = load_bundle(config_path);
  const auto& s = bundle.scenario;
  const BehaviorModel model =
      model_name == "pt" ? BehaviorModel::kPt : BehaviorModel::kEut;
  std::vector<double> alphas = parse_double_list(alpha_text);
  if (alphas.size() == 1)
    alphas.assign(static_cast<std::size_t>(s.participant_count()), alphas.front());
  if (static_cast<int>(alphas.size()) != s.participant_count())
    throw ConfigError("--alpha must be a single value or one per participant");
  for (double a : alphas)
    if (!(a > 0.0 && a <= 1.0)) throw ConfigError("--alpha values must be in (0,1]");

  const auto table = build_cost_table(s);
  const auto baseline = baseline_solve(s);
  const auto outcome = run_model(table, baseline, s, model, alphas, settings);

  const auto columns = start_columns(table);
  std::ostringstream eq;
  eq << "user";
  for (int c : columns) eq << ",start_" << c;
  eq << "\n";
  for (int n = 0; n < table.participants(); ++n)
    eq << s.participant_ids[n] << probability_row(table, outcome.dynamics.profile, n, columns)
       << "\n";
  write_text(out_dir / "equilibrium_probabilities.csv", eq.str());

  std::ostringstream trace;
  trace << "iteration,epsilon";
  for (int n = 0; n < table.participants(); ++n)
    for (int c : table.action_sets()[n]) trace << ",y" << s.participant_ids[n] << "_start" << c;
  trace << "\n";
  for (std::size_t i = 0; i < outcome.dynamics.trace.iterates.size(); ++i) {
    trace << i << ',' << fmt(outcome.dynamics.trace.epsilons[i]);
    for (int n = 0; n < table.participants(); ++n)
      for (double v : outcome.dynamics.trace.iterates[i].y[n]) trace << ',' << fmt(v);
    trace << "\n";
  }
  write_text(out_dir / "dynamics_trace.csv", trace.str());

  json j = metrics_json(s, outcome);
  j["command"] = "participation";
  j["version"] = kVersion;
  j["config_hash"] = bundle.hash;
  j["eta"] = settings.eta;
  j["eps"] = settings.eps;
  j["max_iter"] = settings.max_iter;
  write_json(out_dir / "metrics.json", j);

  std::cout << (outcome.dynamics.trace.converged_at ? "converged" : "stopped") << " at epsilon "
            << fmt(outcome.dynamics.trace.epsilon_achieved) << ", files in " << out_dir.string()
            << "\n";
  return 0;
}

// ------------------------------------------------------------- sweep-alpha

int cmd_sweep_alpha(const fs::path& config_path, const std::vector<double>& grid,
                    const DynamicsSettings& settings, const fs::path& out_dir) {
  if (grid.empty()) throw ConfigError("--grid must list at least one alpha");
  for (double a : grid)
    if (!(a > 0.0 && a <= 1.0)) throw ConfigError("--grid values must be in (0,1]");

  const auto bundle = load_bundle(config_path);
  const auto& s = bundle.scenario;

  // One payoff table serves every run: payoffs do not depend on beliefs.
  const auto table = build_cost_table(s);
  const auto baseline = baseline_solve(s);

  std::vector<RunOutcome> runs;
  runs.push_back(run_model(table, baseline, s, BehaviorModel::kEut, {}, settings));
  for (double alpha : grid) {
    const std::vector<double> alphas(static_cast<std::size_t>(s.participant_count()), alpha);
    runs.push_back(run_model(table, baseline, s, BehaviorModel::kPt, alphas, settings));
  }

  auto avg_savings = [](const ExpectationMetrics& m) {
    double sum = 0.0;
    int count = 0;
    for (double f : m.savings_fraction)
      if (!std::isnan(f)) {
        sum += 100.0 * f;
        ++count;
      }
    return count ? sum / count : std::numeric_limits<double>::quiet_NaN();
  };

  std::ostringstream metrics_csv;
  metrics_csv << "model,alpha,converged_iteration,epsilon,expected_revenue,avg_savings_percent,"
                 "par_reduction_percent,expected_par";
  for (int id : s.participant_ids) metrics_csv << ",savings_user" << id << "_percent";
  metrics_csv << "\n";
  for (const auto& run : runs) {
    metrics_csv << run.model_label << ','
                << (run.model_label == "pt" ? fmt(run.alpha) : std::string()) << ','
                << (run.dynamics.trace.converged_at ? std::to_string(*run.dynamics.trace.converged_at)
                                                    : std::string("-1"))
                << ',' << fmt(run.dynamics.trace.epsilon_achieved) << ','
                << fmt(run.metrics.expected_revenue) << ',' << fmt(avg_savings(run.metrics)) << ','
                << fmt(100.0 * run.metrics.par_reduction_fraction) << ','
                << fmt(run.metrics.expected_par);
    for (double f : run.metrics.savings_fraction) metrics_csv << ',' << fmt(100.0 * f);
    metrics_csv << "\n";
  }
  write_text(out_dir / "sweep_metrics.csv", metrics_csv.str());

  const auto columns = start_columns(table);
  std::ostringstream prob_csv;
  prob_csv << "model,alpha,user";
  for (int c : columns) prob_csv << ",start_" << c;
  prob_csv << "\n";
  for (const auto& run : runs)
    for (int n = 0; n < table.participants(); ++n)
      prob_csv << run.model_label << ','
               << (run.model_label == "pt" ? fmt(run.alpha) : std::string()) << ','
               << s.participant_ids[n] << probability_row(table, run.dynamics.profile, n, columns)
               << "\n";
  write_text(out_dir / "sweep_probabilities.csv", prob_csv.str());

  json report;
  report["command"] = "sweep-alpha";
  report["version"] = kVersion;
  report["config_hash"] = bundle.hash;
  report["alpha_grid"] = grid;
  report["eta"] = settings.eta;
  report["eps"] = settings.eps;
  report["max_iter"] = settings.max_iter;
  report["profiles"] = static_cast<int>(table.size());
  json run_list = json::array();
  for (const auto& run : runs) run_list.push_back(metrics_json(s, run));
  report["runs"] = run_list;

  // Robustness of the weighted-belief equilibria against the objective one.
  const auto& eut = runs.front();
  json robustness = json::array();
  for (std::size_t i = 1; i < runs.size(); ++i) {
    const auto& run = runs[i];
    double max_savings_delta = 0.0;
    for (std::size_t n = 0; n < run.metrics.savings_fraction.size(); ++n)
      if (!std::isnan(run.metrics.savings_fraction[n]) &&
          !std::isnan(eut.metrics.savings_fraction[n]))
        max_savings_delta =
            std::max(max_savings_delta, 100.0 * std::abs(run.metrics.savings_fraction[n] -
                                                         eut.metrics.savings_fraction[n]));
    const double revenue_rel =
        std::abs(run.metrics.expected_revenue - eut.metrics.expected_revenue) /
        std::max(1e-300, std::abs(eut.metrics.expected_revenue));
    json r;
    r["alpha"] = run.alpha;
    r["max_savings_delta_pp"] = max_savings_delta;
    r["avg_savings_delta_pp"] = std::abs(avg_savings(run.metrics) - avg_savings(eut.metrics));
    r["revenue_rel_delta"] = revenue_rel;
    robustness.push_back(r);
  }
  report["robustness_vs_eut"] = robustness;
  write_json(out_dir / "report.json", report);

  std::cout << "swept " << grid.size() << " alpha values over " << table.size()
            << " profiles, files in " << out_dir.string() << "\n";
  return 0;
}

// ------------------------------------------------------------------ report

int cmd_report(const fs::path& dir) {
  const auto report_path = dir / "report.json";
  std::ifstream in(report_path);
  if (!in) throw ConfigError("no report.json in " + dir.string());
  json report;
  in >> report;

  std::printf("sweep report (config %s, %d profiles)\n",
              report.value("config_hash", std::string("?")).c_str(),
              report.value("profiles", 0));
  std::printf("%-6s %-6s %12s %14s %12s %10s\n", "model", "alpha", "W", "avg savings %",
              "PAR red %", "epsilon");
  for (const auto& run : report.at("runs")) {
    const std::string model = run.value("model", "?");
    const std::string alpha = run.contains("alpha") ? fmt(run["alpha"].get<double>()) : "-";
    std::printf("%-6s %-6s %12.6f %14.4f %12.4f %10.2e\n", model.c_str(), alpha.c_str(),
                run.value("expected_revenue", 0.0),
                run["avg_savings_percent"].is_null() ? std::nan("")
                                                     : run["avg_savings_percent"].get<double>(),
                run.value("par_reduction_percent", 0.0), run.value("epsilon_achieved", 0.0));
  }
  if (report.contains("robustness_vs_eut")) {
    std::printf("robustness vs the objective-belief run:\n");
    for (const auto& r : report["robustness_vs_eut"])
      std::printf("  alpha %-5s max savings delta %.4f pp, revenue delta %.4f%%\n",
                  fmt(r.value("alpha", 0.0)).c_str(), r.value("max_savings_delta_pp", 0.0),
                  100.0 * r.value("revenue_rel_delta", 0.0));
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"community-storage energy trading simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir = ".", h_text, model = "eut", alpha_text = "0.7",
              grid_text = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0", y0_text;
  DynamicsSettings settings;

  auto* validate = app.add_subcommand("validate", "check a scenario config");
  validate->add_option("scenario", scenario_path, "scenario config JSON")->required();

  auto* solve = app.add_subcommand("solve", "solve one equilibrium for a fixed start profile");
  solve->set_help_flag("--help", "print help");  // frees -h for the start profile
  solve->add_option("scenario", scenario_path)->required();
  solve->add_option("--h,-h", h_text, "comma-separated start slots, one per participant")
      ->required();
  solve->add_option("--out", out_dir, "output directory");

  auto* part = app.add_subcommand("participation", "run the start-time game to equilibrium");
  part->add_option("scenario", scenario_path)->required();
  part->add_option("--model", model)->check(CLI::IsMember({"eut", "pt"}));
  part->add_option("--alpha", alpha_text, "weighting parameter (single or per-user list)");
  part->add_option("--eta", settings.eta);
  part->add_option("--eps", settings.eps);
  part->add_option("--max-iter", settings.max_iter);
  part->add_option("--y0", y0_text, "initial probabilities, e.g. 0.3,0.3,0.4");
  part->add_option("--out", out_dir);

  auto* sweep = app.add_subcommand("sweep-alpha", "participation runs across alpha values");
  sweep->add_option("scenario", scenario_path)->required();
  sweep->add_option("--grid", grid_text, "comma-separated alpha values");
  sweep->add_option("--eta", settings.eta);
  sweep->add_option("--eps", settings.eps);
  sweep->add_option("--max-iter", settings.max_iter);
  sweep->add_option("--y0", y0_text);
  sweep->add_option("--out", out_dir);

  auto* report = app.add_subcommand("report", "summarize a sweep output directory");
  report->add_option("dir", out_dir)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (!y0_text.empty()) settings.y0 = parse_double_list(y0_text);
    if (validate->parsed()) return cmd_validate(scenario_path);
    if (solve->parsed()) return cmd_solve(scenario_path, parse_start_list(h_text), out_dir);
    if (part->parsed())
      return cmd_participation(scenario_path, model, alpha_text, settings, out_dir);
    if (sweep->parsed())
      return cmd_sweep_alpha(scenario_path, parse_double_list(grid_text), settings, out_dir);
    if (report->parsed()) return cmd_report(out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const SolveError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace cestrade::cli
