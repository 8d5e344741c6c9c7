#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "cestrade/scenario.hpp"
#include "cestrade/slot_game.hpp"

namespace testutil {

inline std::filesystem::path scenario_dir(const std::string& name) {
  return std::filesystem::path(CESTRADE_DATA_DIR) / name;
}

inline cestrade::Scenario load_fixture(const std::string& name) {
  return cestrade::load_scenario(scenario_dir(name) / "config.json");
}

struct UserSpec {
  std::vector<double> pv;
  std::vector<double> demand;
  bool participant = false;
  std::vector<int> starts;
};

inline cestrade::Scenario make_scenario(int slot_count, std::vector<double> phi,
                                        std::vector<double> delta,
                                        cestrade::BatteryParams battery,
                                        std::vector<UserSpec> users) {
  cestrade::Scenario s;
  s.grid.slot_count = slot_count;
  s.grid.slot_hours = 1.0;
  s.prices.phi = std::move(phi);
  s.prices.delta = std::move(delta);
  s.battery = battery;
  int id = 1;
  for (auto& u : users) {
    cestrade::UserProfile profile;
    profile.id = id++;
    profile.pv = std::move(u.pv);
    profile.demand = std::move(u.demand);
    profile.participant = u.participant;
    profile.allowed_starts = std::move(u.starts);
    s.users.push_back(std::move(profile));
  }
  cestrade::finalize_scenario(s);
  return s;
}

// Deterministic uniform draw, independent of library distribution internals.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

// Randomized slot-game context with mixed surplus signs.
inline cestrade::SlotContext random_context(std::mt19937_64& rng, int max_players = 4) {
  cestrade::SlotContext ctx;
  ctx.t = 1;
  ctx.phi = uniform(rng, 0.01, 1.0);
  ctx.delta = uniform(rng, 0.0, 0.5);
  ctx.ces_price = uniform(rng, -1.0, 1.0);
  ctx.operator_trade = uniform(rng, -5.0, 5.0);
  ctx.background_load = uniform(rng, 0.0, 10.0);
  const int players = uniform_int(rng, 1, max_players);
  for (int k = 0; k < players; ++k) {
    const double s = uniform(rng, -5.0, 5.0);
    ctx.participants.push_back({k + 1, s, cestrade::trade_box(s)});
  }
  return ctx;
}

// Scratch directory cleaned up on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& stem) {
    path = std::filesystem::temp_directory_path() /
           (stem + "-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path file(const std::string& name, const std::string& contents) const {
    const auto p = path / name;
    std::ofstream out(p);
    out << contents;
    return p;
  }
};

}  // namespace testutil
