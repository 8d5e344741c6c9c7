#include <fstream>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

#include "cli.hpp"
#include "test_helpers.hpp"

using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fixture(const std::string& name) {
  return (testutil::scenario_dir(name) / "config.json").string();
}

int run_cli(std::initializer_list<std::string> args) {
  return cestrade::cli::run(std::vector<std::string>(args));
}

}  // namespace

TEST_CASE("validate command") {
  SUBCASE("well-formed fixtures pass") {
    CHECK(run_cli({"validate", fixture("s1")}) == 0);
    CHECK(run_cli({"validate", fixture("default24")}) == 0);
  }
  SUBCASE("battery retention above one fails") {
    testutil::TempDir dir("cli-badtau");
    dir.file("profiles.csv", "slot,pv_kwh_user1,demand_kwh_user1\n1,0,0\n");
    dir.file("config.json", R"({
      "grid": { "K": 1, "delta_hours": 1.0 },
      "prices": { "phi": [1.0], "delta": [0.1] },
      "battery": { "capacity": 10.0, "q0": 5.0, "tau": 1.5, "beta_plus": 1.0, "beta_minus": 1.0 },
      "users": { "profiles_csv": "profiles.csv", "participant_ids": [1], "allowed_starts": [1] }
    })");
    CHECK(run_cli({"validate", (dir.path / "config.json").string()}) == 1);
  }
  SUBCASE("overfull battery fails") {
    testutil::TempDir dir("cli-badq0");
    dir.file("profiles.csv", "slot,pv_kwh_user1,demand_kwh_user1\n1,0,0\n");
    dir.file("config.json", R"({
      "grid": { "K": 1, "delta_hours": 1.0 },
      "prices": { "phi": [1.0], "delta": [0.1] },
      "battery": { "capacity": 10.0, "q0": 15.0, "tau": 1.0, "beta_plus": 1.0, "beta_minus": 1.0 },
      "users": { "profiles_csv": "profiles.csv", "participant_ids": [1], "allowed_starts": [1] }
    })");
    CHECK(run_cli({"validate", (dir.path / "config.json").string()}) == 1);
  }
}

TEST_CASE("solve command") {
  SUBCASE("writes deterministic solution files") {
    testutil::TempDir out1("cli-solve1"), out2("cli-solve2");
    CHECK(run_cli({"solve", fixture("s1"), "--h", "1,1", "--out", out1.path.string()}) == 0);
    CHECK(run_cli({"solve", fixture("s1"), "--h", "1,1", "--out", out2.path.string()}) == 0);
    CHECK(slurp(out1.path / "solution.csv") == slurp(out2.path / "solution.csv"));
    CHECK(slurp(out1.path / "summary.json") == slurp(out2.path / "summary.json"));

    const auto summary = json::parse(slurp(out1.path / "summary.json"));
    CHECK(summary["revenue"].get<double>() == doctest::Approx(3.3125).epsilon(1e-9));
    CHECK(summary["charge"]["feasible"].get<bool>());
  }
  SUBCASE("start outside the menu is a usage error") {
    testutil::TempDir out("cli-badh");
    CHECK(run_cli({"solve", fixture("s1"), "--h", "1,7", "--out", out.path.string()}) == 1);
    CHECK(run_cli({"solve", fixture("s1"), "--h", "1", "--out", out.path.string()}) == 1);
  }
  SUBCASE("day-scale solve keeps the charge inside the battery") {
    testutil::TempDir out("cli-solve24");
    CHECK(run_cli({"solve", fixture("default24"), "--h", "1,1,1,1,1,1", "--out",
                   out.path.string()}) == 0);
    const auto summary = json::parse(slurp(out.path / "summary.json"));
    CHECK(summary["charge"]["min"].get<double>() > 0.0);
    CHECK(summary["charge"]["max"].get<double>() <= 80.0);
    CHECK(summary["charge"]["feasible"].get<bool>());
  }
}

TEST_CASE("participation command") {
  testutil::TempDir out("cli-part");
  CHECK(run_cli({"participation", fixture("synthetic3"), "--model", "pt", "--alpha", "0.4",
                 "--out", out.path.string()}) == 0);
  const auto metrics = json::parse(slurp(out.path / "metrics.json"));
  CHECK(metrics["model"] == "pt");
  CHECK(metrics["alpha"].get<double>() == doctest::Approx(0.4));
  CHECK(metrics["epsilon_achieved"].get<double>() <= 1e-3);

  // probability rows are distributions
  std::istringstream eq(slurp(out.path / "equilibrium_probabilities.csv"));
  std::string line;
  std::getline(eq, line);  // header
  int rows = 0;
  while (std::getline(eq, line)) {
    std::stringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');  // user id
    double sum = 0.0;
    while (std::getline(ss, field, ',')) sum += std::stod(field);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    ++rows;
  }
  CHECK(rows == 3);
}

TEST_CASE("alpha sweep command") {
  SUBCASE("identity weighting column matches the objective run") {
    testutil::TempDir out("cli-sweep1");
    CHECK(run_cli({"sweep-alpha", fixture("s1"), "--grid", "1.0", "--out",
                   out.path.string()}) == 0);
    const auto report = json::parse(slurp(out.path / "report.json"));
    REQUIRE(report["runs"].size() == 2);
    const auto& eut = report["runs"][0];
    const auto& pt1 = report["runs"][1];
    CHECK(std::abs(eut["expected_revenue"].get<double>() -
                   pt1["expected_revenue"].get<double>()) <= 1e-9);
    CHECK(std::abs(eut["avg_savings_percent"].get<double>() -
                   pt1["avg_savings_percent"].get<double>()) <= 1e-9);
  }
  SUBCASE("three-point grid produces one run per alpha plus the reference") {
    testutil::TempDir out("cli-sweep3");
    CHECK(run_cli({"sweep-alpha", fixture("synthetic3"), "--grid", "0.1,0.4,0.7", "--out",
                   out.path.string()}) == 0);
    const auto report = json::parse(slurp(out.path / "report.json"));
    CHECK(report["runs"].size() == 4);
    CHECK(report["profiles"] == 27);

    // repeated run is byte-identical
    testutil::TempDir out2("cli-sweep3b");
    CHECK(run_cli({"sweep-alpha", fixture("synthetic3"), "--grid", "0.1,0.4,0.7", "--out",
                   out2.path.string()}) == 0);
    CHECK(slurp(out.path / "sweep_metrics.csv") == slurp(out2.path / "sweep_metrics.csv"));
    CHECK(slurp(out.path / "sweep_probabilities.csv") ==
          slurp(out2.path / "sweep_probabilities.csv"));
    CHECK(slurp(out.path / "report.json") == slurp(out2.path / "report.json"));

    CHECK(run_cli({"report", out.path.string()}) == 0);
  }
  SUBCASE("empty grid is rejected") {
    testutil::TempDir out("cli-sweep0");
    CHECK(run_cli({"sweep-alpha", fixture("s1"), "--grid", "1.5", "--out",
                   out.path.string()}) == 1);
  }
}

TEST_CASE("report command needs a sweep directory") {
  testutil::TempDir out("cli-report");
  CHECK(run_cli({"report", out.path.string()}) == 1);
}
