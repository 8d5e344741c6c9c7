#include <cmath>
#include <random>

#include <doctest.h>

#include "cestrade/storage.hpp"
#include "test_helpers.hpp"

using namespace cestrade;

TEST_CASE("kappa/gamma matrices match the leakage recursion coefficients") {
  SUBCASE("no leakage") {
    const auto kg = build_kappa_gamma(1.0, 3);
    CHECK(kg.kappa == std::vector<double>{1.0, 1.0, 1.0});
    for (int l = 0; l < 3; ++l)
      for (int m = 0; m < 3; ++m) CHECK(kg.gamma[l][m] == (m <= l ? 1.0 : 0.0));
  }
  SUBCASE("tau = 0.5") {
    const auto kg = build_kappa_gamma(0.5, 2);
    CHECK(kg.kappa[0] == doctest::Approx(0.5));
    CHECK(kg.kappa[1] == doctest::Approx(0.25));
    CHECK(kg.gamma[0][0] == 1.0);
    CHECK(kg.gamma[0][1] == 0.0);
    CHECK(kg.gamma[1][0] == doctest::Approx(0.5));
    CHECK(kg.gamma[1][1] == 1.0);
  }
  SUBCASE("single slot") {
    const auto kg = build_kappa_gamma(0.7, 1);
    CHECK(kg.kappa == std::vector<double>{0.7});
    CHECK(kg.gamma[0][0] == 1.0);
  }
  CHECK_THROWS(build_kappa_gamma(0.0, 3));
  CHECK_THROWS(build_kappa_gamma(1.0, 0));
}

TEST_CASE("charge trajectory follows the recursion") {
  BatteryParams b{.capacity = 100.0, .q0 = 20.0, .tau = 1.0, .beta_plus = 1.0, .beta_minus = 1.0};
  SUBCASE("lossless charge then discharge") {
    const auto q = charge_trajectory(b, {5.0, 0.0}, {0.0, 3.0});
    CHECK(q[0] == doctest::Approx(25.0));
    CHECK(q[1] == doctest::Approx(22.0));
  }
  SUBCASE("with leakage") {
    b.tau = 0.5;
    const auto q = charge_trajectory(b, {5.0, 0.0}, {0.0, 3.0});
    CHECK(q[0] == doctest::Approx(15.0));
    CHECK(q[1] == doctest::Approx(4.5));
  }
  SUBCASE("idle battery keeps its charge") {
    const auto q = charge_trajectory(b, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0});
    for (double v : q) CHECK(v == 20.0);
  }
}

TEST_CASE("matrix form equals the scalar recursion") {
  std::mt19937_64 rng(41);
  for (int rep = 0; rep < 50; ++rep) {
    BatteryParams b;
    b.capacity = 100.0;
    b.q0 = testutil::uniform(rng, 1.0, 100.0);
    b.tau = testutil::uniform(rng, 0.3, 1.0);
    b.beta_plus = testutil::uniform(rng, 0.5, 1.0);
    b.beta_minus = testutil::uniform(rng, 1.0, 1.5);
    const int K = testutil::uniform_int(rng, 1, 12);
    std::vector<double> lplus(K), lminus(K);
    for (int t = 0; t < K; ++t) {
      lplus[t] = testutil::uniform(rng, 0.0, 5.0);
      lminus[t] = testutil::uniform(rng, 0.0, 5.0);
    }
    const auto q = charge_trajectory(b, lplus, lminus);
    const auto kg = build_kappa_gamma(b.tau, K);
    for (int l = 0; l < K; ++l) {
      double expected = b.q0 * kg.kappa[l];
      for (int m = 0; m <= l; ++m)
        expected += kg.gamma[l][m] * (b.beta_plus * lplus[m] - b.beta_minus * lminus[m]);
      CHECK(q[l] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("lossless trajectory is the running sum of net flow") {
  std::mt19937_64 rng(42);
  BatteryParams b{.capacity = 1e9, .q0 = 50.0, .tau = 1.0, .beta_plus = 1.0, .beta_minus = 1.0};
  std::vector<double> net(10);
  for (auto& v : net) v = testutil::uniform(rng, -4.0, 4.0);
  const auto traj = split_flows(b, net);
  double acc = b.q0;
  for (std::size_t t = 0; t < net.size(); ++t) {
    acc += net[t];
    CHECK(traj.q[t] == doctest::Approx(acc).epsilon(1e-12));
  }
}

TEST_CASE("extra charging never lowers later charge levels") {
  std::mt19937_64 rng(43);
  BatteryParams b{.capacity = 1e9, .q0 = 10.0, .tau = 0.9, .beta_plus = 0.8, .beta_minus = 1.2};
  std::vector<double> lplus(8), lminus(8);
  for (int t = 0; t < 8; ++t) {
    lplus[t] = testutil::uniform(rng, 0.0, 3.0);
    lminus[t] = testutil::uniform(rng, 0.0, 3.0);
  }
  const auto q = charge_trajectory(b, lplus, lminus);
  const int bump = 3;
  auto boosted = lplus;
  boosted[bump] += 1.0;
  const auto q2 = charge_trajectory(b, boosted, lminus);
  for (int t = 0; t < 8; ++t) {
    if (t < bump)
      CHECK(q2[t] == q[t]);
    else
      CHECK(q2[t] >= q[t]);
  }
}

TEST_CASE("feasibility report") {
  BatteryParams b{.capacity = 80.0, .q0 = 20.0, .tau = 1.0, .beta_plus = 1.0, .beta_minus = 1.0};
  SUBCASE("idle in-range trajectory is feasible") {
    const auto traj = split_flows(b, std::vector<double>(4, 0.0));
    const auto report = check_feasible(b, traj);
    CHECK(report.feasible);
    CHECK(report.continuity_residual == 0.0);
  }
  SUBCASE("capacity breach is reported at its slot") {
    auto traj = split_flows(b, {62.0, -62.0});  // q -> 82 then back to 20
    const auto report = check_feasible(b, traj);
    CHECK_FALSE(report.feasible);
    REQUIRE(report.capacity_violations.size() == 1);
    CHECK(report.capacity_violations[0].slot == 1);
    CHECK(report.capacity_violations[0].q == doctest::Approx(82.0));
    CHECK(report.continuity_ok);
  }
  SUBCASE("leakage alone breaks continuity over a day") {
    b.tau = std::pow(0.9, 1.0 / 48.0);
    const auto traj = split_flows(b, std::vector<double>(24, 0.0));
    const auto report = check_feasible(b, traj);
    CHECK_FALSE(report.feasible);
    CHECK(report.capacity_violations.empty());
    CHECK_FALSE(report.continuity_ok);
    CHECK(traj.q.back() == doctest::Approx(20.0 * std::pow(0.9, 0.5)));
    CHECK(report.continuity_residual > 1.0);  // far beyond the 1e-6*B tolerance
  }
}

TEST_CASE("sign split of net flows") {
  BatteryParams b{.capacity = 100.0, .q0 = 50.0, .tau = 1.0, .beta_plus = 1.0, .beta_minus = 1.0};
  SUBCASE("examples") {
    const auto a = split_flows(b, {3.0, -2.0});
    CHECK(a.lplus == std::vector<double>{3.0, 0.0});
    CHECK(a.lminus == std::vector<double>{0.0, 2.0});
    const auto z = split_flows(b, {0.0});
    CHECK(z.lplus[0] == 0.0);
    CHECK(z.lminus[0] == 0.0);
    const auto n = split_flows(b, {-5.0});
    CHECK(n.lplus[0] == 0.0);
    CHECK(n.lminus[0] == 5.0);
  }
  SUBCASE("never charges and discharges in the same slot") {
    std::mt19937_64 rng(44);
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> net(6);
      for (auto& v : net) v = testutil::uniform(rng, -10.0, 10.0);
      const auto traj = split_flows(b, net);
      for (std::size_t t = 0; t < net.size(); ++t) {
        CHECK(traj.lplus[t] >= 0.0);
        CHECK(traj.lminus[t] >= 0.0);
        CHECK(traj.lplus[t] * traj.lminus[t] == 0.0);
      }
    }
  }
}

TEST_CASE("idle compensation") {
  BatteryParams b{.capacity = 80.0,
                  .q0 = 20.0,
                  .tau = std::pow(0.9, 1.0 / 48.0),
                  .beta_plus = 0.9,
                  .beta_minus = 1.1};
  const double psi = idle_compensation_inflow(b, 24);
  CHECK(psi > 0.0);
  double level = b.q0;
  for (int t = 0; t < 24; ++t) level = b.tau * level + psi;
  CHECK(level == doctest::Approx(b.q0).epsilon(1e-12));
  CHECK(idle_compensation_feasible(b, 24));

  BatteryParams lossless{.capacity = 10.0, .q0 = 5.0, .tau = 1.0, .beta_plus = 1.0, .beta_minus = 1.0};
  CHECK(idle_compensation_inflow(lossless, 8) == 0.0);
}
