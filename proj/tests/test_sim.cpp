#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "modrel/demand.hpp"
#include "modrel/sim.hpp"
#include "oracles.hpp"

using namespace modrel;
using Catch::Approx;

namespace {

std::vector<TripRequest> desk_demand(const Network& net, std::uint64_t seed = 11) {
  PoissonDemandSpec spec;
  spec.rate_per_minute = 4.0;
  spec.duration_minutes = 1440.0;
  spec.max_requests = 5000;
  spec.seed = seed;
  return poisson_demand(net.node_count(), spec);
}

SimConfig desk_config(std::uint64_t seed = 1) {
  SimConfig cfg;
  cfg.fleet_size = 40;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("assign_vehicle", "[sim]") {
  const Network line(4, {{0, 1, 3.0}, {1, 0, 3.0}, {1, 2, 2.0}, {2, 1, 2.0}, {2, 3, 1.0}, {3, 2, 1.0}});
  const TripRequest req{0, 0, 3, 10.0};

  SECTION("vehicle at the origin waits zero") {
    const std::vector<Vehicle> fleet{{0, 0, 0.0}};
    const auto a = assign_vehicle(fleet, req, line, 30.0);
    REQUIRE(a);
    CHECK(a->mean_wait == 0.0);
  }
  SECTION("nearest idle vehicle wins") {
    const std::vector<Vehicle> fleet{{0, 2, 0.0}, {1, 1, 0.0}};  // 5.0 and 3.0 away
    const auto a = assign_vehicle(fleet, req, line, 30.0);
    REQUIRE(a);
    CHECK(a->vehicle == 1);
    CHECK(a->mean_wait == 3.0);
  }
  SECTION("ties go to the lowest id; busy vehicles are skipped") {
    const std::vector<Vehicle> fleet{{0, 1, 11.0}, {1, 1, 0.0}, {2, 1, 10.0}};
    const auto a = assign_vehicle(fleet, req, line, 30.0);
    REQUIRE(a);
    CHECK(a->vehicle == 1);
  }
  SECTION("nothing idle, or too far") {
    NoAssignment why{};
    const std::vector<Vehicle> busy{{0, 0, 20.0}};
    CHECK_FALSE(assign_vehicle(busy, req, line, 30.0, &why));
    CHECK(why == NoAssignment::none_idle);
    const std::vector<Vehicle> far{{0, 3, 0.0}};
    CHECK_FALSE(assign_vehicle(far, req, line, 5.0, &why));
    CHECK(why == NoAssignment::too_far);
    CHECK(assign_vehicle(far, req, line, 6.0));
  }
  SECTION("unreachable from every idle vehicle") {
    const Network oneway(3, {{0, 1, 1.0}, {1, 2, 1.0}});
    NoAssignment why{};
    const std::vector<Vehicle> fleet{{0, 2, 0.0}};
    CHECK_FALSE(assign_vehicle(fleet, TripRequest{0, 0, 1, 0.0}, oneway, 30.0, &why));
    CHECK(why == NoAssignment::unreachable);
  }
}

TEST_CASE("assign_vehicle matches exhaustive minimization", "[sim][oracle]") {
  RandomStream rng(100);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Edge> edges;
    std::vector<oracle::SimpleEdge> simple;
    for (NodeId a = 0; a < 6; ++a)
      for (NodeId b = 0; b < 6; ++b)
        if (a != b && rng.uniform() < 0.5) {
          const double w = std::round(rng.uniform(1.0, 6.0));  // integers make ties likely
          edges.push_back({a, b, w});
          simple.push_back({a, b, w});
        }
    const Network net(6, edges);
    std::vector<Vehicle> fleet;
    const auto n_veh = 1 + rng.below(5);
    for (std::uint64_t v = 0; v < n_veh; ++v)
      fleet.push_back({static_cast<std::int64_t>(v), static_cast<NodeId>(rng.below(6)),
                       rng.uniform() < 0.3 ? 50.0 : 0.0});
    const TripRequest req{0, static_cast<NodeId>(rng.below(6)), 0, 5.0};
    const double cap = rng.uniform(2.0, 12.0);

    std::optional<std::size_t> best;
    double best_t = INFINITY;
    for (std::size_t i = 0; i < fleet.size(); ++i) {
      if (fleet[i].available_at > req.request_time) continue;
      const double t = oracle::brute_force_shortest(simple, 6, fleet[i].current_node, req.origin);
      if (t < best_t) {
        best_t = t;
        best = i;
      }
    }
    const auto got = assign_vehicle(fleet, req, net, cap);
    INFO("trial " << trial);
    if (!best || best_t > cap) {
      CHECK_FALSE(got);
    } else {
      REQUIRE(got);
      CHECK(got->vehicle == *best);
      CHECK(got->mean_wait == Approx(best_t).epsilon(1e-12));
    }
  }
}

TEST_CASE("record_pmf", "[sim]") {
  SECTION("proportions per bin") {
    const auto pmfs = record_pmf({{3, {2.0, 2.0, 4.0}}}, 0.1);
    REQUIRE(pmfs.count(3));
    const auto& m = pmfs.at(3).mass;
    CHECK(m.size() == 2);
    CHECK(m.at(20) == Approx(2.0 / 3.0));
    CHECK(m.at(40) == Approx(1.0 / 3.0));
    CHECK(pmfs.at(3).served == 3);
    CHECK(pmfs.at(3).bin_midpoint(20) == Approx(2.05));
  }
  SECTION("bin edges") {
    CHECK(wait_bin(0.3, 0.1) == 3);
    CHECK(wait_bin(0.0, 0.1) == 0);
    CHECK(wait_bin(0.0999, 0.1) == 0);
  }
  SECTION("empty node yields no pmf") {
    const auto pmfs = record_pmf({{1, {}}, {2, {0.5}}}, 0.1);
    CHECK(pmfs.size() == 1);
    CHECK(pmfs.count(2) == 1);
  }
  SECTION("normalized for random inputs") {
    RandomStream rng(1);
    for (int i = 0; i < 100; ++i) {
      std::vector<double> waits(1 + rng.below(200));
      for (auto& w : waits) w = rng.uniform(0.0, 20.0);
      const auto pmfs = record_pmf({{0, waits}}, rng.uniform(0.05, 1.0));
      CHECK(std::abs(pmfs.at(0).total_mass() - 1.0) < 1e-9);
      for (const auto& [bin, mass] : pmfs.at(0).mass) {
        CHECK(bin >= 0);
        CHECK(mass > 0.0);
      }
    }
  }
  SECTION("bin width must be positive") { CHECK_THROWS_AS(record_pmf({}, 0.0), domain_error); }
}

TEST_CASE("poisson demand", "[sim][demand]") {
  PoissonDemandSpec spec;
  spec.rate_per_minute = 2.0;
  spec.duration_minutes = 500.0;
  spec.seed = 4;
  const auto a = poisson_demand(25, spec);
  const auto b = poisson_demand(25, spec);
  CHECK(a == b);
  // Poisson count: mean 1000, sd ~32
  CHECK(a.size() > 850);
  CHECK(a.size() < 1150);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].origin != a[i].destination);
    CHECK(a[i].request_time < 500.0);
    if (i) CHECK(a[i].request_time >= a[i - 1].request_time);
  }
  spec.max_requests = 100;
  CHECK(poisson_demand(25, spec).size() == 100);
  spec.rate_per_minute = 0.0;
  CHECK_THROWS_AS(poisson_demand(25, spec), domain_error);
}

TEST_CASE("demand CSV", "[sim][demand][io]") {
  SECTION("round trip") {
    PoissonDemandSpec spec;
    spec.max_requests = 50;
    const auto d = poisson_demand(9, spec);
    std::stringstream ss;
    write_demand_csv(ss, d);
    CHECK(load_demand_csv(ss) == d);
  }
  SECTION("unsorted rows are rejected with a line number") {
    std::stringstream ss("request_time_minutes,origin_node,destination_node\n1.0,0,1\n0.5,1,2\n");
    try {
      load_demand_csv(ss, "d.csv");
      FAIL("expected parse_error");
    } catch (const parse_error& e) {
      CHECK(e.line() == 3);
    }
  }
  SECTION("header is required") {
    std::stringstream ss("1.0,0,1\n");
    CHECK_THROWS_AS(load_demand_csv(ss), parse_error);
  }
}

TEST_CASE("taxi import", "[sim][demand][io]") {
  const std::vector<Coordinate> coords{{-74.00, 40.70}, {-73.98, 40.75}, {-73.95, 40.78}};
  std::stringstream ss(
      "vendor_id,pickup_datetime,pickup_longitude,pickup_latitude,dropoff_longitude,dropoff_latitude\n"
      "VTS,2013-05-01 00:10:30,-73.951,40.781,-74.001,40.699\n"
      "VTS,2013-05-01 00:02:00,-73.981,40.751,-73.949,40.779\n"
      "CMT,2013-05-01 00:05:00,-73.981,40.751,-73.980,40.752\n"
      "CMT,2013-04-30 23:59:00,-74.0,40.7,-73.98,40.75\n");
  TaxiImportStats stats;
  const auto d = load_taxi_demand(ss, coords, &stats);
  CHECK(stats.rows == 4);
  CHECK(stats.same_node == 1);
  REQUIRE(d.size() == 3);
  CHECK(d[0].request_time == 0.0);
  CHECK(d[0].origin == 0);
  CHECK(d[1].request_time == Approx(3.0));
  CHECK(d[1].origin == 1);
  CHECK(d[1].destination == 2);
  CHECK(d[2].request_time == Approx(11.5));
  CHECK(d[2].origin == 2);
  CHECK(d[2].destination == 0);

  std::stringstream bad("pickup_datetime,pickup_longitude,pickup_latitude,dropoff_longitude,dropoff_latitude\n"
                        "yesterday,0,0,1,1\n");
  CHECK_THROWS_AS(load_taxi_demand(bad, coords), parse_error);
  std::stringstream no_col("pickup_datetime,pickup_longitude\n");
  CHECK_THROWS_AS(load_taxi_demand(no_col, coords), parse_error);
}

TEST_CASE("run_step1 small cases", "[sim]") {
  const auto net = grid_network(3, 0.5, 1.0, 2);
  ChoiceCoefficients sure;
  sure.asc_regular = 50.0;

  SECTION("co-located vehicle, zero mean wait, displayed at the floor") {
    const std::vector<TripRequest> demand{{0, 4, 8, 1.0}};
    const auto out = run_step1(net, demand, sure, desk_config(), std::vector<Vehicle>{{0, 4, 0.0}});
    REQUIRE(out.events.size() == 1);
    const auto& ev = out.events[0];
    CHECK(ev.outcome == Outcome::accepted);
    CHECK(ev.mean_wait == 0.0);
    CHECK(ev.displayed_wait == kMinDisplayedWait);
    CHECK(ev.probability == prob_regular(sure, {2.0, 0.0}, {0.1, 0.0}));
    CHECK(ev.realized_wait == 0.0);
    REQUIRE(out.pmfs.count(4));
    CHECK(out.pmfs.at(4).mass.size() == 1);
    CHECK(out.pmfs.at(4).mass.at(0) == 1.0);
  }
  SECTION("empty demand") {
    const auto out = run_step1(net, {}, ChoiceCoefficients{}, desk_config());
    CHECK(out.events.empty());
    CHECK(out.pmfs.empty());
    CHECK(out.totals.requests == 0);
  }
  SECTION("unsorted demand") {
    const std::vector<TripRequest> demand{{0, 1, 2, 5.0}, {1, 2, 3, 4.0}};
    CHECK_THROWS_AS(run_step1(net, demand, ChoiceCoefficients{}, desk_config()), domain_error);
  }
  SECTION("demand outside the connected part") {
    const Network split(4, {{0, 1, 1.0}, {1, 0, 1.0}, {2, 3, 1.0}, {3, 2, 1.0}});
    const std::vector<TripRequest> demand{{0, 0, 1, 0.0}, {1, 2, 3, 1.0}};
    CHECK_THROWS_AS(run_step1(split, demand, ChoiceCoefficients{}, desk_config()), domain_error);
  }
  SECTION("invalid config") {
    auto cfg = desk_config();
    cfg.fleet_size = 0;
    CHECK_THROWS_AS(run_step1(net, {}, ChoiceCoefficients{}, cfg), validation_error);
    cfg = desk_config();
    cfg.sigma_range = {0.5, 0.2};
    CHECK_THROWS_AS(run_step1(net, {}, ChoiceCoefficients{}, cfg), validation_error);
  }
}

TEST_CASE("run_step1 at desk scale", "[sim]") {
  const auto net = grid_network(15, 0.2, 1.0, 7);
  const auto demand = desk_demand(net);
  REQUIRE(demand.size() == 5000);
  const auto out = run_step1(net, demand, ChoiceCoefficients{}, desk_config());

  SECTION("conservation") {
    CHECK(out.totals.requests == 5000);
    CHECK(out.totals.accepted + out.totals.rejected + out.totals.unassignable == 5000);
    std::size_t served = 0;
    for (const auto& [node, c] : out.counts) {
      CHECK(c.accepted + c.rejected + c.unassignable == c.requests);
      if (out.pmfs.count(node)) {
        CHECK(out.pmfs.at(node).served == c.accepted);
        CHECK(std::abs(out.pmfs.at(node).total_mass() - 1.0) < 1e-9);
      } else {
        CHECK(c.accepted == 0);
      }
      served += c.accepted;
    }
    CHECK(served == out.totals.accepted);
  }

  SECTION("realized acceptances concentrate on the summed probabilities") {
    const double tol = 3.0 * std::sqrt(out.acceptance_variance);
    INFO("accepted " << out.totals.accepted << " expected " << out.expected_acceptances);
    CHECK(std::abs(out.totals.accepted - out.expected_acceptances) <= tol);
  }

  SECTION("no vehicle serves overlapping trips") {
    std::map<std::int64_t, double> busy_until;
    for (const auto& ev : out.events) {
      if (ev.outcome == Outcome::unassignable) continue;
      CHECK(busy_until[ev.vehicle] <= ev.request_time);
      if (ev.outcome == Outcome::accepted) {
        CHECK(ev.available_at >= ev.request_time);
        busy_until[ev.vehicle] = ev.available_at;
      }
    }
  }

  SECTION("replayed log: each recorded wait is the dispatch minimum") {
    auto fleet = out.initial_fleet;
    std::map<NodeId, std::vector<double>> served;
    for (const auto& ev : out.events) {
      const auto times = shortest_times(net, ev.origin, Direction::to_target);
      double best = INFINITY;
      for (const auto& v : fleet)
        if (v.available_at <= ev.request_time) best = std::min(best, times[v.current_node]);
      if (ev.outcome == Outcome::unassignable) {
        CHECK((std::isinf(best) || best > 30.0));
        continue;
      }
      auto& v = fleet[ev.vehicle];
      CHECK(v.available_at <= ev.request_time);
      CHECK(ev.mean_wait == times[v.current_node]);
      CHECK(ev.mean_wait == best);
      CHECK(ev.mean_wait == Approx(shortest_path_mean(net, v.current_node, ev.origin).mean_time));
      if (ev.outcome == Outcome::accepted) {
        v.current_node = ev.destination;
        v.available_at = ev.available_at;
        served[ev.origin].push_back(ev.mean_wait);
      }
    }
    const auto pmfs = record_pmf(served, 0.1);
    REQUIRE(pmfs.size() == out.pmfs.size());
    for (const auto& [node, pmf] : pmfs) CHECK(pmf.mass == out.pmfs.at(node).mass);
  }

  SECTION("deterministic under a seed") {
    const auto again = run_step1(net, demand, ChoiceCoefficients{}, desk_config());
    REQUIRE(again.events.size() == out.events.size());
    for (std::size_t i = 0; i < out.events.size(); ++i) {
      CHECK(again.events[i].outcome == out.events[i].outcome);
      CHECK(again.events[i].realized_wait == out.events[i].realized_wait);
      CHECK(again.events[i].sigma == out.events[i].sigma);
    }
    CHECK(again.acceptance_share == out.acceptance_share);
    const auto other = run_step1(net, demand, ChoiceCoefficients{}, desk_config(2));
    CHECK(other.acceptance_share != out.acceptance_share);
  }

  SECTION("sigma draws come from the configured range") {
    for (const auto& ev : out.events) {
      CHECK(ev.sigma >= 0.1);
      CHECK(ev.sigma <= 1.0);
    }
  }
}

TEST_CASE("saturated choice accepts every assignable request", "[sim]") {
  const auto net = grid_network(15, 0.2, 1.0, 7);
  const auto demand = desk_demand(net);
  ChoiceCoefficients sure;
  sure.asc_regular = 50.0;
  auto cfg = desk_config();
  cfg.fleet_size = 10;  // small fleet so some requests find nobody idle
  const auto out = run_step1(net, demand, sure, cfg);
  CHECK(out.totals.unassignable > 0);
  CHECK(out.totals.rejected == 0);
  CHECK(out.totals.accepted == out.totals.requests - out.totals.unassignable);
}

TEST_CASE("huge fleet: acceptance approaches the zero-wait probability", "[sim]") {
  const auto net = grid_network(4, 0.2, 1.0, 3);
  PoissonDemandSpec spec;
  spec.rate_per_minute = 1.0;
  spec.max_requests = 4000;
  spec.seed = 5;
  const auto demand = poisson_demand(net.node_count(), spec);
  auto cfg = desk_config();
  cfg.fleet_size = 1000;
  const auto out = run_step1(net, demand, ChoiceCoefficients{}, cfg);
  const double p0 = prob_regular(ChoiceCoefficients{}, {2.0, 0.0}, {kMinDisplayedWait, 0.0});
  std::size_t at_zero = 0;
  for (const auto& ev : out.events) at_zero += ev.outcome != Outcome::unassignable && ev.mean_wait == 0.0;
  CHECK(at_zero == demand.size());
  const double n = static_cast<double>(demand.size());
  CHECK(std::abs(out.acceptance_share - p0) <= 3.0 * std::sqrt(p0 * (1 - p0) / n));
}
