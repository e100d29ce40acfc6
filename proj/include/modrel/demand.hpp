#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "modrel/csv.hpp"
#include "modrel/errors.hpp"
#include "modrel/network.hpp"
#include "modrel/rng.hpp"

namespace modrel {

struct TripRequest {
  std::int64_t id = 0;
  NodeId origin = 0;
  NodeId destination = 0;
  double request_time = 0.0;  // minutes from simulation start

  friend bool operator==(const TripRequest&, const TripRequest&) = default;
};

/// Synthetic demand: a homogeneous Poisson process of `rate_per_minute` over
/// [0, duration), truncated after `max_requests` arrivals when that is
/// nonzero. Origin and destination are independent uniform nodes, redrawn
/// until distinct.
struct PoissonDemandSpec {
  double rate_per_minute = 4.0;
  double duration_minutes = 1440.0;
  std::size_t max_requests = 0;  // 0 = no cap
  std::uint64_t seed = 1;
};

inline std::vector<TripRequest> poisson_demand(std::size_t node_count,
                                               const PoissonDemandSpec& spec) {
  if (node_count < 2) throw domain_error("poisson_demand: need at least two nodes");
  if (!(spec.rate_per_minute > 0.0) || !std::isfinite(spec.rate_per_minute))
    throw domain_error("poisson_demand: rate_per_minute must be positive");
  if (!(spec.duration_minutes > 0.0) || !std::isfinite(spec.duration_minutes))
    throw domain_error("poisson_demand: duration_minutes must be positive");
  RandomStream arrivals(derive_seed(spec.seed, {1}));
  RandomStream places(derive_seed(spec.seed, {2}));
  std::vector<TripRequest> out;
  double t = arrivals.exponential(spec.rate_per_minute);
  while (t < spec.duration_minutes && (spec.max_requests == 0 || out.size() < spec.max_requests)) {
    TripRequest r;
    r.id = static_cast<std::int64_t>(out.size());
    r.request_time = t;
    r.origin = static_cast<NodeId>(places.below(node_count));
    do {
      r.destination = static_cast<NodeId>(places.below(node_count));
    } while (r.destination == r.origin);
    out.push_back(r);
    t += arrivals.exponential(spec.rate_per_minute);
  }
  return out;
}

inline void validate_demand(std::span<const TripRequest> demand, const Network& net) {
  double last = 0.0;
  for (const auto& r : demand) {
    if (!net.contains(r.origin) || !net.contains(r.destination))
      throw domain_error("demand: request " + std::to_string(r.id) + " references an unknown node");
    if (r.origin == r.destination)
      throw domain_error("demand: request " + std::to_string(r.id) + " has origin == destination");
    if (!(r.request_time >= 0.0) || !std::isfinite(r.request_time))
      throw domain_error("demand: request " + std::to_string(r.id) + " has a negative time");
    if (r.request_time < last) throw domain_error("demand: requests are not sorted by time");
    last = r.request_time;
  }
}

// Header "request_time_minutes,origin_node,destination_node"; ids follow row order.
inline std::vector<TripRequest> load_demand_csv(std::istream& in,
                                                const std::string& source = "demand") {
  csv::Reader reader(in, source);
  std::vector<std::string_view> f;
  if (!reader.next(f)) reader.fail("missing header row");
  reader.expect_header(f, {"request_time_minutes", "origin_node", "destination_node"});
  std::vector<TripRequest> out;
  while (reader.next(f)) {
    reader.expect_columns(f, 3);
    TripRequest r;
    r.id = static_cast<std::int64_t>(out.size());
    r.request_time = reader.real(f[0], "request_time_minutes");
    r.origin = reader.integer(f[1], "origin_node");
    r.destination = reader.integer(f[2], "destination_node");
    if (!(r.request_time >= 0.0)) reader.fail("request time must be non-negative");
    if (r.origin < 0 || r.destination < 0) reader.fail("node ids must be non-negative");
    if (r.origin == r.destination) reader.fail("origin and destination must differ");
    if (!out.empty() && r.request_time < out.back().request_time)
      reader.fail("requests must be sorted by time");
    out.push_back(r);
  }
  return out;
}

inline void write_demand_csv(std::ostream& out, std::span<const TripRequest> demand) {
  out << "request_time_minutes,origin_node,destination_node\n";
  auto old = out.precision(17);
  for (const auto& r : demand)
    out << r.request_time << ',' << r.origin << ',' << r.destination << '\n';
  out.precision(old);
}

namespace detail {

// Days since 1970-01-01 for a proleptic Gregorian date.
inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

// "YYYY-MM-DD HH:MM:SS" -> minutes since the Unix epoch.
inline std::optional<double> parse_timestamp_minutes(std::string_view s) {
  if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != ' ' && s[10] != 'T') ||
      s[13] != ':' || s[16] != ':')
    return std::nullopt;
  auto y = csv::try_integer(s.substr(0, 4));
  auto mo = csv::try_integer(s.substr(5, 2));
  auto d = csv::try_integer(s.substr(8, 2));
  auto h = csv::try_integer(s.substr(11, 2));
  auto mi = csv::try_integer(s.substr(14, 2));
  auto se = csv::try_real(s.substr(17));
  if (!y || !mo || !d || !h || !mi || !se || *mo < 1 || *mo > 12 || *d < 1 || *d > 31 || *h > 23 ||
      *mi > 59)
    return std::nullopt;
  const auto days = days_from_civil(*y, static_cast<unsigned>(*mo), static_cast<unsigned>(*d));
  return static_cast<double>(days) * 1440.0 + static_cast<double>(*h * 60 + *mi) + *se / 60.0;
}

inline NodeId nearest_node(std::span<const Coordinate> coords, double x, double y) {
  NodeId best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const double dx = coords[i].x - x, dy = coords[i].y - y;
    const double d = dx * dx + dy * dy;
    if (d < best_d) {
      best_d = d;
      best = static_cast<NodeId>(i);
    }
  }
  return best;
}

}  // namespace detail

struct TaxiImportStats {
  std::size_t rows = 0;
  std::size_t kept = 0;
  std::size_t same_node = 0;  // dropped: pick-up and drop-off snap to one node
};

/// Maps NYC-taxi-style trip rows onto network nodes. Columns are located by
/// header name: pickup_datetime, pickup_longitude, pickup_latitude,
/// dropoff_longitude, dropoff_latitude (others ignored). Each end snaps to
/// the nearest node in `coords` (x = longitude, y = latitude). Times become
/// minutes after the earliest pick-up; output is time-sorted.
inline std::vector<TripRequest> load_taxi_demand(std::istream& in,
                                                 std::span<const Coordinate> coords,
                                                 TaxiImportStats* stats = nullptr,
                                                 const std::string& source = "taxi") {
  if (coords.empty()) throw domain_error("load_taxi_demand: node coordinates are required");
  csv::Reader reader(in, source);
  std::vector<std::string_view> f;
  if (!reader.next(f)) reader.fail("missing header row");
  std::map<std::string, std::size_t, std::less<>> col;
  for (std::size_t i = 0; i < f.size(); ++i) col[std::string(f[i])] = i;
  const char* needed[] = {"pickup_datetime", "pickup_longitude", "pickup_latitude",
                          "dropoff_longitude", "dropoff_latitude"};
  std::size_t idx[5];
  for (int i = 0; i < 5; ++i) {
    auto it = col.find(needed[i]);
    if (it == col.end()) reader.fail(std::string("missing column '") + needed[i] + "'");
    idx[i] = it->second;
  }
  const std::size_t width = f.size();

  struct Row {
    double minutes;
    NodeId origin;
    NodeId destination;
  };
  std::vector<Row> rows;
  TaxiImportStats st;
  while (reader.next(f)) {
    reader.expect_columns(f, width);
    ++st.rows;
    auto t = detail::parse_timestamp_minutes(f[idx[0]]);
    if (!t) reader.fail("bad pickup_datetime '" + std::string(f[idx[0]]) + "'");
    const NodeId o = detail::nearest_node(coords, reader.real(f[idx[1]], needed[1]),
                                          reader.real(f[idx[2]], needed[2]));
    const NodeId d = detail::nearest_node(coords, reader.real(f[idx[3]], needed[3]),
                                          reader.real(f[idx[4]], needed[4]));
    if (o == d) {
      ++st.same_node;
      continue;
    }
    rows.push_back({*t, o, d});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.minutes < b.minutes; });
  std::vector<TripRequest> out;
  out.reserve(rows.size());
  for (const auto& r : rows)
    out.push_back({static_cast<std::int64_t>(out.size()), r.origin, r.destination,
                   r.minutes - rows.front().minutes});
  st.kept = out.size();
  if (stats) *stats = st;
  return out;
}

}  // namespace modrel
