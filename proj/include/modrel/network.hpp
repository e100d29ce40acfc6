#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <queue>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "modrel/csv.hpp"
#include "modrel/errors.hpp"
#include "modrel/rng.hpp"

namespace modrel {

using NodeId = std::int64_t;

struct Edge {
  NodeId from;
  NodeId to;
  double mean_time;  // minutes

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Coordinate {
  double x;
  double y;
};

/// Directed road network carrying mean edge travel times. Immutable after
/// construction. Parallel edges collapse to the fastest one.
class Network {
 public:
  Network(std::size_t node_count, std::vector<Edge> edges) : node_count_(node_count) {
    for (const auto& e : edges) {
      if (e.from < 0 || e.to < 0 || static_cast<std::size_t>(e.from) >= node_count ||
          static_cast<std::size_t>(e.to) >= node_count)
        throw domain_error("Network: edge endpoint out of range");
      if (!(e.mean_time > 0.0) || !std::isfinite(e.mean_time))
        throw domain_error("Network: edge mean time must be positive");
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
      return std::tie(a.from, a.to, a.mean_time) < std::tie(b.from, b.to, b.mean_time);
    });
    // sorted by time within a (from, to) run, so unique keeps the minimum
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](const Edge& a, const Edge& b) {
                              return a.from == b.from && a.to == b.to;
                            }),
                edges.end());
    edges_ = std::move(edges);
    build_index();
  }

  std::size_t node_count() const noexcept { return node_count_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }

  bool contains(NodeId n) const noexcept {
    return n >= 0 && static_cast<std::size_t>(n) < node_count_;
  }

  // Outgoing edges of a node, ordered by target.
  std::span<const Edge> out_edges(NodeId n) const {
    return {edges_.data() + out_offset_[n], edges_.data() + out_offset_[n + 1]};
  }

  // Indices into edges() of edges entering a node.
  std::span<const std::size_t> in_edge_ids(NodeId n) const {
    return {in_ids_.data() + in_offset_[n], in_ids_.data() + in_offset_[n + 1]};
  }

  std::optional<double> edge_time(NodeId from, NodeId to) const {
    for (const auto& e : out_edges(from))
      if (e.to == to) return e.mean_time;
    return std::nullopt;
  }

  const std::vector<Coordinate>& coordinates() const noexcept { return coordinates_; }
  void set_coordinates(std::vector<Coordinate> coords) {
    if (coords.size() != node_count_)
      throw domain_error("Network: coordinate count must equal node count");
    coordinates_ = std::move(coords);
  }

 private:
  void build_index() {
    out_offset_.assign(node_count_ + 1, 0);
    in_offset_.assign(node_count_ + 1, 0);
    for (const auto& e : edges_) {
      ++out_offset_[e.from + 1];
      ++in_offset_[e.to + 1];
    }
    for (std::size_t i = 0; i < node_count_; ++i) {
      out_offset_[i + 1] += out_offset_[i];
      in_offset_[i + 1] += in_offset_[i];
    }
    in_ids_.resize(edges_.size());
    auto fill = in_offset_;
    for (std::size_t i = 0; i < edges_.size(); ++i) in_ids_[fill[edges_[i].to]++] = i;
  }

  std::size_t node_count_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> out_offset_;
  std::vector<std::size_t> in_offset_;
  std::vector<std::size_t> in_ids_;
  std::vector<Coordinate> coordinates_;
};

/// Reads "from,to,mean_minutes" rows. A header row is optional. Node count is
/// one past the largest id seen.
inline Network load_edge_list(std::istream& in, const std::string& source = "edges") {
  csv::Reader reader(in, source);
  std::vector<std::string_view> f;
  std::vector<Edge> edges;
  NodeId max_id = -1;
  bool first = true;
  while (reader.next(f)) {
    if (first && f.size() == 3 && !csv::try_real(f[0])) {
      first = false;
      continue;  // header
    }
    first = false;
    reader.expect_columns(f, 3);
    const NodeId from = reader.integer(f[0], "from");
    const NodeId to = reader.integer(f[1], "to");
    const double t = reader.real(f[2], "mean_minutes");
    if (from < 0 || to < 0) reader.fail("node ids must be non-negative");
    if (!(t > 0.0) || !std::isfinite(t)) reader.fail("edge mean time must be positive");
    edges.push_back({from, to, t});
    max_id = std::max({max_id, from, to});
  }
  if (edges.empty()) throw parse_error(source, reader.line(), "edge list is empty");
  return Network(static_cast<std::size_t>(max_id + 1), std::move(edges));
}

inline void write_edge_list(std::ostream& out, const Network& net) {
  out << "from,to,mean_minutes\n";
  auto old = out.precision(17);
  for (const auto& e : net.edges()) out << e.from << ',' << e.to << ',' << e.mean_time << '\n';
  out.precision(old);
}

// "node,x,y" rows, header required, one per node in [0, node_count).
inline std::vector<Coordinate> load_node_coordinates(std::istream& in, std::size_t node_count,
                                                     const std::string& source = "nodes") {
  csv::Reader reader(in, source);
  std::vector<std::string_view> f;
  if (!reader.next(f)) reader.fail("missing header row");
  reader.expect_header(f, {"node", "x", "y"});
  std::vector<Coordinate> coords(node_count, {NAN, NAN});
  while (reader.next(f)) {
    reader.expect_columns(f, 3);
    const auto id = reader.integer(f[0], "node");
    if (id < 0 || static_cast<std::size_t>(id) >= node_count) reader.fail("node id out of range");
    coords[id] = {reader.real(f[1], "x"), reader.real(f[2], "y")};
  }
  for (std::size_t i = 0; i < node_count; ++i)
    if (std::isnan(coords[i].x))
      throw parse_error(source, reader.line(), "no coordinate for node " + std::to_string(i));
  return coords;
}

/// side x side grid with bidirectional links between 4-neighbours. Every
/// directed edge gets its own uniform draw from [time_min, time_max].
/// Node (r, c) has id r * side + c and coordinate (c, r).
inline Network grid_network(std::size_t side, double time_min, double time_max,
                            std::uint64_t seed) {
  if (side < 2) throw domain_error("grid_network: side must be at least 2");
  if (!(time_min > 0.0) || !(time_max >= time_min) || !std::isfinite(time_max))
    throw domain_error("grid_network: require 0 < time_min <= time_max");
  RandomStream rng(seed);
  std::vector<Edge> edges;
  const auto id = [side](std::size_t r, std::size_t c) { return static_cast<NodeId>(r * side + c); };
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = 0; c < side; ++c) {
      if (c + 1 < side) {
        edges.push_back({id(r, c), id(r, c + 1), rng.uniform(time_min, time_max)});
        edges.push_back({id(r, c + 1), id(r, c), rng.uniform(time_min, time_max)});
      }
      if (r + 1 < side) {
        edges.push_back({id(r, c), id(r + 1, c), rng.uniform(time_min, time_max)});
        edges.push_back({id(r + 1, c), id(r, c), rng.uniform(time_min, time_max)});
      }
    }
  Network net(side * side, std::move(edges));
  std::vector<Coordinate> coords;
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = 0; c < side; ++c)
      coords.push_back({static_cast<double>(c), static_cast<double>(r)});
  net.set_coordinates(std::move(coords));
  return net;
}

enum class Direction { from_source, to_target };

namespace detail {

inline std::pair<std::vector<double>, std::vector<NodeId>> dijkstra(const Network& net, NodeId root,
                                                                     Direction dir) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(net.node_count(), inf);
  std::vector<NodeId> pred(net.node_count(), -1);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[root] = 0.0;
  heap.push({0.0, root});
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    const auto relax = [&](NodeId v, double w) {
      if (d + w < dist[v]) {
        dist[v] = d + w;
        pred[v] = u;
        heap.push({dist[v], v});
      }
    };
    if (dir == Direction::from_source) {
      for (const auto& e : net.out_edges(u)) relax(e.to, e.mean_time);
    } else {
      for (auto i : net.in_edge_ids(u)) relax(net.edges()[i].from, net.edges()[i].mean_time);
    }
  }
  return {std::move(dist), std::move(pred)};
}

}  // namespace detail

/// Shortest mean travel times from `root` to every node (from_source), or
/// from every node to `root` (to_target). Unreachable nodes hold +inf.
inline std::vector<double> shortest_times(const Network& net, NodeId root, Direction dir) {
  if (!net.contains(root)) throw domain_error("shortest_times: node out of range");
  return detail::dijkstra(net, root, dir).first;
}

struct PathResult {
  double mean_time;
  std::vector<NodeId> path;
};

inline PathResult shortest_path_mean(const Network& net, NodeId from, NodeId to) {
  if (!net.contains(from) || !net.contains(to))
    throw domain_error("shortest_path_mean: node out of range");
  if (from == to) return {0.0, {from}};
  auto [dist, pred] = detail::dijkstra(net, from, Direction::from_source);
  if (std::isinf(dist[to]))
    throw reachability_error("node " + std::to_string(to) + " is unreachable from node " +
                             std::to_string(from));
  std::vector<NodeId> path;
  for (NodeId v = to; v != -1; v = pred[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  // re-sum along the path so the reported time is exactly its edge sum
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) total += *net.edge_time(path[i], path[i + 1]);
  return {total, std::move(path)};
}

/// Strongly connected component label per node (Kosaraju, iterative).
inline std::vector<std::size_t> strong_components(const Network& net) {
  const std::size_t n = net.node_count();
  std::vector<char> seen(n, 0);
  std::vector<NodeId> order;
  order.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::vector<std::pair<NodeId, std::size_t>> stack{{static_cast<NodeId>(s), 0}};
    seen[s] = 1;
    while (!stack.empty()) {
      auto& [u, next] = stack.back();
      auto out = net.out_edges(u);
      if (next < out.size()) {
        const NodeId v = out[next++].to;
        if (!seen[v]) {
          seen[v] = 1;
          stack.push_back({v, 0});
        }
      } else {
        order.push_back(u);
        stack.pop_back();
      }
    }
  }
  const std::size_t unset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> comp(n, unset);
  std::size_t label = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (comp[*it] != unset) continue;
    std::vector<NodeId> stack{*it};
    comp[*it] = label;
    while (!stack.empty()) {
      const NodeId u = stack.back();
      stack.pop_back();
      for (auto i : net.in_edge_ids(u)) {
        const NodeId v = net.edges()[i].from;
        if (comp[v] == unset) {
          comp[v] = label;
          stack.push_back(v);
        }
      }
    }
    ++label;
  }
  return comp;
}

inline bool is_strongly_connected(const Network& net) {
  const auto comp = strong_components(net);
  return std::all_of(comp.begin(), comp.end(), [](std::size_t c) { return c == 0; });
}

}  // namespace modrel
