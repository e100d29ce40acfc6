#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "modrel/choice.hpp"
#include "modrel/demand.hpp"
#include "modrel/errors.hpp"
#include "modrel/optimize.hpp"
#include "modrel/sim.hpp"

namespace modrel {

using json = nlohmann::ordered_json;

struct GridSpec {
  std::size_t side = 15;
  double time_min = 0.2;
  double time_max = 1.0;
  std::uint64_t seed = 7;
};

struct NetworkSource {
  std::optional<GridSpec> grid;
  std::optional<std::string> edge_list;    // path
  std::optional<std::string> coordinates;  // node,x,y path (optional)
};

struct DemandSource {
  std::optional<PoissonDemandSpec> poisson;
  std::optional<std::string> csv;   // request_time_minutes,origin_node,destination_node
  std::optional<std::string> taxi;  // NYC-style trips; needs network coordinates
};

/// One reproducible two-step experiment. Each entry of sigma_ranges runs
/// the simulation and the display optimization with that range.
struct ExperimentConfig {
  NetworkSource network;
  DemandSource demand;
  SimConfig sim_config;
  OptimizerConfig optimizer_config;
  ChoiceCoefficients coefficients;
  std::vector<SigmaRange> sigma_ranges;
  std::string output_dir = "out";
};

namespace detail {

class JsonReader {
 public:
  JsonReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw validation_error(path_.empty() ? "<root>" : path_, "expected an object");
  }

  // Rejects keys outside `allowed` so typos do not pass silently.
  void allow(std::initializer_list<const char*> allowed) const {
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!ok.count(it.key())) throw validation_error(field(it.key()), "unknown field");
  }

  bool has(const char* key) const { return j_.contains(key); }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  JsonReader object(const char* key) const { return JsonReader(j_.at(key), field(key)); }
  const json& raw(const char* key) const { return j_.at(key); }

  void real(const char* key, double& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw validation_error(field(key), "expected a number");
    out = v.get<double>();
  }

  template <class Int>
  void integer(const char* key, Int& out) const {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || (std::is_unsigned_v<Int> && v.get<std::int64_t>() < 0 &&
                                   !v.is_number_unsigned()))
      throw validation_error(field(key), "expected a non-negative integer");
    out = v.get<Int>();
  }

  void boolean(const char* key, bool& out) const {
    if (!has(key)) return;
    if (!j_.at(key).is_boolean()) throw validation_error(field(key), "expected true or false");
    out = j_.at(key).get<bool>();
  }

  void string(const char* key, std::string& out) const {
    if (!has(key)) return;
    if (!j_.at(key).is_string()) throw validation_error(field(key), "expected a string");
    out = j_.at(key).get<std::string>();
  }

  void pair(const char* key, double& a, double& b) const {
    if (!has(key)) return;
    read_pair(j_.at(key), field(key), a, b);
  }

  static void read_pair(const json& v, const std::string& where, double& a, double& b) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw validation_error(where, "expected [low, high]");
    a = v[0].get<double>();
    b = v[1].get<double>();
  }

 private:
  const json& j_;
  std::string path_;
};

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const json& root) {
  using detail::JsonReader;
  ExperimentConfig cfg;
  JsonReader r(root, "");
  r.allow({"network", "demand", "sim_config", "optimizer_config", "coefficients", "sigma_ranges",
           "output_dir"});

  if (!r.has("network")) throw validation_error("network", "required");
  {
    auto n = r.object("network");
    n.allow({"grid", "edge_list", "coordinates"});
    if (n.has("grid") == n.has("edge_list"))
      throw validation_error("network", "exactly one of 'grid' or 'edge_list' is required");
    if (n.has("grid")) {
      auto g = n.object("grid");
      g.allow({"side", "time_min", "time_max", "seed"});
      GridSpec spec;
      g.integer("side", spec.side);
      g.real("time_min", spec.time_min);
      g.real("time_max", spec.time_max);
      g.integer("seed", spec.seed);
      if (spec.side < 2) throw validation_error("network.grid.side", "must be at least 2");
      if (!(spec.time_min > 0.0) || !(spec.time_max >= spec.time_min))
        throw validation_error("network.grid", "require 0 < time_min <= time_max");
      cfg.network.grid = spec;
    } else {
      std::string path;
      n.string("edge_list", path);
      cfg.network.edge_list = path;
    }
    if (n.has("coordinates")) {
      std::string path;
      n.string("coordinates", path);
      cfg.network.coordinates = path;
    }
  }

  if (!r.has("demand")) throw validation_error("demand", "required");
  {
    auto d = r.object("demand");
    d.allow({"poisson", "csv", "taxi"});
    const int sources = d.has("poisson") + d.has("csv") + d.has("taxi");
    if (sources != 1)
      throw validation_error("demand", "exactly one of 'poisson', 'csv' or 'taxi' is required");
    if (d.has("poisson")) {
      auto p = d.object("poisson");
      p.allow({"rate_per_minute", "duration_minutes", "max_requests", "seed"});
      PoissonDemandSpec spec;
      p.real("rate_per_minute", spec.rate_per_minute);
      p.real("duration_minutes", spec.duration_minutes);
      p.integer("max_requests", spec.max_requests);
      p.integer("seed", spec.seed);
      if (!(spec.rate_per_minute > 0.0))
        throw validation_error("demand.poisson.rate_per_minute", "must be positive (zero demand)");
      if (!(spec.duration_minutes > 0.0))
        throw validation_error("demand.poisson.duration_minutes", "must be positive (zero demand)");
      cfg.demand.poisson = spec;
    } else if (d.has("csv")) {
      std::string path;
      d.string("csv", path);
      cfg.demand.csv = path;
    } else {
      std::string path;
      d.string("taxi", path);
      if (!cfg.network.coordinates && !cfg.network.grid)
        throw validation_error("demand.taxi", "requires network.coordinates");
      cfg.demand.taxi = path;
    }
  }

  if (r.has("sim_config")) {
    auto s = r.object("sim_config");
    s.allow({"fleet_size", "reliable_wait", "bin_width", "sigma_range", "max_dispatch_mean", "seed"});
    s.integer("fleet_size", cfg.sim_config.fleet_size);
    s.real("reliable_wait", cfg.sim_config.reliable_wait);
    s.real("bin_width", cfg.sim_config.bin_width);
    s.pair("sigma_range", cfg.sim_config.sigma_range.low, cfg.sim_config.sigma_range.high);
    s.real("max_dispatch_mean", cfg.sim_config.max_dispatch_mean);
    s.integer("seed", cfg.sim_config.seed);
  }
  cfg.sim_config.validate();

  if (r.has("optimizer_config")) {
    auto o = r.object("optimizer_config");
    o.allow({"percentile_range", "percentile_step", "sigma_range", "reliable_wait",
             "include_mean_percentile", "seed"});
    if (o.has("percentile_range")) {
      const auto& v = o.raw("percentile_range");
      if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
        throw validation_error("optimizer_config.percentile_range", "expected [low, high] integers");
      cfg.optimizer_config.percentile_low = v[0].get<int>();
      cfg.optimizer_config.percentile_high = v[1].get<int>();
    }
    o.integer("percentile_step", cfg.optimizer_config.percentile_step);
    o.pair("sigma_range", cfg.optimizer_config.sigma_range.low,
           cfg.optimizer_config.sigma_range.high);
    o.real("reliable_wait", cfg.optimizer_config.reliable_wait);
    o.boolean("include_mean_percentile", cfg.optimizer_config.include_mean_percentile);
    o.integer("seed", cfg.optimizer_config.seed);
  }
  cfg.optimizer_config.validate();

  if (r.has("coefficients")) {
    auto c = r.object("coefficients");
    c.allow({"asc_regular", "beta_log_wait", "beta_exp_reldelay"});
    c.real("asc_regular", cfg.coefficients.asc_regular);
    c.real("beta_log_wait", cfg.coefficients.beta_log_wait);
    c.real("beta_exp_reldelay", cfg.coefficients.beta_exp_reldelay);
  }

  if (r.has("sigma_ranges")) {
    const auto& v = r.raw("sigma_ranges");
    if (!v.is_array() || v.empty())
      throw validation_error("sigma_ranges", "expected a non-empty list of [low, high]");
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string where = "sigma_ranges[" + std::to_string(i) + "]";
      SigmaRange range;
      JsonReader::read_pair(v[i], where, range.low, range.high);
      range.validate(where.c_str());
      cfg.sigma_ranges.push_back(range);
    }
  } else {
    cfg.sigma_ranges.push_back(cfg.sim_config.sigma_range);
  }
  r.string("output_dir", cfg.output_dir);
  return cfg;
}

inline json to_json(const SigmaRange& r) { return json::array({r.low, r.high}); }

inline json to_json(const ChoiceCoefficients& c) {
  return {{"asc_regular", c.asc_regular},
          {"beta_log_wait", c.beta_log_wait},
          {"beta_exp_reldelay", c.beta_exp_reldelay}};
}

inline json to_json(const SimConfig& s) {
  return {{"fleet_size", s.fleet_size},       {"reliable_wait", s.reliable_wait},
          {"bin_width", s.bin_width},         {"sigma_range", to_json(s.sigma_range)},
          {"max_dispatch_mean", s.max_dispatch_mean}, {"seed", s.seed}};
}

inline json to_json(const OptimizerConfig& o) {
  return {{"percentile_range", json::array({o.percentile_low, o.percentile_high})},
          {"percentile_step", o.percentile_step},
          {"sigma_range", to_json(o.sigma_range)},
          {"reliable_wait", o.reliable_wait},
          {"include_mean_percentile", o.include_mean_percentile},
          {"seed", o.seed}};
}

// Effective configuration, every default filled in.
inline json to_json(const ExperimentConfig& cfg) {
  json net = json::object();
  if (cfg.network.grid) {
    const auto& g = *cfg.network.grid;
    net["grid"] = {{"side", g.side}, {"time_min", g.time_min}, {"time_max", g.time_max}, {"seed", g.seed}};
  }
  if (cfg.network.edge_list) net["edge_list"] = *cfg.network.edge_list;
  if (cfg.network.coordinates) net["coordinates"] = *cfg.network.coordinates;
  json dem = json::object();
  if (cfg.demand.poisson) {
    const auto& p = *cfg.demand.poisson;
    dem["poisson"] = {{"rate_per_minute", p.rate_per_minute},
                      {"duration_minutes", p.duration_minutes},
                      {"max_requests", p.max_requests},
                      {"seed", p.seed}};
  }
  if (cfg.demand.csv) dem["csv"] = *cfg.demand.csv;
  if (cfg.demand.taxi) dem["taxi"] = *cfg.demand.taxi;
  json ranges = json::array();
  for (const auto& r : cfg.sigma_ranges) ranges.push_back(to_json(r));
  return {{"network", net},
          {"demand", dem},
          {"sim_config", to_json(cfg.sim_config)},
          {"optimizer_config", to_json(cfg.optimizer_config)},
          {"coefficients", to_json(cfg.coefficients)},
          {"sigma_ranges", ranges},
          {"output_dir", cfg.output_dir}};
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw validation_error(path.string(), "cannot open config file");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw validation_error(path.string(), std::string("invalid JSON: ") + e.what());
  }
  auto cfg = parse_experiment_config(root);
  // relative data paths are taken relative to the config file
  const auto base = path.parent_path();
  const auto resolve = [&](std::optional<std::string>& p) {
    if (p && std::filesystem::path(*p).is_relative()) p = (base / *p).string();
  };
  resolve(cfg.network.edge_list);
  resolve(cfg.network.coordinates);
  resolve(cfg.demand.csv);
  resolve(cfg.demand.taxi);
  return cfg;
}

}  // namespace modrel
