#include "dtwin/config_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <regex>
#include <set>
#include <stdexcept>

namespace dtwin {

namespace {

using json = nlohmann::json;

enum class Family { none, power, frequency, bits, time, length };
enum class Range { any, positive, nonneg, unit, count };

const std::map<std::string, std::map<std::string, double>>& unit_table() {
  static const std::map<std::string, std::map<std::string, double>> t = {
      {"power", {{"W", 1.0}, {"mW", 1e-3}, {"uW", 1e-6}, {"kW", 1e3}}},
      {"frequency", {{"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}}},
      {"bits", {{"bit", 1.0}, {"bits", 1.0}, {"kbit", 1e3}, {"Mbit", 1e6}, {"Gbit", 1e9}}},
      {"time", {{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}}},
      {"length", {{"m", 1.0}, {"km", 1e3}}},
  };
  return t;
}

std::string family_name(Family f) {
  switch (f) {
    case Family::power: return "power";
    case Family::frequency: return "frequency";
    case Family::bits: return "bits";
    case Family::time: return "time";
    case Family::length: return "length";
    case Family::none: break;
  }
  return "none";
}

struct Field {
  Family family;
  Range range;
  std::function<double&(SimConfig&)> ref;
};

using FieldMap = std::map<std::string, Field>;

// Scalar numeric fields per section.
const std::map<std::string, FieldMap>& scalar_fields() {
  static const std::map<std::string, FieldMap> t = [] {
    std::map<std::string, FieldMap> m;
    auto& net = m["network"];
    net["region_width"] = {Family::length, Range::positive, [](SimConfig& c) -> double& { return c.net.region_width; }};
    net["region_height"] = {Family::length, Range::positive, [](SimConfig& c) -> double& { return c.net.region_height; }};
    net["ring_fraction"] = {Family::none, Range::unit, [](SimConfig& c) -> double& { return c.net.ring_fraction; }};
    net["coverage_radius"] = {Family::length, Range::positive, [](SimConfig& c) -> double& { return c.net.coverage_radius; }};
    net["p_max"] = {Family::power, Range::positive, [](SimConfig& c) -> double& { return c.net.p_max; }};
    net["f_local"] = {Family::frequency, Range::positive, [](SimConfig& c) -> double& { return c.net.f_local; }};
    net["f_edge_small"] = {Family::frequency, Range::positive, [](SimConfig& c) -> double& { return c.net.f_edge_small; }};
    net["f_edge_macro"] = {Family::frequency, Range::positive, [](SimConfig& c) -> double& { return c.net.f_edge_macro; }};
    net["bandwidth_small"] = {Family::frequency, Range::positive, [](SimConfig& c) -> double& { return c.net.bandwidth_small; }};
    net["bandwidth_macro"] = {Family::frequency, Range::positive, [](SimConfig& c) -> double& { return c.net.bandwidth_macro; }};
    net["path_loss_exp"] = {Family::none, Range::positive, [](SimConfig& c) -> double& { return c.net.path_loss_exp; }};
    net["noise_power"] = {Family::power, Range::positive, [](SimConfig& c) -> double& { return c.net.noise_power; }};
    net["min_distance"] = {Family::length, Range::positive, [](SimConfig& c) -> double& { return c.net.min_distance; }};
    net["walk_step"] = {Family::length, Range::nonneg, [](SimConfig& c) -> double& { return c.net.walk_step; }};

    auto& en = m["energy"];
    en["switched_cap"] = {Family::none, Range::positive, [](SimConfig& c) -> double& { return c.energy.switched_cap; }};
    en["cycles_per_bit"] = {Family::none, Range::positive, [](SimConfig& c) -> double& { return c.energy.cycles_per_bit; }};
    en["slot_len"] = {Family::time, Range::positive, [](SimConfig& c) -> double& { return c.energy.slot_len; }};
    en["edge_energy_coeff"] = {Family::power, Range::positive, [](SimConfig& c) -> double& { return c.energy.edge_energy_coeff; }};

    auto& ar = m["arrivals"];
    ar["mean_bits"] = {Family::bits, Range::nonneg, [](SimConfig& c) -> double& { return c.arrivals.mean_bits; }};
    ar["unit_bits"] = {Family::bits, Range::positive, [](SimConfig& c) -> double& { return c.arrivals.unit_bits; }};

    auto& ly = m["lyapunov"];
    ly["v_weight"] = {Family::none, Range::nonneg, [](SimConfig& c) -> double& { return c.lyapunov.v_weight; }};
    ly["infeasible_penalty"] = {Family::none, Range::any, [](SimConfig& c) -> double& { return c.lyapunov.infeasible_penalty; }};

    auto& tr = m["training"];
    tr["discount"] = {Family::none, Range::unit, [](SimConfig& c) -> double& { return c.training.discount; }};
    tr["lr_actor"] = {Family::none, Range::nonneg, [](SimConfig& c) -> double& { return c.training.lr_actor; }};
    tr["lr_critic"] = {Family::none, Range::nonneg, [](SimConfig& c) -> double& { return c.training.lr_critic; }};
    tr["entropy_coeff"] = {Family::none, Range::nonneg, [](SimConfig& c) -> double& { return c.training.entropy_coeff; }};
    tr["grad_clip"] = {Family::none, Range::nonneg, [](SimConfig& c) -> double& { return c.training.grad_clip; }};
    tr["init_log_std"] = {Family::none, Range::any, [](SimConfig& c) -> double& { return c.training.init_log_std; }};
    tr["reward_scale"] = {Family::none, Range::nonneg, [](SimConfig& c) -> double& { return c.training.reward_scale; }};
    return m;
  }();
  return t;
}

struct IntField {
  std::function<std::uint64_t&(SimConfig&)> ref;
  std::uint64_t min;
};

std::uint64_t& as_u64(std::size_t& v) { return reinterpret_cast<std::uint64_t&>(v); }

const std::map<std::string, std::map<std::string, IntField>>& int_fields() {
  static_assert(sizeof(std::size_t) == sizeof(std::uint64_t));
  static const std::map<std::string, std::map<std::string, IntField>> t = {
      {"network",
       {{"num_devices", {[](SimConfig& c) -> std::uint64_t& { return as_u64(c.net.num_devices); }, 1}},
        {"num_small_cells", {[](SimConfig& c) -> std::uint64_t& { return as_u64(c.net.num_small_cells); }, 0}}}},
      {"training",
       {{"t_max", {[](SimConfig& c) -> std::uint64_t& { return as_u64(c.training.t_max); }, 1}},
        {"total_steps", {[](SimConfig& c) -> std::uint64_t& { return c.training.total_steps; }, 0}},
        {"workers", {[](SimConfig& c) -> std::uint64_t& { return as_u64(c.training.workers); }, 1}},
        {"episode_len", {[](SimConfig& c) -> std::uint64_t& { return as_u64(c.training.episode_len); }, 1}}}},
  };
  return t;
}

// Keys handled outside the scalar/int tables.
const std::map<std::string, std::set<std::string>>& special_fields() {
  static const std::map<std::string, std::set<std::string>> t = {
      {"network", {"layout", "small_cell_positions", "mobility"}},
      {"arrivals", {"distribution"}},
      {"training", {"hidden"}},
  };
  return t;
}

const std::set<std::string>& top_level_keys() {
  static const std::set<std::string> t = {"version", "network", "energy", "arrivals", "lyapunov",
                                          "training", "scheme", "seeds", "eval_slots"};
  return t;
}

[[noreturn]] void reject(const std::string& field, const std::string& why) {
  throw std::invalid_argument("config field '" + field + "': " + why);
}

double read_number(const json& v, Family fam, const std::string& field) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    if (fam == Family::none) reject(field, "expects a plain number, got \"" + v.get<std::string>() + "\"");
    try {
      return parse_quantity(v.get<std::string>(), family_name(fam));
    } catch (const std::invalid_argument& e) {
      reject(field, e.what());
    }
  }
  reject(field, "expects a number");
}

void check_range(double v, Range r, const std::string& field) {
  if (!std::isfinite(v)) reject(field, "must be finite");
  switch (r) {
    case Range::positive:
      if (!(v > 0.0)) reject(field, "must be positive, got " + json(v).dump());
      break;
    case Range::nonneg:
      if (v < 0.0) reject(field, "must be non-negative, got " + json(v).dump());
      break;
    case Range::unit:
      if (v < 0.0 || v > 1.0) reject(field, "must lie in [0, 1], got " + json(v).dump());
      break;
    default:
      break;
  }
}

std::uint64_t read_count(const json& v, std::uint64_t min, const std::string& field) {
  if (!v.is_number_integer()) reject(field, "expects an integer");
  const auto x = v.get<std::int64_t>();
  if (x < 0 || static_cast<std::uint64_t>(x) < min)
    reject(field, "must be at least " + std::to_string(min) + ", got " + std::to_string(x));
  return static_cast<std::uint64_t>(x);
}

std::string layout_name(SmallCellLayout l) {
  switch (l) {
    case SmallCellLayout::ring: return "ring";
    case SmallCellLayout::random: return "random";
    case SmallCellLayout::explicit_positions: return "explicit";
  }
  return "ring";
}

}  // namespace

double parse_quantity(const std::string& text, const std::string& family) {
  static const std::regex re(R"(^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z]*)\s*$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw std::invalid_argument("cannot parse quantity \"" + text + "\"");
  const double value = std::stod(m[1].str());
  const std::string unit = m[2].str();
  const auto fam = unit_table().find(family);
  if (fam == unit_table().end()) throw std::invalid_argument("unknown unit family " + family);
  if (unit.empty()) return value;
  const auto u = fam->second.find(unit);
  if (u == fam->second.end())
    throw std::invalid_argument("unit \"" + unit + "\" is not a " + family + " unit");
  return value * u->second;
}

LoadedConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("config root must be an object");
  LoadedConfig out;
  SimConfig& cfg = out.config;

  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!top_level_keys().count(it.key())) reject(it.key(), "unknown key");

  if (doc.contains("version")) {
    const auto v = read_count(doc["version"], 1, "version");
    if (v != kConfigVersion) reject("version", "unsupported version " + std::to_string(v));
  }

  for (const auto& section : {"network", "energy", "arrivals", "lyapunov", "training"}) {
    const std::string sec = section;
    const json empty = json::object();
    const json& body = doc.contains(sec) ? doc[sec] : empty;
    if (!body.is_object()) reject(sec, "must be an object");

    const auto sf = scalar_fields().find(sec);
    const auto inf = int_fields().find(sec);
    const auto sp = special_fields().find(sec);
    for (auto it = body.begin(); it != body.end(); ++it) {
      const bool known = (sf != scalar_fields().end() && sf->second.count(it.key())) ||
                         (inf != int_fields().end() && inf->second.count(it.key())) ||
                         (sp != special_fields().end() && sp->second.count(it.key()));
      if (!known) reject(sec + "." + it.key(), "unknown key");
    }

    if (sf != scalar_fields().end())
      for (const auto& [key, field] : sf->second) {
        const std::string name = sec + "." + key;
        if (!body.contains(key)) {
          out.defaulted.push_back(name);
          continue;
        }
        const double v = read_number(body[key], field.family, name);
        check_range(v, field.range, name);
        field.ref(cfg) = v;
      }
    if (inf != int_fields().end())
      for (const auto& [key, field] : inf->second) {
        const std::string name = sec + "." + key;
        if (!body.contains(key)) {
          out.defaulted.push_back(name);
          continue;
        }
        field.ref(cfg) = read_count(body[key], field.min, name);
      }
  }

  if (doc.contains("network")) {
    const auto& net = doc["network"];
    if (net.contains("layout")) {
      const auto s = net["layout"].is_string() ? net["layout"].get<std::string>() : "";
      if (s == "ring") cfg.net.layout = SmallCellLayout::ring;
      else if (s == "random") cfg.net.layout = SmallCellLayout::random;
      else if (s == "explicit") cfg.net.layout = SmallCellLayout::explicit_positions;
      else reject("network.layout", "expects one of ring, random, explicit");
    }
    if (net.contains("small_cell_positions")) {
      const auto& arr = net["small_cell_positions"];
      if (!arr.is_array()) reject("network.small_cell_positions", "expects an array of [x, y]");
      for (const auto& p : arr) {
        if (!p.is_array() || p.size() != 2) reject("network.small_cell_positions", "expects [x, y] pairs");
        cfg.net.small_cell_positions.push_back({read_number(p[0], Family::length, "network.small_cell_positions"),
                                                read_number(p[1], Family::length, "network.small_cell_positions")});
      }
    }
    if (net.contains("mobility")) {
      const auto s = net["mobility"].is_string() ? net["mobility"].get<std::string>() : "";
      if (s == "fixed") cfg.net.mobility = Mobility::fixed;
      else if (s == "random_walk") cfg.net.mobility = Mobility::random_walk;
      else reject("network.mobility", "expects fixed or random_walk");
    }
  }
  if (doc.contains("arrivals") && doc["arrivals"].contains("distribution")) {
    const auto& d = doc["arrivals"]["distribution"];
    const auto s = d.is_string() ? d.get<std::string>() : "";
    if (s == "poisson") cfg.arrivals.distribution = ArrivalDistribution::poisson_scaled;
    else if (s == "uniform") cfg.arrivals.distribution = ArrivalDistribution::uniform;
    else reject("arrivals.distribution", "expects poisson or uniform");
  }
  if (doc.contains("training") && doc["training"].contains("hidden")) {
    const auto& h = doc["training"]["hidden"];
    if (!h.is_array() || h.empty()) reject("training.hidden", "expects a non-empty array of layer widths");
    cfg.training.hidden.clear();
    for (const auto& w : h) cfg.training.hidden.push_back(read_count(w, 1, "training.hidden"));
  }
  if (doc.contains("scheme")) {
    if (!doc["scheme"].is_string()) reject("scheme", "expects a string");
    try {
      cfg.scheme = scheme_from_string(doc["scheme"].get<std::string>());
    } catch (const std::invalid_argument& e) {
      reject("scheme", e.what());
    }
  } else {
    out.defaulted.push_back("scheme");
  }
  if (doc.contains("seeds")) {
    const auto& s = doc["seeds"];
    if (!s.is_array() || s.empty()) reject("seeds", "expects a non-empty array of integers");
    cfg.seeds.clear();
    for (const auto& v : s) cfg.seeds.push_back(read_count(v, 0, "seeds"));
  } else {
    out.defaulted.push_back("seeds");
  }
  if (doc.contains("eval_slots")) cfg.eval_slots = read_count(doc["eval_slots"], 0, "eval_slots");
  else out.defaulted.push_back("eval_slots");

  validate_config(cfg);
  return out;
}

LoadedConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

void validate_config(const SimConfig& cfg) {
  for (const auto& [sec, fields] : scalar_fields())
    for (const auto& [key, field] : fields) check_range(field.ref(const_cast<SimConfig&>(cfg)), field.range, sec + "." + key);
  if (cfg.net.num_devices < 1) reject("network.num_devices", "must be at least 1");
  if (cfg.net.ring_fraction > 0.5) reject("network.ring_fraction", "must not exceed 0.5");
  if (cfg.net.layout == SmallCellLayout::explicit_positions &&
      cfg.net.small_cell_positions.size() != cfg.net.num_small_cells)
    reject("network.small_cell_positions", "needs exactly num_small_cells entries");
  if (cfg.training.t_max < 1) reject("training.t_max", "must be at least 1");
  if (cfg.training.workers < 1) reject("training.workers", "must be at least 1");
  if (cfg.training.episode_len < 1) reject("training.episode_len", "must be at least 1");
  if (cfg.training.hidden.empty()) reject("training.hidden", "needs at least one layer");
  if (cfg.seeds.empty()) reject("seeds", "needs at least one seed");
}

json config_to_json(const SimConfig& cfg) {
  json j;
  j["version"] = kConfigVersion;
  for (const auto& [sec, fields] : scalar_fields())
    for (const auto& [key, field] : fields) j[sec][key] = field.ref(const_cast<SimConfig&>(cfg));
  for (const auto& [sec, fields] : int_fields())
    for (const auto& [key, field] : fields) j[sec][key] = field.ref(const_cast<SimConfig&>(cfg));
  j["network"]["layout"] = layout_name(cfg.net.layout);
  j["network"]["small_cell_positions"] = json::array();
  for (const auto& p : cfg.net.small_cell_positions) j["network"]["small_cell_positions"].push_back({p.x, p.y});
  j["network"]["mobility"] = cfg.net.mobility == Mobility::fixed ? "fixed" : "random_walk";
  j["arrivals"]["distribution"] =
      cfg.arrivals.distribution == ArrivalDistribution::poisson_scaled ? "poisson" : "uniform";
  j["training"]["hidden"] = cfg.training.hidden;
  j["scheme"] = to_string(cfg.scheme);
  j["seeds"] = cfg.seeds;
  j["eval_slots"] = cfg.eval_slots;
  return j;
}

std::uint64_t config_hash(const SimConfig& cfg) {
  const std::string s = config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dtwin
