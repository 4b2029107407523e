#include "fic/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fic::sim {

using nlohmann::json;

namespace {

Vec3d vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument(std::string(what) + ": expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec_json(const Eigen::Ref<const VecXd>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

TeleopMode parse_mode(const std::string& s) {
  if (s == "offset") return TeleopMode::kOffset;
  if (s == "velocity") return TeleopMode::kVelocity;
  throw std::invalid_argument("unknown teleoperation mode '" + s + "'");
}

const char* mode_name(TeleopMode m) { return m == TeleopMode::kOffset ? "offset" : "velocity"; }

FicParams<double> parse_fic(const json& j, const FicParams<double>& d) {
  return {get_or(j, "stiffness", d.stiffness()), get_or(j, "saturation_error", d.saturation_error()),
          get_or(j, "max_force", d.max_force()), get_or(j, "onset_fraction", d.onset_fraction())};
}

json fic_json(const FicParams<double>& p) {
  return {{"stiffness", p.stiffness()},
          {"saturation_error", p.saturation_error()},
          {"max_force", p.max_force()},
          {"onset_fraction", p.onset_fraction()}};
}

LinkSelector parse_link(const std::string& s) {
  if (s == "m2r") return LinkSelector::kMasterToReplica;
  if (s == "r2m") return LinkSelector::kReplicaToMaster;
  if (s == "both") return LinkSelector::kBoth;
  throw std::invalid_argument("unknown link selector '" + s + "'");
}

const char* link_name(LinkSelector l) {
  switch (l) {
    case LinkSelector::kMasterToReplica: return "m2r";
    case LinkSelector::kReplicaToMaster: return "r2m";
    default: return "both";
  }
}

std::vector<OperatorSample> parse_trace_rows(const json& rows) {
  std::vector<OperatorSample> out;
  for (const auto& r : rows) {
    OperatorSample s;
    s.t = r.at("t").get<double>();
    s.x_master = vec3(r.at("x_m"), "operator.trace.x_m");
    s.gain = get_or(r, "k_h", 0.0);
    s.mode = parse_mode(get_or<std::string>(r, "mode", "offset"));
    out.push_back(s);
  }
  return out;
}

}  // namespace

OperatorTrace::OperatorTrace(std::vector<OperatorSample> samples) : samples_(std::move(samples)) {
  for (std::size_t i = 1; i < samples_.size(); ++i)
    if (!(samples_[i].t >= samples_[i - 1].t))
      throw std::invalid_argument("operator trace: timestamps must be non-decreasing");
}

OperatorSample OperatorTrace::at(double t) const {
  if (samples_.empty()) return OperatorSample{t};
  if (t <= samples_.front().t) return {t, samples_.front().x_master, samples_.front().gain, samples_.front().mode};
  if (t >= samples_.back().t) return {t, samples_.back().x_master, samples_.back().gain, samples_.back().mode};
  auto hi = std::upper_bound(samples_.begin(), samples_.end(), t,
                             [](double v, const OperatorSample& s) { return v < s.t; });
  const auto& b = *hi;
  const auto& a = *(hi - 1);
  const double span = b.t - a.t;
  const double w = span > 0 ? (t - a.t) / span : 1.0;
  return {t, a.x_master + w * (b.x_master - a.x_master), a.gain + w * (b.gain - a.gain), a.mode};
}

OperatorTrace OperatorTrace::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open operator trace " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<OperatorSample> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 6 columns");
    OperatorSample s;
    s.t = std::stod(cells[0]);
    s.x_master = {std::stod(cells[1]), std::stod(cells[2]), std::stod(cells[3])};
    s.gain = std::stod(cells[4]);
    s.mode = parse_mode(cells[5]);
    rows.push_back(s);
  }
  return OperatorTrace(std::move(rows));
}

Vec3d circle_reference(double t, const Vec3d& center, double radius, double period) {
  if (!(period > 0)) throw std::invalid_argument("circle_reference: period must be positive");
  const double phase = 2 * std::numbers::pi * t / period;
  return center + radius * Vec3d(std::cos(phase), std::sin(phase), 0);
}

void ScenarioConfig::validate() const {
  if (!(rate >= 100 && rate <= 10000)) throw std::invalid_argument("tick rate must lie in [100, 10000] Hz");
  if (!(duration > 0)) throw std::invalid_argument("duration must be positive");
  if (!(velocity_gain >= 0)) throw std::invalid_argument("velocity_gain must be non-negative");
  if (!(frame_rate > 0)) throw std::invalid_argument("frame_rate must be positive");
  fic::validate(plant);
  link.validate();
  if (initial_q && initial_q->size() != dof(plant))
    throw std::invalid_argument("initial_q has the wrong dimension for the plant");
  if (const auto* c = std::get_if<CircleReference>(&reference)) {
    if (!(c->radius >= 0) || !(c->period > 0))
      throw std::invalid_argument("circle reference needs radius >= 0 and period > 0");
  }
  if (const auto* w = std::get_if<WaypointReference>(&reference)) {
    for (std::size_t i = 1; i < w->points.size(); ++i)
      if (w->points[i].t < w->points[i - 1].t) throw std::invalid_argument("waypoints must be time ordered");
  }
  for (const auto& ob : obstacles)
    if (!(ob.stiffness > 0) || !(ob.damping >= 0))
      throw std::invalid_argument("obstacle needs stiffness > 0 and damping >= 0");
  if (!(bond.stiffness > 0) || !(bond.break_force > 0))
    throw std::invalid_argument("bond needs stiffness > 0 and break_force > 0");
}

ScenarioConfig parse_scenario(const json& j, const std::filesystem::path& base_dir) {
  const int version = get_or(j, "schema_version", kSchemaVersion);
  if (version != kSchemaVersion)
    throw std::invalid_argument("unsupported scenario schema_version " + std::to_string(version));

  ScenarioConfig cfg;
  cfg.name = get_or<std::string>(j, "name", cfg.name);
  cfg.duration = get_or(j, "duration", cfg.duration);
  cfg.rate = get_or(j, "rate", cfg.rate);
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
  cfg.velocity_gain = get_or(j, "velocity_gain", cfg.velocity_gain);
  cfg.frame_rate = get_or(j, "frame_rate", cfg.frame_rate);

  if (j.contains("plant")) {
    const auto& p = j["plant"];
    const auto kind = get_or<std::string>(p, "kind", "point_mass");
    if (kind == "point_mass") {
      cfg.plant = PointMass<double>{get_or(p, "mass", 1.0)};
    } else if (kind == "two_link") {
      TwoLinkArm<double> a;
      a.m1 = get_or(p, "m1", a.m1);
      a.m2 = get_or(p, "m2", a.m2);
      a.l1 = get_or(p, "l1", a.l1);
      a.l2 = get_or(p, "l2", a.l2);
      a.lc1 = get_or(p, "lc1", a.l1 / 2);
      a.lc2 = get_or(p, "lc2", a.l2 / 2);
      a.i1 = get_or(p, "i1", a.m1 * a.l1 * a.l1 / 12);
      a.i2 = get_or(p, "i2", a.m2 * a.l2 * a.l2 / 12);
      a.gravity = get_or(p, "gravity", a.gravity);
      cfg.plant = a;
    } else {
      throw std::invalid_argument("unknown plant kind '" + kind + "'");
    }
    if (p.contains("initial_q")) {
      const auto v = p["initial_q"].get<std::vector<double>>();
      cfg.initial_q = Eigen::Map<const VecXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
  }

  if (j.contains("replica_fic")) cfg.replica_fic = parse_fic(j["replica_fic"], cfg.replica_fic);
  if (j.contains("master_fic")) cfg.master_fic = parse_fic(j["master_fic"], cfg.master_fic);
  if (j.contains("planner")) {
    const auto& p = j["planner"];
    cfg.planner = PlannerParams<double>(get_or(p, "natural_frequency", cfg.planner.natural_frequency),
                                        get_or(p, "desired_speed", cfg.planner.desired_speed));
  }
  if (j.contains("link")) {
    const auto& l = j["link"];
    cfg.link.delay = get_or(l, "delay", cfg.link.delay);
    cfg.link.jitter = get_or(l, "jitter", cfg.link.jitter);
    cfg.link.drop_prob = get_or(l, "drop_prob", cfg.link.drop_prob);
    cfg.link.ordered = get_or(l, "ordered", cfg.link.ordered);
  }
  cfg.link.seed = cfg.seed;

  if (j.contains("reference")) {
    const auto& r = j["reference"];
    const auto kind = get_or<std::string>(r, "kind", "none");
    if (kind == "circle") {
      CircleReference c;
      if (r.contains("center")) c.center = vec3(r["center"], "reference.center");
      c.radius = get_or(r, "radius", c.radius);
      c.period = get_or(r, "period", c.period);
      cfg.reference = c;
    } else if (kind == "waypoints") {
      WaypointReference w;
      for (const auto& p : r.at("points")) w.points.push_back({p.at("t").get<double>(), vec3(p.at("x"), "waypoint")});
      cfg.reference = w;
    } else if (kind != "none") {
      throw std::invalid_argument("unknown reference kind '" + kind + "'");
    }
  }

  if (j.contains("operator")) {
    const auto& o = j["operator"];
    const auto source = get_or<std::string>(o, "source", "scripted");
    if (source == "live") {
      cfg.operator_source = OperatorSource::kLive;
    } else if (source == "scripted") {
      if (o.contains("trace_file")) {
        std::filesystem::path p = o["trace_file"].get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        cfg.trace = OperatorTrace::read_csv(p);
      } else if (o.contains("trace")) {
        cfg.trace = OperatorTrace(parse_trace_rows(o["trace"]));
      }
    } else {
      throw std::invalid_argument("unknown operator source '" + source + "'");
    }
  }

  for (const auto& o : get_or(j, "obstacles", json::array())) {
    Obstacle<double> ob;
    const auto kind = get_or<std::string>(o, "kind", "box");
    if (kind == "box") {
      Box<double> b;
      b.center = vec3(o.at("center"), "obstacle.center");
      b.half_extents = vec3(o.at("half_extents"), "obstacle.half_extents");
      ob.geometry = b;
    } else if (kind == "half_space") {
      HalfSpace<double> h;
      h.point = vec3(o.at("point"), "obstacle.point");
      h.normal = vec3(o.at("normal"), "obstacle.normal");
      if (!(h.normal.norm() > 0)) throw std::invalid_argument("half_space normal must be non-zero");
      ob.geometry = h;
    } else {
      throw std::invalid_argument("unknown obstacle kind '" + kind + "'");
    }
    ob.stiffness = get_or(o, "stiffness", ob.stiffness);
    ob.damping = get_or(o, "damping", ob.damping);
    cfg.obstacles.push_back(ob);
  }

  if (j.contains("bond")) {
    const auto& b = j["bond"];
    cfg.bond.attached = get_or(b, "attached", false);
    cfg.bond_anchor_at_start = !b.contains("anchor");
    if (!cfg.bond_anchor_at_start) cfg.bond.anchor = vec3(b["anchor"], "bond.anchor");
    cfg.bond.stiffness = get_or(b, "stiffness", cfg.bond.stiffness);
    cfg.bond.break_force = get_or(b, "break_force", cfg.bond.break_force);
  }

  for (const auto& e : get_or(j, "events", json::array())) {
    ScenarioEvent ev;
    const auto kind = e.at("kind").get<std::string>();
    if (kind == "disconnect") ev.kind = EventKind::kDisconnect;
    else if (kind == "reconnect") ev.kind = EventKind::kReconnect;
    else if (kind == "bond_rearm") ev.kind = EventKind::kBondRearm;
    else throw std::invalid_argument("unknown event kind '" + kind + "'");
    ev.t = e.at("t").get<double>();
    ev.link = parse_link(get_or<std::string>(e, "link", "both"));
    if (e.contains("anchor")) ev.anchor = vec3(e["anchor"], "event.anchor");
    cfg.events.push_back(ev);
  }

  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return parse_scenario(j, path.parent_path());
}

json to_json(const ScenarioConfig& cfg) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = cfg.name;
  j["duration"] = cfg.duration;
  j["rate"] = cfg.rate;
  j["seed"] = cfg.seed;
  j["velocity_gain"] = cfg.velocity_gain;
  j["frame_rate"] = cfg.frame_rate;

  json plant;
  if (const auto* pm = std::get_if<PointMass<double>>(&cfg.plant)) {
    plant = {{"kind", "point_mass"}, {"mass", pm->mass}};
  } else {
    const auto& a = std::get<TwoLinkArm<double>>(cfg.plant);
    plant = {{"kind", "two_link"}, {"m1", a.m1},   {"m2", a.m2}, {"l1", a.l1}, {"l2", a.l2}, {"lc1", a.lc1},
             {"lc2", a.lc2},       {"i1", a.i1},   {"i2", a.i2}, {"gravity", a.gravity}};
  }
  if (cfg.initial_q) plant["initial_q"] = vec_json(*cfg.initial_q);
  j["plant"] = plant;

  j["replica_fic"] = fic_json(cfg.replica_fic);
  j["master_fic"] = fic_json(cfg.master_fic);
  j["planner"] = {{"natural_frequency", cfg.planner.natural_frequency},
                  {"desired_speed", cfg.planner.desired_speed}};
  j["link"] = {{"delay", cfg.link.delay},
               {"jitter", cfg.link.jitter},
               {"drop_prob", cfg.link.drop_prob},
               {"ordered", cfg.link.ordered}};

  if (const auto* c = std::get_if<CircleReference>(&cfg.reference)) {
    j["reference"] = {{"kind", "circle"}, {"center", vec_json(c->center)}, {"radius", c->radius}, {"period", c->period}};
  } else if (const auto* w = std::get_if<WaypointReference>(&cfg.reference)) {
    json pts = json::array();
    for (const auto& p : w->points) pts.push_back({{"t", p.t}, {"x", vec_json(p.x)}});
    j["reference"] = {{"kind", "waypoints"}, {"points", pts}};
  } else {
    j["reference"] = {{"kind", "none"}};
  }

  if (cfg.operator_source == OperatorSource::kLive) {
    j["operator"] = {{"source", "live"}};
  } else {
    json rows = json::array();
    for (const auto& s : cfg.trace.samples())
      rows.push_back({{"t", s.t}, {"x_m", vec_json(s.x_master)}, {"k_h", s.gain}, {"mode", mode_name(s.mode)}});
    j["operator"] = {{"source", "scripted"}, {"trace", rows}};
  }

  json obstacles = json::array();
  for (const auto& ob : cfg.obstacles) {
    json o;
    if (const auto* b = std::get_if<Box<double>>(&ob.geometry)) {
      o = {{"kind", "box"}, {"center", vec_json(b->center)}, {"half_extents", vec_json(b->half_extents)}};
    } else {
      const auto& h = std::get<HalfSpace<double>>(ob.geometry);
      o = {{"kind", "half_space"}, {"point", vec_json(h.point)}, {"normal", vec_json(h.normal)}};
    }
    o["stiffness"] = ob.stiffness;
    o["damping"] = ob.damping;
    obstacles.push_back(o);
  }
  j["obstacles"] = obstacles;

  j["bond"] = {{"attached", cfg.bond.attached}, {"stiffness", cfg.bond.stiffness}, {"break_force", cfg.bond.break_force}};
  if (!cfg.bond_anchor_at_start) j["bond"]["anchor"] = vec_json(cfg.bond.anchor);

  json events = json::array();
  for (const auto& e : cfg.events) {
    const char* kind = e.kind == EventKind::kDisconnect  ? "disconnect"
                       : e.kind == EventKind::kReconnect ? "reconnect"
                                                         : "bond_rearm";
    json ev = {{"kind", kind}, {"t", e.t}, {"link", link_name(e.link)}};
    if (e.anchor) ev["anchor"] = vec_json(*e.anchor);
    events.push_back(ev);
  }
  j["events"] = events;
  return j;
}

std::uint64_t config_hash(const ScenarioConfig& cfg) {
  const std::string text = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace fic::sim
