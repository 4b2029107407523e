#include "fic/wire.hpp"

#include <cmath>

namespace fic::net {

using nlohmann::json;

namespace {

double number(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) throw ProtocolError(std::string("field '") + key + "' must be a number");
  const double v = j[key].get<double>();
  if (!std::isfinite(v)) throw ProtocolError(std::string("field '") + key + "' must be finite");
  return v;
}

sim::Vec3d vec3(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 3)
    throw ProtocolError(std::string("field '") + key + "' must be an array of 3 numbers");
  sim::Vec3d v;
  for (int i = 0; i < 3; ++i) {
    if (!j[key][i].is_number()) throw ProtocolError(std::string("field '") + key + "' must hold numbers");
    v[i] = j[key][i].get<double>();
  }
  if (!v.allFinite()) throw ProtocolError(std::string("field '") + key + "' must be finite");
  return v;
}

json arr(const sim::Vec3d& v) { return json::array({v.x(), v.y(), v.z()}); }

struct Encoder {
  json operator()(const OperatorInput& m) const {
    return {{"type", "operator_input"},
            {"t", m.t},
            {"x_m", arr(m.x_m)},
            {"k_h", m.k_h},
            {"mode", m.mode == TeleopMode::kOffset ? "offset" : "velocity"}};
  }
  json operator()(const StateFrame& m) const {
    return {{"type", "state_frame"}, {"t", m.t},         {"x_r", arr(m.x_r)}, {"x_d", arr(m.x_d)},
            {"f_r", arr(m.f_r)},     {"f_master", arr(m.f_master)}, {"bond", m.bond}, {"delay", m.delay}};
  }
  json operator()(const EventMessage& m) const { return {{"type", "event"}, {"kind", m.kind}, {"t", m.t}}; }
  json operator()(const ErrorMessage& m) const { return {{"type", "error"}, {"message", m.message}}; }
};

}  // namespace

WireMessage parse_message(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw ProtocolError("message must be an object with a string 'type'");
  const auto type = j["type"].get<std::string>();

  if (type == "operator_input") {
    OperatorInput m;
    m.t = number(j, "t");
    m.x_m = vec3(j, "x_m");
    m.k_h = number(j, "k_h");
    const auto mode = j.value("mode", std::string("offset"));
    if (mode == "offset") m.mode = TeleopMode::kOffset;
    else if (mode == "velocity") m.mode = TeleopMode::kVelocity;
    else throw ProtocolError("field 'mode' must be \"offset\" or \"velocity\"");
    return m;
  }
  if (type == "state_frame") {
    StateFrame m;
    m.t = number(j, "t");
    m.x_r = vec3(j, "x_r");
    m.x_d = vec3(j, "x_d");
    m.f_r = vec3(j, "f_r");
    m.f_master = vec3(j, "f_master");
    if (!j.contains("bond") || !j["bond"].is_boolean()) throw ProtocolError("field 'bond' must be a boolean");
    m.bond = j["bond"].get<bool>();
    m.delay = number(j, "delay");
    return m;
  }
  if (type == "event") {
    EventMessage m;
    if (!j.contains("kind") || !j["kind"].is_string()) throw ProtocolError("field 'kind' must be a string");
    m.kind = j["kind"].get<std::string>();
    if (m.kind != "disconnect" && m.kind != "reconnect" && m.kind != "bond_break")
      throw ProtocolError("unknown event kind '" + m.kind + "'");
    m.t = number(j, "t");
    return m;
  }
  if (type == "error") {
    return ErrorMessage{j.value("message", std::string{})};
  }
  throw ProtocolError("unknown message type '" + type + "'");
}

std::string encode(const WireMessage& msg) { return std::visit(Encoder{}, msg).dump(); }

}  // namespace fic::net
