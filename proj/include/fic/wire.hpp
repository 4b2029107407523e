#pragma once

// Newline-delimited JSON messages exchanged with live/replay clients.

#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "fic/scenario.hpp"

namespace fic::net {

struct OperatorInput {
  double t = 0;
  sim::Vec3d x_m = sim::Vec3d::Zero();
  double k_h = 0;
  TeleopMode mode = TeleopMode::kOffset;
};

struct StateFrame {
  double t = 0;
  sim::Vec3d x_r = sim::Vec3d::Zero();
  sim::Vec3d x_d = sim::Vec3d::Zero();
  sim::Vec3d f_r = sim::Vec3d::Zero();
  sim::Vec3d f_master = sim::Vec3d::Zero();
  bool bond = false;
  double delay = 0;
};

struct EventMessage {
  std::string kind;  // disconnect | reconnect | bond_break
  double t = 0;
};

struct ErrorMessage {
  std::string message;
};

using WireMessage = std::variant<OperatorInput, StateFrame, EventMessage, ErrorMessage>;

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses one line. Unknown fields are ignored; unknown types, malformed
/// JSON and missing or mistyped fields raise ProtocolError.
WireMessage parse_message(std::string_view line);

/// Serializes without the trailing newline.
std::string encode(const WireMessage& msg);

}  // namespace fic::net
