#include <gtest/gtest.h>

#include "fic/wire.hpp"

using namespace fic::net;
using fic::sim::Vec3d;
using nlohmann::json;

TEST(Wire, ParsesOperatorInput) {
  const auto msg = parse_message(R"({"type":"operator_input","t":1.5,"x_m":[0.01,-0.02,0],"k_h":0.7,"mode":"velocity"})");
  const auto& in = std::get<OperatorInput>(msg);
  EXPECT_EQ(in.t, 1.5);
  EXPECT_EQ(in.x_m, Vec3d(0.01, -0.02, 0));
  EXPECT_EQ(in.k_h, 0.7);
  EXPECT_EQ(in.mode, fic::TeleopMode::kVelocity);
}

TEST(Wire, IgnoresUnknownFields) {
  const auto msg = parse_message(R"({"type":"operator_input","t":0,"x_m":[0,0,0],"k_h":1,"mode":"offset","extra":{"a":1}})");
  EXPECT_TRUE(std::holds_alternative<OperatorInput>(msg));
}

TEST(Wire, RejectsUnknownTypesAndBadFields) {
  EXPECT_THROW(parse_message(R"({"type":"teleport"})"), ProtocolError);
  EXPECT_THROW(parse_message("not json"), ProtocolError);
  EXPECT_THROW(parse_message("[1,2,3]"), ProtocolError);
  EXPECT_THROW(parse_message(R"({"type":"operator_input","t":0,"x_m":[0,0],"k_h":1})"), ProtocolError);
  EXPECT_THROW(parse_message(R"({"type":"operator_input","t":0,"x_m":[0,0,"a"],"k_h":1})"), ProtocolError);
  EXPECT_THROW(parse_message(R"({"type":"operator_input","t":0,"x_m":[0,0,0],"k_h":"hi"})"), ProtocolError);
  EXPECT_THROW(parse_message(R"({"type":"operator_input","t":0,"x_m":[0,0,0],"k_h":1,"mode":"turbo"})"),
               ProtocolError);
  EXPECT_THROW(parse_message(R"({"type":"event","kind":"explode","t":1})"), ProtocolError);
}

TEST(Wire, RoundTripsEveryMessage) {
  const std::vector<WireMessage> msgs{
      OperatorInput{0.25, Vec3d(0.01, 0.02, -0.03), 0.4, fic::TeleopMode::kOffset},
      StateFrame{12.5, Vec3d(0.1, 0.2, 0), Vec3d(0.11, 0.19, 0), Vec3d(10, 0, 0), Vec3d(-1, 0.5, 0), true, 0.2},
      EventMessage{"bond_break", 3.25},
      ErrorMessage{"bad input"}};
  for (const auto& m : msgs) {
    const std::string line = encode(m);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    EXPECT_EQ(encode(parse_message(line)), line);
    EXPECT_EQ(parse_message(line).index(), m.index());
  }
}

TEST(Wire, StateFrameFieldNames) {
  const auto j = json::parse(encode(StateFrame{1, Vec3d::Zero(), Vec3d::Zero(), Vec3d(10, 0, 0), Vec3d::Zero(), false, 0.2}));
  EXPECT_EQ(j["type"], "state_frame");
  for (const char* key : {"t", "x_r", "x_d", "f_r", "f_master", "bond", "delay"}) EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["f_r"], json::array({10.0, 0.0, 0.0}));
}
