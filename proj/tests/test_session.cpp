#include <future>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "fic/line_socket.hpp"
#include "fic/session.hpp"
#include "fic/wire.hpp"

using namespace fic::net;
using namespace std::chrono_literals;
using fic::sim::Vec3d;

namespace {

const std::filesystem::path kScenarios = FIC_SCENARIO_DIR;

struct Server {
  std::promise<int> port_promise;
  std::future<fic::sim::RunLog> result;
  std::ostringstream log;
  int port = 0;

  Server(const fic::sim::ScenarioConfig& cfg, double duration, double rtf) {
    SessionOptions opts;
    opts.max_duration = duration;
    opts.real_time_factor = rtf;
    opts.log = &log;
    opts.on_listening = [this](int p) { port_promise.set_value(p); };
    auto fut = port_promise.get_future();
    result = std::async(std::launch::async, [cfg, opts] { return serve_session(cfg, opts); });
    port = fut.get();
  }
};

fic::sim::ScenarioConfig live_circle() { return fic::sim::load_scenario(kScenarios / "live_circle.json"); }

std::vector<StateFrame> read_frames(LineSocket& s, std::chrono::milliseconds quiet) {
  std::vector<StateFrame> frames;
  while (auto line = s.read_line(quiet)) {
    const auto msg = parse_message(*line);
    if (const auto* f = std::get_if<StateFrame>(&msg)) frames.push_back(*f);
  }
  return frames;
}

}  // namespace

TEST(ServeSession, RequiresLiveOperator) {
  EXPECT_THROW(serve_session(fic::sim::load_scenario(kScenarios / "superimposition.json"), {}),
               std::invalid_argument);
}

TEST(ServeSession, WithoutClientRunsPureAutonomy) {
  Server server(live_circle(), 1.0, 20);
  const auto log = server.result.get();
  EXPECT_EQ(log.rows.size(), 1000u);
  EXPECT_TRUE(log.meta.live);
  for (const auto& r : log.rows) ASSERT_EQ(r.x_prime_d, Vec3d::Zero());
}

TEST(ServeSession, HapticGainScalesFeedbackInFrames) {
  Server server(live_circle(), 5.0, 4);
  auto client = LineSocket::connect("127.0.0.1", server.port);
  ASSERT_TRUE(client.send_line(encode(OperatorInput{0, Vec3d::Zero(), 0.25, fic::TeleopMode::kOffset})));

  std::vector<StateFrame> frames;
  bool raised = false;
  while (auto line = client.read_line(2000ms)) {
    const auto msg = parse_message(*line);
    const auto* f = std::get_if<StateFrame>(&msg);
    if (!f) continue;
    frames.push_back(*f);
    if (!raised && f->t > 2.5) {
      ASSERT_TRUE(client.send_line(encode(OperatorInput{f->t, Vec3d::Zero(), 1.0, fic::TeleopMode::kOffset})));
      raised = true;
    }
  }
  server.result.get();

  int quarter = 0, full = 0;
  for (const auto& f : frames) {
    if (f.f_r.norm() < 1) continue;
    if ((f.f_master - 0.25 * f.f_r).norm() <= 1e-12) ++quarter;
    else if ((f.f_master - f.f_r).norm() <= 1e-12) ++full;
    else ADD_FAILURE() << "frame at t=" << f.t << " has f_master unrelated to f_r";
  }
  EXPECT_GT(quarter, 0);
  EXPECT_GT(full, 0);
  ASSERT_FALSE(frames.empty());
  EXPECT_EQ(frames.front().delay, 0.2);
}

TEST(ServeSession, ClientDisconnectIsLoggedAndRunContinues) {
  Server server(live_circle(), 2.0, 10);
  {
    auto client = LineSocket::connect("127.0.0.1", server.port);
    ASSERT_TRUE(client.send_line(encode(OperatorInput{0, Vec3d(0.03, 0, 0), 0.5, fic::TeleopMode::kOffset})));
    ASSERT_TRUE(client.read_line(1000ms).has_value());
    std::this_thread::sleep_for(50ms);
  }
  const auto log = server.result.get();
  EXPECT_EQ(log.rows.size(), 2000u);
  EXPECT_FALSE(log.aborted);
  std::vector<std::string> kinds;
  for (const auto& e : log.events) kinds.push_back(e.kind);
  EXPECT_EQ(kinds, (std::vector<std::string>{"client_connect", "client_disconnect"}));
  // The last input stays held after the client left.
  EXPECT_EQ(log.rows.back().x_prime_d, Vec3d(0.03, 0, 0));
  EXPECT_NE(server.log.str().find("client disconnected"), std::string::npos);
}

TEST(ServeSession, InvalidInputGetsErrorFrame) {
  Server server(live_circle(), 1.0, 5);
  auto client = LineSocket::connect("127.0.0.1", server.port);
  ASSERT_TRUE(client.send_line(R"({"type":"warp","t":0})"));
  bool got_error = false;
  while (auto line = client.read_line(1000ms)) {
    if (std::holds_alternative<ErrorMessage>(parse_message(*line))) {
      got_error = true;
      break;
    }
  }
  EXPECT_TRUE(got_error);
  client.close();
  EXPECT_EQ(server.result.get().rows.size(), 1000u);
}

TEST(ReplayLog, StreamsDecimatedFramesThenCloses) {
  auto cfg = fic::sim::load_scenario(kScenarios / "velcro_pull.json");
  const auto log = fic::sim::run_scenario(cfg);

  std::promise<int> port_promise;
  auto port_future = port_promise.get_future();
  SessionOptions opts;
  opts.real_time_factor = 40;
  std::ostringstream server_log;
  opts.log = &server_log;
  opts.on_listening = [&](int p) { port_promise.set_value(p); };
  auto done = std::async(std::launch::async, [&] { replay_log(log, opts, 60); });

  auto client = LineSocket::connect("127.0.0.1", port_future.get());
  std::vector<StateFrame> frames;
  std::vector<std::string> events;
  while (auto line = client.read_line(2000ms)) {
    const auto msg = parse_message(*line);
    if (const auto* f = std::get_if<StateFrame>(&msg)) frames.push_back(*f);
    if (const auto* e = std::get_if<EventMessage>(&msg)) events.push_back(e->kind);
  }
  done.get();
  const std::size_t decimation = 17;  // round(1000 / 60)
  EXPECT_EQ(frames.size(), (log.rows.size() + decimation - 1) / decimation);
  ASSERT_FALSE(frames.empty());
  EXPECT_EQ(frames.front().t, 0.0);
  EXPECT_EQ(frames[1].x_r, log.rows[decimation].x_r);
  EXPECT_EQ(events, std::vector<std::string>{"bond_break"});
}
