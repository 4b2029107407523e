#pragma once

// Minimal blocking TCP socket speaking newline-delimited text.

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace fic::net {

class LineSocket {
 public:
  LineSocket() = default;
  explicit LineSocket(int fd) : fd_(fd) {}
  ~LineSocket() { close(); }
  LineSocket(LineSocket&& other) noexcept;
  LineSocket& operator=(LineSocket&& other) noexcept;
  LineSocket(const LineSocket&) = delete;
  LineSocket& operator=(const LineSocket&) = delete;

  /// Throws std::runtime_error if the connection cannot be made.
  static LineSocket connect(const std::string& host, int port);

  bool is_open() const { return fd_ >= 0; }
  int fd() const { return fd_; }
  void close();

  /// Appends '\n'. Returns false (and closes) if the peer is gone.
  bool send_line(const std::string& line);

  /// Reads whatever is available within `timeout` and returns the complete
  /// lines. Sets `closed` when the peer hung up.
  std::vector<std::string> read_lines(std::chrono::milliseconds timeout, bool& closed);

  /// Waits up to `timeout` for one complete line.
  std::optional<std::string> read_line(std::chrono::milliseconds timeout);

 private:
  int fd_ = -1;
  std::string buffer_;
  std::vector<std::string> ready_;
};

class LineListener {
 public:
  /// Binds and listens; port 0 picks an ephemeral port.
  LineListener(const std::string& address, int port);
  ~LineListener();
  LineListener(const LineListener&) = delete;
  LineListener& operator=(const LineListener&) = delete;

  int port() const { return port_; }
  int fd() const { return fd_; }

  /// Accepts a pending connection if one arrives within `timeout`.
  std::optional<LineSocket> accept(std::chrono::milliseconds timeout);

 private:
  int fd_ = -1;
  int port_ = 0;
};

}  // namespace fic::net
