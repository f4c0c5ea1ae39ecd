#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <iterator>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "opentie/error.hpp"
#include "opentie/frames.hpp"
#include "opentie/geometry.hpp"

namespace opentie {

// ---------------------------------------------------------------------------
// Wire protocol

enum class CommandKind { Move, Tie, Home, Quit };

struct RobotCommand {
  CommandKind kind = CommandKind::Home;
  Point3 target = Point3::Zero();  // MOVE only

  static RobotCommand move(const Point3& p) { return {CommandKind::Move, p}; }
  static RobotCommand tie() { return {CommandKind::Tie, Point3::Zero()}; }
  static RobotCommand home() { return {CommandKind::Home, Point3::Zero()}; }
  static RobotCommand quit() { return {CommandKind::Quit, Point3::Zero()}; }

  friend bool operator==(const RobotCommand& a, const RobotCommand& b) {
    return a.kind == b.kind && (a.kind != CommandKind::Move || a.target == b.target);
  }
};

/// Stable protocol error codes.
enum class RobotError : int { BadCommand = 1, Unreachable = 2, NoPose = 3, TieFailed = 4 };

constexpr std::string_view robot_error_name(RobotError e) {
  switch (e) {
    case RobotError::BadCommand: return "BAD_COMMAND";
    case RobotError::Unreachable: return "UNREACHABLE";
    case RobotError::NoPose: return "NO_POSE";
    case RobotError::TieFailed: return "TIE_FAILED";
  }
  return "UNKNOWN";
}

struct RobotResponse {
  bool ok = true;
  int code = 0;
  std::string message;

  static RobotResponse success() { return {}; }
  static RobotResponse failure(RobotError e) {
    return {false, static_cast<int>(e), std::string(robot_error_name(e))};
  }
  friend bool operator==(const RobotResponse&, const RobotResponse&) = default;
};

inline std::string encode_command(const RobotCommand& cmd) {
  switch (cmd.kind) {
    case CommandKind::Move: {
      if (!is_finite(cmd.target)) {
        throw Error("robot-link", ErrorCode::ProtocolError, "non-finite MOVE target");
      }
      char buf[128];
      std::snprintf(buf, sizeof buf, "MOVE %.6f %.6f %.6f\n", cmd.target.x(), cmd.target.y(),
                    cmd.target.z());
      return buf;
    }
    case CommandKind::Tie: return "TIE\n";
    case CommandKind::Home: return "HOME\n";
    case CommandKind::Quit: return "QUIT\n";
  }
  return {};
}

namespace detail {

inline std::string_view strip_eol(std::string_view line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
  return line;
}

inline bool parse_strict_real(std::string_view tok, double& out) {
  if (tok.empty()) return false;
  std::string s(tok);
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace detail

/// Server-side parse of one request line (terminator optional).
inline RobotCommand decode_command(std::string_view line) {
  line = detail::strip_eol(line);
  if (line == "TIE") return RobotCommand::tie();
  if (line == "HOME") return RobotCommand::home();
  if (line == "QUIT") return RobotCommand::quit();
  if (line.starts_with("MOVE ")) {
    std::string_view rest = line.substr(5);
    double v[3];
    for (int i = 0; i < 3; ++i) {
      const auto sp = rest.find(' ');
      const auto tok = i < 2 ? rest.substr(0, sp) : rest;
      if ((i < 2 && sp == std::string_view::npos) || !detail::parse_strict_real(tok, v[i])) {
        throw Error("robot-link", ErrorCode::ProtocolError, "malformed MOVE: " + std::string(line));
      }
      if (i < 2) rest = rest.substr(sp + 1);
    }
    return RobotCommand::move({v[0], v[1], v[2]});
  }
  throw Error("robot-link", ErrorCode::ProtocolError, "unknown command: " + std::string(line));
}

inline std::string encode_response(const RobotResponse& r) {
  if (r.ok) return "OK\n";
  return "ERR " + std::to_string(r.code) + " " + r.message + "\n";
}

inline RobotResponse decode_response(std::string_view line) {
  line = detail::strip_eol(line);
  if (line == "OK") return RobotResponse::success();
  if (line.starts_with("ERR ")) {
    std::string_view rest = line.substr(4);
    const auto sp = rest.find(' ');
    if (sp != std::string_view::npos) {
      const auto code_tok = rest.substr(0, sp);
      const auto msg = rest.substr(sp + 1);
      int code = 0;
      const auto [ptr, ec] = std::from_chars(code_tok.data(), code_tok.data() + code_tok.size(), code);
      if (ec == std::errc() && ptr == code_tok.data() + code_tok.size() && code > 0 &&
          !msg.empty() && msg.find(' ') == std::string_view::npos) {
        return {false, code, std::string(msg)};
      }
    }
  }
  throw Error("robot-link", ErrorCode::ProtocolError, "malformed response: " + std::string(line));
}

// ---------------------------------------------------------------------------
// Simulated controller

struct SimRobotConfig {
  Point3 workspace_center = Point3(0.5, 0.0, 0.0);
  double workspace_radius = 0.85;
  /// Slack added to the reach radius.
  double position_tolerance = 0.001;
  double tie_failure_rate = 0.0;
  std::uint64_t seed = 0;
};

/// Deterministic command handler behind the simulator socket.
class SimRobot {
 public:
  explicit SimRobot(const SimRobotConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
    if (!(cfg.workspace_radius > 0.0) || !(cfg.position_tolerance > 0.0) ||
        cfg.tie_failure_rate < 0.0 || cfg.tie_failure_rate > 1.0) {
      throw Error("robot-link", ErrorCode::InvalidArgument, "invalid simulator configuration");
    }
  }

  RobotResponse handle(const RobotCommand& cmd) {
    switch (cmd.kind) {
      case CommandKind::Move: {
        const double dist = (cmd.target - cfg_.workspace_center).norm();
        if (dist > cfg_.workspace_radius + cfg_.position_tolerance) {
          return RobotResponse::failure(RobotError::Unreachable);
        }
        pose_ = cmd.target;
        has_pose_ = true;
        return RobotResponse::success();
      }
      case CommandKind::Tie: {
        if (!has_pose_) return RobotResponse::failure(RobotError::NoPose);
        has_pose_ = false;
        ++ties_;
        if (std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < cfg_.tie_failure_rate) {
          return RobotResponse::failure(RobotError::TieFailed);
        }
        return RobotResponse::success();
      }
      case CommandKind::Home:
        has_pose_ = false;
        return RobotResponse::success();
      case CommandKind::Quit:
        return RobotResponse::success();
    }
    return RobotResponse::failure(RobotError::BadCommand);
  }

  /// Raw line in, raw response line out; malformed lines get ERR 1.
  std::string handle_line(std::string_view line) {
    try {
      return encode_response(handle(decode_command(line)));
    } catch (const Error&) {
      return encode_response(RobotResponse::failure(RobotError::BadCommand));
    }
  }

  const Point3& pose() const { return pose_; }
  std::size_t tie_attempts() const { return ties_; }

 private:
  SimRobotConfig cfg_;
  std::mt19937_64 rng_;
  Point3 pose_ = Point3::Zero();
  bool has_pose_ = false;
  std::size_t ties_ = 0;
};

// ---------------------------------------------------------------------------
// Sockets

namespace detail {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(o.release()) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) reset(o.release());
    return *this;
  }
  ~Fd() { reset(); }

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    const int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void reset(int fd = -1) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = fd;
  }

 private:
  int fd_ = -1;
};

inline void send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw Error("robot-link", ErrorCode::ConnectionLost, "send failed");
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

/// Buffered newline reader. Returns false on orderly EOF before a full line.
class LineReader {
 public:
  explicit LineReader(int fd) : fd_(fd) {}

  bool has_buffered_line() const { return buf_.find('\n') != std::string::npos; }

  bool read_line(std::string& line) {
    for (;;) {
      const auto nl = buf_.find('\n');
      if (nl != std::string::npos) {
        line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      }
      char chunk[512];
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return false;
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_;
  std::string buf_;
};

inline Fd connect_tcp(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0 || res == nullptr) {
    throw Error("robot-link", ErrorCode::ConnectionLost, "cannot resolve " + host);
  }
  Fd fd;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    Fd s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s.valid()) continue;
    if (::connect(s.get(), ai->ai_addr, ai->ai_addrlen) == 0) {
      fd = std::move(s);
      break;
    }
  }
  ::freeaddrinfo(res);
  if (!fd.valid()) {
    throw Error("robot-link", ErrorCode::ConnectionLost,
                "cannot connect to " + host + ":" + std::to_string(port));
  }
  return fd;
}

/// Listening socket on 127.0.0.1-or-any; port 0 picks an ephemeral port.
inline Fd listen_tcp(int port, bool loopback_only, int& bound_port) {
  Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
  if (!fd.valid()) throw Error("robot-link", ErrorCode::FileError, "socket() failed");
  const int one = 1;
  ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  addr.sin_addr.s_addr = htonl(loopback_only ? INADDR_LOOPBACK : INADDR_ANY);
  if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    throw Error("robot-link", ErrorCode::FileError,
                "cannot bind port " + std::to_string(port) + ": " + std::strerror(errno));
  }
  if (::listen(fd.get(), 8) != 0) throw Error("robot-link", ErrorCode::FileError, "listen() failed");
  socklen_t len = sizeof addr;
  ::getsockname(fd.get(), reinterpret_cast<sockaddr*>(&addr), &len);
  bound_port = ntohs(addr.sin_port);
  return fd;
}

inline long long unix_millis() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace detail

/// Request/response line transport used by the sequence executor.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  /// Sends one line (terminator included) and returns the reply without it.
  /// Throws ConnectionLost if the peer goes away.
  virtual std::string request(const std::string& line) = 0;
};

class TcpRobotClient : public LineChannel {
 public:
  TcpRobotClient(const std::string& host, int port)
      : fd_(detail::connect_tcp(host, port)), reader_(fd_.get()) {}

  std::string request(const std::string& line) override {
    detail::send_all(fd_.get(), line);
    std::string reply;
    if (!reader_.read_line(reply)) {
      throw Error("robot-link", ErrorCode::ConnectionLost, "server closed the connection");
    }
    return reply;
  }

 private:
  detail::Fd fd_;
  detail::LineReader reader_;
};

/// TCP front end for SimRobot. One client at a time; later connections wait in
/// the listen backlog. serve() returns after a QUIT has been answered or after
/// stop() is called.
class SimRobotServer {
 public:
  SimRobotServer(const SimRobotConfig& cfg, int port, std::ostream* log = nullptr,
                 bool loopback_only = true)
      : robot_(cfg), log_(log) {
    listen_fd_ = detail::listen_tcp(port, loopback_only, port_);
  }

  int port() const { return port_; }
  void stop() { stop_.store(true); }

  void serve() {
    while (!stop_.load()) {
      pollfd pfd{listen_fd_.get(), POLLIN, 0};
      const int ready = ::poll(&pfd, 1, 50);
      if (ready <= 0) continue;
      detail::Fd client(::accept(listen_fd_.get(), nullptr, nullptr));
      if (!client.valid()) continue;
      if (serve_client(client.get())) return;
    }
  }

  const SimRobot& robot() const { return robot_; }

 private:
  // true once QUIT has been handled
  bool serve_client(int fd) {
    detail::LineReader reader(fd);
    std::string line;
    while (!stop_.load()) {
      if (!reader.has_buffered_line()) {
        pollfd pfd{fd, POLLIN, 0};
        if (::poll(&pfd, 1, 50) <= 0) continue;
      }
      if (!reader.read_line(line)) return false;
      log("RECV", line);
      const std::string reply = robot_.handle_line(line);
      log("SEND", std::string(detail::strip_eol(reply)));
      try {
        detail::send_all(fd, reply);
      } catch (const Error&) {
        return false;
      }
      if (detail::strip_eol(line) == "QUIT") return true;
    }
    return false;
  }

  void log(const char* direction, const std::string& line) {
    if (log_ == nullptr) return;
    std::lock_guard lock(log_mutex_);
    *log_ << detail::unix_millis() << ' ' << direction << ' ' << line << '\n';
    log_->flush();
  }

  SimRobot robot_;
  std::ostream* log_;
  std::mutex log_mutex_;
  detail::Fd listen_fd_;
  int port_ = 0;
  std::atomic<bool> stop_{false};
};

inline void run_sim_server(const SimRobotConfig& cfg, int port, std::ostream* log = nullptr) {
  SimRobotServer server(cfg, port, log, false);
  server.serve();
}

// ---------------------------------------------------------------------------
// Sequence execution

enum class ErrorPolicy { AbortOnError, SkipOnError };

struct TieOutcome {
  std::size_t sequence_index = 0;
  bool success = false;
  int error_code = 0;  // 0 on success
  std::string message;
};

struct SequenceReport {
  std::vector<TieOutcome> outcomes;
  std::size_t attempted = 0;
  std::size_t successes = 0;
  std::size_t failures = 0;
  bool aborted = false;
};

/// Connection dropped mid-sequence; carries what was completed so far.
class ConnectionLostError : public Error {
 public:
  explicit ConnectionLostError(SequenceReport partial)
      : Error("robot-link", ErrorCode::ConnectionLost, "sequence interrupted"),
        partial_(std::move(partial)) {}
  const SequenceReport& partial_report() const { return partial_; }

 private:
  SequenceReport partial_;
};

/// MOVE then TIE for every tie in order, then HOME and QUIT.
inline SequenceReport execute_sequence(const std::vector<TiePoint>& ties, LineChannel& channel,
                                       ErrorPolicy policy) {
  SequenceReport report;
  auto call = [&](const RobotCommand& cmd) {
    try {
      return decode_response(channel.request(encode_command(cmd)));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ConnectionLost) throw ConnectionLostError(report);
      throw;
    }
  };

  for (const auto& tie : ties) {
    ++report.attempted;
    TieOutcome outcome{tie.sequence_index, false, 0, {}};
    RobotResponse r = call(RobotCommand::move(tie.position));
    if (r.ok) r = call(RobotCommand::tie());
    outcome.success = r.ok;
    outcome.error_code = r.code;
    outcome.message = r.ok ? "OK" : r.message;
    report.outcomes.push_back(outcome);
    if (r.ok) {
      ++report.successes;
    } else {
      ++report.failures;
      if (policy == ErrorPolicy::AbortOnError) {
        report.aborted = true;
        break;
      }
    }
  }
  call(RobotCommand::home());
  call(RobotCommand::quit());
  return report;
}

inline std::string encode_sequence_report(const SequenceReport& report) {
  std::string out;
  for (const auto& o : report.outcomes) {
    out += std::to_string(o.sequence_index) + " " + (o.success ? "OK" : "ERR") + " " +
           std::to_string(o.error_code) + " " + o.message + "\n";
  }
  out += "attempted=" + std::to_string(report.attempted) + "\n";
  out += "successes=" + std::to_string(report.successes) + "\n";
  out += "failures=" + std::to_string(report.failures) + "\n";
  out += std::string("aborted=") + (report.aborted ? "true" : "false") + "\n";
  return out;
}

inline SequenceReport decode_sequence_report(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  SequenceReport report;
  bool seen[4] = {false, false, false, false};
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq != std::string::npos) {
      const std::string key = line.substr(0, eq);
      const std::string value = line.substr(eq + 1);
      static const char* const keys[4] = {"attempted", "successes", "failures", "aborted"};
      const auto* it = std::find(std::begin(keys), std::end(keys), key);
      if (it == std::end(keys)) throw ParseError("robot-link", line_no, "unknown key '" + key + "'");
      const auto k = static_cast<std::size_t>(it - std::begin(keys));
      if (k == 3) {
        if (value != "true" && value != "false") throw ParseError("robot-link", line_no, "expected true/false");
        report.aborted = value == "true";
      } else {
        std::size_t v = 0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || ptr != value.data() + value.size()) {
          throw ParseError("robot-link", line_no, "expected a count");
        }
        (k == 0 ? report.attempted : k == 1 ? report.successes : report.failures) = v;
      }
      seen[k] = true;
      continue;
    }
    std::istringstream ls(line);
    TieOutcome o;
    std::string status;
    std::string extra;
    if (!(ls >> o.sequence_index >> status >> o.error_code >> o.message) || (ls >> extra) ||
        (status != "OK" && status != "ERR") || ((status == "OK") != (o.error_code == 0))) {
      throw ParseError("robot-link", line_no, "expected 'index OK|ERR code message'");
    }
    o.success = status == "OK";
    report.outcomes.push_back(o);
  }
  for (bool s : seen) {
    if (!s) throw ParseError("robot-link", line_no, "incomplete sequence report");
  }
  if (report.successes + report.failures != report.attempted) {
    throw ParseError("robot-link", line_no, "successes + failures != attempted");
  }
  return report;
}

}  // namespace opentie
