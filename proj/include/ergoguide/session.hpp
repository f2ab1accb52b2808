#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ergoguide/harness.hpp"

namespace httplib {
class Server;
}

namespace ergoguide {

/// State of one live trial driven by inbound frames instead of a simulated
/// agent. Not thread-safe; SessionServer confines it to its ticking thread.
///
/// Inbound frames:
///   {"joint_deltas": {"torso": 1.0, ...}}             degrees, added to q_c
///   {"questionnaire": {"seq": 1..7, "sus": [10 x 1..5]}}
///   {"trial_control": "start" | "complete" | "abort"}
/// Outbound frames carry a "type": state, trial, questionnaire or error.
class LiveSession {
 public:
  explicit LiveSession(SessionConfig config);

  /// Applies one inbound frame. Malformed frames produce an error frame and
  /// leave the session unchanged.
  std::vector<nlohmann::json> handle_inbound(const nlohmann::json& frame);

  /// Advances one control tick and returns the state frame.
  nlohmann::json tick();

  bool active() const { return active_; }
  bool finished() const { return finished_; }
  const Posture& current() const { return q_; }
  const TrialLog& log() const { return log_; }
  std::uint64_t tick_count() const { return tick_; }

 private:
  std::vector<nlohmann::json> control(const std::string& action);
  void start_segment();
  void close_segment(bool completed);

  SessionConfig config_;
  HumanModel model_;
  FeedbackConfig fb_;
  PlacementRegistry reg_;
  TrialLog log_;
  TargetSequence targets_;
  Posture q_{};
  Posture q_d_{};
  std::optional<LoadSpec> load_;
  FeedbackState state_{};
  std::uint64_t tick_ = 0;
  std::size_t segment_ = 0;
  std::size_t segment_first_ = 0;
  bool active_ = false;
  bool finished_ = false;
};

nlohmann::json error_frame(const std::string& message);

/// HTTP bridge around a LiveSession. One thread owns the session and ticks it;
/// request handlers talk to it only through the inbound queue and read the
/// ordered outbound frame list.
///
///   POST /inbound           body: one inbound frame
///   GET  /frames?after=N    frames with seq > N, as a JSON array
///   GET  /log               the trial log as line-delimited JSON
///   GET  /health
class SessionServer {
 public:
  explicit SessionServer(SessionConfig config);
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  /// Binds and starts serving; port 0 picks a free port. Returns the port.
  int start(const std::string& host, int port);
  void stop();
  bool session_finished() const { return finished_.load(); }

 private:
  struct Message {
    nlohmann::json frame;
    std::shared_ptr<std::promise<std::string>> log_request;
  };

  void run_loop();
  void publish(nlohmann::json frame);
  void enqueue(Message m);
  std::string request_log();

  SessionConfig config_;
  std::unique_ptr<httplib::Server> http_;
  std::thread http_thread_;
  std::thread loop_thread_;
  std::atomic<bool> running_{false};
  std::atomic<bool> finished_{false};

  std::mutex in_mu_;
  std::deque<Message> inbound_;

  mutable std::mutex out_mu_;
  std::vector<nlohmann::json> outbound_;
};

/// Serves until SIGINT or SIGTERM, then writes the log into the output directory.
void serve_session(const SessionConfig& config, int port, const std::string& host = "127.0.0.1");

}  // namespace ergoguide
