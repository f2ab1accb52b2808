#include "ergoguide/session.hpp"

#include <chrono>
#include <csignal>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <sstream>

#include <httplib.h>

#include "ergoguide/device.hpp"
#include "ergoguide/errors.hpp"
#include "ergoguide/loading.hpp"
#include "ergoguide/stats.hpp"

namespace ergoguide {

using nlohmann::json;

json error_frame(const std::string& message) { return {{"type", "error"}, {"message", message}}; }

LiveSession::LiveSession(SessionConfig config)
    : config_(std::move(config)),
      model_(config_.model()),
      fb_(config_.feedback()),
      reg_(PlacementRegistry::standard(config_.modality)) {
  config_.validate();
  const bool ergonomic = config_.protocol.kind == ProtocolKind::ErgonomicTest;
  log_.protocol = std::string(protocol_name(config_.protocol.kind));
  log_.joint_set = ergonomic ? "all" : config_.joint_set;
  log_.modality = config_.modality;
  log_.condition = ergonomic ? "condition_" + std::to_string(config_.condition)
                             : std::string(modality_name(config_.modality));
  log_.agent = "live";
  log_.seed = config_.seed;
  log_.subject = config_.subject;
  log_.guided = ergonomic ? std::array<bool, kGuidedCount>{true, true, true}
                          : guided_mask(config_.joint_set);
  log_.extra["tick_ms"] = config_.tick_ms();
  log_.extra["pulse_ms"] = fb_.pulse_ms;
  log_.status = "pending";
}

std::vector<json> LiveSession::handle_inbound(const json& frame) {
  if (!frame.is_object() || frame.size() != 1) {
    return {error_frame("inbound frame must be an object with exactly one key")};
  }
  if (frame.contains("joint_deltas")) {
    if (!active_) return {error_frame("joint_deltas outside an active trial")};
    const json& d = frame.at("joint_deltas");
    if (!d.is_object() || d.empty()) return {error_frame("joint_deltas must be a non-empty object")};
    Posture next = q_;
    for (const auto& [name, value] : d.items()) {
      const auto g = guided_from_name(name);
      if (!g) return {error_frame("unknown joint '" + name + "'")};
      if (!log_.guided[index(*g)]) return {error_frame("joint '" + name + "' is not guided")};
      if (!value.is_number() || !std::isfinite(value.get<double>())) {
        return {error_frame("delta for '" + name + "' must be a finite number")};
      }
      next[model_joint(*g)] += value.get<double>();
    }
    q_ = model_.clamp(next);
    return {};
  }
  if (frame.contains("questionnaire")) {
    const json& q = frame.at("questionnaire");
    if (!q.is_object()) return {error_frame("questionnaire must be an object")};
    Questionnaire out;
    try {
      if (q.contains("seq")) {
        if (!q.at("seq").is_number_integer()) throw InputError("seq must be an integer");
        out.seq = seq_score(q.at("seq").get<int>());
      }
      if (q.contains("sus")) {
        const json& s = q.at("sus");
        if (!s.is_array() || s.size() != 10) throw InputError("sus needs 10 responses");
        std::array<int, 10> items{};
        for (std::size_t i = 0; i < 10; ++i) {
          if (!s[i].is_number_integer()) throw InputError("sus responses must be integers");
          items[i] = s[i].get<int>();
        }
        out.sus_score = sus_score(items);
        out.sus = items;
      }
    } catch (const std::invalid_argument& e) {
      return {error_frame(e.what())};
    }
    if (!out.seq && !out.sus) return {error_frame("questionnaire needs seq or sus")};
    log_.questionnaires.push_back(out);
    json ack{{"type", "questionnaire"}};
    ack["seq"] = out.seq ? json(*out.seq) : json();
    ack["sus_score"] = out.sus_score ? json(*out.sus_score) : json();
    return {ack};
  }
  if (frame.contains("trial_control")) {
    const json& c = frame.at("trial_control");
    if (!c.is_string()) return {error_frame("trial_control must be a string")};
    return control(c.get<std::string>());
  }
  return {error_frame("unknown inbound frame '" + frame.begin().key() + "'")};
}

std::vector<json> LiveSession::control(const std::string& action) {
  if (action == "start") {
    if (active_) return {error_frame("trial already active")};
    if (finished_) return {error_frame("trial already finished")};
    if (config_.protocol.kind == ProtocolKind::ErgonomicTest) {
      try {
        const ErgonomicPlan plan = plan_ergonomic(config_, config_.condition);
        q_ = plan.q_init;
        load_ = plan.load;
        GuidedTarget t;
        for (GuidedJoint g : kGuidedJoints) t[index(g)] = plan.result.q_d[model_joint(g)];
        targets_ = {t};
        q_d_ = plan.result.q_d;
      } catch (const InfeasibleError& e) {
        finished_ = true;
        log_.status = "aborted";
        log_.extra["error"] = e.what();
        return {error_frame(e.what()), json{{"type", "trial"}, {"event", "aborted"}}};
      }
    } else {
      targets_ = target_sequence(config_.protocol, config_.joint_set);
    }
    active_ = true;
    segment_ = 0;
    start_segment();
    return {json{{"type", "trial"}, {"event", "started"}, {"segment", 0}}};
  }
  if (action == "complete") {
    if (!active_) return {error_frame("no active trial")};
    close_segment(true);
    if (segment_ + 1 < targets_.size()) {
      ++segment_;
      start_segment();
      return {json{{"type", "trial"}, {"event", "segment"}, {"segment", segment_}}};
    }
    active_ = false;
    finished_ = true;
    log_.status = "completed";
    log_.completion_time = log_.records.empty() ? 0.0 : log_.records.back().t;
    return {json{{"type", "trial"}, {"event", "completed"}}};
  }
  if (action == "abort") {
    if (finished_) return {error_frame("trial already finished")};
    if (active_) close_segment(false);
    active_ = false;
    finished_ = true;
    log_.status = "aborted";
    log_.completion_time = log_.records.empty() ? 0.0 : log_.records.back().t;
    return {json{{"type", "trial"}, {"event", "aborted"}}};
  }
  return {error_frame("unknown trial_control '" + action + "'")};
}

void LiveSession::start_segment() {
  if (config_.protocol.kind != ProtocolKind::ErgonomicTest) {
    q_d_ = q_;
    for (GuidedJoint g : kGuidedJoints) {
      if (const auto& v = targets_[segment_][index(g)]) q_d_[model_joint(g)] = *v;
    }
  }
  state_ = FeedbackState{};
  segment_first_ = log_.records.size();
}

void LiveSession::close_segment(bool completed) {
  SegmentInfo s;
  s.index = static_cast<int>(segment_);
  s.target = q_d_;
  s.first = segment_first_;
  s.last = log_.records.size();
  s.completed = completed;
  s.timed_out = false;
  log_.segments.push_back(s);
}

json LiveSession::tick() {
  const double t = static_cast<double>(tick_) * config_.tick_ms() / 1000.0;
  json frame{{"type", "state"}, {"tick", tick_}, {"t", t}, {"active", active_}};
  frame["q_c"] = q_.angles;
  if (active_) {
    auto [out, next] =
        feedback_step(fb_, reg_, state_, guided_angles(q_), guided_angles(q_d_), tick_);
    state_ = next;
    // Round-trip through the device wire format, as the hardware path would.
    const auto delivered = decode_frames(encode_frames(out.commands));
    TickRecord r;
    r.tick = tick_;
    r.t = t;
    r.segment = static_cast<int>(segment_);
    r.q_c = q_;
    r.q_c.timestamp = t;
    r.q_d = q_d_;
    r.q_d.timestamp = t;
    r.eps = out.errors;
    r.active_joint = out.joint;
    r.commands = delivered;
    if (load_) r.tau_overload = overloading_torques_oracle(model_, q_, *load_);
    log_.records.push_back(r);

    frame["segment"] = segment_;
    frame["q_d"] = q_d_.angles;
    frame["eps"] = out.errors.value;
    frame["commands"] = json::array();
    for (const auto& c : delivered) frame["commands"].push_back(command_to_json(c));
    if (r.tau_overload) frame["tau_overload"] = *r.tau_overload;
  } else {
    frame["commands"] = json::array();
  }
  ++tick_;
  return frame;
}

// ---- Server -------------------------------------------------------------------

SessionServer::SessionServer(SessionConfig config) : config_(std::move(config)) {
  config_.validate();
}

SessionServer::~SessionServer() { stop(); }

void SessionServer::publish(json frame) {
  std::lock_guard lock(out_mu_);
  frame["seq"] = outbound_.size() + 1;
  outbound_.push_back(std::move(frame));
}

void SessionServer::enqueue(Message m) {
  std::lock_guard lock(in_mu_);
  inbound_.push_back(std::move(m));
}

std::string SessionServer::request_log() {
  auto promise = std::make_shared<std::promise<std::string>>();
  auto fut = promise->get_future();
  enqueue({json(), promise});
  if (fut.wait_for(std::chrono::seconds(5)) != std::future_status::ready) return {};
  return fut.get();
}

void SessionServer::run_loop() {
  LiveSession session(config_);
  const auto period = std::chrono::milliseconds(config_.tick_ms());
  auto next = std::chrono::steady_clock::now();
  while (running_) {
    std::deque<Message> batch;
    {
      std::lock_guard lock(in_mu_);
      batch.swap(inbound_);
    }
    for (auto& m : batch) {
      if (m.log_request) {
        std::ostringstream out;
        write_log(out, session.log());
        m.log_request->set_value(out.str());
        continue;
      }
      for (auto& f : session.handle_inbound(m.frame)) publish(std::move(f));
    }
    publish(session.tick());
    finished_ = session.finished();
    next += period;
    std::this_thread::sleep_until(next);
  }
  // Serve the remaining log requests so no handler blocks on shutdown.
  std::lock_guard lock(in_mu_);
  for (auto& m : inbound_) {
    if (m.log_request) {
      std::ostringstream out;
      write_log(out, session.log());
      m.log_request->set_value(out.str());
    }
  }
  inbound_.clear();
}

int SessionServer::start(const std::string& host, int port) {
  if (running_) throw ConfigError("server already running");
  http_ = std::make_unique<httplib::Server>();
  http_->Post("/inbound", [this](const httplib::Request& req, httplib::Response& res) {
    json frame;
    try {
      frame = json::parse(req.body);
    } catch (const json::exception& e) {
      const json err = error_frame(std::string("malformed JSON: ") + e.what());
      publish(err);
      res.status = 400;
      res.set_content(err.dump(), "application/json");
      return;
    }
    enqueue({std::move(frame), nullptr});
    res.status = 202;
    res.set_content(R"({"queued":true})", "application/json");
  });
  http_->Get("/frames", [this](const httplib::Request& req, httplib::Response& res) {
    std::size_t after = 0;
    if (req.has_param("after")) {
      try {
        after = std::stoull(req.get_param_value("after"));
      } catch (const std::exception&) {
        res.status = 400;
        res.set_content(error_frame("after must be an integer").dump(), "application/json");
        return;
      }
    }
    json out = json::array();
    {
      std::lock_guard lock(out_mu_);
      for (std::size_t i = after; i < outbound_.size(); ++i) out.push_back(outbound_[i]);
    }
    res.set_content(out.dump(), "application/json");
  });
  http_->Get("/log", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(request_log(), "application/x-ndjson");
  });
  http_->Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });

  const int bound = port == 0 ? http_->bind_to_any_port(host) : (http_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
  running_ = true;
  loop_thread_ = std::thread([this] { run_loop(); });
  http_thread_ = std::thread([this] { http_->listen_after_bind(); });
  return bound;
}

void SessionServer::stop() {
  if (!running_.exchange(false)) return;
  if (http_) http_->stop();
  if (http_thread_.joinable()) http_thread_.join();
  if (loop_thread_.joinable()) loop_thread_.join();
}

namespace {
std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }
}  // namespace

void serve_session(const SessionConfig& config, int port, const std::string& host) {
  SessionServer server(config);
  g_stop = false;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const int bound = server.start(host, port);
  std::printf("serving on http://%s:%d\n", host.c_str(), bound);
  std::fflush(stdout);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));

  httplib::Client client(host, bound);
  std::string log;
  if (auto res = client.Get("/log")) log = res->body;
  server.stop();
  std::filesystem::create_directories(config.output_dir);
  const auto path = std::filesystem::path(config.output_dir) /
                    ("live_seed" + std::to_string(config.seed) + ".jsonl");
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw ConfigError("cannot write " + path.string());
  std::fwrite(log.data(), 1, log.size(), f);
  std::fclose(f);
}

}  // namespace ergoguide
