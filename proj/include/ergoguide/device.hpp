#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "ergoguide/feedback.hpp"

namespace ergoguide {

/// Physical metadata of the emulated vibrotactile unit. The carrier is not
/// synthesised; it is carried for reporting only.
struct DeviceSpec {
  double carrier_hz = 121.0;
  double mass_g = 28.0;
  std::array<double, 3> size_mm{68.1, 37.0, 17.3};
  int amplitude_levels = 3;
};

// ---- Wire format ------------------------------------------------------------
//
// frame   := length:u32le payload
// payload := tick:u64le device_id:u16le level:u8 lambda:f64le duration_ms:u32le onset_ms:u32le

inline constexpr std::uint32_t kCommandPayloadBytes = 27;
inline constexpr std::size_t kCommandFrameBytes = 4 + kCommandPayloadBytes;

std::vector<std::uint8_t> encode_frame(const DeviceCommand& cmd);
std::vector<std::uint8_t> encode_frames(std::span<const DeviceCommand> cmds);
/// Throws InputError on truncated frames, bad lengths or unknown levels.
std::vector<DeviceCommand> decode_frames(std::span<const std::uint8_t> bytes);

nlohmann::json command_to_json(const DeviceCommand& cmd);
DeviceCommand command_from_json(const nlohmann::json& j);

// ---- Emulator ---------------------------------------------------------------

/// Replays decoded command frames into per-device amplitude timelines.
class DeviceEmulator {
 public:
  DeviceEmulator(PlacementRegistry registry, std::uint32_t tick_ms = 100, DeviceSpec spec = {});

  /// Decodes and schedules a batch of frames; returns the decoded commands.
  /// Throws RegistryError for unknown device ids.
  std::vector<DeviceCommand> receive(std::span<const std::uint8_t> frames);

  /// Amplitude of `device_id` at absolute time `t_ms`.
  double amplitude_at(std::uint16_t device_id, std::uint64_t t_ms) const;

  const PlacementRegistry& registry() const { return registry_; }
  const DeviceSpec& spec() const { return spec_; }

 private:
  struct Pulse {
    std::uint64_t start_ms;
    std::uint64_t end_ms;
    double amplitude;
  };

  PlacementRegistry registry_;
  std::uint32_t tick_ms_;
  DeviceSpec spec_;
  std::map<std::uint16_t, std::vector<Pulse>> timeline_;
};

// ---- Fan-out channel --------------------------------------------------------

/// Multi-subscriber FIFO broadcast; each subscriber sees every published item
/// in publication order.
template <typename T>
class Channel {
 public:
  class Subscription {
   public:
    std::optional<T> try_pop() {
      std::lock_guard lock(mu_);
      if (items_.empty()) return std::nullopt;
      T v = std::move(items_.front());
      items_.pop_front();
      return v;
    }

    template <typename Rep, typename Period>
    std::optional<T> pop_for(std::chrono::duration<Rep, Period> timeout) {
      std::unique_lock lock(mu_);
      if (!cv_.wait_for(lock, timeout, [&] { return !items_.empty(); })) return std::nullopt;
      T v = std::move(items_.front());
      items_.pop_front();
      return v;
    }

    std::vector<T> drain() {
      std::lock_guard lock(mu_);
      std::vector<T> out(std::make_move_iterator(items_.begin()),
                         std::make_move_iterator(items_.end()));
      items_.clear();
      return out;
    }

   private:
    friend class Channel;
    void push(const T& v) {
      {
        std::lock_guard lock(mu_);
        items_.push_back(v);
      }
      cv_.notify_one();
    }

    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<T> items_;
  };

  std::shared_ptr<Subscription> subscribe() {
    auto sub = std::make_shared<Subscription>();
    std::lock_guard lock(mu_);
    subs_.push_back(sub);
    return sub;
  }

  void publish(const T& v) {
    std::lock_guard lock(mu_);
    for (auto& s : subs_) s->push(v);
  }

 private:
  std::mutex mu_;
  std::vector<std::shared_ptr<Subscription>> subs_;
};

}  // namespace ergoguide
