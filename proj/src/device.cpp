#include "ergoguide/device.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include "ergoguide/errors.hpp"

namespace ergoguide {

namespace {

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFFu));
  }
}

template <typename U>
U get_le(std::span<const std::uint8_t> in, std::size_t at) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(static_cast<U>(in[at + i]) << (8 * i));
  }
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_frame(const DeviceCommand& cmd) {
  std::vector<std::uint8_t> out;
  out.reserve(kCommandFrameBytes);
  put_le<std::uint32_t>(out, kCommandPayloadBytes);
  put_le<std::uint64_t>(out, cmd.tick);
  put_le<std::uint16_t>(out, cmd.device_id);
  out.push_back(static_cast<std::uint8_t>(cmd.level));
  put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(cmd.amplitude));
  put_le<std::uint32_t>(out, cmd.duration_ms);
  put_le<std::uint32_t>(out, cmd.onset_ms);
  return out;
}

std::vector<std::uint8_t> encode_frames(std::span<const DeviceCommand> cmds) {
  std::vector<std::uint8_t> out;
  out.reserve(cmds.size() * kCommandFrameBytes);
  for (const auto& c : cmds) {
    const auto f = encode_frame(c);
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

std::vector<DeviceCommand> decode_frames(std::span<const std::uint8_t> bytes) {
  std::vector<DeviceCommand> out;
  std::size_t at = 0;
  while (at < bytes.size()) {
    if (bytes.size() - at < 4) throw InputError("truncated frame header");
    const auto len = get_le<std::uint32_t>(bytes, at);
    if (len != kCommandPayloadBytes) {
      std::ostringstream msg;
      msg << "unexpected command payload length " << len;
      throw InputError(msg.str());
    }
    at += 4;
    if (bytes.size() - at < len) throw InputError("truncated frame payload");
    DeviceCommand c;
    c.tick = get_le<std::uint64_t>(bytes, at);
    c.device_id = get_le<std::uint16_t>(bytes, at + 8);
    const std::uint8_t level = bytes[at + 10];
    if (level > static_cast<std::uint8_t>(Level::L3)) throw InputError("unknown level in frame");
    c.level = static_cast<Level>(level);
    c.amplitude = std::bit_cast<double>(get_le<std::uint64_t>(bytes, at + 11));
    c.duration_ms = get_le<std::uint32_t>(bytes, at + 19);
    c.onset_ms = get_le<std::uint32_t>(bytes, at + 23);
    at += len;
    out.push_back(c);
  }
  return out;
}

nlohmann::json command_to_json(const DeviceCommand& cmd) {
  return {{"tick", cmd.tick},
          {"device_id", cmd.device_id},
          {"level", std::string(level_name(cmd.level))},
          {"lambda", cmd.amplitude},
          {"duration_ms", cmd.duration_ms},
          {"onset_ms", cmd.onset_ms}};
}

DeviceCommand command_from_json(const nlohmann::json& j) {
  DeviceCommand c;
  c.tick = j.at("tick").get<std::uint64_t>();
  c.device_id = j.at("device_id").get<std::uint16_t>();
  const auto level = level_from_name(j.at("level").get<std::string>());
  if (!level) throw InputError("unknown level '" + j.at("level").get<std::string>() + "'");
  c.level = *level;
  c.amplitude = j.at("lambda").get<double>();
  c.duration_ms = j.at("duration_ms").get<std::uint32_t>();
  c.onset_ms = j.at("onset_ms").get<std::uint32_t>();
  return c;
}

DeviceEmulator::DeviceEmulator(PlacementRegistry registry, std::uint32_t tick_ms, DeviceSpec spec)
    : registry_(std::move(registry)), tick_ms_(tick_ms), spec_(spec) {}

std::vector<DeviceCommand> DeviceEmulator::receive(std::span<const std::uint8_t> frames) {
  auto cmds = decode_frames(frames);
  for (const auto& c : cmds) {
    if (!registry_.find(c.device_id)) {
      std::ostringstream msg;
      msg << "command for unregistered device " << c.device_id;
      throw RegistryError(msg.str());
    }
    const std::uint64_t start = c.tick * tick_ms_ + c.onset_ms;
    auto& pulses = timeline_[c.device_id];
    if (c.level == Level::Off) {
      // Truncate anything still running or scheduled.
      for (auto& p : pulses) p.end_ms = std::min(p.end_ms, std::max(p.start_ms, start));
      continue;
    }
    pulses.push_back({start, start + c.duration_ms, c.amplitude});
    // Keep a bounded history window.
    constexpr std::uint64_t kHistoryMs = 10'000;
    if (start > kHistoryMs) {
      std::erase_if(pulses, [&](const Pulse& p) { return p.end_ms + kHistoryMs < start; });
    }
  }
  return cmds;
}

double DeviceEmulator::amplitude_at(std::uint16_t device_id, std::uint64_t t_ms) const {
  const auto it = timeline_.find(device_id);
  if (it == timeline_.end()) return 0.0;
  double amp = 0.0;
  std::uint64_t latest = 0;
  bool found = false;
  for (const auto& p : it->second) {
    if (t_ms >= p.start_ms && t_ms < p.end_ms && (!found || p.start_ms >= latest)) {
      amp = p.amplitude;
      latest = p.start_ms;
      found = true;
    }
  }
  return amp;
}

}  // namespace ergoguide
