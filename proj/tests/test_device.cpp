#include <doctest.h>

#include <bit>
#include <cstring>
#include <thread>

#include "ergoguide/device.hpp"
#include "ergoguide/errors.hpp"

using namespace ergoguide;

TEST_CASE("device metadata") {
  const DeviceSpec s;
  CHECK(s.carrier_hz == 121.0);
  CHECK(s.mass_g == 28.0);
  CHECK(s.amplitude_levels == 3);
}

TEST_CASE("wire frame layout") {
  const DeviceCommand c{0x0102030405060708ULL, 0x0A0B, Level::L2, 0.66, 400, 800};
  const auto f = encode_frame(c);
  REQUIRE(f.size() == kCommandFrameBytes);
  CHECK(f[0] == 27);
  CHECK(f[1] == 0);
  CHECK(f[4] == 0x08);   // tick, little endian
  CHECK(f[11] == 0x01);
  CHECK(f[12] == 0x0B);  // device id
  CHECK(f[13] == 0x0A);
  CHECK(f[14] == 2);     // level
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | f[15 + i];
  CHECK(std::bit_cast<double>(bits) == 0.66);
  CHECK(f[23] == (400 & 0xFF));
  CHECK(f[24] == (400 >> 8));
  CHECK(f[27] == (800 & 0xFF));
}

TEST_CASE("frames round trip bit-exactly") {
  std::vector<DeviceCommand> cmds{{1, 1, Level::L1, 0.11, 400, 0},
                                  {1, 1, Level::L1, 0.22, 400, 400},
                                  {2, 7, Level::Off, 0.0, 0, 0},
                                  {99, 3, Level::L3, 1.0 / 3.0, 400, 800}};
  CHECK(decode_frames(encode_frames(cmds)) == cmds);
  CHECK(decode_frames(std::vector<std::uint8_t>{}).empty());
}

TEST_CASE("malformed frames are rejected") {
  auto f = encode_frame({1, 1, Level::L1, 0.33, 400, 0});
  SUBCASE("truncated") {
    f.pop_back();
    CHECK_THROWS_AS(decode_frames(f), InputError);
  }
  SUBCASE("bad length prefix") {
    f[0] = 26;
    CHECK_THROWS_AS(decode_frames(f), InputError);
  }
  SUBCASE("unknown level") {
    f[14] = 9;
    CHECK_THROWS_AS(decode_frames(f), InputError);
  }
}

TEST_CASE("command JSON") {
  const DeviceCommand c{5, 2, Level::L3, 1.0, 400, 400};
  const auto j = command_to_json(c);
  CHECK(j.at("level") == "L3");
  CHECK(command_from_json(j) == c);
  auto bad = j;
  bad["level"] = "L9";
  CHECK_THROWS(command_from_json(bad));
}

TEST_CASE("device emulator timelines") {
  DeviceEmulator emu(PlacementRegistry::standard(Modality::Ramp), 100);
  const std::vector<DeviceCommand> ramp{{10, 1, Level::L3, 1.0 / 3, 400, 0},
                                        {10, 1, Level::L3, 2.0 / 3, 400, 400},
                                        {10, 1, Level::L3, 1.0, 400, 800}};
  CHECK(emu.receive(encode_frames(ramp)) == ramp);
  CHECK(emu.amplitude_at(1, 999) == 0.0);
  CHECK(emu.amplitude_at(1, 1000) == doctest::Approx(1.0 / 3));
  CHECK(emu.amplitude_at(1, 1450) == doctest::Approx(2.0 / 3));
  CHECK(emu.amplitude_at(1, 1850) == 1.0);
  CHECK(emu.amplitude_at(1, 2200) == 0.0);
  CHECK(emu.amplitude_at(2, 1000) == 0.0);

  SUBCASE("OFF cuts running and scheduled pulses") {
    emu.receive(encode_frame({14, 1, Level::Off, 0.0, 0, 0}));
    CHECK(emu.amplitude_at(1, 1350) == doctest::Approx(1.0 / 3));
    CHECK(emu.amplitude_at(1, 1450) == 0.0);
    CHECK(emu.amplitude_at(1, 1850) == 0.0);
  }
  SUBCASE("unregistered device") {
    CHECK_THROWS_AS(emu.receive(encode_frame({1, 42, Level::L1, 0.33, 400, 0})), RegistryError);
  }
}

TEST_CASE("broadcast channel delivers every item to every subscriber in order") {
  Channel<int> ch;
  auto a = ch.subscribe();
  auto b = ch.subscribe();
  std::thread producer([&] {
    for (int i = 0; i < 1000; ++i) ch.publish(i);
  });
  std::vector<int> got;
  while (got.size() < 1000) {
    if (auto v = a->pop_for(std::chrono::seconds(5))) got.push_back(*v);
    else break;
  }
  producer.join();
  REQUIRE(got.size() == 1000);
  for (int i = 0; i < 1000; ++i) CHECK(got[static_cast<std::size_t>(i)] == i);
  const auto rest = b->drain();
  CHECK(rest.size() == 1000);
  CHECK(rest.back() == 999);
  CHECK_FALSE(b->try_pop().has_value());
}
