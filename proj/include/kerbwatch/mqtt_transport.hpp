// Copyright 2026 The Kerbwatch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KERBWATCH__MQTT_TRANSPORT_HPP_
#define KERBWATCH__MQTT_TRANSPORT_HPP_

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kerbwatch/telemetry.hpp"

namespace kerbwatch::telemetry
{

struct MqttEndpoint
{
  std::string host;
  std::uint16_t port{1883};
};

/// Accepts mqtt://host[:port] and tcp://host[:port]. Throws InvariantViolation otherwise.
MqttEndpoint parse_mqtt_url(std::string_view url);

// MQTT 3.1.1 packet encoders, exposed for wire-level tests.
std::vector<std::uint8_t> encode_remaining_length(std::size_t n);
std::vector<std::uint8_t> encode_connect(std::string_view client_id, std::uint16_t keep_alive_s);
std::vector<std::uint8_t> encode_publish(
  std::string_view topic, std::string_view payload, int qos, std::uint16_t packet_id);
std::vector<std::uint8_t> encode_disconnect();

/// Publish-only MQTT 3.1.1 client over a blocking TCP socket. QoS 1 messages count as sent
/// only after the matching PUBACK. Connection failures make send() return false so the
/// Publisher buffers; reconnects are attempted at most once per retry interval.
class MqttTransport : public Transport
{
public:
  explicit MqttTransport(
    MqttEndpoint endpoint, std::string client_id = "kerbwatch",
    std::chrono::milliseconds io_timeout = std::chrono::milliseconds(2000),
    std::chrono::milliseconds retry_interval = std::chrono::milliseconds(1000));
  ~MqttTransport() override;

  MqttTransport(const MqttTransport &) = delete;
  MqttTransport & operator=(const MqttTransport &) = delete;

  bool send(const Message & m) override;
  bool connected() const { return fd_ >= 0; }

private:
  bool ensure_connected();
  bool write_all(const std::vector<std::uint8_t> & bytes);
  bool read_exact(std::uint8_t * buf, std::size_t n);
  std::optional<std::pair<std::uint8_t, std::vector<std::uint8_t>>> read_packet();
  void close_socket();

  MqttEndpoint endpoint_;
  std::string client_id_;
  std::chrono::milliseconds io_timeout_;
  std::chrono::milliseconds retry_interval_;
  std::optional<std::chrono::steady_clock::time_point> last_attempt_;
  int fd_{-1};
  std::uint16_t next_packet_id_{1};
};

}  // namespace kerbwatch::telemetry

#endif  // KERBWATCH__MQTT_TRANSPORT_HPP_
