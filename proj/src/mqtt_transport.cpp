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

#include "kerbwatch/mqtt_transport.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cstring>

namespace kerbwatch::telemetry
{
namespace
{

void append_string(std::vector<std::uint8_t> & out, std::string_view s)
{
  if (s.size() > 0xFFFF) {
    throw InvariantViolation("MQTT string longer than 65535 bytes");
  }
  out.push_back(static_cast<std::uint8_t>(s.size() >> 8));
  out.push_back(static_cast<std::uint8_t>(s.size() & 0xFF));
  out.insert(out.end(), s.begin(), s.end());
}

std::vector<std::uint8_t> frame(std::uint8_t header, const std::vector<std::uint8_t> & body)
{
  std::vector<std::uint8_t> out{header};
  const auto len = encode_remaining_length(body.size());
  out.insert(out.end(), len.begin(), len.end());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

void set_timeout(int fd, std::chrono::milliseconds timeout)
{
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

}  // namespace

MqttEndpoint parse_mqtt_url(std::string_view url)
{
  std::string_view rest;
  for (std::string_view scheme : {"mqtt://", "tcp://"}) {
    if (url.starts_with(scheme)) {
      rest = url.substr(scheme.size());
      break;
    }
  }
  if (rest.empty()) {
    throw InvariantViolation("MQTT URL must look like mqtt://host[:port], got '" +
                             std::string(url) + "'");
  }
  if (const auto slash = rest.find('/'); slash != std::string_view::npos) {
    rest = rest.substr(0, slash);
  }
  MqttEndpoint ep;
  const auto colon = rest.rfind(':');
  if (colon == std::string_view::npos) {
    ep.host = std::string(rest);
  } else {
    ep.host = std::string(rest.substr(0, colon));
    const std::string port(rest.substr(colon + 1));
    int p = 0;
    try {
      p = std::stoi(port);
    } catch (const std::exception &) {
      p = -1;
    }
    if (p <= 0 || p > 65535) {
      throw InvariantViolation("invalid MQTT port '" + port + "'");
    }
    ep.port = static_cast<std::uint16_t>(p);
  }
  if (ep.host.empty()) {
    throw InvariantViolation("MQTT URL has no host");
  }
  return ep;
}

std::vector<std::uint8_t> encode_remaining_length(std::size_t n)
{
  if (n > 268435455) {
    throw InvariantViolation("MQTT packet too large");
  }
  std::vector<std::uint8_t> out;
  do {
    std::uint8_t byte = n % 128;
    n /= 128;
    if (n > 0) {
      byte |= 0x80;
    }
    out.push_back(byte);
  } while (n > 0);
  return out;
}

std::vector<std::uint8_t> encode_connect(std::string_view client_id, std::uint16_t keep_alive_s)
{
  std::vector<std::uint8_t> body;
  append_string(body, "MQTT");
  body.push_back(4);     // protocol level 3.1.1
  body.push_back(0x02);  // clean session
  body.push_back(static_cast<std::uint8_t>(keep_alive_s >> 8));
  body.push_back(static_cast<std::uint8_t>(keep_alive_s & 0xFF));
  append_string(body, client_id);
  return frame(0x10, body);
}

std::vector<std::uint8_t> encode_publish(
  std::string_view topic, std::string_view payload, int qos, std::uint16_t packet_id)
{
  if (qos < 0 || qos > 1) {
    throw InvariantViolation("only QoS 0 and 1 are supported");
  }
  std::vector<std::uint8_t> body;
  append_string(body, topic);
  if (qos > 0) {
    body.push_back(static_cast<std::uint8_t>(packet_id >> 8));
    body.push_back(static_cast<std::uint8_t>(packet_id & 0xFF));
  }
  body.insert(body.end(), payload.begin(), payload.end());
  return frame(static_cast<std::uint8_t>(0x30 | (qos << 1)), body);
}

std::vector<std::uint8_t> encode_disconnect()
{
  return {0xE0, 0x00};
}

MqttTransport::MqttTransport(
  MqttEndpoint endpoint, std::string client_id, std::chrono::milliseconds io_timeout,
  std::chrono::milliseconds retry_interval)
: endpoint_(std::move(endpoint)),
  client_id_(std::move(client_id)),
  io_timeout_(io_timeout),
  retry_interval_(retry_interval)
{
}

MqttTransport::~MqttTransport()
{
  if (fd_ >= 0) {
    write_all(encode_disconnect());
  }
  close_socket();
}

void MqttTransport::close_socket()
{
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

bool MqttTransport::write_all(const std::vector<std::uint8_t> & bytes)
{
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n <= 0) {
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

bool MqttTransport::read_exact(std::uint8_t * buf, std::size_t n)
{
  std::size_t off = 0;
  while (off < n) {
    const ssize_t got = ::recv(fd_, buf + off, n - off, 0);
    if (got <= 0) {
      return false;
    }
    off += static_cast<std::size_t>(got);
  }
  return true;
}

std::optional<std::pair<std::uint8_t, std::vector<std::uint8_t>>> MqttTransport::read_packet()
{
  std::uint8_t header = 0;
  if (!read_exact(&header, 1)) {
    return std::nullopt;
  }
  std::size_t len = 0;
  std::size_t multiplier = 1;
  for (int i = 0; i < 4; ++i) {
    std::uint8_t b = 0;
    if (!read_exact(&b, 1)) {
      return std::nullopt;
    }
    len += (b & 0x7F) * multiplier;
    multiplier *= 128;
    if ((b & 0x80) == 0) {
      break;
    }
  }
  std::vector<std::uint8_t> body(len);
  if (len > 0 && !read_exact(body.data(), len)) {
    return std::nullopt;
  }
  return std::make_pair(header, std::move(body));
}

bool MqttTransport::ensure_connected()
{
  if (fd_ >= 0) {
    return true;
  }
  const auto now = std::chrono::steady_clock::now();
  if (last_attempt_ && now - *last_attempt_ < retry_interval_) {
    return false;
  }
  last_attempt_ = now;

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo * res = nullptr;
  const std::string port = std::to_string(endpoint_.port);
  if (::getaddrinfo(endpoint_.host.c_str(), port.c_str(), &hints, &res) != 0) {
    return false;
  }
  for (addrinfo * ai = res; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) {
      continue;
    }
    set_timeout(fd, io_timeout_);
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      fd_ = fd;
      break;
    }
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) {
    return false;
  }
  const int one = 1;
  setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

  if (!write_all(encode_connect(client_id_, 60))) {
    close_socket();
    return false;
  }
  const auto ack = read_packet();
  // CONNACK: type 2, body {session present, return code}
  if (!ack || ack->first != 0x20 || ack->second.size() != 2 || ack->second[1] != 0) {
    close_socket();
    return false;
  }
  return true;
}

bool MqttTransport::send(const Message & m)
{
  if (!ensure_connected()) {
    return false;
  }
  const int qos = m.qos > 0 ? 1 : 0;
  const std::uint16_t pid = next_packet_id_;
  if (qos > 0) {
    next_packet_id_ = next_packet_id_ == 0xFFFF ? 1 : next_packet_id_ + 1;
  }
  if (!write_all(encode_publish(m.topic, m.payload, qos, pid))) {
    close_socket();
    return false;
  }
  if (qos == 0) {
    return true;
  }
  for (;;) {
    const auto pkt = read_packet();
    if (!pkt) {
      close_socket();
      return false;
    }
    const auto & [header, body] = *pkt;
    if ((header & 0xF0) == 0x40 && body.size() == 2 &&
        ((body[0] << 8) | body[1]) == pid)
    {
      return true;
    }
  }
}

}  // namespace kerbwatch::telemetry
