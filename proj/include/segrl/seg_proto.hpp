#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "segrl/env.hpp"
#include "segrl/segmenter.hpp"

namespace segrl {

// Wire layout (all integers unsigned 32-bit big-endian):
//   request:  "SEG1" | width | height | RGB bytes (3*w*h)
//   response: status (1 byte) | segment count | labels (w*h, only if status 0)
enum class SegStatus : std::uint8_t { kOk = 0, kModelError = 1, kBadRequest = 2 };

inline constexpr std::array<std::uint8_t, 4> kSegMagic{'S', 'E', 'G', '1'};
inline constexpr std::size_t kRequestHeaderSize = 12;
inline constexpr std::size_t kResponseHeaderSize = 5;

struct SegResponse {
  SegStatus status = SegStatus::kOk;
  std::uint32_t segment_count = 0;
  std::vector<std::uint32_t> labels;  // empty unless status == kOk

  friend bool operator==(const SegResponse&, const SegResponse&) = default;
};

class ProtoError : public std::runtime_error {
 public:
  ProtoError(std::size_t offset, std::string cause);
  std::size_t offset() const { return offset_; }
  const std::string& cause() const { return cause_; }

 private:
  std::size_t offset_;
  std::string cause_;
};

std::vector<std::uint8_t> encode_request(const Image& frame);
Image decode_request(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_response(const SegResponse& response);
// expected_pixels is w*h of the request the response answers. Non-dense
// label payloads are rejected.
SegResponse decode_response(std::span<const std::uint8_t> bytes, std::size_t expected_pixels);

SegResponse to_response(const SegmentLabelMap& map);
SegmentLabelMap to_label_map(const SegResponse& response, int width, int height);

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v);
std::uint32_t get_u32_be(const std::uint8_t* p);

// --- client ------------------------------------------------------------------

struct SegClientConfig {
  std::string endpoint;          // host:port
  int timeout_ms = 10000;

  void validate() const;
};

class SegError : public std::runtime_error {
 public:
  enum class Kind { kTimeout, kModelError, kBadRequest, kConnection, kProtocol };
  SegError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }
  bool retriable() const { return kind_ == Kind::kTimeout; }

 private:
  Kind kind_;
};

// Blocking TCP client with at most one request in flight. Connects in the
// constructor so an unreachable service fails at pipeline build time.
class SegClient {
 public:
  explicit SegClient(SegClientConfig config);
  ~SegClient();
  SegClient(const SegClient&) = delete;
  SegClient& operator=(const SegClient&) = delete;
  SegClient(SegClient&& other) noexcept;
  SegClient& operator=(SegClient&& other) noexcept;

  // One request, one response. A dropped connection is re-established once
  // and the request resent; a timeout closes the connection and throws a
  // retriable SegError.
  SegmentLabelMap remote_segment(const Image& frame);

  const SegClientConfig& config() const { return config_; }
  std::uint64_t requests_sent() const { return requests_sent_; }

 private:
  void connect();
  void close();
  SegmentLabelMap exchange(const std::vector<std::uint8_t>& request, const Image& frame,
                           std::chrono::steady_clock::time_point deadline);

  SegClientConfig config_;
  int fd_ = -1;
  std::uint64_t requests_sent_ = 0;
};

// Endpoint resolution: SEG_ENDPOINT wins over the flag value when set.
std::string resolve_seg_endpoint(const std::string& flag_value);

}  // namespace segrl
