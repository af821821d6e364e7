#include "segrl/seg_proto.hpp"

#include <algorithm>

namespace segrl {

ProtoError::ProtoError(std::size_t offset, std::string cause)
    : std::runtime_error("seg-proto parse error at offset " + std::to_string(offset) + ": " + cause),
      offset_(offset),
      cause_(std::move(cause)) {}

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32_be(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

std::vector<std::uint8_t> encode_request(const Image& frame) {
  if (frame.rgb.size() != frame.pixel_count() * 3) throw std::invalid_argument("encode_request: malformed image");
  std::vector<std::uint8_t> out(kRequestHeaderSize + frame.rgb.size());
  std::copy(kSegMagic.begin(), kSegMagic.end(), out.begin());
  out.resize(kSegMagic.size());
  put_u32_be(out, static_cast<std::uint32_t>(frame.width));
  put_u32_be(out, static_cast<std::uint32_t>(frame.height));
  out.insert(out.end(), frame.rgb.begin(), frame.rgb.end());
  return out;
}

Image decode_request(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kRequestHeaderSize) {
    throw ProtoError(bytes.size(), "header short by " + std::to_string(kRequestHeaderSize - bytes.size()));
  }
  for (std::size_t i = 0; i < kSegMagic.size(); ++i) {
    if (bytes[i] != kSegMagic[i]) throw ProtoError(i, "bad magic");
  }
  const std::uint32_t w = get_u32_be(bytes.data() + 4);
  const std::uint32_t h = get_u32_be(bytes.data() + 8);
  const std::uint64_t payload = 3ull * w * h;
  const std::uint64_t have = bytes.size() - kRequestHeaderSize;
  if (w > 0x7fffffffu || h > 0x7fffffffu) throw ProtoError(4, "dimension out of range");
  if (have < payload) throw ProtoError(bytes.size(), "payload short by " + std::to_string(payload - have));
  if (have > payload) {
    throw ProtoError(kRequestHeaderSize + payload, "payload long by " + std::to_string(have - payload));
  }
  Image img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.rgb.assign(bytes.begin() + kRequestHeaderSize, bytes.end());
  return img;
}

std::vector<std::uint8_t> encode_response(const SegResponse& response) {
  std::vector<std::uint8_t> out;
  out.push_back(static_cast<std::uint8_t>(response.status));
  put_u32_be(out, response.segment_count);
  if (response.status == SegStatus::kOk) {
    out.reserve(out.size() + 4 * response.labels.size());
    for (std::uint32_t l : response.labels) put_u32_be(out, l);
  }
  return out;
}

SegResponse decode_response(std::span<const std::uint8_t> bytes, std::size_t expected_pixels) {
  if (bytes.size() < kResponseHeaderSize) {
    throw ProtoError(bytes.size(), "header short by " + std::to_string(kResponseHeaderSize - bytes.size()));
  }
  if (bytes[0] > 2) throw ProtoError(0, "unknown status " + std::to_string(bytes[0]));
  SegResponse r;
  r.status = static_cast<SegStatus>(bytes[0]);
  r.segment_count = get_u32_be(bytes.data() + 1);
  const std::size_t have = bytes.size() - kResponseHeaderSize;
  if (r.status != SegStatus::kOk) {
    if (have != 0) throw ProtoError(kResponseHeaderSize, "non-ok response carries " + std::to_string(have) + " payload bytes");
    return r;
  }
  const std::size_t payload = 4 * expected_pixels;
  if (have < payload) throw ProtoError(bytes.size(), "payload short by " + std::to_string(payload - have));
  if (have > payload) throw ProtoError(kResponseHeaderSize + payload, "payload long by " + std::to_string(have - payload));
  r.labels.resize(expected_pixels);
  std::vector<bool> seen(static_cast<std::size_t>(std::min<std::uint64_t>(r.segment_count, expected_pixels)) + 1, false);
  for (std::size_t i = 0; i < expected_pixels; ++i) {
    const std::size_t off = kResponseHeaderSize + 4 * i;
    const std::uint32_t l = get_u32_be(bytes.data() + off);
    if (l > r.segment_count) {
      throw ProtoError(off, "label " + std::to_string(l) + " exceeds segment count " + std::to_string(r.segment_count));
    }
    r.labels[i] = l;
    if (l < seen.size()) seen[l] = true;
  }
  if (r.segment_count > expected_pixels) {
    throw ProtoError(1, "segment count " + std::to_string(r.segment_count) + " exceeds pixel count");
  }
  for (std::uint32_t l = 1; l <= r.segment_count; ++l) {
    if (!seen[l]) throw ProtoError(kResponseHeaderSize, "labels not dense: label " + std::to_string(l) + " missing");
  }
  return r;
}

SegResponse to_response(const SegmentLabelMap& map) { return {SegStatus::kOk, map.segment_count, map.labels}; }

SegmentLabelMap to_label_map(const SegResponse& response, int width, int height) {
  if (response.status != SegStatus::kOk) throw std::invalid_argument("to_label_map: response status is not ok");
  SegmentLabelMap map{width, height, response.labels, response.segment_count};
  map.validate_dense();
  return map;
}

}  // namespace segrl
