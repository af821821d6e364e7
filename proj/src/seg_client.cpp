#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>

#include "segrl/seg_proto.hpp"

namespace segrl {
namespace {

using Clock = std::chrono::steady_clock;

std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == endpoint.size()) {
    throw std::invalid_argument("segmentation endpoint must be host:port, got '" + endpoint + "'");
  }
  return {endpoint.substr(0, colon), endpoint.substr(colon + 1)};
}

int remaining_ms(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
  return left < 0 ? 0 : static_cast<int>(left);
}

// Waits for fd readiness; throws kTimeout when the deadline passes.
void wait_for(int fd, short events, Clock::time_point deadline, const char* what) {
  while (true) {
    pollfd p{fd, events, 0};
    const int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc > 0) return;
    if (rc == 0) throw SegError(SegError::Kind::kTimeout, std::string("segmentation service timed out while ") + what);
    if (errno != EINTR) throw SegError(SegError::Kind::kConnection, std::string("poll failed: ") + std::strerror(errno));
  }
}

void send_all(int fd, const std::uint8_t* data, std::size_t n, Clock::time_point deadline) {
  while (n > 0) {
    wait_for(fd, POLLOUT, deadline, "sending");
    const ssize_t sent = ::send(fd, data, n, MSG_NOSIGNAL);
    if (sent < 0) {
      if (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK) continue;
      throw SegError(SegError::Kind::kConnection, std::string("send failed: ") + std::strerror(errno));
    }
    data += sent;
    n -= static_cast<std::size_t>(sent);
  }
}

void recv_exact(int fd, std::uint8_t* data, std::size_t n, Clock::time_point deadline) {
  while (n > 0) {
    wait_for(fd, POLLIN, deadline, "waiting for a response");
    const ssize_t got = ::recv(fd, data, n, 0);
    if (got == 0) throw SegError(SegError::Kind::kConnection, "segmentation service closed the connection");
    if (got < 0) {
      if (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK) continue;
      throw SegError(SegError::Kind::kConnection, std::string("recv failed: ") + std::strerror(errno));
    }
    data += got;
    n -= static_cast<std::size_t>(got);
  }
}

}  // namespace

void SegClientConfig::validate() const {
  if (timeout_ms <= 0) throw std::invalid_argument("segmentation timeout must be positive");
  split_endpoint(endpoint);
}

std::string resolve_seg_endpoint(const std::string& flag_value) {
  if (const char* env = std::getenv("SEG_ENDPOINT"); env != nullptr && *env != '\0') return env;
  return flag_value;
}

SegClient::SegClient(SegClientConfig config) : config_(std::move(config)) {
  config_.validate();
  connect();
}

SegClient::~SegClient() { close(); }

SegClient::SegClient(SegClient&& other) noexcept
    : config_(std::move(other.config_)), fd_(other.fd_), requests_sent_(other.requests_sent_) {
  other.fd_ = -1;
}

SegClient& SegClient::operator=(SegClient&& other) noexcept {
  if (this != &other) {
    close();
    config_ = std::move(other.config_);
    fd_ = other.fd_;
    requests_sent_ = other.requests_sent_;
    other.fd_ = -1;
  }
  return *this;
}

void SegClient::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void SegClient::connect() {
  close();
  const auto [host, port] = split_endpoint(config_.endpoint);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &found); rc != 0) {
    throw SegError(SegError::Kind::kConnection, "cannot resolve " + config_.endpoint + ": " + ::gai_strerror(rc));
  }
  const auto deadline = Clock::now() + std::chrono::milliseconds(config_.timeout_ms);
  std::string last_error = "no addresses";
  for (addrinfo* ai = found; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK);
    int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
    if (rc < 0 && errno == EINPROGRESS) {
      pollfd p{fd, POLLOUT, 0};
      rc = ::poll(&p, 1, remaining_ms(deadline));
      int err = 0;
      socklen_t len = sizeof(err);
      if (rc == 1 && ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len) == 0 && err == 0) {
        rc = 0;
      } else {
        errno = rc == 0 ? ETIMEDOUT : err;
        rc = -1;
      }
    }
    if (rc == 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      fd_ = fd;
      break;
    }
    last_error = std::strerror(errno);
    ::close(fd);
  }
  ::freeaddrinfo(found);
  if (fd_ < 0) {
    throw SegError(SegError::Kind::kConnection, "segmentation service unreachable at " + config_.endpoint + ": " + last_error);
  }
}

SegmentLabelMap SegClient::exchange(const std::vector<std::uint8_t>& request, const Image& frame,
                                    Clock::time_point deadline) {
  send_all(fd_, request.data(), request.size(), deadline);
  ++requests_sent_;
  std::vector<std::uint8_t> response(kResponseHeaderSize);
  recv_exact(fd_, response.data(), kResponseHeaderSize, deadline);
  const auto status = response[0];
  if (status == static_cast<std::uint8_t>(SegStatus::kOk)) {
    response.resize(kResponseHeaderSize + 4 * frame.pixel_count());
    recv_exact(fd_, response.data() + kResponseHeaderSize, 4 * frame.pixel_count(), deadline);
  }
  SegResponse decoded;
  try {
    decoded = decode_response(response, frame.pixel_count());
  } catch (const ProtoError& e) {
    close();
    throw SegError(SegError::Kind::kProtocol, e.what());
  }
  switch (decoded.status) {
    case SegStatus::kOk:
      return to_label_map(decoded, frame.width, frame.height);
    case SegStatus::kModelError:
      throw SegError(SegError::Kind::kModelError, "segmentation service reported a model error (status 1)");
    case SegStatus::kBadRequest:
      throw SegError(SegError::Kind::kBadRequest, "segmentation service rejected the request (status 2)");
  }
  throw SegError(SegError::Kind::kProtocol, "unreachable status");
}

SegmentLabelMap SegClient::remote_segment(const Image& frame) {
  const auto request = encode_request(frame);
  const auto deadline = Clock::now() + std::chrono::milliseconds(config_.timeout_ms);
  for (int attempt = 0;; ++attempt) {
    try {
      if (fd_ < 0) connect();
      return exchange(request, frame, deadline);
    } catch (const SegError& e) {
      if (e.kind() == SegError::Kind::kTimeout) {
        close();
        throw;
      }
      if (e.kind() != SegError::Kind::kConnection || attempt > 0) throw;
      close();
    }
  }
}

}  // namespace segrl
