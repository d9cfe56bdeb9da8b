// HTTP front end: render, search and health endpoints, plus round-robin
// dispatch of render requests to external backends speaking the same
// /api/render contract.

#ifndef MATHSEARCH_SERVICE_HPP
#define MATHSEARCH_SERVICE_HPP

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mathsearch/corpus.hpp"

namespace httplib {
class Server;
}

namespace mathsearch {

struct HttpReply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Sends `body` to POST <url>/api/render. nullopt means the backend could
/// not be reached.
using RenderTransport = std::function<std::optional<HttpReply>(const std::string& url, const std::string& body)>;
using Clock = std::function<std::chrono::steady_clock::time_point()>;

RenderTransport http_transport(std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));

struct BackendStatus {
  std::string url;
  bool healthy = true;
  std::size_t failures = 0;
};

class BackendPool {
 public:
  static constexpr std::size_t kDefaultThreshold = 3;
  static constexpr std::chrono::seconds kDefaultCooldown{30};

  explicit BackendPool(std::vector<std::string> urls, RenderTransport transport = http_transport(),
                       Clock clock = std::chrono::steady_clock::now,
                       std::size_t threshold = kDefaultThreshold,
                       std::chrono::steady_clock::duration cooldown = kDefaultCooldown);

  /// Tries the backend under the cursor, then every other healthy backend
  /// once, in rotation order. The cursor moves by one per call. Unreachable
  /// backends and 5xx replies count as failures; any other reply is
  /// returned as-is. nullopt when no backend answered.
  std::optional<HttpReply> dispatch(const std::string& body);

  std::size_t size() const { return backends_.size(); }
  std::vector<BackendStatus> status() const;

 private:
  struct Backend {
    std::string url;
    std::size_t failures = 0;
    std::chrono::steady_clock::time_point last_failure{};
  };
  bool healthy_locked(const Backend& b, std::chrono::steady_clock::time_point now) const;

  mutable std::mutex mu_;
  std::vector<Backend> backends_;
  std::size_t cursor_ = 0;
  RenderTransport transport_;
  Clock clock_;
  std::size_t threshold_;
  std::chrono::steady_clock::duration cooldown_;
};

/// Parses {latex, query?} locally. 200 / 422 / 400.
HttpReply render_locally(const std::string& body);

class Service {
 public:
  Service(std::shared_ptr<const Snapshot> snapshot, std::shared_ptr<BackendPool> pool);

  HttpReply render(const std::string& body);
  HttpReply search(const std::string& body) const;
  HttpReply healthz() const;

  /// Registers the endpoints, and a static mount at `/` when static_dir is
  /// nonempty. Returns false if the static directory cannot be mounted.
  bool install(httplib::Server& server, const std::string& static_dir = "");

 private:
  std::shared_ptr<const Snapshot> snapshot_;
  std::shared_ptr<BackendPool> pool_;
};

}  // namespace mathsearch

#endif  // MATHSEARCH_SERVICE_HPP
