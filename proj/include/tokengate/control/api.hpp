#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tokengate/registry/registry.hpp"

// Operator API, version 1. Read models never carry key or secret material.
//
//   GET  /v1/gateways
//   GET  /v1/channels
//   GET  /v1/tokens
//   GET  /v1/events?after=<id>
//   GET  /v1/stream?after=<id>                  (server-sent events)
//   POST /v1/channels/{secID}/remove/{gatewayId}
//   POST /v1/gateways/{id}/decommission
//   POST /v1/tokens/{serial}/decommission?teardown=<bool>
//   POST /v1/events/{id}/revert
//
// POSTs need "Authorization: Bearer <operator credential>". Errors are
// {"error": CODE, "detail": text} with 400, 401, 404 or 409.
namespace tokengate::control {

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string authorization;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

// Event log fan-out for stream subscribers. The registry writer only appends
// under a short lock; subscribers wait on their own.
class EventFeed {
 public:
  void append(nlohmann::json event);
  // Events with event_id > after, waiting up to timeout for the first one.
  std::vector<nlohmann::json> wait_after(std::uint64_t after, std::chrono::milliseconds timeout);
  std::vector<nlohmann::json> after(std::uint64_t after) const;
  void close();
  bool closed() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::vector<nlohmann::json> events_;
  bool closed_ = false;
};

nlohmann::json gateways_view(const registry::Registry& reg);
nlohmann::json channels_view(const registry::Registry& reg);
nlohmann::json tokens_view(const registry::Registry& reg);

// Transport-independent request handler. Every mutation is exactly one
// registry call made under `writer`, followed by after_mutation (still under
// `writer`), which ships the resulting management messages.
class ControlApi {
 public:
  using Clock = std::function<std::uint64_t()>;

  ControlApi(registry::Registry& registry, std::mutex& writer, std::string operator_credential,
             Clock clock, std::function<void()> after_mutation = {});

  ApiResponse handle(const ApiRequest& request);

 private:
  bool authorized(const std::string& header) const;

  registry::Registry* registry_;
  std::mutex* writer_;
  std::string credential_;
  Clock clock_;
  std::function<void()> after_mutation_;
};

}  // namespace tokengate::control
