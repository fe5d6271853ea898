#pragma once

#include <memory>
#include <string>
#include <utility>

#include "tokengate/control/api.hpp"

namespace tokengate::control {

// "host:port" -> (host, port). Throws Error{Usage}.
std::pair<std::string, int> parse_host_port(const std::string& address);

// Serves ControlApi over HTTP/1.1 plus GET /v1/stream as server-sent events:
// each event is "id: <event_id>" followed by "data: <event json>". The stream
// starts after ?after=<id> or the Last-Event-ID header.
class HttpApiServer {
 public:
  HttpApiServer(ControlApi& api, EventFeed& feed);
  ~HttpApiServer();
  HttpApiServer(const HttpApiServer&) = delete;
  HttpApiServer& operator=(const HttpApiServer&) = delete;

  // Binds and serves on a background thread; port 0 picks a free port.
  // Returns the bound port. Throws Error{Io}.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tokengate::control
