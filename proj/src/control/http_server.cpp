#include "tokengate/control/http_server.hpp"

#include <atomic>
#include <charconv>
#include <thread>

#include "httplib.h"
#include "tokengate/common/error.hpp"

namespace tokengate::control {

std::pair<std::string, int> parse_host_port(const std::string& address) {
  auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0) throw Error(Errc::Usage, "expected host:port, got " + address);
  int port = -1;
  const char* first = address.data() + colon + 1;
  const char* last = address.data() + address.size();
  auto [ptr, ec] = std::from_chars(first, last, port);
  if (ec != std::errc() || ptr != last || port < 0 || port > 65535) {
    throw Error(Errc::Usage, "bad port in " + address);
  }
  return {address.substr(0, colon), port};
}

struct HttpApiServer::Impl {
  ControlApi* api;
  EventFeed* feed;
  httplib::Server server;
  std::thread thread;
  std::atomic<bool> stopping{false};

  static void reply(httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  }

  static ApiRequest to_request(const httplib::Request& req) {
    ApiRequest r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query[k] = v;
    r.authorization = req.get_header_value("Authorization");
    return r;
  }

  void stream(const httplib::Request& req, httplib::Response& res) {
    std::string cursor = req.get_param_value("after");
    if (cursor.empty()) cursor = req.get_header_value("Last-Event-ID");
    std::uint64_t after = 0;
    if (!cursor.empty()) {
      auto [ptr, ec] = std::from_chars(cursor.data(), cursor.data() + cursor.size(), after);
      if (ec != std::errc() || ptr != cursor.data() + cursor.size()) {
        reply(res, {400, {{"error", "USAGE"}, {"detail", "after must be an event id"}}});
        return;
      }
    }
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [this, after](std::size_t, httplib::DataSink& sink) mutable {
      while (!stopping && !feed->closed()) {
        auto events = feed->wait_after(after, std::chrono::milliseconds(200));
        for (const auto& e : events) {
          after = e.at("event_id").get<std::uint64_t>();
          std::string msg = "id: " + std::to_string(after) + "\ndata: " + e.dump() + "\n\n";
          if (!sink.write(msg.data(), msg.size())) return false;
        }
        if (events.empty()) {
          static constexpr char kKeepAlive[] = ": keep-alive\n\n";
          if (!sink.is_writable() || !sink.write(kKeepAlive, sizeof(kKeepAlive) - 1)) return false;
        }
      }
      sink.done();
      return true;
    });
  }
};

HttpApiServer::HttpApiServer(ControlApi& api, EventFeed& feed) : impl_(std::make_unique<Impl>()) {
  impl_->api = &api;
  impl_->feed = &feed;
  auto& svr = impl_->server;
  auto* impl = impl_.get();
  svr.Get("/v1/stream", [impl](const httplib::Request& req, httplib::Response& res) { impl->stream(req, res); });
  auto handler = [impl](const httplib::Request& req, httplib::Response& res) {
    Impl::reply(res, impl->api->handle(Impl::to_request(req)));
  };
  svr.Get(R"(/v1/.*)", handler);
  svr.Post(R"(/v1/.*)", handler);
}

HttpApiServer::~HttpApiServer() { stop(); }

int HttpApiServer::start(const std::string& host, int port) {
  auto& svr = impl_->server;
  int bound = port == 0 ? svr.bind_to_any_port(host) : (svr.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::Io, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([&svr] { svr.listen_after_bind(); });
  svr.wait_until_ready();
  return bound;
}

void HttpApiServer::stop() {
  if (!impl_) return;
  impl_->stopping = true;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace tokengate::control
