#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "tokengate/common/random.hpp"
#include "tokengate/control/api.hpp"
#include "tokengate/control/http_server.hpp"
#include "tokengate/control/socket_io.hpp"
#include "tokengate/control/state_files.hpp"
#include "tokengate/gateway/agent.hpp"
#include "tokengate/server/management_server.hpp"
#include "tokengate/token/token_device.hpp"

namespace tokengate::control {

// Milliseconds since the Unix epoch; one tick in socket mode.
std::uint64_t wall_clock_ms();

struct ServerConfig {
  std::filesystem::path state_path;
  std::filesystem::path hsm_path;
  std::string listen = "127.0.0.1:7400";
  std::optional<std::string> api;
  std::optional<std::filesystem::path> event_log;
  std::string operator_token;
  std::string server_mgmt_address = "127.0.0.1:7400";
};

// Management server over TCP: one thread per gateway connection, one for
// liveness, plus the HTTP API. Every registry access holds writer().
class ServerRuntime {
 public:
  ServerRuntime(ServerConfig config, const token::MasterKey& master_key,
                std::function<std::uint64_t()> clock = wall_clock_ms);
  ~ServerRuntime();
  ServerRuntime(const ServerRuntime&) = delete;
  ServerRuntime& operator=(const ServerRuntime&) = delete;

  void start();
  void stop();
  int mgmt_port() const { return mgmt_port_; }
  int api_port() const { return api_port_; }

  std::mutex& writer() { return writer_; }
  registry::Registry& registry() { return state_.registry(); }
  server::ManagementServer& management() { return *server_; }

 private:
  struct Connection {
    server::ConnectionId id = 0;
    Socket socket;
    std::thread thread;
    std::atomic<bool> done{false};
  };

  void accept_loop();
  void serve(Connection& conn);
  void liveness_loop();
  // Callers hold writer_.
  void ship(const std::vector<server::Delivery>& deliveries);
  void persist_if_dirty();

  ServerConfig config_;
  std::function<std::uint64_t()> clock_;
  SystemRandom rng_;
  ServerState state_;
  std::unique_ptr<server::ManagementServer> server_;
  std::unique_ptr<EventLogFile> event_log_;
  EventFeed feed_;
  std::unique_ptr<ControlApi> api_;
  std::unique_ptr<HttpApiServer> http_;

  std::mutex writer_;
  bool dirty_ = false;
  std::atomic<bool> stopping_{false};
  Socket listener_;
  int mgmt_port_ = 0;
  int api_port_ = 0;
  std::thread accept_thread_;
  std::thread liveness_thread_;
  std::mutex connections_mu_;
  std::list<Connection> connections_;
  std::map<server::ConnectionId, Connection*> by_id_;
  server::ConnectionId next_connection_ = 1;
};

struct GatewayConfig {
  std::filesystem::path state_path;
  std::string server = "127.0.0.1:7400";
  std::optional<std::filesystem::path> token_path;
};

// A gateway agent speaking to a server over TCP. Reconnects with a fresh
// handshake when the connection drops.
class GatewayClient {
 public:
  explicit GatewayClient(GatewayConfig config, std::function<std::uint64_t()> clock = wall_clock_ms);
  ~GatewayClient();
  GatewayClient(const GatewayClient&) = delete;
  GatewayClient& operator=(const GatewayClient&) = delete;

  void start();
  void stop();
  // Throws Error{NoToken} or Error{NoSession}.
  void press();
  std::string status_line();
  bool has_session();

 private:
  void run();
  bool connect_once();
  void send(const std::vector<Bytes>& bodies);
  void save_state();

  GatewayConfig config_;
  std::function<std::uint64_t()> clock_;
  SystemRandom rng_;
  std::mutex mu_;
  std::unique_ptr<gateway::GatewayAgent> agent_;
  std::optional<token::TokenDevice> token_;
  Socket socket_;
  std::atomic<bool> stopping_{false};
  std::thread reader_;
  std::thread ticker_;
};

}  // namespace tokengate::control
