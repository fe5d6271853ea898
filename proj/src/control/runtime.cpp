#include "tokengate/control/runtime.hpp"

#include <chrono>

#include "tokengate/common/error.hpp"
#include "tokengate/mgmt/wire.hpp"

namespace tokengate::control {

using namespace std::chrono_literals;

std::uint64_t wall_clock_ms() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
          .count());
}

ServerRuntime::ServerRuntime(ServerConfig config, const token::MasterKey& master_key,
                             std::function<std::uint64_t()> clock)
    : config_(std::move(config)),
      clock_(std::move(clock)),
      state_(ServerState::open(config_.state_path, config_.hsm_path, master_key, rng_, config_.server_mgmt_address)) {
  server_ = std::make_unique<server::ManagementServer>(state_.registry(), rng_);
  if (config_.event_log) event_log_ = std::make_unique<EventLogFile>(*config_.event_log);
  for (const auto& e : state_.registry().events()) feed_.append(registry::to_json(e));
  state_.registry().set_event_sink([this](const registry::ConfigEvent& ev) {
    auto j = registry::to_json(ev);
    if (event_log_) event_log_->append(j.dump());
    feed_.append(std::move(j));
    dirty_ = true;
  });
  if (config_.api) {
    if (config_.operator_token.empty()) throw Error(Errc::Usage, "the API needs an operator credential");
    api_ = std::make_unique<ControlApi>(state_.registry(), writer_, config_.operator_token, clock_, [this] {
      ship(server_->flush());
      persist_if_dirty();
    });
    http_ = std::make_unique<HttpApiServer>(*api_, feed_);
  }
}

ServerRuntime::~ServerRuntime() {
  try {
    stop();
  } catch (const Error&) {
  }
}

void ServerRuntime::start() {
  auto [host, port] = parse_host_port(config_.listen);
  listener_ = listen_tcp(host, port);
  mgmt_port_ = local_port(listener_);
  if (http_) {
    auto [ahost, aport] = parse_host_port(*config_.api);
    api_port_ = http_->start(ahost, aport);
  }
  accept_thread_ = std::thread([this] { accept_loop(); });
  liveness_thread_ = std::thread([this] { liveness_loop(); });
}

void ServerRuntime::stop() {
  if (stopping_.exchange(true)) return;
  feed_.close();
  if (http_) http_->stop();
  if (accept_thread_.joinable()) accept_thread_.join();
  if (liveness_thread_.joinable()) liveness_thread_.join();
  {
    std::lock_guard lock(connections_mu_);
    for (auto& c : connections_) c.socket.shutdown();
  }
  for (auto& c : connections_) {
    if (c.thread.joinable()) c.thread.join();
  }
  std::lock_guard lock(writer_);
  state_.save();
}

void ServerRuntime::accept_loop() {
  while (!stopping_) {
    Socket s;
    try {
      s = accept_tcp(listener_, 200);
    } catch (const Error&) {
      continue;
    }
    if (!s.valid()) continue;
    std::lock_guard lock(connections_mu_);
    for (auto it = connections_.begin(); it != connections_.end();) {
      if (it->done) {
        it->thread.join();
        it = connections_.erase(it);
      } else {
        ++it;
      }
    }
    auto& conn = connections_.emplace_back();
    conn.id = next_connection_++;
    conn.socket = std::move(s);
    conn.thread = std::thread([this, &conn] { serve(conn); });
  }
}

void ServerRuntime::serve(Connection& conn) {
  {
    std::lock_guard lock(writer_);
    by_id_[conn.id] = &conn;
  }
  mgmt::wire::StreamDecoder decoder;
  std::array<std::uint8_t, 4096> buf{};
  try {
    for (;;) {
      auto n = recv_some(conn.socket, buf);
      if (n == 0) break;
      decoder.feed(ByteView(buf).first(n));
      while (auto body = decoder.next()) {
        std::lock_guard lock(writer_);
        bool handshake = false;
        try {
          handshake = mgmt::wire::peek_header(*body).kind == mgmt::wire::kHandshakeInit;
        } catch (const Error&) {
        }
        ship(server_->receive(clock_(), conn.id, *body));
        if (handshake) dirty_ = true;
        persist_if_dirty();
      }
    }
  } catch (const Error&) {
    // Oversized frame or socket failure: drop the connection.
  }
  {
    std::lock_guard lock(writer_);
    server_->disconnect(conn.id);
    by_id_.erase(conn.id);
  }
  conn.done = true;
}

void ServerRuntime::liveness_loop() {
  while (!stopping_) {
    std::this_thread::sleep_for(100ms);
    std::lock_guard lock(writer_);
    ship(server_->tick(clock_()));
    persist_if_dirty();
  }
}

void ServerRuntime::ship(const std::vector<server::Delivery>& deliveries) {
  for (const auto& d : deliveries) {
    auto it = by_id_.find(d.connection);
    if (it == by_id_.end()) continue;
    try {
      send_all(it->second->socket, mgmt::wire::length_prefixed(d.body));
    } catch (const Error&) {
      it->second->socket.shutdown();
    }
  }
}

void ServerRuntime::persist_if_dirty() {
  if (!dirty_) return;
  state_.save();
  dirty_ = false;
}

GatewayClient::GatewayClient(GatewayConfig config, std::function<std::uint64_t()> clock)
    : config_(std::move(config)), clock_(std::move(clock)) {
  auto state = nlohmann::json::parse(read_file(config_.state_path));
  agent_ = std::make_unique<gateway::GatewayAgent>(gateway::GatewayAgent::from_state(state, rng_));
  if (config_.token_path) {
    token_ = token::TokenDevice::from_image(nlohmann::json::parse(read_file(*config_.token_path)));
    agent_->plug(*token_, clock_());
  }
}

GatewayClient::~GatewayClient() { stop(); }

void GatewayClient::start() {
  reader_ = std::thread([this] { run(); });
  ticker_ = std::thread([this] {
    while (!stopping_) {
      std::this_thread::sleep_for(100ms);
      std::lock_guard lock(mu_);
      if (socket_.valid()) send(agent_->tick(clock_()));
    }
  });
}

void GatewayClient::stop() {
  if (stopping_.exchange(true)) return;
  {
    std::lock_guard lock(mu_);
    socket_.shutdown();
  }
  if (reader_.joinable()) reader_.join();
  if (ticker_.joinable()) ticker_.join();
}

bool GatewayClient::connect_once() {
  auto [host, port] = parse_host_port(config_.server);
  Socket s;
  try {
    s = connect_tcp(host, port);
  } catch (const Error&) {
    return false;
  }
  std::lock_guard lock(mu_);
  socket_ = std::move(s);
  auto init = agent_->connect(clock_());
  save_state();
  send({init});
  return true;
}

void GatewayClient::run() {
  while (!stopping_) {
    if (!connect_once()) {
      for (int i = 0; i < 10 && !stopping_; ++i) std::this_thread::sleep_for(100ms);
      continue;
    }
    mgmt::wire::StreamDecoder decoder;
    std::array<std::uint8_t, 4096> buf{};
    try {
      for (;;) {
        auto n = recv_some(socket_, buf);
        if (n == 0) break;
        decoder.feed(ByteView(buf).first(n));
        while (auto body = decoder.next()) {
          std::lock_guard lock(mu_);
          send(agent_->on_management(clock_(), *body));
        }
      }
    } catch (const Error&) {
    }
    std::lock_guard lock(mu_);
    agent_->connection_lost();
    socket_ = Socket();
  }
}

void GatewayClient::send(const std::vector<Bytes>& bodies) {
  for (const auto& b : bodies) {
    try {
      send_all(socket_, mgmt::wire::length_prefixed(b));
    } catch (const Error&) {
      socket_.shutdown();
      return;
    }
  }
}

void GatewayClient::save_state() { write_file_atomic(config_.state_path, agent_->to_state().dump(2) + "\n"); }

void GatewayClient::press() {
  std::lock_guard lock(mu_);
  auto persist_token = [this] {
    if (token_ && config_.token_path) write_file_atomic(*config_.token_path, token_->to_image().dump(2) + "\n");
  };
  std::vector<Bytes> bodies;
  try {
    bodies = agent_->on_button_press(clock_());
  } catch (const Error&) {
    persist_token();
    throw;
  }
  persist_token();
  send(bodies);
}

std::string GatewayClient::status_line() {
  std::lock_guard lock(mu_);
  return agent_->status_line(clock_());
}

bool GatewayClient::has_session() {
  std::lock_guard lock(mu_);
  return agent_->has_session();
}

}  // namespace tokengate::control
