#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tokengate/common/crypto.hpp"
#include "tokengate/common/error.hpp"
#include "tokengate/control/api.hpp"
#include "tokengate/control/runtime.hpp"
#include "tokengate/control/state_files.hpp"
#include "tokengate/netsim/scenario.hpp"

using namespace tokengate;

namespace {

constexpr const char* kOperatorTokenEnv = "TOKENGATE_OPERATOR_TOKEN";

int report_error(Errc code, const std::string& detail) {
  nlohmann::json j = {{"error", to_string(code)}, {"detail", detail}};
  std::cerr << j.dump() << "\n";
  return code == Errc::Usage ? 2 : 1;
}

struct SimArgs {
  std::string scenario;
  std::uint64_t seed = 1;
  std::string log;
  std::string capture;
};

int sim_run(const SimArgs& a) {
  netsim::ScenarioRunner runner(netsim::SimOptions{.seed = a.seed});
  std::optional<Error> failure;
  try {
    runner.run_file(a.scenario);
  } catch (const Error& e) {
    failure = e;
  }
  // Logs are written even when an assertion fails, for post-mortems.
  if (!a.log.empty()) control::write_file_atomic(a.log, runner.sim().event_log());
  if (!a.capture.empty()) control::write_file_atomic(a.capture, runner.sim().capture_log());
  if (failure) return report_error(failure->code(), failure->what());
  std::cout << runner.report().dump(2) << "\n";
  return 0;
}

struct ServerArgs {
  std::string state;
  std::string hsm;
  std::string listen = "127.0.0.1:7400";
  std::string api;
  std::string event_log;
  std::string operator_token;
  std::string address;
};

int run_server(const ServerArgs& a) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  control::ServerConfig cfg;
  cfg.state_path = a.state;
  cfg.hsm_path = a.hsm;
  cfg.listen = a.listen;
  if (!a.api.empty()) cfg.api = a.api;
  if (!a.event_log.empty()) cfg.event_log = a.event_log;
  cfg.operator_token = a.operator_token;
  if (cfg.operator_token.empty()) {
    if (const char* env = std::getenv(kOperatorTokenEnv)) cfg.operator_token = env;
  }
  cfg.server_mgmt_address = a.address.empty() ? a.listen : a.address;

  control::ServerRuntime server(cfg, token::master_key_from_env());
  server.start();
  nlohmann::json ready = {{"listening", server.mgmt_port()}};
  if (cfg.api) ready["api"] = server.api_port();
  std::cout << ready.dump() << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  return 0;
}

struct GatewayArgs {
  std::string id;
  std::string server;
  std::string state;
  std::string token;
};

int run_gateway(const GatewayArgs& a) {
  control::GatewayConfig cfg;
  cfg.state_path = a.state;
  cfg.server = a.server;
  if (!a.token.empty()) cfg.token_path = a.token;
  auto state = nlohmann::json::parse(control::read_file(a.state));
  if (state.value("gateway_id", std::string()) != a.id) {
    throw Error(Errc::Usage, "state file " + a.state + " does not belong to " + a.id);
  }
  control::GatewayClient client(cfg);
  client.start();
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line == "quit") break;
    if (line == "status") {
      std::cout << client.status_line() << std::endl;
    } else if (line == "press") {
      try {
        client.press();
        std::cout << nlohmann::json{{"ok", true}}.dump() << std::endl;
      } catch (const Error& e) {
        report_error(e.code(), e.what());
      }
    } else if (!line.empty()) {
      report_error(Errc::Usage, "commands: press, status, quit");
    }
  }
  client.stop();
  return 0;
}

struct ProvisionArgs {
  bool isolated = false;
  std::string state = "tokengate-state.json";
  std::string hsm = "tokengate-hsm.json";
  std::string server_address = "127.0.0.1:7400";
  std::string out;
  // gateway
  std::string id;
  std::string mgmt_address;
  std::string macsec_address;
  // token
  std::string serial;
  std::string channel;
};

void require_isolated(const ProvisionArgs& a) {
  if (!a.isolated) throw Error(Errc::NotIsolated, "provisioning requires the isolated port (--isolated)");
}

int provision_gateway(const ProvisionArgs& a) {
  require_isolated(a);
  SystemRandom rng;
  auto st = control::ServerState::open(a.state, a.hsm, token::master_key_from_env(), rng, a.server_address);
  auto& reg = st.registry();
  const auto n = reg.gateways().size() + 1;
  char mac[18];
  std::snprintf(mac, sizeof(mac), "02:00:00:00:%02zx:%02zx", (n >> 8) & 0xff, n & 0xff);
  registry::GatewayProvisioning req;
  req.gateway_id = a.id;
  auto keys = crypto::dh_generate(rng);
  req.public_key = keys.pub;
  req.mgmt_address = a.mgmt_address.empty() ? "10.0.1." + std::to_string(n) : a.mgmt_address;
  req.macsec_address = MacAddress::parse(a.macsec_address.empty() ? std::string(mac) : a.macsec_address);
  auto reply = reg.provision_gateway(registry::LinkKind::Isolated, req);
  gateway::GatewayAgent agent(gateway::GatewayIdentity{a.id, std::move(keys), req.macsec_address, req.mgmt_address,
                                                       reply.server_public_key, reply.server_mgmt_address},
                              rng);
  const std::string out = a.out.empty() ? a.id + ".gateway.json" : a.out;
  control::write_file_atomic(out, agent.to_state().dump(2) + "\n");
  st.save();
  std::cout << nlohmann::json{{"gatewayId", a.id},
                              {"macsecAddress", req.macsec_address.to_string()},
                              {"stateFile", out}}
                   .dump()
            << "\n";
  return 0;
}

int provision_token(const ProvisionArgs& a) {
  require_isolated(a);
  SystemRandom rng;
  auto st = control::ServerState::open(a.state, a.hsm, token::master_key_from_env(), rng, a.server_address);
  token::TokenDevice device(a.serial, rng);
  st.registry().provision_token(registry::LinkKind::Isolated, device, a.channel);
  const std::string out = a.out.empty() ? a.serial + ".token.json" : a.out;
  control::write_file_atomic(out, device.to_image().dump(2) + "\n");
  st.save();
  std::cout << nlohmann::json{{"serial", a.serial}, {"boundChannel", a.channel}, {"tokenFile", out}}.dump() << "\n";
  return 0;
}

int state_dump(const ProvisionArgs& a) {
  SystemRandom rng;
  if (!std::filesystem::exists(a.state)) throw Error(Errc::Io, "no state at " + a.state);
  auto st = control::ServerState::open(a.state, a.hsm, token::master_key_from_env(), rng, a.server_address);
  const auto& reg = st.registry();
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : reg.events()) events.push_back(registry::to_json(e));
  nlohmann::json out = {{"version", 1},
                        {"serverPublicKey", to_hex(reg.identity().static_key.pub)},
                        {"gateways", control::gateways_view(reg)["gateways"]},
                        {"channels", control::channels_view(reg)["channels"]},
                        {"tokens", control::tokens_view(reg)["tokens"]},
                        {"events", events}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tokengate: token-driven secure channel management"};
  app.require_subcommand(1);
  int rc = 0;

  auto* sim = app.add_subcommand("sim", "Deterministic network simulation");
  sim->require_subcommand(1);
  SimArgs sim_args;
  auto* sim_run_cmd = sim->add_subcommand("run", "Run a JSON-lines scenario");
  sim_run_cmd->add_option("scenario", sim_args.scenario, "Scenario file")->required();
  sim_run_cmd->add_option("--seed", sim_args.seed, "Random seed");
  sim_run_cmd->add_option("--log", sim_args.log, "Write the event log (JSON lines)");
  sim_run_cmd->add_option("--capture", sim_args.capture, "Write insecure-link captures (JSON lines)");
  sim_run_cmd->callback([&] { rc = sim_run(sim_args); });

  ServerArgs server_args;
  auto* server = app.add_subcommand("server", "Management server over TCP with the HTTP API");
  server->add_option("--state", server_args.state, "Registry snapshot file")->required();
  server->add_option("--hsm", server_args.hsm, "HSM store file")->required();
  server->add_option("--listen", server_args.listen, "Management host:port");
  server->add_option("--api", server_args.api, "HTTP API host:port");
  server->add_option("--event-log", server_args.event_log, "Append events to this JSON-lines file");
  server->add_option("--operator-token", server_args.operator_token,
                     std::string("Bearer credential for POSTs (default $") + kOperatorTokenEnv + ")");
  server->add_option("--address", server_args.address, "Management address handed to new gateways");
  server->callback([&] { rc = run_server(server_args); });

  GatewayArgs gateway_args;
  auto* gw = app.add_subcommand("gateway", "Gateway agent; reads press/status/quit from stdin");
  gw->add_option("--id", gateway_args.id, "Gateway id")->required();
  gw->add_option("--server", gateway_args.server, "Server host:port")->required();
  gw->add_option("--state", gateway_args.state, "Gateway state file")->required();
  gw->add_option("--token", gateway_args.token, "Token device file to plug in");
  gw->callback([&] { rc = run_gateway(gateway_args); });

  ProvisionArgs prov;
  auto* provision = app.add_subcommand("provision", "Provision over the isolated port");
  provision->require_subcommand(1);
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_flag("--isolated", prov.isolated, "Confirm the isolated provisioning port is used");
    cmd->add_option("--state", prov.state, "Registry snapshot file");
    cmd->add_option("--hsm", prov.hsm, "HSM store file");
    cmd->add_option("--server-address", prov.server_address, "Server management address (new state only)");
    cmd->add_option("--out", prov.out, "Device file to write");
  };
  auto* pgw = provision->add_subcommand("gateway", "Provision a gateway");
  add_common(pgw);
  pgw->add_option("--id", prov.id, "Gateway id")->required();
  pgw->add_option("--mgmt-address", prov.mgmt_address, "Gateway management address");
  pgw->add_option("--macsec-address", prov.macsec_address, "Gateway MACsec address");
  pgw->callback([&] { rc = provision_gateway(prov); });
  auto* ptok = provision->add_subcommand("token", "Provision a token and bind it to a channel");
  add_common(ptok);
  ptok->add_option("--serial", prov.serial, "Token serial")->required();
  ptok->add_option("--channel", prov.channel, "Channel label (secID)")->required();
  ptok->callback([&] { rc = provision_token(prov); });

  auto* state = app.add_subcommand("state", "Inspect server state");
  state->require_subcommand(1);
  auto* dump = state->add_subcommand("dump", "Print registry state without key material");
  dump->add_option("--state", prov.state, "Registry snapshot file");
  dump->add_option("--hsm", prov.hsm, "HSM store file");
  dump->callback([&] { rc = state_dump(prov); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return report_error(Errc::Usage, e.what());
  } catch (const Error& e) {
    return report_error(e.code(), e.what());
  } catch (const nlohmann::json::exception& e) {
    return report_error(Errc::Usage, e.what());
  } catch (const std::exception& e) {
    return report_error(Errc::Io, e.what());
  }
  return rc;
}
