// controller: runs the HTTP/JSON service, or talks to a running one.

#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "httplib.h"
#include "signals.hpp"
#include "unitor/controller.hpp"

using nlohmann::json;
using namespace unitor::ctl;

namespace {

struct ApiTarget {
  std::string host = "127.0.0.1";
  int port = 8080;
};

// --api wins; otherwise the api section of --config; otherwise the default.
ApiTarget resolve_target(const std::string& api, const std::string& config_path) {
  ApiTarget t;
  if (!api.empty()) {
    std::string rest = api;
    if (rest.starts_with("http://")) rest.erase(0, 7);
    while (!rest.empty() && rest.back() == '/') rest.pop_back();
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos) {
      t.host = rest;
    } else {
      t.host = rest.substr(0, colon);
      t.port = std::stoi(rest.substr(colon + 1));
    }
  } else if (!config_path.empty()) {
    const auto cfg = ControllerConfig::load(config_path);
    t.host = cfg.api_bind == "0.0.0.0" ? "127.0.0.1" : cfg.api_bind;
    t.port = cfg.api_port;
  }
  return t;
}

json must_parse(const httplib::Result& res, const ApiTarget& t) {
  if (!res) throw std::runtime_error("controller API at " + t.host + ":" + std::to_string(t.port) + " unreachable");
  const auto body = json::parse(res->body, nullptr, false);
  if (res->status >= 400) {
    const auto message = body.is_object() && body.contains("error") ? body["error"].get<std::string>() : res->body;
    throw std::runtime_error("HTTP " + std::to_string(res->status) + ": " + message);
  }
  return body;
}

int serve(const std::string& config_path) {
  auto config = ControllerConfig::load(config_path);
  const auto signals = unitor::tools::block_shutdown_signals();
  auto transport = std::make_shared<unitor::mail::TcpTransport>(config.broker);
  Controller controller(std::move(config), transport);
  auto api = ApiService::start(controller);
  std::cout << "api=" << controller.config().api_bind << ":" << api->port() << std::endl;
  unitor::tools::wait_for_shutdown(signals);
  api->stop();
  return 0;
}

int send(const ApiTarget& t, const std::string& node, const std::string& thing, const std::string& action,
         double wait_seconds) {
  httplib::Client http(t.host, t.port);
  http.set_connection_timeout(2);
  const auto posted = must_parse(http.Post("/api/nodes/" + node + "/things/" + thing + "/command",
                                           json{{"action", action}}.dump(), "application/json"),
                                 t);
  const auto id = posted.at("ticket").get<std::string>();
  auto ticket = must_parse(http.Get("/api/commands/" + id), t);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(wait_seconds);
  while (ticket.at("state") == "sent" && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    ticket = must_parse(http.Get("/api/commands/" + id), t);
  }
  std::cout << ticket.dump() << '\n';
  if (wait_seconds <= 0) return 0;
  return ticket.at("state") == "acked" ? 0 : 3;
}

int status(const ApiTarget& t, const std::string& node, bool as_json) {
  httplib::Client http(t.host, t.port);
  http.set_connection_timeout(2);
  const auto n = must_parse(http.Get("/api/nodes/" + node), t);
  if (as_json) {
    std::cout << n.dump(2) << '\n';
    return 0;
  }
  std::cout << n.at("node_id").get<std::string>() << " <" << n.at("address").get<std::string>() << ">\n";
  for (const auto& thing : n.at("things")) {
    const auto& state = thing.at("last_known_state");
    const auto& when = thing.at("last_update");
    std::cout << "  " << thing.at("name").get<std::string>() << ": "
              << (state.is_null() ? std::string("unknown") : state.get<std::string>());
    if (!when.is_null()) std::cout << " (" << when.get<std::string>() << ")";
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unitor controller"};
  app.require_subcommand(1);
  std::string config_path, api, node, thing, action;
  double wait_seconds = 0;
  bool as_json = false;

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API and the reply poller");
  serve_cmd->add_option("--config", config_path, "Controller JSON config")->required()->check(CLI::ExistingFile);

  auto* send_cmd = app.add_subcommand("send", "Send a command through a running controller");
  send_cmd->add_option("--node", node, "Node id")->required();
  send_cmd->add_option("--thing", thing, "Thing name")->required();
  send_cmd->add_option("--action", action, "on or off")->required()->check(CLI::IsMember({"on", "off"}));
  send_cmd->add_option("--wait", wait_seconds, "Seconds to wait for the ack; exit 3 if it does not come");

  auto* status_cmd = app.add_subcommand("status", "Show the last known state of a node's things");
  status_cmd->add_option("--node", node, "Node id")->required();
  status_cmd->add_flag("--json", as_json, "Print the raw JSON");

  for (auto* sub : {send_cmd, status_cmd}) {
    sub->add_option("--api", api, "Controller API as host:port (default 127.0.0.1:8080)");
    sub->add_option("--config", config_path, "Read the API address from this controller config")
        ->check(CLI::ExistingFile);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve_cmd) return serve(config_path);
    const auto target = resolve_target(api, config_path);
    if (*send_cmd) return send(target, node, thing, action, wait_seconds);
    return status(target, node, as_json);
  } catch (const std::exception& e) {
    std::cerr << "controller: " << e.what() << '\n';
    return 1;
  }
}
