#include <charconv>
#include <condition_variable>
#include <system_error>
#include <thread>

#include "httplib.h"
#include "unitor/controller.hpp"

namespace unitor::ctl {

using nlohmann::json;

namespace {

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
  reply_json(res, status, {{"error", message}});
}

}  // namespace

struct ApiService::Impl {
  Controller& controller;
  httplib::Server server;
  std::jthread http_thread;
  std::jthread poller;
  std::mutex mutex;
  std::condition_variable_any wake;
  std::once_flag stopped;

  explicit Impl(Controller& c) : controller(c) {
    // httplib's default sets SO_REUSEPORT, which would let a second
    // controller share the port silently.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
  }

  void routes() {
    server.Get("/api/nodes", [this](const httplib::Request&, httplib::Response& res) {
      json nodes = json::array();
      for (const auto& n : controller.nodes()) nodes.push_back(to_json(n));
      reply_json(res, 200, {{"nodes", nodes}});
    });

    server.Get(R"(/api/nodes/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const auto node = controller.node(req.matches[1].str());
      if (!node) return reply_error(res, 404, "unknown node");
      reply_json(res, 200, to_json(*node));
    });

    server.Post(R"(/api/nodes/([^/]+)/things/([^/]+)/command)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  const json body = json::parse(req.body, nullptr, false);
                  if (body.is_discarded() || !body.is_object() || !body.contains("action") ||
                      !body.at("action").is_string())
                    return reply_error(res, 400, "body must be {\"action\": \"on\"|\"off\"}");
                  const auto action = wire::parse_action(body.at("action").get<std::string>());
                  if (!action) return reply_error(res, 422, "unsupported action");
                  try {
                    const auto ticket = controller.send_command(req.matches[1].str(), req.matches[2].str(), *action);
                    reply_json(res, 202, {{"ticket", ticket.id}});
                  } catch (const ControllerError& e) {
                    const bool unsupported = e.code() == ControllerError::Code::UnsupportedAction;
                    reply_error(res, unsupported ? 422 : 404, e.what());
                  } catch (const mail::TransportError& e) {
                    reply_error(res, 502, e.what());
                  }
                });

    server.Get(R"(/api/commands/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const auto ticket = controller.ticket(req.matches[1].str());
      if (!ticket) return reply_error(res, 404, "unknown ticket");
      reply_json(res, 200, to_json(*ticket));
    });

    server.Get("/api/events", [this](const httplib::Request& req, httplib::Response& res) {
      std::uint64_t since = 0;
      if (req.has_param("since")) {
        const auto text = req.get_param_value("since");
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), since);
        if (ec != std::errc{} || ptr != text.data() + text.size()) return reply_error(res, 400, "bad since");
      }
      json events = json::array();
      for (const auto& e : controller.events_since(since)) events.push_back(to_json(e));
      reply_json(res, 200, {{"events", events}});
    });

    if (const auto& dir = controller.config().static_dir) server.set_mount_point("/", dir->string());
  }

  void poll_loop(std::stop_token stop) {
    const auto interval = controller.config().poll_interval;
    while (!stop.stop_requested()) {
      try {
        controller.poll_replies();
      } catch (const std::exception&) {
        // Broker unreachable: retried on the next tick.
      }
      controller.expire_tickets();
      std::unique_lock lock(mutex);
      wake.wait_for(lock, stop, interval, [] { return false; });
    }
  }
};

ApiService::ApiService(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

std::unique_ptr<ApiService> ApiService::start(Controller& controller) {
  auto impl = std::make_unique<Impl>(controller);
  impl->routes();
  const auto& cfg = controller.config();
  int port = cfg.api_port;
  if (port == 0) {
    port = impl->server.bind_to_any_port(cfg.api_bind);
    if (port < 0) throw std::system_error(std::make_error_code(std::errc::address_in_use), "bind API port");
  } else if (!impl->server.bind_to_port(cfg.api_bind, port)) {
    throw std::system_error(std::make_error_code(std::errc::address_in_use),
                            "bind API port " + std::to_string(port));
  }
  auto* raw = impl.get();
  impl->http_thread = std::jthread([raw] { raw->server.listen_after_bind(); });
  impl->poller = std::jthread([raw](std::stop_token st) { raw->poll_loop(st); });
  raw->server.wait_until_ready();

  std::unique_ptr<ApiService> service(new ApiService(std::move(impl)));
  service->port_ = static_cast<std::uint16_t>(port);
  return service;
}

ApiService::~ApiService() { stop(); }

void ApiService::stop() {
  std::call_once(impl_->stopped, [this] {
    impl_->poller.request_stop();
    if (impl_->poller.joinable()) impl_->poller.join();
    impl_->server.stop();
    if (impl_->http_thread.joinable()) impl_->http_thread.join();
  });
}

}  // namespace unitor::ctl
