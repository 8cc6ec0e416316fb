#pragma once

// User-side service: holds the registry of nodes and things, sends sealed
// commands, tracks them as tickets, and folds STS replies back into the
// registry. ApiService puts an HTTP/JSON face on it.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "unitor/config_error.hpp"
#include "unitor/edon80.hpp"
#include "unitor/mailsim.hpp"
#include "unitor/wireproto.hpp"

namespace unitor::ctl {

using Clock = std::chrono::system_clock;

class ControllerError : public std::runtime_error {
 public:
  enum class Code { UnknownNode, UnknownThing, UnsupportedAction, UnknownTicket };

  ControllerError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

struct ThingEntry {
  std::string name;
  std::vector<wire::Action> actions{wire::Action::On, wire::Action::Off};
  std::optional<wire::Action> last_known_state;
  std::optional<Clock::time_point> last_update;
};

struct NodeEntry {
  std::string node_id;
  std::string address;
  std::string subject;
  edon80::Key80 shared_key;
  wire::QuadMode quad_mode = wire::QuadMode::Fixed;
  std::vector<ThingEntry> things;

  const ThingEntry* find_thing(std::string_view name) const;
};

struct ControllerConfig {
  mail::Credentials mailbox;
  mail::Endpoint broker;
  std::string api_bind = "127.0.0.1";
  std::uint16_t api_port = 8080;
  std::chrono::milliseconds poll_interval{200};
  std::chrono::milliseconds ticket_timeout{10000};
  std::optional<std::filesystem::path> static_dir;
  std::vector<NodeEntry> nodes;

  /// Throws ConfigError.
  static ControllerConfig from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
  static ControllerConfig load(const std::filesystem::path& path);
  /// Throws ConfigError: duplicate node ids, a thing without actions, ...
  void validate() const;
};

enum class TicketState { Sent, Acked, TimedOut };
std::string_view to_string(TicketState state);

struct CommandTicket {
  std::string id;
  std::string node_id;
  std::string thing;
  wire::Action action = wire::Action::On;
  std::uint64_t seq = 0;
  TicketState state = TicketState::Sent;
  Clock::time_point created{};
  Clock::time_point updated{};
};

enum class EventKind { Sent, Status, DropObserved, Timeout };
std::string_view to_string(EventKind kind);

struct Event {
  std::uint64_t event_seq = 0;
  EventKind kind = EventKind::Sent;
  nlohmann::json payload;
  Clock::time_point at{};
};

nlohmann::json to_json(const ThingEntry& thing);
/// Registry view of a node; the shared key is never included.
nlohmann::json to_json(const NodeEntry& node);
nlohmann::json to_json(const CommandTicket& ticket);
nlohmann::json to_json(const Event& event);

class Controller {
 public:
  using DateSource = std::function<qg4::RotationDate()>;

  /// Throws ConfigError.
  Controller(ControllerConfig config, std::shared_ptr<mail::Transport> transport,
             DateSource today = qg4::RotationDate::utc_today);

  /// Seals and mails a CMD frame with the next sequence number.
  /// Throws ControllerError for unknown node/thing or an action the thing
  /// does not offer, and mail::TransportError if the broker is unreachable
  /// (no ticket is created then).
  CommandTicket send_command(std::string_view node_id, std::string_view thing, wire::Action action);

  /// Drains the controller mailbox. Returns the number of STS replies that
  /// passed the filter. Throws mail::TransportError on fetch failure.
  std::size_t poll_replies();

  /// Moves tickets older than the configured timeout to TimedOut.
  std::size_t expire_tickets(Clock::time_point now = Clock::now());

  std::optional<CommandTicket> ticket(std::string_view id) const;
  std::vector<CommandTicket> tickets() const;
  /// Events with event_seq > since, in order.
  std::vector<Event> events_since(std::uint64_t since) const;
  std::vector<NodeEntry> nodes() const;
  std::optional<NodeEntry> node(std::string_view node_id) const;

  const ControllerConfig& config() const { return config_; }

 private:
  NodeEntry* find_node(std::string_view node_id);
  NodeEntry* find_node_by_address(std::string_view address);
  void log_event(EventKind kind, nlohmann::json payload);

  ControllerConfig config_;
  std::shared_ptr<mail::Transport> transport_;
  DateSource today_;
  wire::IvLog ivs_;

  // Sends are serialized so sequence numbers reach the mailbox in order.
  std::mutex send_mutex_;
  std::mutex poll_mutex_;
  mutable std::mutex state_mutex_;
  std::uint64_t next_seq_;
  std::uint64_t ticket_counter_ = 0;
  std::uint64_t event_seq_ = 0;
  std::map<std::string, wire::FilterPolicy> policies_;  // by node id
  std::map<std::string, CommandTicket, std::less<>> tickets_;
  std::vector<Event> events_;
};

/// HTTP/JSON API plus a background poller that drains replies and expires
/// tickets every poll interval.
///
///   GET  /api/nodes
///   GET  /api/nodes/{id}
///   POST /api/nodes/{id}/things/{thing}/command   {"action":"on"} -> 202 {"ticket": ...}
///   GET  /api/commands/{ticket}
///   GET  /api/events?since=N
class ApiService {
 public:
  /// Binds config().api_bind:api_port (0 picks a free port). Throws
  /// std::system_error if the port is taken.
  static std::unique_ptr<ApiService> start(Controller& controller);
  ~ApiService();
  ApiService(const ApiService&) = delete;
  ApiService& operator=(const ApiService&) = delete;

  std::uint16_t port() const { return port_; }
  /// Idempotent.
  void stop();

 private:
  struct Impl;
  explicit ApiService(std::unique_ptr<Impl> impl);

  std::unique_ptr<Impl> impl_;
  std::uint16_t port_ = 0;
};

}  // namespace unitor::ctl
