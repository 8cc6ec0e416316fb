#pragma once

// The Unitor device daemon: polls its mailbox, filters every message
// through the three layers, drives virtual GPIO pins and answers accepted
// commands and status queries with sealed STS frames.

#include <array>
#include <chrono>
#include <condition_variable>
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
#include <thread>
#include <vector>

#include "json.hpp"
#include "unitor/config_error.hpp"
#include "unitor/edon80.hpp"
#include "unitor/mailsim.hpp"
#include "unitor/wireproto.hpp"

namespace unitor::node {

/// GPIO pins on the board, so at most this many things per node.
inline constexpr std::size_t kPinCount = 26;

class UnknownThing : public std::runtime_error {
 public:
  explicit UnknownThing(std::string_view thing) : std::runtime_error("unknown thing: " + std::string(thing)) {}
};

struct ThingPin {
  std::string name;
  unsigned pin = 0;
};

struct NodeConfig {
  std::string node_id;
  mail::Credentials mailbox;
  mail::Endpoint broker;
  std::vector<std::string> allowed_senders;
  std::string subject;  // "UNITOR1 <node_id>" when left empty in the file
  edon80::Key80 shared_key;
  wire::QuadMode quad_mode = wire::QuadMode::Fixed;
  std::vector<ThingPin> things;
  std::chrono::milliseconds poll_interval{200};
  std::optional<std::filesystem::path> audit_log;
  /// Pins, accepted sequence numbers and the outgoing counter survive
  /// restarts through this file.
  std::optional<std::filesystem::path> state_file;

  /// Parses and validates. Relative paths are resolved against `base`.
  /// Throws ConfigError.
  static NodeConfig from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
  static NodeConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// Throws ConfigError: more than 26 things, a pin outside 0..25 or used
  /// twice, a bad thing name, no allowed sender, and so on.
  void validate() const;

  std::optional<unsigned> pin_of(std::string_view thing) const;
};

enum class PinLevel { Low, High };

std::string_view to_string(PinLevel level);

struct PinState {
  PinLevel level = PinLevel::Low;
  std::chrono::system_clock::time_point changed{};
};

struct PinChange {
  unsigned pin = 0;
  PinLevel level = PinLevel::Low;
  std::string thing;
  std::uint64_t cause_seq = 0;
  std::chrono::system_clock::time_point at{};
};

/// 26 virtual pins. Levels change only through actuate(); reads are
/// safe from any thread.
class PinBank {
 public:
  PinBank() = default;
  explicit PinBank(const std::array<PinLevel, kPinCount>& initial);

  PinLevel level(unsigned pin) const;
  std::array<PinState, kPinCount> snapshot() const;
  /// Every transition, oldest first.
  std::vector<PinChange> changes() const;

 private:
  friend PinLevel actuate(PinBank&, const NodeConfig&, std::string_view, wire::Action, std::uint64_t);

  mutable std::mutex mutex_;
  std::array<PinState, kPinCount> pins_{};
  std::vector<PinChange> changes_;
};

/// Drives the pin mapped to `thing`: high for on, low for off. Idempotent.
/// Throws UnknownThing.
PinLevel actuate(PinBank& bank, const NodeConfig& config, std::string_view thing, wire::Action action,
                 std::uint64_t cause_seq = 0);

enum class Direction { In, Out };

struct AuditRecord {
  std::chrono::system_clock::time_point at{};
  Direction direction = Direction::In;
  std::string from;
  std::string to;
  std::string subject;
  /// "Accept", a DropReason name, "UnknownThing", "Ignored", "Sent", ...
  std::string outcome;

  nlohmann::json to_json() const;
};

/// Append-only; mirrored to a JSON-lines file when a path is given.
class AuditLog {
 public:
  explicit AuditLog(std::optional<std::filesystem::path> path = std::nullopt);
  void append(AuditRecord record);
  std::vector<AuditRecord> records() const;

 private:
  mutable std::mutex mutex_;
  std::vector<AuditRecord> records_;
  std::optional<std::filesystem::path> path_;
};

struct CycleReport {
  std::size_t fetched = 0;
  std::size_t accepted = 0;
  std::size_t replies_sent = 0;
  /// Accepted frames that needed no action (unknown thing, stray STS).
  std::size_t ignored = 0;
  std::size_t transport_errors = 0;
  std::map<wire::DropReason, std::size_t> dropped_by_reason;

  std::size_t dropped() const;
  CycleReport& operator+=(const CycleReport& other);
};

class Node {
 public:
  using DateSource = std::function<qg4::RotationDate()>;

  /// Throws ConfigError if the config is invalid.
  Node(NodeConfig config, std::shared_ptr<mail::Transport> transport, DateSource today = qg4::RotationDate::utc_today);

  /// One fetch / filter / act / reply / delete pass over the mailbox.
  /// Throws mail::TransportError if the mailbox cannot be fetched.
  CycleReport run_cycle();

  const NodeConfig& config() const { return config_; }
  const PinBank& pins() const { return pins_; }
  const AuditLog& audit() const { return audit_; }
  /// Throws UnknownThing.
  PinLevel level_of(std::string_view thing) const;
  std::uint64_t last_outgoing_seq() const { return out_seq_; }

 private:
  bool reply(const mail::StoredMessage& message, const wire::CommandFrame& frame, PinLevel level,
             CycleReport& report);
  void load_state();
  void save_state() const;

  NodeConfig config_;
  std::shared_ptr<mail::Transport> transport_;
  DateSource today_;
  wire::FilterPolicy policy_;
  wire::IvLog ivs_;
  PinBank pins_;
  AuditLog audit_;
  std::uint64_t out_seq_ = 0;
};

/// Reads the pin levels a daemon last persisted; all low without a file.
std::array<PinLevel, kPinCount> read_pin_levels(const NodeConfig& config);

/// Runs Node::run_cycle every poll interval on a background thread.
class Daemon {
 public:
  /// Throws ConfigError for an invalid config or when another daemon in
  /// this process already consumes the same mailbox.
  static std::unique_ptr<Daemon> start(NodeConfig config, std::shared_ptr<mail::Transport> transport);
  /// Uses a TcpTransport to the configured broker.
  static std::unique_ptr<Daemon> start(NodeConfig config);

  ~Daemon();
  Daemon(const Daemon&) = delete;
  Daemon& operator=(const Daemon&) = delete;

  /// Lets the in-flight cycle finish, then joins. Idempotent.
  void stop();

  const Node& node() const { return node_; }
  std::size_t cycles() const;
  CycleReport totals() const;
  std::vector<std::chrono::steady_clock::time_point> cycle_starts() const;
  std::optional<std::string> last_error() const;

 private:
  Daemon(NodeConfig config, std::shared_ptr<mail::Transport> transport);
  void loop(std::stop_token stop);

  Node node_;
  std::string consumer_key_;
  mutable std::mutex mutex_;
  std::condition_variable_any wake_;
  CycleReport totals_;
  std::vector<std::chrono::steady_clock::time_point> starts_;
  std::optional<std::string> last_error_;
  std::jthread thread_;
  std::once_flag stopped_;
};

}  // namespace unitor::node
