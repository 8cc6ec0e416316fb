#pragma once

// Unitor command protocol: the plaintext frame grammar, the sealed body
// format, and the three-layer acceptance filter.
//
//   frame:  <KIND> <thing> [<action>] SEQ <seq>
//   body:   UNITOR/1\nIV: <16 hex>\nCT: <hex>\n

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "unitor/edon80.hpp"
#include "unitor/envelope.hpp"
#include "unitor/qg4.hpp"

namespace unitor::wire {

enum class FrameKind { Cmd, Stq, Sts };
enum class Action { On, Off };

std::string_view to_string(FrameKind kind);
std::string_view to_string(Action action);
std::optional<Action> parse_action(std::string_view text);

inline constexpr std::size_t kMaxThingName = 32;

/// 1-32 characters from [a-z0-9_-].
bool is_thing_name(std::string_view name);

struct CommandFrame {
  FrameKind kind = FrameKind::Cmd;
  std::string thing;
  std::optional<Action> action;  // required for CMD and STS, absent for STQ
  std::uint64_t seq = 0;

  bool valid() const;
  friend bool operator==(const CommandFrame&, const CommandFrame&) = default;
};

/// Throws std::invalid_argument for an invalid frame.
std::string encode_frame(const CommandFrame& frame);

/// Accepts exactly the language produced by encode_frame. nullopt is the
/// grammar error; it carries no detail.
std::optional<CommandFrame> parse_frame(std::string_view line);

enum class DropReason { UnauthorizedSender, BadSubject, MalformedBody, BadGrammar, StaleSequence };

std::string_view to_string(DropReason reason);

class IvReuseError : public std::runtime_error {
 public:
  IvReuseError() : std::runtime_error("IV already used with this key") {}
};

/// IVs a sender has used, per key. Thread-safe.
class IvLog {
 public:
  /// Records the pair; false if it was already present.
  bool record(const edon80::Key80& key, const edon80::IV64& iv);
  bool contains(const edon80::Key80& key, const edon80::IV64& iv) const;
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::set<std::pair<edon80::Key80, edon80::IV64>> used_;
};

inline constexpr std::string_view kBodyHeader = "UNITOR/1";

/// Throws IvReuseError if `iv` was already logged for `key`.
std::string seal_body(const CommandFrame& frame, const edon80::Key80& key, const qg4::QuasigroupQuad& quad,
                      const edon80::IV64& iv, IvLog& log);
/// Draws fresh IVs until one is unused.
std::string seal_body(const CommandFrame& frame, const edon80::Key80& key, const qg4::QuasigroupQuad& quad,
                      IvLog& log);

using OpenResult = std::variant<CommandFrame, DropReason>;

/// MalformedBody if the three lines do not parse; BadGrammar if the
/// plaintext is not a frame. A single trailing LF is optional.
OpenResult open_body(std::string_view body, const edon80::Key80& key, const qg4::QuasigroupQuad& quad);

enum class QuadMode { Fixed, Date };

std::string_view to_string(QuadMode mode);
/// "fixed" or "date"; throws std::invalid_argument otherwise.
QuadMode parse_quad_mode(std::string_view text);

/// Quad in force for `mode` on `date`.
qg4::QuasigroupQuad quad_for(QuadMode mode, const qg4::RotationDate& date);

/// Subject registered for a node: "UNITOR1 <node-id>".
std::string subject_for(std::string_view node_id);

struct FilterPolicy {
  std::set<std::string> allowed_senders;
  std::string expected_subject;
  edon80::Key80 shared_key;
  QuadMode quad_mode = QuadMode::Fixed;
  std::map<std::string, std::uint64_t> last_seq_per_sender;
  /// IVs of accepted bodies per sender. Senders never reuse an IV, so a
  /// repeat is a replay or a tampered copy and is dropped as stale.
  std::map<std::string, std::set<edon80::IV64>> seen_ivs;

  /// Throws std::invalid_argument if the senders or the subject are empty.
  void check() const;
};

using FilterOutcome = std::variant<CommandFrame, DropReason>;

/// Sender, subject, then decrypt-and-validate, then sequence; the first
/// failing layer decides. On accept the sequence number and IV are
/// recorded; a seen IV fails the sequence layer. In
/// date mode the previous day's quad is also tried, so messages sealed
/// just before midnight UTC still open.
FilterOutcome filter(const Envelope& envelope, FilterPolicy& policy,
                     const qg4::RotationDate& today = qg4::RotationDate::utc_today());

inline bool accepted(const FilterOutcome& outcome) { return std::holds_alternative<CommandFrame>(outcome); }

}  // namespace unitor::wire
