#include "unitor/wireproto.hpp"

#include <algorithm>
#include <charconv>
#include <vector>

#include "unitor/hex.hpp"

namespace unitor {

bool is_address(std::string_view address) {
  const auto at = address.find('@');
  if (at == std::string_view::npos || at == 0 || at + 1 >= address.size()) return false;
  if (address.find('@', at + 1) != std::string_view::npos) return false;
  return std::all_of(address.begin(), address.end(), [](char c) {
    return c > 0x20 && c < 0x7f && c != '<' && c != '>' && c != ',' && c != '"';
  });
}

}  // namespace unitor

namespace unitor::wire {
namespace {

// Longest frame: "CMD <32> off SEQ <20 digits>".
constexpr std::size_t kMaxFrameBytes = 65;

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::optional<std::uint64_t> parse_seq(std::string_view text) {
  if (text.empty() || text.size() > 20) return std::nullopt;
  if (text.size() > 1 && text[0] == '0') return std::nullopt;
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::optional<FrameKind> parse_kind(std::string_view text) {
  if (text == "CMD") return FrameKind::Cmd;
  if (text == "STQ") return FrameKind::Stq;
  if (text == "STS") return FrameKind::Sts;
  return std::nullopt;
}

OpenResult open_with(std::string_view iv_hex, const std::vector<std::uint8_t>& ct, const edon80::Key80& key,
                     const qg4::QuasigroupQuad& quad) {
  if (ct.size() > kMaxFrameBytes) return DropReason::BadGrammar;
  const auto iv = edon80::IV64::from_hex(iv_hex);
  const auto plain = edon80::xor_seal(key, iv, quad, ct);
  auto frame = parse_frame(std::string_view(reinterpret_cast<const char*>(plain.data()), plain.size()));
  if (!frame) return DropReason::BadGrammar;
  return *std::move(frame);
}

struct BodyParts {
  std::string_view iv_hex;
  std::vector<std::uint8_t> ct;
};

std::optional<BodyParts> split_body(std::string_view body) {
  if (!body.empty() && body.back() == '\n') body.remove_suffix(1);
  const auto lines = split(body, '\n');
  if (lines.size() != 3 || lines[0] != kBodyHeader) return std::nullopt;
  if (!lines[1].starts_with("IV: ") || !lines[2].starts_with("CT: ")) return std::nullopt;
  BodyParts parts;
  parts.iv_hex = lines[1].substr(4);
  if (parts.iv_hex.size() != 2 * edon80::IV64::kBytes || !from_lower_hex(parts.iv_hex)) return std::nullopt;
  auto ct = from_lower_hex(lines[2].substr(4));
  if (!ct) return std::nullopt;
  parts.ct = std::move(*ct);
  return parts;
}

}  // namespace

std::string_view to_string(FrameKind kind) {
  switch (kind) {
    case FrameKind::Cmd: return "CMD";
    case FrameKind::Stq: return "STQ";
    case FrameKind::Sts: return "STS";
  }
  return "?";
}

std::string_view to_string(Action action) { return action == Action::On ? "on" : "off"; }

std::optional<Action> parse_action(std::string_view text) {
  if (text == "on") return Action::On;
  if (text == "off") return Action::Off;
  return std::nullopt;
}

bool is_thing_name(std::string_view name) {
  if (name.empty() || name.size() > kMaxThingName) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

bool CommandFrame::valid() const {
  if (!is_thing_name(thing)) return false;
  return kind == FrameKind::Stq ? !action.has_value() : action.has_value();
}

std::string encode_frame(const CommandFrame& frame) {
  if (!frame.valid()) throw std::invalid_argument("invalid command frame");
  std::string out(to_string(frame.kind));
  out += ' ';
  out += frame.thing;
  if (frame.action) {
    out += ' ';
    out += to_string(*frame.action);
  }
  out += " SEQ ";
  out += std::to_string(frame.seq);
  return out;
}

std::optional<CommandFrame> parse_frame(std::string_view line) {
  const auto tokens = split(line, ' ');
  if (tokens.size() != 4 && tokens.size() != 5) return std::nullopt;
  const auto kind = parse_kind(tokens[0]);
  if (!kind) return std::nullopt;
  const bool with_action = *kind != FrameKind::Stq;
  if (tokens.size() != (with_action ? 5u : 4u)) return std::nullopt;
  if (!is_thing_name(tokens[1])) return std::nullopt;

  CommandFrame f;
  f.kind = *kind;
  f.thing = std::string(tokens[1]);
  std::size_t next = 2;
  if (with_action) {
    f.action = parse_action(tokens[next++]);
    if (!f.action) return std::nullopt;
  }
  if (tokens[next] != "SEQ") return std::nullopt;
  const auto seq = parse_seq(tokens[next + 1]);
  if (!seq) return std::nullopt;
  f.seq = *seq;
  return f;
}

std::string_view to_string(DropReason reason) {
  switch (reason) {
    case DropReason::UnauthorizedSender: return "UnauthorizedSender";
    case DropReason::BadSubject: return "BadSubject";
    case DropReason::MalformedBody: return "MalformedBody";
    case DropReason::BadGrammar: return "BadGrammar";
    case DropReason::StaleSequence: return "StaleSequence";
  }
  return "?";
}

bool IvLog::record(const edon80::Key80& key, const edon80::IV64& iv) {
  std::lock_guard lock(mutex_);
  return used_.emplace(key, iv).second;
}

bool IvLog::contains(const edon80::Key80& key, const edon80::IV64& iv) const {
  std::lock_guard lock(mutex_);
  return used_.contains({key, iv});
}

std::size_t IvLog::size() const {
  std::lock_guard lock(mutex_);
  return used_.size();
}

std::string seal_body(const CommandFrame& frame, const edon80::Key80& key, const qg4::QuasigroupQuad& quad,
                      const edon80::IV64& iv, IvLog& log) {
  const auto plain = encode_frame(frame);
  if (!log.record(key, iv)) throw IvReuseError();
  const auto ct = edon80::xor_seal(
      key, iv, quad, std::span(reinterpret_cast<const std::uint8_t*>(plain.data()), plain.size()));
  std::string body(kBodyHeader);
  body += "\nIV: ";
  body += iv.to_hex();
  body += "\nCT: ";
  body += to_hex(ct);
  body += '\n';
  return body;
}

std::string seal_body(const CommandFrame& frame, const edon80::Key80& key, const qg4::QuasigroupQuad& quad,
                      IvLog& log) {
  while (true) {
    const auto iv = edon80::IV64::random();
    if (!log.contains(key, iv)) return seal_body(frame, key, quad, iv, log);
  }
}

OpenResult open_body(std::string_view body, const edon80::Key80& key, const qg4::QuasigroupQuad& quad) {
  const auto parts = split_body(body);
  if (!parts) return DropReason::MalformedBody;
  return open_with(parts->iv_hex, parts->ct, key, quad);
}

std::string_view to_string(QuadMode mode) { return mode == QuadMode::Fixed ? "fixed" : "date"; }

QuadMode parse_quad_mode(std::string_view text) {
  if (text == "fixed") return QuadMode::Fixed;
  if (text == "date") return QuadMode::Date;
  throw std::invalid_argument("quad mode must be \"fixed\" or \"date\"");
}

qg4::QuasigroupQuad quad_for(QuadMode mode, const qg4::RotationDate& date) {
  return mode == QuadMode::Fixed ? qg4::standard_quad() : qg4::quasigroups_for_date(date);
}

std::string subject_for(std::string_view node_id) { return "UNITOR1 " + std::string(node_id); }

void FilterPolicy::check() const {
  if (allowed_senders.empty()) throw std::invalid_argument("filter policy has no allowed senders");
  if (expected_subject.empty()) throw std::invalid_argument("filter policy has no subject");
}

FilterOutcome filter(const Envelope& envelope, FilterPolicy& policy, const qg4::RotationDate& today) {
  if (!policy.allowed_senders.contains(envelope.from)) return DropReason::UnauthorizedSender;
  if (envelope.subject != policy.expected_subject) return DropReason::BadSubject;

  const auto parts = split_body(envelope.body);
  if (!parts) return DropReason::MalformedBody;
  auto opened = open_with(parts->iv_hex, parts->ct, policy.shared_key, quad_for(policy.quad_mode, today));
  if (policy.quad_mode == QuadMode::Date && std::holds_alternative<DropReason>(opened))
    opened = open_with(parts->iv_hex, parts->ct, policy.shared_key,
                       quad_for(QuadMode::Date, today.previous_day()));
  if (auto* reason = std::get_if<DropReason>(&opened)) return *reason;

  auto& frame = std::get<CommandFrame>(opened);
  const auto last = policy.last_seq_per_sender.find(envelope.from);
  if (last != policy.last_seq_per_sender.end() && frame.seq <= last->second) return DropReason::StaleSequence;
  // The cipher is malleable: a flipped digit can raise seq. Such a copy
  // still carries its original's IV.
  const auto iv = edon80::IV64::from_hex(parts->iv_hex);
  auto& seen = policy.seen_ivs[envelope.from];
  if (seen.contains(iv)) return DropReason::StaleSequence;
  seen.insert(iv);
  policy.last_seq_per_sender[envelope.from] = frame.seq;
  return std::move(frame);
}

}  // namespace unitor::wire
