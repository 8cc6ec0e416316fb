#include "unitor/node.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json_util.hpp"
#include "time_util.hpp"

namespace unitor::node {

using nlohmann::json;
using wire::Action;
using wire::CommandFrame;
using wire::DropReason;
using wire::FrameKind;

namespace {

std::mutex consumers_mutex;
std::set<std::string> active_consumers;

}  // namespace

// --- NodeConfig ---

NodeConfig NodeConfig::from_json(const json& j, const std::filesystem::path& base) {
  using namespace jsonutil;
  const std::string where = "node config";
  NodeConfig c;
  c.node_id = get<std::string>(j, "node_id", where);
  c.mailbox = credentials(j, where);
  c.broker = endpoint(j, where);

  const auto& policy = require(j, "policy", where);
  c.allowed_senders = get<std::vector<std::string>>(policy, "allowed_senders", where + ".policy");
  c.subject = get_or<std::string>(policy, "subject", "", where + ".policy");
  if (c.subject.empty()) c.subject = wire::subject_for(c.node_id);
  try {
    c.shared_key = edon80::Key80::from_hex(get<std::string>(policy, "shared_key", where + ".policy"));
    c.quad_mode = wire::parse_quad_mode(get_or<std::string>(policy, "quad_mode", "fixed", where + ".policy"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ".policy: " + e.what());
  }

  for (const auto& t : require(j, "things", where)) {
    c.things.push_back({get<std::string>(t, "name", where + ".things"), get<unsigned>(t, "pin", where + ".things")});
  }
  c.poll_interval = millis_or(j, "poll_interval_ms", c.poll_interval, where);
  c.audit_log = path_or_none(j, "audit_log", base, where);
  c.state_file = path_or_none(j, "state_file", base, where);
  c.validate();
  return c;
}

NodeConfig NodeConfig::load(const std::filesystem::path& path) {
  return from_json(jsonutil::read_file(path), path.parent_path());
}

json NodeConfig::to_json() const {
  json things_json = json::array();
  for (const auto& t : things) things_json.push_back({{"name", t.name}, {"pin", t.pin}});
  json j = {{"node_id", node_id},
            {"mailbox", jsonutil::to_json(mailbox)},
            {"broker", jsonutil::to_json(broker)},
            {"policy",
             {{"allowed_senders", allowed_senders},
              {"subject", subject},
              {"shared_key", shared_key.to_hex()},
              {"quad_mode", wire::to_string(quad_mode)}}},
            {"things", things_json},
            {"poll_interval_ms", poll_interval.count()}};
  if (audit_log) j["audit_log"] = audit_log->string();
  if (state_file) j["state_file"] = state_file->string();
  return j;
}

void NodeConfig::validate() const {
  if (node_id.empty()) throw ConfigError("node_id is empty");
  if (!is_address(mailbox.address)) throw ConfigError("mailbox address is malformed: " + mailbox.address);
  if (allowed_senders.empty()) throw ConfigError("policy.allowed_senders is empty");
  for (const auto& s : allowed_senders)
    if (!is_address(s)) throw ConfigError("allowed sender is malformed: " + s);
  if (subject.empty()) throw ConfigError("policy.subject is empty");
  if (poll_interval.count() <= 0) throw ConfigError("poll_interval must be positive");
  if (things.size() > kPinCount)
    throw ConfigError("too many things: " + std::to_string(things.size()) + " configured, the node has " +
                      std::to_string(kPinCount) + " GPIO pins");
  std::set<unsigned> pins;
  std::set<std::string> names;
  for (const auto& t : things) {
    if (!wire::is_thing_name(t.name)) throw ConfigError("invalid thing name: " + t.name);
    if (t.pin >= kPinCount) throw ConfigError("pin " + std::to_string(t.pin) + " of " + t.name + " is outside 0..25");
    if (!pins.insert(t.pin).second) throw ConfigError("pin " + std::to_string(t.pin) + " is mapped twice");
    if (!names.insert(t.name).second) throw ConfigError("thing " + t.name + " is listed twice");
  }
}

std::optional<unsigned> NodeConfig::pin_of(std::string_view thing) const {
  for (const auto& t : things)
    if (t.name == thing) return t.pin;
  return std::nullopt;
}

// --- Pins ---

std::string_view to_string(PinLevel level) { return level == PinLevel::High ? "high" : "low"; }

PinBank::PinBank(const std::array<PinLevel, kPinCount>& initial) {
  for (std::size_t i = 0; i < kPinCount; ++i) pins_[i].level = initial[i];
}

PinLevel PinBank::level(unsigned pin) const {
  std::lock_guard lock(mutex_);
  return pins_.at(pin).level;
}

std::array<PinState, kPinCount> PinBank::snapshot() const {
  std::lock_guard lock(mutex_);
  return pins_;
}

std::vector<PinChange> PinBank::changes() const {
  std::lock_guard lock(mutex_);
  return changes_;
}

PinLevel actuate(PinBank& bank, const NodeConfig& config, std::string_view thing, Action action,
                 std::uint64_t cause_seq) {
  const auto pin = config.pin_of(thing);
  if (!pin) throw UnknownThing(thing);
  const auto level = action == Action::On ? PinLevel::High : PinLevel::Low;
  std::lock_guard lock(bank.mutex_);
  auto& state = bank.pins_[*pin];
  if (state.level != level) {
    state.level = level;
    state.changed = std::chrono::system_clock::now();
    bank.changes_.push_back({*pin, level, std::string(thing), cause_seq, state.changed});
  }
  return level;
}

// --- Audit ---

json AuditRecord::to_json() const {
  return {{"timestamp", iso_time(at)}, {"direction", direction == Direction::In ? "in" : "out"},
          {"from", from},           {"to", to},
          {"subject", subject},     {"outcome", outcome}};
}

AuditLog::AuditLog(std::optional<std::filesystem::path> path) : path_(std::move(path)) {}

void AuditLog::append(AuditRecord record) {
  std::lock_guard lock(mutex_);
  if (path_) {
    std::ofstream out(*path_, std::ios::app);
    out << record.to_json().dump() << '\n';
  }
  records_.push_back(std::move(record));
}

std::vector<AuditRecord> AuditLog::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

// --- CycleReport ---

std::size_t CycleReport::dropped() const {
  std::size_t n = 0;
  for (const auto& [reason, count] : dropped_by_reason) n += count;
  return n;
}

CycleReport& CycleReport::operator+=(const CycleReport& other) {
  fetched += other.fetched;
  accepted += other.accepted;
  replies_sent += other.replies_sent;
  ignored += other.ignored;
  transport_errors += other.transport_errors;
  for (const auto& [reason, count] : other.dropped_by_reason) dropped_by_reason[reason] += count;
  return *this;
}

// --- Node ---

Node::Node(NodeConfig config, std::shared_ptr<mail::Transport> transport, DateSource today)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      today_(std::move(today)),
      pins_(read_pin_levels(config_)),
      audit_(config_.audit_log) {
  config_.validate();
  policy_.allowed_senders = {config_.allowed_senders.begin(), config_.allowed_senders.end()};
  policy_.expected_subject = config_.subject;
  policy_.shared_key = config_.shared_key;
  policy_.quad_mode = config_.quad_mode;
  load_state();
}

PinLevel Node::level_of(std::string_view thing) const {
  const auto pin = config_.pin_of(thing);
  if (!pin) throw UnknownThing(thing);
  return pins_.level(*pin);
}

CycleReport Node::run_cycle() {
  CycleReport report;
  const auto messages = transport_->fetch(config_.mailbox);
  const auto today = today_();

  for (const auto& message : messages) {
    ++report.fetched;
    const auto& env = message.envelope;
    AuditRecord in{std::chrono::system_clock::now(), Direction::In, env.from, env.to, env.subject, {}};
    bool keep = false;  // leave in the mailbox for the next cycle

    const auto outcome = wire::filter(env, policy_, today);
    if (const auto* reason = std::get_if<DropReason>(&outcome)) {
      ++report.dropped_by_reason[*reason];
      in.outcome = wire::to_string(*reason);
      audit_.append(std::move(in));
    } else {
      const auto& frame = std::get<CommandFrame>(outcome);
      ++report.accepted;
      const auto pin = config_.pin_of(frame.thing);
      if (frame.kind == FrameKind::Sts) {
        ++report.ignored;
        in.outcome = "Ignored";
        audit_.append(std::move(in));
      } else if (!pin) {
        ++report.ignored;
        in.outcome = "UnknownThing";
        audit_.append(std::move(in));
      } else {
        in.outcome = "Accept";
        audit_.append(std::move(in));
        const auto level = frame.kind == FrameKind::Cmd
                               ? actuate(pins_, config_, frame.thing, *frame.action, frame.seq)
                               : pins_.level(*pin);
        keep = !reply(message, frame, level, report);
      }
      save_state();
    }

    if (keep) continue;
    try {
      transport_->remove(config_.mailbox, message.id);
    } catch (const mail::TransportError&) {
      ++report.transport_errors;
      break;
    }
  }
  return report;
}

bool Node::reply(const mail::StoredMessage& message, const CommandFrame& frame, PinLevel level,
                 CycleReport& report) {
  // Echo the request's sequence number when it is ahead of our counter so
  // the controller can match the reply to its ticket.
  out_seq_ = std::max(out_seq_ + 1, frame.seq);
  const CommandFrame sts{FrameKind::Sts, frame.thing, level == PinLevel::High ? Action::On : Action::Off, out_seq_};
  const Envelope out{config_.mailbox.address, message.envelope.from, config_.subject,
                     wire::seal_body(sts, config_.shared_key, wire::quad_for(config_.quad_mode, today_()), ivs_)};
  AuditRecord rec{std::chrono::system_clock::now(), Direction::Out, out.from, out.to, out.subject, {}};
  try {
    const auto status = transport_->send(out);
    rec.outcome = status == mail::DeliverStatus::Delivered ? "Sent" : std::string(mail::to_string(status));
    if (status == mail::DeliverStatus::Delivered) ++report.replies_sent;
    audit_.append(std::move(rec));
    return true;
  } catch (const mail::TransportError&) {
    ++report.transport_errors;
    rec.outcome = "TransportError";
    audit_.append(std::move(rec));
    return false;
  }
}

void Node::load_state() {
  if (!config_.state_file || !std::filesystem::exists(*config_.state_file)) return;
  json j;
  try {
    j = jsonutil::read_file(*config_.state_file);
    policy_.last_seq_per_sender = j.value("last_seq", std::map<std::string, std::uint64_t>{});
    out_seq_ = j.value("out_seq", std::uint64_t{0});
    const auto ivs = j.value("seen_ivs", std::map<std::string, std::vector<std::string>>{});
    for (const auto& [sender, list] : ivs)
      for (const auto& hex : list) policy_.seen_ivs[sender].insert(edon80::IV64::from_hex(hex));
  } catch (const std::exception& e) {
    throw ConfigError("state file " + config_.state_file->string() + ": " + e.what());
  }
}

void Node::save_state() const {
  if (!config_.state_file) return;
  std::vector<int> pins;
  for (const auto& p : pins_.snapshot()) pins.push_back(p.level == PinLevel::High ? 1 : 0);
  json names = json::object();
  for (const auto& t : config_.things) names[t.name] = t.pin;
  json ivs = json::object();
  for (const auto& [sender, set] : policy_.seen_ivs) {
    auto& list = ivs[sender] = json::array();
    for (const auto& iv : set) list.push_back(iv.to_hex());
  }
  const json j = {{"node_id", config_.node_id},
                  {"pins", pins},
                  {"things", names},
                  {"last_seq", policy_.last_seq_per_sender},
                  {"out_seq", out_seq_},
                  {"seen_ivs", ivs}};
  const auto tmp = config_.state_file->string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << j.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, *config_.state_file);
}

std::array<PinLevel, kPinCount> read_pin_levels(const NodeConfig& config) {
  std::array<PinLevel, kPinCount> levels{};
  if (!config.state_file || !std::filesystem::exists(*config.state_file)) return levels;
  try {
    const auto j = jsonutil::read_file(*config.state_file);
    const auto pins = j.value("pins", std::vector<int>{});
    for (std::size_t i = 0; i < kPinCount && i < pins.size(); ++i)
      levels[i] = pins[i] ? PinLevel::High : PinLevel::Low;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("state file " + config.state_file->string() + ": " + e.what());
  }
  return levels;
}

// --- Daemon ---

Daemon::Daemon(NodeConfig config, std::shared_ptr<mail::Transport> transport)
    : node_(std::move(config), std::move(transport)) {}

std::unique_ptr<Daemon> Daemon::start(NodeConfig config, std::shared_ptr<mail::Transport> transport) {
  config.validate();
  const auto key = config.mailbox.address + "@" + config.broker.host + ":" + std::to_string(config.broker.pop3_port);
  {
    std::lock_guard lock(consumers_mutex);
    if (!active_consumers.insert(key).second)
      throw ConfigError("mailbox " + config.mailbox.address + " already has a running daemon");
  }
  std::unique_ptr<Daemon> d;
  try {
    d.reset(new Daemon(std::move(config), std::move(transport)));
  } catch (...) {
    std::lock_guard lock(consumers_mutex);
    active_consumers.erase(key);
    throw;
  }
  d->consumer_key_ = key;
  d->thread_ = std::jthread([raw = d.get()](std::stop_token st) { raw->loop(st); });
  return d;
}

std::unique_ptr<Daemon> Daemon::start(NodeConfig config) {
  auto transport = std::make_shared<mail::TcpTransport>(config.broker);
  return start(std::move(config), std::move(transport));
}

Daemon::~Daemon() { stop(); }

void Daemon::stop() {
  std::call_once(stopped_, [this] {
    thread_.request_stop();
    if (thread_.joinable()) thread_.join();
    std::lock_guard lock(consumers_mutex);
    active_consumers.erase(consumer_key_);
  });
}

void Daemon::loop(std::stop_token stop) {
  auto next = std::chrono::steady_clock::now();
  while (!stop.stop_requested()) {
    const auto started = std::chrono::steady_clock::now();
    CycleReport report;
    std::optional<std::string> error;
    try {
      report = node_.run_cycle();
    } catch (const std::exception& e) {
      error = e.what();
    }
    {
      std::lock_guard lock(mutex_);
      starts_.push_back(started);
      totals_ += report;
      if (error) last_error_ = error;
    }
    next += node_.config().poll_interval;
    if (next < std::chrono::steady_clock::now()) next = std::chrono::steady_clock::now();
    std::unique_lock lock(mutex_);
    wake_.wait_until(lock, stop, next, [] { return false; });
  }
}

std::size_t Daemon::cycles() const {
  std::lock_guard lock(mutex_);
  return starts_.size();
}

CycleReport Daemon::totals() const {
  std::lock_guard lock(mutex_);
  return totals_;
}

std::vector<std::chrono::steady_clock::time_point> Daemon::cycle_starts() const {
  std::lock_guard lock(mutex_);
  return starts_;
}

std::optional<std::string> Daemon::last_error() const {
  std::lock_guard lock(mutex_);
  return last_error_;
}

}  // namespace unitor::node
