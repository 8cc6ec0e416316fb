#include "unitor/controller.hpp"

#include <algorithm>
#include <set>

#include "json_util.hpp"
#include "time_util.hpp"
#include "unitor/hex.hpp"

namespace unitor::ctl {

using nlohmann::json;
using wire::Action;
using wire::CommandFrame;
using wire::DropReason;
using wire::FrameKind;

namespace {

std::vector<Action> parse_actions(const json& j, const std::string& where) {
  std::vector<Action> actions;
  for (const auto& a : j) {
    if (!a.is_string()) throw ConfigError(where + ": actions must be strings");
    const auto action = wire::parse_action(a.get<std::string>());
    if (!action) throw ConfigError(where + ": unsupported action \"" + a.get<std::string>() + "\"");
    actions.push_back(*action);
  }
  return actions;
}

json optional_time(const std::optional<Clock::time_point>& t) { return t ? json(iso_time(*t)) : json(nullptr); }

}  // namespace

const ThingEntry* NodeEntry::find_thing(std::string_view name) const {
  for (const auto& t : things)
    if (t.name == name) return &t;
  return nullptr;
}

// --- Config ---

ControllerConfig ControllerConfig::from_json(const json& j, const std::filesystem::path& base) {
  using namespace jsonutil;
  const std::string where = "controller config";
  ControllerConfig c;
  c.mailbox = credentials(j, where);
  c.broker = endpoint(j, where);
  if (j.contains("api")) {
    c.api_bind = get_or<std::string>(j.at("api"), "bind", c.api_bind, where + ".api");
    c.api_port = get_or<std::uint16_t>(j.at("api"), "port", c.api_port, where + ".api");
  }
  c.poll_interval = millis_or(j, "poll_interval_ms", c.poll_interval, where);
  c.ticket_timeout = millis_or(j, "ticket_timeout_ms", c.ticket_timeout, where);
  c.static_dir = path_or_none(j, "static_dir", base, where);

  for (const auto& n : require(j, "nodes", where)) {
    const std::string nw = where + ".nodes";
    NodeEntry node;
    node.node_id = get<std::string>(n, "node_id", nw);
    node.address = get<std::string>(n, "address", nw);
    node.subject = get_or<std::string>(n, "subject", "", nw);
    if (node.subject.empty()) node.subject = wire::subject_for(node.node_id);
    try {
      node.shared_key = edon80::Key80::from_hex(get<std::string>(n, "shared_key", nw));
      node.quad_mode = wire::parse_quad_mode(get_or<std::string>(n, "quad_mode", "fixed", nw));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(nw + " " + node.node_id + ": " + e.what());
    }
    for (const auto& t : require(n, "things", nw)) {
      ThingEntry thing;
      thing.name = get<std::string>(t, "name", nw + ".things");
      if (t.contains("actions")) thing.actions = parse_actions(t.at("actions"), nw + ".things." + thing.name);
      node.things.push_back(std::move(thing));
    }
    c.nodes.push_back(std::move(node));
  }
  c.validate();
  return c;
}

ControllerConfig ControllerConfig::load(const std::filesystem::path& path) {
  return from_json(jsonutil::read_file(path), path.parent_path());
}

void ControllerConfig::validate() const {
  if (!is_address(mailbox.address)) throw ConfigError("controller mailbox address is malformed: " + mailbox.address);
  std::set<std::string> ids;
  std::set<std::string> addresses;
  for (const auto& n : nodes) {
    if (n.node_id.empty()) throw ConfigError("node with empty node_id");
    if (!ids.insert(n.node_id).second) throw ConfigError("duplicate node_id " + n.node_id);
    if (!is_address(n.address)) throw ConfigError("node " + n.node_id + " has a malformed address");
    if (!addresses.insert(n.address).second) throw ConfigError("two nodes share address " + n.address);
    std::set<std::string> names;
    for (const auto& t : n.things) {
      if (!wire::is_thing_name(t.name)) throw ConfigError("node " + n.node_id + ": invalid thing name " + t.name);
      if (!names.insert(t.name).second) throw ConfigError("node " + n.node_id + ": thing " + t.name + " repeated");
      if (t.actions.empty()) throw ConfigError("node " + n.node_id + ": thing " + t.name + " has no actions");
    }
  }
}

// --- JSON views ---

std::string_view to_string(TicketState state) {
  switch (state) {
    case TicketState::Sent: return "sent";
    case TicketState::Acked: return "acked";
    case TicketState::TimedOut: return "timed_out";
  }
  return "?";
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Sent: return "sent";
    case EventKind::Status: return "status";
    case EventKind::DropObserved: return "drop_observed";
    case EventKind::Timeout: return "timeout";
  }
  return "?";
}

json to_json(const ThingEntry& thing) {
  json actions = json::array();
  for (auto a : thing.actions) actions.push_back(wire::to_string(a));
  return {{"name", thing.name},
          {"actions", actions},
          {"last_known_state", thing.last_known_state ? json(wire::to_string(*thing.last_known_state)) : json(nullptr)},
          {"last_update", optional_time(thing.last_update)}};
}

json to_json(const NodeEntry& node) {
  json things = json::array();
  for (const auto& t : node.things) things.push_back(to_json(t));
  return {{"node_id", node.node_id},
          {"address", node.address},
          {"subject", node.subject},
          {"quad_mode", wire::to_string(node.quad_mode)},
          {"things", things}};
}

json to_json(const CommandTicket& t) {
  return {{"id", t.id},
          {"node_id", t.node_id},
          {"thing", t.thing},
          {"action", wire::to_string(t.action)},
          {"seq", t.seq},
          {"state", to_string(t.state)},
          {"created", iso_time(t.created)},
          {"updated", iso_time(t.updated)}};
}

json to_json(const Event& e) {
  return {{"event_seq", e.event_seq}, {"kind", to_string(e.kind)}, {"payload", e.payload}, {"at", iso_time(e.at)}};
}

// --- Controller ---

Controller::Controller(ControllerConfig config, std::shared_ptr<mail::Transport> transport, DateSource today)
    : config_(std::move(config)), transport_(std::move(transport)), today_(std::move(today)) {
  config_.validate();
  // Wall-clock microseconds keep sequence numbers increasing across restarts.
  next_seq_ = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(Clock::now().time_since_epoch()).count());
  for (const auto& n : config_.nodes) {
    wire::FilterPolicy p;
    p.allowed_senders = {n.address};
    p.expected_subject = n.subject;
    p.shared_key = n.shared_key;
    p.quad_mode = n.quad_mode;
    policies_.emplace(n.node_id, std::move(p));
  }
}

NodeEntry* Controller::find_node(std::string_view node_id) {
  for (auto& n : config_.nodes)
    if (n.node_id == node_id) return &n;
  return nullptr;
}

NodeEntry* Controller::find_node_by_address(std::string_view address) {
  for (auto& n : config_.nodes)
    if (n.address == address) return &n;
  return nullptr;
}

void Controller::log_event(EventKind kind, json payload) {
  events_.push_back({++event_seq_, kind, std::move(payload), Clock::now()});
}

CommandTicket Controller::send_command(std::string_view node_id, std::string_view thing, Action action) {
  std::lock_guard send_lock(send_mutex_);
  NodeEntry node;
  std::uint64_t seq = 0;
  {
    std::lock_guard lock(state_mutex_);
    const auto* n = find_node(node_id);
    if (!n) throw ControllerError(ControllerError::Code::UnknownNode, "unknown node " + std::string(node_id));
    const auto* t = n->find_thing(thing);
    if (!t) throw ControllerError(ControllerError::Code::UnknownThing, "unknown thing " + std::string(thing));
    if (std::find(t->actions.begin(), t->actions.end(), action) == t->actions.end())
      throw ControllerError(ControllerError::Code::UnsupportedAction,
                            "thing " + std::string(thing) + " does not support " + std::string(wire::to_string(action)));
    node = *n;
    seq = ++next_seq_;
  }

  const CommandFrame frame{FrameKind::Cmd, std::string(thing), action, seq};
  const Envelope env{config_.mailbox.address, node.address, node.subject,
                     wire::seal_body(frame, node.shared_key, wire::quad_for(node.quad_mode, today_()), ivs_)};
  const auto status = transport_->send(env);
  if (status != mail::DeliverStatus::Delivered)
    throw mail::TransportError("broker refused command: " + std::string(mail::to_string(status)));

  std::lock_guard lock(state_mutex_);
  CommandTicket ticket;
  ticket.id = "t" + std::to_string(++ticket_counter_) + "-" + to_hex(edon80::IV64::random().bytes()).substr(0, 8);
  ticket.node_id = node.node_id;
  ticket.thing = std::string(thing);
  ticket.action = action;
  ticket.seq = seq;
  ticket.created = ticket.updated = Clock::now();
  tickets_.emplace(ticket.id, ticket);
  log_event(EventKind::Sent, {{"ticket", ticket.id},
                              {"node_id", ticket.node_id},
                              {"thing", ticket.thing},
                              {"action", wire::to_string(action)},
                              {"seq", seq}});
  return ticket;
}

std::size_t Controller::poll_replies() {
  std::lock_guard poll_lock(poll_mutex_);
  const auto messages = transport_->fetch(config_.mailbox);
  const auto today = today_();
  std::size_t processed = 0;

  for (const auto& message : messages) {
    const auto& env = message.envelope;
    {
      std::lock_guard lock(state_mutex_);
      auto* node = find_node_by_address(env.from);
      const wire::FilterOutcome outcome =
          node ? wire::filter(env, policies_.at(node->node_id), today) : wire::FilterOutcome{DropReason::UnauthorizedSender};

      if (const auto* reason = std::get_if<DropReason>(&outcome)) {
        log_event(EventKind::DropObserved,
                  {{"from", env.from}, {"subject", env.subject}, {"reason", wire::to_string(*reason)}});
      } else if (const auto& frame = std::get<CommandFrame>(outcome); frame.kind == FrameKind::Sts) {
        auto thing = std::find_if(node->things.begin(), node->things.end(),
                                  [&](const ThingEntry& t) { return t.name == frame.thing; });
        if (thing != node->things.end()) {
          const auto now = Clock::now();
          thing->last_known_state = frame.action;
          thing->last_update = now;
          json payload = {{"node_id", node->node_id},
                          {"thing", frame.thing},
                          {"state", wire::to_string(*frame.action)},
                          {"seq", frame.seq}};
          for (auto& [id, ticket] : tickets_) {
            if (ticket.state == TicketState::Sent && ticket.node_id == node->node_id && ticket.thing == frame.thing &&
                ticket.seq == frame.seq) {
              ticket.state = TicketState::Acked;
              ticket.updated = now;
              payload["ticket"] = id;
              break;
            }
          }
          log_event(EventKind::Status, std::move(payload));
          ++processed;
        }
      }
    }
    transport_->remove(config_.mailbox, message.id);
  }
  return processed;
}

std::size_t Controller::expire_tickets(Clock::time_point now) {
  std::lock_guard lock(state_mutex_);
  std::size_t expired = 0;
  for (auto& [id, ticket] : tickets_) {
    if (ticket.state != TicketState::Sent || now - ticket.created < config_.ticket_timeout) continue;
    ticket.state = TicketState::TimedOut;
    ticket.updated = now;
    log_event(EventKind::Timeout, {{"ticket", id}, {"node_id", ticket.node_id}, {"thing", ticket.thing}});
    ++expired;
  }
  return expired;
}

std::optional<CommandTicket> Controller::ticket(std::string_view id) const {
  std::lock_guard lock(state_mutex_);
  const auto it = tickets_.find(id);
  if (it == tickets_.end()) return std::nullopt;
  return it->second;
}

std::vector<CommandTicket> Controller::tickets() const {
  std::lock_guard lock(state_mutex_);
  std::vector<CommandTicket> out;
  for (const auto& [id, t] : tickets_) out.push_back(t);
  return out;
}

std::vector<Event> Controller::events_since(std::uint64_t since) const {
  std::lock_guard lock(state_mutex_);
  const auto first = std::upper_bound(events_.begin(), events_.end(), since,
                                      [](std::uint64_t s, const Event& e) { return s < e.event_seq; });
  return {first, events_.end()};
}

std::vector<NodeEntry> Controller::nodes() const {
  std::lock_guard lock(state_mutex_);
  return config_.nodes;
}

std::optional<NodeEntry> Controller::node(std::string_view node_id) const {
  std::lock_guard lock(state_mutex_);
  for (const auto& n : config_.nodes)
    if (n.node_id == node_id) return n;
  return std::nullopt;
}

}  // namespace unitor::ctl
