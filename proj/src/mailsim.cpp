#include "unitor/mailsim.hpp"

#include <algorithm>
#include <cctype>

#include "json.hpp"

namespace unitor::mail {
namespace {

std::string one_line(std::string_view value) {
  std::string out(value);
  std::replace_if(out.begin(), out.end(), [](char c) { return c == '\r' || c == '\n'; }, ' ');
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

Envelope canonical(const Envelope& e) {
  return Envelope{one_line(e.from), one_line(e.to), one_line(e.subject), canonical_body(e.body)};
}

}  // namespace

std::string_view to_string(DeliverStatus status) {
  switch (status) {
    case DeliverStatus::Delivered: return "Delivered";
    case DeliverStatus::NoSuchMailbox: return "NoSuchMailbox";
    case DeliverStatus::MessageTooLarge: return "MessageTooLarge";
  }
  return "?";
}

std::string canonical_body(std::string_view body) {
  std::string out;
  out.reserve(body.size() + 1);
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '\r' && i + 1 < body.size() && body[i + 1] == '\n') continue;
    out.push_back(body[i]);
  }
  if (!out.empty() && out.back() != '\n') out.push_back('\n');
  return out;
}

std::string render_message(const Envelope& envelope) {
  std::string out;
  out += "From: " + one_line(envelope.from) + "\r\n";
  out += "To: " + one_line(envelope.to) + "\r\n";
  out += "Subject: " + one_line(envelope.subject) + "\r\n";
  out += "\r\n";
  for (char c : canonical_body(envelope.body)) {
    if (c == '\n') out += '\r';
    out += c;
  }
  return out;
}

Envelope parse_message(std::string_view text) {
  Envelope e;
  bool in_headers = true;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    const bool terminated = end != std::string_view::npos;
    if (!terminated) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (in_headers) {
      if (line.empty()) {
        in_headers = false;
        continue;
      }
      const auto colon = line.find(':');
      if (colon == std::string_view::npos || line.front() == ' ' || line.front() == '\t') continue;
      const auto name = line.substr(0, colon);
      const auto value = std::string(trim(line.substr(colon + 1)));
      if (iequals(name, "From")) e.from = value;
      else if (iequals(name, "To")) e.to = value;
      else if (iequals(name, "Subject")) e.subject = value;
      continue;
    }
    e.body.append(line);
    e.body.push_back('\n');
  }
  return e;
}

MailStore::MailStore(const std::vector<Account>& accounts, std::size_t max_message_bytes,
                     std::optional<std::filesystem::path> journal)
    : max_message_bytes_(max_message_bytes) {
  for (const auto& a : accounts) {
    if (!is_address(a.address)) throw std::invalid_argument("malformed mailbox address: " + a.address);
    auto box = std::make_unique<Mailbox>();
    box->password = a.password;
    if (!boxes_.emplace(a.address, std::move(box)).second)
      throw std::invalid_argument("duplicate mailbox: " + a.address);
  }
  if (journal) {
    journal_.emplace(*journal, std::ios::app);
    if (!*journal_) throw std::invalid_argument("cannot open journal " + journal->string());
  }
}

DeliverStatus MailStore::deliver(const Envelope& envelope) {
  const auto it = boxes_.find(envelope.to);
  if (it == boxes_.end()) return DeliverStatus::NoSuchMailbox;
  auto message = StoredMessage{0, canonical(envelope)};
  if (render_message(message.envelope).size() > max_message_bytes_) return DeliverStatus::MessageTooLarge;

  auto& box = *it->second;
  {
    std::lock_guard lock(box.mutex);
    message.id = box.next_id++;
    box.queue.emplace(message.id, message.envelope);
  }
  journal(message);
  return DeliverStatus::Delivered;
}

MailStore::Mailbox& MailStore::authorized(const Credentials& credentials) const {
  const auto it = boxes_.find(credentials.address);
  if (it == boxes_.end() || it->second->password != credentials.password) throw AuthError();
  return *it->second;
}

std::vector<StoredMessage> MailStore::fetch(const Credentials& credentials) const {
  const auto& box = authorized(credentials);
  std::lock_guard lock(box.mutex);
  std::vector<StoredMessage> out;
  out.reserve(box.queue.size());
  for (const auto& [id, env] : box.queue) out.push_back({id, env});
  return out;
}

bool MailStore::remove(const Credentials& credentials, std::uint64_t id) {
  auto& box = authorized(credentials);
  std::lock_guard lock(box.mutex);
  return box.queue.erase(id) == 1;
}

bool MailStore::authenticate(const Credentials& credentials) const {
  const auto it = boxes_.find(credentials.address);
  return it != boxes_.end() && it->second->password == credentials.password;
}

bool MailStore::has_mailbox(std::string_view address) const { return boxes_.find(address) != boxes_.end(); }

std::vector<StoredMessage> MailStore::peek(std::string_view address) const {
  const auto it = boxes_.find(address);
  if (it == boxes_.end()) return {};
  std::lock_guard lock(it->second->mutex);
  std::vector<StoredMessage> out;
  for (const auto& [id, env] : it->second->queue) out.push_back({id, env});
  return out;
}

void MailStore::journal(const StoredMessage& message) {
  if (!journal_) return;
  const nlohmann::json line = {{"from", message.envelope.from},
                               {"to", message.envelope.to},
                               {"subject", message.envelope.subject},
                               {"body", message.envelope.body},
                               {"id", message.id}};
  std::lock_guard lock(journal_mutex_);
  *journal_ << line.dump() << '\n';
  journal_->flush();
}

void BrokerConfig::check() const {
  if (smtp_port != 0 && smtp_port == pop3_port) throw std::invalid_argument("SMTP and POP3 ports must differ");
  for (std::size_t i = 0; i < accounts.size(); ++i)
    for (std::size_t j = i + 1; j < accounts.size(); ++j)
      if (accounts[i].address == accounts[j].address)
        throw std::invalid_argument("duplicate mailbox: " + accounts[i].address);
}

DeliverStatus Adversary::spoof(Envelope envelope, std::string forged_from) {
  envelope.from = std::move(forged_from);
  return transport_.send(envelope);
}

std::vector<StoredMessage> Adversary::capture(std::string_view address) const {
  return wiretap_ ? wiretap_->peek(address) : std::vector<StoredMessage>{};
}

}  // namespace unitor::mail
