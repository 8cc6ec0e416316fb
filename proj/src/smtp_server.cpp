#include <cctype>
#include <optional>
#include <vector>

#include "servers.hpp"

namespace unitor::mail {
namespace {

// Extracts the path from "FROM:<addr>" / "TO:<addr>", tolerating a space
// after the colon.
std::optional<std::string> parse_path(std::string_view rest, std::string_view keyword) {
  if (rest.size() < keyword.size()) return std::nullopt;
  for (std::size_t i = 0; i < keyword.size(); ++i)
    if (std::toupper(static_cast<unsigned char>(rest[i])) != keyword[i]) return std::nullopt;
  rest.remove_prefix(keyword.size());
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  if (rest.size() < 2 || rest.front() != '<') return std::nullopt;
  const auto close = rest.find('>');
  if (close == std::string_view::npos) return std::nullopt;
  return std::string(rest.substr(1, close - 1));
}

class SmtpSession {
 public:
  SmtpSession(MailStore& store, net::LineChannel& channel, std::stop_token stop, std::chrono::milliseconds drain)
      : store_(store), ch_(channel), stop_(stop), drain_(drain) {}

  void run() {
    if (!ch_.write_line("220 unitor-mailsim")) return;
    while (true) {
      const auto line = ch_.read_line(kIdleTimeout, [this] { return stop_.stop_requested(); });
      if (!line) return;
      auto [verb, rest] = split_command(*line);
      if (verb == "QUIT") {
        ch_.write_line("221 bye");
        return;
      }
      if (!dispatch(verb, rest)) return;
    }
  }

 private:
  bool dispatch(const std::string& verb, const std::string& rest) {
    if (verb == "HELO" || verb == "EHLO") return ch_.write_line("250 ok");
    if (verb == "NOOP") return ch_.write_line("250 ok");
    if (verb == "RSET") {
      reset();
      return ch_.write_line("250 ok");
    }
    if (verb == "MAIL") {
      auto path = parse_path(rest, "FROM:");
      if (!path) return ch_.write_line("501 syntax error");
      reset();
      mail_from_ = std::move(*path);
      return ch_.write_line("250 ok");
    }
    if (verb == "RCPT") {
      if (!mail_from_) return ch_.write_line("503 bad sequence");
      auto path = parse_path(rest, "TO:");
      if (!path) return ch_.write_line("501 syntax error");
      if (!store_.has_mailbox(*path)) return ch_.write_line("550 no mailbox");
      recipients_.push_back(std::move(*path));
      return ch_.write_line("250 ok");
    }
    if (verb == "DATA") {
      if (recipients_.empty()) return ch_.write_line("503 bad sequence");
      return data();
    }
    return ch_.write_line("500 unrecognized");
  }

  bool data() {
    if (!ch_.write_line("354 end with .")) return false;
    std::string text;
    bool oversized = false;
    const auto started = std::chrono::steady_clock::now();
    auto abort = [&] { return stop_.stop_requested() && std::chrono::steady_clock::now() - started > drain_; };
    while (true) {
      auto line = ch_.read_line(kIdleTimeout, abort);
      if (!line) return false;  // dropped mid-transfer: nothing is delivered
      if (*line == ".") break;
      std::string_view view = *line;
      if (view.starts_with('.')) view.remove_prefix(1);
      if (text.size() > 2 * store_.max_message_bytes()) {
        oversized = true;
        continue;
      }
      text.append(view);
      text.append("\r\n");
    }

    Envelope envelope = parse_message(text);
    if (envelope.from.empty()) envelope.from = *mail_from_;
    bool too_large = oversized;
    for (const auto& rcpt : recipients_) {
      if (too_large) break;
      envelope.to = rcpt;
      if (store_.deliver(envelope) == DeliverStatus::MessageTooLarge) too_large = true;
    }
    reset();
    return ch_.write_line(too_large ? "552 message too large" : "250 delivered");
  }

  void reset() {
    mail_from_.reset();
    recipients_.clear();
  }

  MailStore& store_;
  net::LineChannel& ch_;
  std::stop_token stop_;
  std::chrono::milliseconds drain_;
  std::optional<std::string> mail_from_;
  std::vector<std::string> recipients_;
};

}  // namespace

net::LineServer::Handler smtp_session(MailStore& store, std::chrono::milliseconds drain_timeout) {
  return [&store, drain_timeout](net::LineChannel& channel, std::stop_token stop) {
    SmtpSession(store, channel, stop, drain_timeout).run();
  };
}

}  // namespace unitor::mail
