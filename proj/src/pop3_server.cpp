#include <charconv>
#include <optional>

#include "servers.hpp"

namespace unitor::mail {
namespace {

std::optional<std::uint64_t> parse_id(std::string_view text) {
  std::uint64_t id = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), id);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return id;
}

class Pop3Session {
 public:
  Pop3Session(MailStore& store, net::LineChannel& channel, std::stop_token stop)
      : store_(store), ch_(channel), stop_(stop) {}

  void run() {
    if (!ch_.write_line("+OK unitor-pop3")) return;
    while (true) {
      const auto line = ch_.read_line(kIdleTimeout, [this] { return stop_.stop_requested(); });
      if (!line) return;
      auto [verb, rest] = split_command(*line);
      if (verb == "QUIT") {
        ch_.write_line("+OK bye");
        return;
      }
      if (!dispatch(verb, rest)) return;
    }
  }

 private:
  bool dispatch(const std::string& verb, const std::string& rest) {
    if (verb == "USER") {
      creds_ = Credentials{rest, {}};
      authed_ = false;
      return ch_.write_line("+OK");
    }
    if (verb == "PASS") {
      if (!creds_) return ch_.write_line("-ERR auth");
      creds_->password = rest;
      authed_ = store_.authenticate(*creds_);
      return ch_.write_line(authed_ ? "+OK" : "-ERR auth");
    }
    if (verb == "NOOP" || verb == "RSET") return ch_.write_line("+OK");
    if (verb != "STAT" && verb != "LIST" && verb != "RETR" && verb != "DELE")
      return ch_.write_line("-ERR unrecognized");
    if (!authed_) return ch_.write_line("-ERR auth required");

    if (verb == "STAT") {
      const auto messages = store_.fetch(*creds_);
      std::size_t total = 0;
      for (const auto& m : messages) total += render_message(m.envelope).size();
      return ch_.write_line("+OK " + std::to_string(messages.size()) + " " + std::to_string(total));
    }
    if (verb == "LIST") return list(rest);
    const auto id = parse_id(rest);
    if (!id) return ch_.write_line("-ERR syntax");
    if (verb == "DELE")
      return ch_.write_line(store_.remove(*creds_, *id) ? "+OK deleted" : "-ERR no such message");
    return retr(*id);
  }

  bool list(const std::string& rest) {
    const auto messages = store_.fetch(*creds_);
    if (!rest.empty()) {
      const auto id = parse_id(rest);
      for (const auto& m : messages)
        if (id && m.id == *id)
          return ch_.write_line("+OK " + std::to_string(m.id) + " " +
                                std::to_string(render_message(m.envelope).size()));
      return ch_.write_line("-ERR no such message");
    }
    std::string out = "+OK " + std::to_string(messages.size()) + " messages\r\n";
    for (const auto& m : messages)
      out += std::to_string(m.id) + " " + std::to_string(render_message(m.envelope).size()) + "\r\n";
    out += ".\r\n";
    return ch_.write_raw(out);
  }

  bool retr(std::uint64_t id) {
    for (const auto& m : store_.fetch(*creds_)) {
      if (m.id != id) continue;
      const auto text = render_message(m.envelope);
      std::string out = "+OK " + std::to_string(text.size()) + " octets\r\n";
      std::size_t start = 0;
      while (start < text.size()) {
        const auto end = text.find("\r\n", start);
        const auto line = std::string_view(text).substr(start, end - start);
        if (line.starts_with('.')) out += '.';
        out.append(line);
        out += "\r\n";
        start = end + 2;
      }
      out += ".\r\n";
      return ch_.write_raw(out);
    }
    return ch_.write_line("-ERR no such message");
  }

  MailStore& store_;
  net::LineChannel& ch_;
  std::stop_token stop_;
  std::optional<Credentials> creds_;
  bool authed_ = false;
};

}  // namespace

net::LineServer::Handler pop3_session(MailStore& store) {
  return [&store](net::LineChannel& channel, std::stop_token stop) { Pop3Session(store, channel, stop).run(); };
}

}  // namespace unitor::mail
