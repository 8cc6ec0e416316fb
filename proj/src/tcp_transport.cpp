#include <charconv>
#include <system_error>

#include "net.hpp"
#include "unitor/mailsim.hpp"

namespace unitor::mail {
namespace {

class Conversation {
 public:
  Conversation(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout)
      : timeout_(timeout), channel_(connect(host, port, timeout)) {}

  std::string read() {
    auto line = channel_.read_line(timeout_);
    if (!line) throw TransportError("connection closed by broker");
    return *std::move(line);
  }

  void write(std::string_view line) {
    if (!channel_.write_line(line)) throw TransportError("write to broker failed");
  }

  void write_raw(std::string_view data) {
    if (!channel_.write_raw(data)) throw TransportError("write to broker failed");
  }

  std::string command(std::string_view line) {
    write(line);
    return read();
  }

  /// Lines of a dot-terminated multiline response, un-stuffed.
  std::vector<std::string> read_multiline() {
    std::vector<std::string> lines;
    while (true) {
      auto line = read();
      if (line == ".") return lines;
      if (line.starts_with('.')) line.erase(0, 1);
      lines.push_back(std::move(line));
    }
  }

 private:
  static net::LineChannel connect(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout) {
    try {
      return net::LineChannel(net::connect_tcp(host, port, timeout));
    } catch (const std::system_error& e) {
      throw TransportError(std::string("cannot reach broker: ") + e.what());
    }
  }

  std::chrono::milliseconds timeout_;
  net::LineChannel channel_;
};

void expect(const std::string& reply, std::string_view prefix, std::string_view context) {
  if (!reply.starts_with(prefix)) throw TransportError(std::string(context) + ": unexpected reply '" + reply + "'");
}

Conversation pop3_login(const Endpoint& ep, const Credentials& credentials, std::chrono::milliseconds timeout) {
  Conversation c(ep.host, ep.pop3_port, timeout);
  expect(c.read(), "+OK", "greeting");
  expect(c.command("USER " + credentials.address), "+OK", "USER");
  const auto reply = c.command("PASS " + credentials.password);
  if (reply.starts_with("-ERR")) throw AuthError();
  expect(reply, "+OK", "PASS");
  return c;
}

}  // namespace

DeliverStatus TcpTransport::send(const Envelope& envelope) {
  Conversation c(endpoint_.host, endpoint_.smtp_port, timeout_);
  expect(c.read(), "220", "greeting");
  expect(c.command("HELO unitor"), "250", "HELO");
  expect(c.command("MAIL FROM:<" + envelope.from + ">"), "250", "MAIL");
  const auto rcpt = c.command("RCPT TO:<" + envelope.to + ">");
  if (rcpt.starts_with("550")) {
    c.command("QUIT");
    return DeliverStatus::NoSuchMailbox;
  }
  expect(rcpt, "250", "RCPT");
  expect(c.command("DATA"), "354", "DATA");

  const auto text = render_message(envelope);
  std::string out;
  out.reserve(text.size() + 8);
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find("\r\n", start);
    if (text.compare(start, 1, ".") == 0) out += '.';
    out.append(text, start, end - start + 2);
    start = end + 2;
  }
  out += ".\r\n";
  c.write_raw(out);
  const auto result = c.read();
  c.command("QUIT");
  if (result.starts_with("552")) return DeliverStatus::MessageTooLarge;
  expect(result, "250", "end of data");
  return DeliverStatus::Delivered;
}

std::vector<StoredMessage> TcpTransport::fetch(const Credentials& credentials) {
  auto c = pop3_login(endpoint_, credentials, timeout_);
  expect(c.command("LIST"), "+OK", "LIST");
  std::vector<std::uint64_t> ids;
  for (const auto& line : c.read_multiline()) {
    std::uint64_t id = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), id);
    if (ec != std::errc{}) throw TransportError("bad LIST line '" + line + "'");
    ids.push_back(id);
  }

  std::vector<StoredMessage> out;
  for (auto id : ids) {
    const auto reply = c.command("RETR " + std::to_string(id));
    if (reply.starts_with("-ERR")) continue;  // deleted since LIST
    expect(reply, "+OK", "RETR");
    std::string text;
    for (const auto& line : c.read_multiline()) text += line + "\r\n";
    out.push_back({id, parse_message(text)});
  }
  c.command("QUIT");
  return out;
}

bool TcpTransport::remove(const Credentials& credentials, std::uint64_t id) {
  auto c = pop3_login(endpoint_, credentials, timeout_);
  const auto reply = c.command("DELE " + std::to_string(id));
  c.command("QUIT");
  return reply.starts_with("+OK");
}

}  // namespace unitor::mail
