// unitor-mailsim: runs the SMTP/POP3 broker until SIGINT or SIGTERM.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "signals.hpp"
#include "unitor/mailsim.hpp"

using nlohmann::json;
using unitor::mail::Account;
using unitor::mail::BrokerConfig;

namespace {

BrokerConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  const auto j = json::parse(in);
  BrokerConfig c;
  c.bind_address = j.value("bind", c.bind_address);
  c.smtp_port = j.value("smtp_port", c.smtp_port);
  c.pop3_port = j.value("pop3_port", c.pop3_port);
  c.max_message_bytes = j.value("max_message_bytes", c.max_message_bytes);
  if (j.contains("journal")) c.journal = j.at("journal").get<std::string>();
  for (const auto& a : j.at("accounts")) c.accounts.push_back({a.at("address"), a.at("password")});
  return c;
}

Account parse_account(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--account", "expected address:password");
  return {spec.substr(0, colon), spec.substr(colon + 1)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Miniature SMTP/POP3 mail broker"};
  app.require_subcommand(1);
  auto* serve = app.add_subcommand("serve", "Run the broker");

  std::string config_path;
  std::string bind = "127.0.0.1";
  std::uint16_t smtp_port = 2525;
  std::uint16_t pop3_port = 2110;
  std::vector<std::string> accounts;
  std::string journal;
  std::size_t max_bytes = unitor::mail::kDefaultMaxMessageBytes;
  serve->add_option("--config", config_path, "Broker JSON config; flags below are ignored when given");
  serve->add_option("--bind", bind, "Listen address")->capture_default_str();
  serve->add_option("--smtp-port", smtp_port, "SMTP port, 0 for any")->capture_default_str();
  serve->add_option("--pop3-port", pop3_port, "POP3 port, 0 for any")->capture_default_str();
  serve->add_option("--account", accounts, "Mailbox as address:password (repeatable)");
  serve->add_option("--journal", journal, "Append-only JSON-lines journal");
  serve->add_option("--max-bytes", max_bytes, "Message size limit")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    BrokerConfig cfg;
    if (!config_path.empty()) {
      cfg = load_config(config_path);
    } else {
      cfg.bind_address = bind;
      cfg.smtp_port = smtp_port;
      cfg.pop3_port = pop3_port;
      cfg.max_message_bytes = max_bytes;
      if (!journal.empty()) cfg.journal = journal;
      for (const auto& a : accounts) cfg.accounts.push_back(parse_account(a));
    }

    const auto signals = unitor::tools::block_shutdown_signals();
    auto broker = unitor::mail::Broker::serve(cfg);
    // Scripts read this line to learn the ports when 0 was asked for.
    std::cout << "smtp=" << broker->smtp_port() << " pop3=" << broker->pop3_port() << std::endl;
    unitor::tools::wait_for_shutdown(signals);
    broker->shutdown();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "unitor-mailsim: " << e.what() << '\n';
    return 1;
  }
}
