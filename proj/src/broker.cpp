#include <cctype>

#include "servers.hpp"

namespace unitor::mail {

std::pair<std::string, std::string> split_command(std::string_view line) {
  const auto space = line.find(' ');
  std::string verb(line.substr(0, space));
  for (auto& c : verb) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  std::string rest = space == std::string_view::npos ? std::string() : std::string(line.substr(space + 1));
  return {verb, rest};
}

Broker::Broker(const BrokerConfig& config)
    : config_(config),
      store_(std::make_unique<MailStore>(config.accounts, config.max_message_bytes, config.journal)) {}

std::unique_ptr<Broker> Broker::serve(const BrokerConfig& config) {
  config.check();
  std::unique_ptr<Broker> broker(new Broker(config));
  broker->smtp_ = std::make_unique<net::LineServer>(config.bind_address, config.smtp_port,
                                                    smtp_session(*broker->store_, config.drain_timeout));
  broker->pop3_ =
      std::make_unique<net::LineServer>(config.bind_address, config.pop3_port, pop3_session(*broker->store_));
  return broker;
}

Broker::~Broker() { shutdown(); }

std::uint16_t Broker::smtp_port() const { return smtp_->port(); }
std::uint16_t Broker::pop3_port() const { return pop3_->port(); }

void Broker::shutdown() {
  std::call_once(shutdown_once_, [this] {
    if (smtp_) smtp_->stop();
    if (pop3_) pop3_->stop();
  });
}

}  // namespace unitor::mail
