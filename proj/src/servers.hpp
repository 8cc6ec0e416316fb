#pragma once

#include <chrono>

#include "net.hpp"
#include "unitor/mailsim.hpp"

namespace unitor::mail {

net::LineServer::Handler smtp_session(MailStore& store, std::chrono::milliseconds drain_timeout);
net::LineServer::Handler pop3_session(MailStore& store);

/// Splits "VERB rest" and upper-cases the verb.
std::pair<std::string, std::string> split_command(std::string_view line);

inline constexpr auto kIdleTimeout = std::chrono::minutes(5);

}  // namespace unitor::mail
