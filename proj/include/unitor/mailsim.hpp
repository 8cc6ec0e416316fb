#pragma once

// Miniature store-and-forward mail broker.
//
// MailStore holds one FIFO per registered mailbox. Broker exposes it over
// an SMTP subset (submission, unauthenticated, so sender spoofing works as
// it does on real SMTP) and a POP3 subset (retrieval behind USER/PASS).
// Transport is the client-side view used by nodes and the controller; the
// in-process and TCP implementations are interchangeable.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "unitor/envelope.hpp"

namespace unitor::net {
class LineServer;
}

namespace unitor::mail {

struct Account {
  std::string address;
  std::string password;
};

struct Credentials {
  std::string address;
  std::string password;
};

struct StoredMessage {
  std::uint64_t id = 0;
  Envelope envelope;

  friend bool operator==(const StoredMessage&, const StoredMessage&) = default;
};

enum class DeliverStatus { Delivered, NoSuchMailbox, MessageTooLarge };

std::string_view to_string(DeliverStatus status);

class AuthError : public std::runtime_error {
 public:
  AuthError() : std::runtime_error("authentication failed") {}
};

/// The broker could not be reached or answered out of protocol.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultMaxMessageBytes = 65536;

/// RFC 822-style rendering: From/To/Subject headers, blank line, body,
/// all CRLF. Its length is the message size used for limits and LIST.
std::string render_message(const Envelope& envelope);

/// Parses a rendered message. Only From, To and Subject are read; other
/// headers are ignored. Body lines come back LF-terminated.
Envelope parse_message(std::string_view text);

/// Bodies are stored with LF line endings and a final LF when non-empty,
/// which is also what a round trip over SMTP/POP3 yields.
std::string canonical_body(std::string_view body);

class MailStore {
 public:
  /// Throws std::invalid_argument for duplicate or malformed addresses.
  explicit MailStore(const std::vector<Account>& accounts, std::size_t max_message_bytes = kDefaultMaxMessageBytes,
                     std::optional<std::filesystem::path> journal = std::nullopt);
  MailStore(const MailStore&) = delete;
  MailStore& operator=(const MailStore&) = delete;

  /// The from-address is not checked. Appends to the recipient's queue.
  DeliverStatus deliver(const Envelope& envelope);
  /// All undeleted messages, oldest first. Throws AuthError.
  std::vector<StoredMessage> fetch(const Credentials& credentials) const;
  /// False if the id is unknown or already deleted. Throws AuthError.
  bool remove(const Credentials& credentials, std::uint64_t id);

  bool authenticate(const Credentials& credentials) const;
  bool has_mailbox(std::string_view address) const;
  std::size_t max_message_bytes() const { return max_message_bytes_; }

  /// Unauthenticated read of a mailbox, for tests and the adversary.
  std::vector<StoredMessage> peek(std::string_view address) const;

 private:
  struct Mailbox {
    std::string password;
    mutable std::mutex mutex;
    std::map<std::uint64_t, Envelope> queue;
    std::uint64_t next_id = 1;
  };

  Mailbox& authorized(const Credentials& credentials) const;
  void journal(const StoredMessage& message);

  std::map<std::string, std::unique_ptr<Mailbox>, std::less<>> boxes_;
  std::size_t max_message_bytes_;
  std::mutex journal_mutex_;
  std::optional<std::ofstream> journal_;
};

struct BrokerConfig {
  std::string bind_address = "127.0.0.1";
  std::uint16_t smtp_port = 2525;  // 0 picks a free port
  std::uint16_t pop3_port = 2110;
  std::vector<Account> accounts;
  std::size_t max_message_bytes = kDefaultMaxMessageBytes;
  std::optional<std::filesystem::path> journal;
  /// How long shutdown waits for a message still being transferred.
  std::chrono::milliseconds drain_timeout{2000};

  /// Throws std::invalid_argument if the ports coincide or addresses repeat.
  void check() const;
};

/// Running SMTP + POP3 service over a MailStore.
class Broker {
 public:
  /// Throws std::system_error if a port cannot be bound.
  static std::unique_ptr<Broker> serve(const BrokerConfig& config);
  ~Broker();

  std::uint16_t smtp_port() const;
  std::uint16_t pop3_port() const;
  MailStore& store() { return *store_; }

  /// Stops accepting, lets in-flight transfers finish, closes sessions.
  /// Idempotent and safe to call from any thread.
  void shutdown();

 private:
  explicit Broker(const BrokerConfig& config);

  BrokerConfig config_;
  std::unique_ptr<MailStore> store_;
  std::unique_ptr<net::LineServer> smtp_;
  std::unique_ptr<net::LineServer> pop3_;
  std::once_flag shutdown_once_;
};

class Transport {
 public:
  virtual ~Transport() = default;
  /// Throws TransportError when the broker is unreachable.
  virtual DeliverStatus send(const Envelope& envelope) = 0;
  /// Throws AuthError or TransportError.
  virtual std::vector<StoredMessage> fetch(const Credentials& credentials) = 0;
  /// Throws AuthError or TransportError.
  virtual bool remove(const Credentials& credentials, std::uint64_t id) = 0;
};

class InProcessTransport : public Transport {
 public:
  explicit InProcessTransport(MailStore& store) : store_(store) {}

  DeliverStatus send(const Envelope& envelope) override { return store_.deliver(envelope); }
  std::vector<StoredMessage> fetch(const Credentials& credentials) override { return store_.fetch(credentials); }
  bool remove(const Credentials& credentials, std::uint64_t id) override { return store_.remove(credentials, id); }

 private:
  MailStore& store_;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t smtp_port = 2525;
  std::uint16_t pop3_port = 2110;

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

/// Speaks the SMTP/POP3 subsets to a Broker; one connection per call.
class TcpTransport : public Transport {
 public:
  explicit TcpTransport(Endpoint endpoint, std::chrono::milliseconds timeout = std::chrono::milliseconds(5000))
      : endpoint_(std::move(endpoint)), timeout_(timeout) {}

  DeliverStatus send(const Envelope& envelope) override;
  std::vector<StoredMessage> fetch(const Credentials& credentials) override;
  bool remove(const Credentials& credentials, std::uint64_t id) override;

  const Endpoint& endpoint() const { return endpoint_; }

 private:
  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
};

/// Attacker with plain network access: may submit anything (including a
/// forged From) and, modelling a wiretap, copy what sits in a mailbox.
class Adversary {
 public:
  Adversary(Transport& transport, const MailStore* wiretap = nullptr) : transport_(transport), wiretap_(wiretap) {}

  DeliverStatus inject(const Envelope& envelope) { return transport_.send(envelope); }
  DeliverStatus spoof(Envelope envelope, std::string forged_from);
  /// Messages currently waiting in `address`; empty without a wiretap.
  std::vector<StoredMessage> capture(std::string_view address) const;
  /// Re-delivers a captured message unchanged.
  DeliverStatus replay(const StoredMessage& message) { return transport_.send(message.envelope); }

 private:
  Transport& transport_;
  const MailStore* wiretap_;
};

}  // namespace unitor::mail
