// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. UNITOR_ACCEPTANCE_SEED overrides the generator seed.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "corpus.hpp"
#include "httplib.h"
#include "test_support.hpp"
#include "unitor/controller.hpp"
#include "unitor/edon80.hpp"
#include "unitor/node.hpp"
#include "unitor/qg4.hpp"
#include "unitor/randomness.hpp"

using namespace unitor;
using namespace std::chrono_literals;
namespace ut = unitor::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Verdict()>& run) {
  Verdict v;
  try {
    v = run();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  if (!v.pass) ++failures;
  std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
}

Verdict edon80_conformance() {
  const auto start = Clock::now();
  const auto vectors = ut::load_vectors();
  std::size_t matched = 0;
  for (const auto& v : vectors) {
    edon80::Edon80 gen(edon80::Key80::from_hex(v.key_hex), edon80::IV64::from_hex(v.iv_hex));
    if (gen.next_bits(128).to_hex() == v.keystream_hex) ++matched;
  }
  auto long_ref = ut::read_fixture("edon80_zero_1024.hex");
  while (!long_ref.empty() && (long_ref.back() == '\n' || long_ref.back() == '\r')) long_ref.pop_back();
  const bool long_ok = edon80::Edon80(edon80::Key80{}, edon80::IV64{}).next_bits(1024).to_hex() == long_ref;
  const double t = seconds_since(start);
  return {!vectors.empty() && matched == vectors.size() && long_ok && t < 1.0,
          std::to_string(matched) + "/" + std::to_string(vectors.size()) + " 128-bit vectors, 1024-bit stream " +
              (long_ok ? "bit-exact" : "MISMATCH") + ", " + fmt(t) + " s (limit 1 s)"};
}

Verdict cipher_roundtrip(std::mt19937_64& gen) {
  const auto start = Clock::now();
  int ok = 0;
  std::size_t bytes = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto key = ut::random_key(gen);
    const auto iv = ut::random_iv(gen);
    const auto msg = ut::random_bytes(gen() % 1025, gen);
    bytes += msg.size();
    const auto ct = edon80::xor_seal(key, iv, qg4::standard_quad(), msg);
    if (ct.size() == msg.size() && edon80::xor_seal(key, iv, qg4::standard_quad(), ct) == msg) ++ok;
  }
  const double t = seconds_since(start);
  return {ok == 1000 && t < 10.0, std::to_string(ok) + "/1000 identities over " + std::to_string(bytes) +
                                      " bytes, " + fmt(t) + " s (limit 10 s)"};
}

Verdict quasigroup_census() {
  const auto start = Clock::now();
  const auto& all = qg4::enumerate_order4();

  // Brute force over the 24^4 row-permutation candidates.
  std::vector<std::array<std::uint8_t, 4>> perms;
  std::array<std::uint8_t, 4> p{0, 1, 2, 3};
  do perms.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  std::vector<std::array<std::uint8_t, 16>> brute;
  std::size_t candidates = 0;
  for (const auto& a : perms)
    for (const auto& b : perms)
      for (const auto& c : perms)
        for (const auto& d : perms) {
          ++candidates;
          const qg4::Table t{a, b, c, d};
          if (!qg4::validate(t).ok()) continue;
          std::array<std::uint8_t, 16> flat{};
          for (int i = 0; i < 16; ++i) flat[i] = t[i / 4][i % 4];
          brute.push_back(flat);
        }
  std::sort(brute.begin(), brute.end());

  bool increasing = true, valid = true, same = all.size() == brute.size();
  for (std::size_t i = 0; i < all.size(); ++i) {
    valid = valid && qg4::validate(all[i].table()).ok();
    if (i > 0) increasing = increasing && all[i - 1].cells() < all[i].cells();
    if (same) same = all[i].cells() == brute[i];
  }
  const double t = seconds_since(start);
  return {all.size() == 576 && increasing && valid && same && t < 5.0,
          std::to_string(all.size()) + " squares, strictly increasing=" + (increasing ? "yes" : "no") +
              ", equal to brute force over " + std::to_string(candidates) + " candidates=" + (same ? "yes" : "no") +
              ", " + fmt(t) + " s (limit 5 s)"};
}

Verdict date_rotation() {
  const auto d = qg4::RotationDate::from_ymd(1996, 4, 9);
  const auto idx = qg4::rotation_indices(d);
  const auto quad = qg4::quasigroups_for_date(d);
  const bool tables = quad[0] == qg4::quasigroup_number(9) && quad[1] == qg4::quasigroup_number(4) &&
                      quad[2] == qg4::quasigroup_number(19) && quad[3] == qg4::quasigroup_number(96);
  const bool ok = idx == std::array<std::size_t, 4>{9, 4, 19, 96} && tables;
  return {ok, "09-Apr-1996 -> (" + std::to_string(idx[0]) + ", " + std::to_string(idx[1]) + ", " +
                  std::to_string(idx[2]) + ", " + std::to_string(idx[3]) + "), expected (9, 4, 19, 96)"};
}

Verdict three_layer_filter(std::mt19937_64& gen) {
  const auto start = Clock::now();
  const auto today = qg4::RotationDate::from_ymd(2024, 5, 17);
  std::size_t honest_total = 0, false_drops = 0, adversarial_total = 0, false_accepts = 0, order_violations = 0;
  std::map<std::string, std::size_t> by_category;

  for (const auto mode : {wire::QuadMode::Fixed, wire::QuadMode::Date}) {
    ut::Channel ch;
    ch.mode = mode;
    auto policy = ch.policy();
    const auto honest = ut::honest_envelopes(ch, 5000, gen, today);
    for (const auto& e : honest) {
      ++honest_total;
      if (!wire::accepted(wire::filter(e, policy, today))) ++false_drops;
    }
    const auto next = policy.last_seq_per_sender[ch.sender] + 1;
    for (const auto& c : ut::adversarial_envelopes(ch, honest, 5000, gen, today, next)) {
      ++adversarial_total;
      ++by_category[c.category];
      // Each attack is judged against the post-honest state, so one slip
      // cannot mask the next.
      auto p = policy;
      const auto r = wire::filter(c.envelope, p, today);
      if (wire::accepted(r)) {
        ++false_accepts;
        continue;
      }
      const auto reason = std::get<wire::DropReason>(r);
      const bool sender_bad = !p.allowed_senders.contains(c.envelope.from);
      const bool subject_bad = c.envelope.subject != p.expected_subject;
      const bool order_ok = sender_bad   ? reason == wire::DropReason::UnauthorizedSender
                            : subject_bad ? reason == wire::DropReason::BadSubject
                                          : reason != wire::DropReason::UnauthorizedSender &&
                                                reason != wire::DropReason::BadSubject;
      if (!order_ok || (c.expected && reason != *c.expected)) ++order_violations;
    }
  }
  const double t = seconds_since(start);
  std::string cats;
  for (const auto& [name, n] : by_category) cats += (cats.empty() ? "" : " ") + name + "=" + std::to_string(n);
  const bool ok = honest_total >= 10000 && adversarial_total >= 10000 && false_accepts == 0 && false_drops == 0 &&
                  order_violations == 0 && t < 60.0;
  return {ok, std::to_string(false_accepts) + " false accepts / " + std::to_string(adversarial_total) +
                  " adversarial, " + std::to_string(false_drops) + " false drops / " + std::to_string(honest_total) +
                  " honest, " + std::to_string(order_violations) + " layer-order violations, " + fmt(t) +
                  " s (limit 60 s) [" + cats + "]"};
}

Verdict end_to_end() {
  const mail::Credentials node_box{"fan-node@unitor.test", "n-pass"};
  const mail::Credentials ctl_box{"controller@unitor.test", "c-pass"};
  const auto key_hex = std::string("0123456789abcdef0123");

  mail::BrokerConfig bc;
  bc.smtp_port = 0;
  bc.pop3_port = 0;
  bc.accounts = {{node_box.address, node_box.password}, {ctl_box.address, ctl_box.password}};
  auto broker = mail::Broker::serve(bc);
  const mail::Endpoint ep{"127.0.0.1", broker->smtp_port(), broker->pop3_port()};

  node::NodeConfig nc;
  nc.node_id = "fan-node";
  nc.mailbox = node_box;
  nc.broker = ep;
  nc.allowed_senders = {ctl_box.address};
  nc.subject = wire::subject_for("fan-node");
  nc.shared_key = edon80::Key80::from_hex(key_hex);
  nc.things = {{"fan1", 3}, {"lamp", 4}};
  auto daemon = node::Daemon::start(nc);  // TCP transport, default 200 ms poll

  auto cj = nlohmann::json::parse(R"({
    "mailbox": {"address": "controller@unitor.test", "password": "c-pass"},
    "api": {"bind": "127.0.0.1", "port": 0},
    "nodes": [{"node_id": "fan-node", "address": "fan-node@unitor.test",
               "shared_key": "0123456789abcdef0123", "things": [{"name": "fan1"}, {"name": "lamp"}]}]
  })");
  cj["broker"] = {{"host", ep.host}, {"smtp_port", ep.smtp_port}, {"pop3_port", ep.pop3_port}};
  ctl::Controller controller(ctl::ControllerConfig::from_json(cj), std::make_shared<mail::TcpTransport>(ep));
  auto api = ctl::ApiService::start(controller);

  // The attacker taps the node's mailbox and re-sends whatever it sees
  // under a forged sender, while the real command is still queued.
  mail::TcpTransport attacker_link(ep);
  mail::Adversary eve(attacker_link, &broker->store());
  std::atomic<bool> spoofed{false};
  std::jthread attacker([&](std::stop_token st) {
    while (!st.stop_requested() && !spoofed) {
      for (const auto& m : eve.capture(node_box.address)) {
        if (m.envelope.from != ctl_box.address) continue;
        eve.spoof(m.envelope, "mallory@evil.test");
        spoofed = true;
        break;
      }
      std::this_thread::sleep_for(1ms);
    }
  });

  httplib::Client http("127.0.0.1", api->port());
  const auto start = Clock::now();
  const auto posted = http.Post("/api/nodes/fan-node/things/fan1/command", R"({"action":"on"})", "application/json");
  if (!posted || posted->status != 202) return {false, "POST command failed"};
  const auto ticket = nlohmann::json::parse(posted->body).at("ticket").get<std::string>();

  std::string state = "sent";
  while (seconds_since(start) < 5.0) {
    const auto r = http.Get("/api/commands/" + ticket);
    if (r) state = nlohmann::json::parse(r->body).at("state").get<std::string>();
    if (state != "sent") break;
    std::this_thread::sleep_for(5ms);
  }
  const double loop = seconds_since(start);
  const bool pin_high = daemon->node().pins().level(3) == node::PinLevel::High;

  // Let the node drain the spoofed copy before judging it.
  ut::wait_until([&] { return spoofed && broker->store().peek(node_box.address).empty(); }, 3000ms);
  attacker.request_stop();
  attacker.join();
  daemon->stop();
  api->stop();

  std::size_t spoof_drops = 0, spoof_replies = 0, replies = 0;
  for (const auto& rec : daemon->node().audit().records()) {
    if (rec.direction == node::Direction::In && rec.from == "mallory@evil.test" && rec.outcome == "UnauthorizedSender")
      ++spoof_drops;
    if (rec.direction == node::Direction::Out) {
      ++replies;
      if (rec.to == "mallory@evil.test") ++spoof_replies;
    }
  }
  broker->shutdown();

  const bool ok = state == "acked" && pin_high && loop < 2.0 && spoofed && spoof_drops == 1 && spoof_replies == 0 &&
                  replies == 1;
  return {ok, "ticket " + state + " in " + fmt(loop) + " s (limit 2 s), pin 3 " + (pin_high ? "high" : "low") +
                  ", spoofed copy injected=" + (spoofed ? "yes" : "no") + " dropped as UnauthorizedSender=" +
                  std::to_string(spoof_drops) + ", replies sent=" + std::to_string(replies) +
                  " (to spoofer: " + std::to_string(spoof_replies) + ")"};
}

Verdict capacity_rule() {
  auto make = [](int n) {
    nlohmann::json j = nlohmann::json::parse(R"({
      "node_id": "big-node",
      "mailbox": {"address": "big-node@unitor.test", "password": "x"},
      "broker": {"host": "127.0.0.1", "smtp_port": 2525, "pop3_port": 2110},
      "policy": {"allowed_senders": ["controller@unitor.test"], "shared_key": "0123456789abcdef0123"},
      "things": []
    })");
    for (int i = 0; i < n; ++i) j["things"].push_back({{"name", "thing" + std::to_string(i)}, {"pin", i % 26}});
    const auto path = std::filesystem::temp_directory_path() /
                      ("unitor-capacity-" + std::to_string(n) + "-" + std::to_string(::getpid()) + ".json");
    std::ofstream(path) << j.dump();
    return path;
  };
  const auto ok_path = make(26);
  const auto bad_path = make(27);
  bool loaded_26 = false, rejected_27 = false;
  std::string message;
  try {
    loaded_26 = node::NodeConfig::load(ok_path).things.size() == 26;
  } catch (const std::exception&) {
  }
  try {
    node::NodeConfig::load(bad_path);
  } catch (const ConfigError& e) {
    rejected_27 = true;
    message = e.what();
  }
  std::filesystem::remove(ok_path);
  std::filesystem::remove(bad_path);
  return {loaded_26 && rejected_27, std::string("26 things load=") + (loaded_26 ? "yes" : "no") +
                                        ", 27 things rejected=" + (rejected_27 ? "yes (" + message + ")" : "no")};
}

Verdict nist_smoke(std::mt19937_64& gen) {
  const auto start = Clock::now();
  int passed = 0;
  std::string ps;
  for (int i = 0; i < 10; ++i) {
    edon80::Edon80 cipher(ut::random_key(gen), ut::random_iv(gen));
    const auto r = edon80::nist_smoke(cipher.next_bits(100000));
    if (r.passed()) ++passed;
    ps += (ps.empty() ? "" : " ") + fmt(r.monobit_p, 2) + "/" + fmt(r.runs_p, 2);
  }
  edon80::BitString zeros;
  for (int i = 0; i < 100000; ++i) zeros.push_back(false);
  const auto control = edon80::nist_smoke(zeros);
  const double t = seconds_since(start);
  return {passed >= 9 && !control.monobit_passed() && t < 30.0,
          std::to_string(passed) + "/10 keys pass monobit and runs at alpha 0.01 (need 9), all-zero control monobit p=" +
              fmt(control.monobit_p, 6) + " fails=" + (control.monobit_passed() ? "no" : "yes") + ", " + fmt(t) +
              " s (limit 30 s) [monobit/runs p: " + ps + "]"};
}

}  // namespace

int main() {
  std::uint64_t seed = 20240517;
  if (const char* s = std::getenv("UNITOR_ACCEPTANCE_SEED")) seed = std::strtoull(s, nullptr, 10);
  std::mt19937_64 gen(seed);
  std::cout << "unitor acceptance (seed " << seed << ")" << std::endl;

  report("edon80-conformance", edon80_conformance);
  report("cipher-roundtrip", [&] { return cipher_roundtrip(gen); });
  report("quasigroup-census", quasigroup_census);
  report("date-rotation", date_rotation);
  report("three-layer-filter", [&] { return three_layer_filter(gen); });
  report("end-to-end-tcp", end_to_end);
  report("capacity-26-pins", capacity_rule);
  report("nist-smoke", [&] { return nist_smoke(gen); });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
