// Python bindings: the cipher, the quasigroup tables, the wire protocol and
// enough of the broker/node/controller to script a simulation.

#include <pybind11/chrono.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "unitor/controller.hpp"
#include "unitor/edon80.hpp"
#include "unitor/mailsim.hpp"
#include "unitor/node.hpp"
#include "unitor/qg4.hpp"
#include "unitor/randomness.hpp"
#include "unitor/wireproto.hpp"

namespace py = pybind11;
using namespace unitor;

namespace {

using Ymd = std::tuple<int, unsigned, unsigned>;

qg4::RotationDate to_date(const std::optional<Ymd>& ymd) {
  if (!ymd) return qg4::RotationDate::utc_today();
  return qg4::RotationDate::from_ymd(std::get<0>(*ymd), std::get<1>(*ymd), std::get<2>(*ymd));
}

qg4::QuasigroupQuad to_quad(const std::optional<std::vector<qg4::Quasigroup4>>& quad) {
  if (!quad) return qg4::standard_quad();
  if (quad->size() != 4) throw py::value_error("a quad has exactly four quasigroups");
  return {(*quad)[0], (*quad)[1], (*quad)[2], (*quad)[3]};
}

std::vector<qg4::Quasigroup4> quad_list(const qg4::QuasigroupQuad& q) { return {q.begin(), q.end()}; }

std::span<const std::uint8_t> as_span(const py::bytes& data, std::string& storage) {
  storage = data;
  return {reinterpret_cast<const std::uint8_t*>(storage.data()), storage.size()};
}

py::bytes to_bytes(const std::vector<std::uint8_t>& v) {
  return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

edon80::BitString to_bits(const py::object& bits) {
  if (py::isinstance<py::str>(bits)) return edon80::BitString::from_binary(bits.cast<std::string>());
  std::string storage;
  return edon80::BitString::from_bytes(as_span(bits.cast<py::bytes>(), storage));
}

py::object outcome_to_py(const std::variant<wire::CommandFrame, wire::DropReason>& r) {
  if (const auto* f = std::get_if<wire::CommandFrame>(&r)) return py::cast(*f);
  return py::cast(std::get<wire::DropReason>(r));
}

// Owns everything a controller service needs, so Python holds one handle.
class ControllerHandle {
 public:
  explicit ControllerHandle(const std::string& config_json) {
    auto config = ctl::ControllerConfig::from_json(nlohmann::json::parse(config_json));
    auto transport = std::make_shared<mail::TcpTransport>(config.broker);
    controller_ = std::make_unique<ctl::Controller>(std::move(config), std::move(transport));
    api_ = ctl::ApiService::start(*controller_);
  }
  std::uint16_t port() const { return api_->port(); }
  std::string send(const std::string& node, const std::string& thing, const std::string& action) {
    const auto a = wire::parse_action(action);
    if (!a) throw py::value_error("action must be 'on' or 'off'");
    return controller_->send_command(node, thing, *a).id;
  }
  std::string ticket_state(const std::string& id) const {
    const auto t = controller_->ticket(id);
    if (!t) throw py::key_error(id);
    return std::string(ctl::to_string(t->state));
  }
  void stop() { api_->stop(); }

 private:
  std::unique_ptr<ctl::Controller> controller_;
  std::unique_ptr<ctl::ApiService> api_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Unitor core: Edon80, order-4 quasigroups, the command protocol and the mail simulator";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<wire::IvReuseError>(m, "IvReuseError", PyExc_ValueError);
  py::register_exception<mail::TransportError>(m, "TransportError", PyExc_ConnectionError);
  py::register_exception<mail::AuthError>(m, "AuthError", PyExc_PermissionError);

  // --- quasigroups ---
  py::class_<qg4::Quasigroup4>(m, "Quasigroup4")
      .def_static("from_display", &qg4::Quasigroup4::from_display, py::arg("digits"))
      .def("to_display", &qg4::Quasigroup4::to_display)
      .def("apply", [](const qg4::Quasigroup4& q, unsigned a, unsigned b) {
        return q.apply(qg4::Symbol(a), qg4::Symbol(b)).value();
      })
      .def_property_readonly("table", [](const qg4::Quasigroup4& q) {
        std::vector<std::vector<int>> rows;
        for (const auto& r : q.table()) rows.push_back({r.begin(), r.end()});
        return rows;
      })
      .def("__eq__", [](const qg4::Quasigroup4& a, const qg4::Quasigroup4& b) { return a == b; })
      .def("__lt__", [](const qg4::Quasigroup4& a, const qg4::Quasigroup4& b) { return a < b; })
      .def("__hash__", [](const qg4::Quasigroup4& q) { return std::hash<std::string>{}(q.to_display()); })
      .def("__repr__", [](const qg4::Quasigroup4& q) { return "Quasigroup4('" + q.to_display() + "')"; });

  m.def("validate", [](const std::vector<std::vector<int>>& rows) {
    if (rows.size() != 4) throw py::value_error("expected 4 rows");
    qg4::Table t{};
    for (std::size_t i = 0; i < 4; ++i) {
      if (rows[i].size() != 4) throw py::value_error("expected 4 columns");
      for (std::size_t j = 0; j < 4; ++j) t[i][j] = static_cast<std::uint8_t>(rows[i][j]);
    }
    const auto r = qg4::validate(t);
    return py::make_tuple(r.bad_rows, r.bad_columns);
  }, "Returns (bad_rows, bad_columns); both empty for a Latin square.");
  m.def("standard_quad", [] { return quad_list(qg4::standard_quad()); });
  m.def("enumerate_order4", [] {
    const auto& all = qg4::enumerate_order4();
    return std::vector<qg4::Quasigroup4>(all.begin(), all.end());
  });
  m.def("quasigroup_number", &qg4::quasigroup_number, py::arg("n"));
  m.def("e_transform", [](const qg4::Quasigroup4& q, unsigned leader, const std::vector<unsigned>& input) {
    qg4::SymbolString in;
    for (auto x : input) in.push_back(qg4::Symbol(x));
    std::vector<unsigned> out;
    for (auto s : qg4::e_transform(q, qg4::Symbol(leader), in)) out.push_back(s.value());
    return out;
  }, py::arg("q"), py::arg("leader"), py::arg("input"));
  m.def("rotation_indices", [](int y, unsigned mo, unsigned d) {
    return qg4::rotation_indices(qg4::RotationDate::from_ymd(y, mo, d));
  }, py::arg("year"), py::arg("month"), py::arg("day"));
  m.def("quasigroups_for_date", [](int y, unsigned mo, unsigned d) {
    return quad_list(qg4::quasigroups_for_date(qg4::RotationDate::from_ymd(y, mo, d)));
  }, py::arg("year"), py::arg("month"), py::arg("day"));

  // --- cipher ---
  py::class_<edon80::Key80>(m, "Key80")
      .def_static("from_hex", &edon80::Key80::from_hex)
      .def_static("random", &edon80::Key80::random)
      .def("to_hex", &edon80::Key80::to_hex)
      .def("symbols", [](const edon80::Key80& k) {
        std::vector<unsigned> out;
        for (auto s : k.symbols()) out.push_back(s.value());
        return out;
      })
      .def("__eq__", [](const edon80::Key80& a, const edon80::Key80& b) { return a == b; })
      .def("__repr__", [](const edon80::Key80&) { return std::string("Key80(<hidden>)"); });

  py::class_<edon80::IV64>(m, "IV64")
      .def_static("from_hex", &edon80::IV64::from_hex)
      .def_static("random", &edon80::IV64::random)
      .def("to_hex", &edon80::IV64::to_hex)
      .def("__eq__", [](const edon80::IV64& a, const edon80::IV64& b) { return a == b; })
      .def("__repr__", [](const edon80::IV64& iv) { return "IV64('" + iv.to_hex() + "')"; });

  m.def("pad_iv", [](const edon80::IV64& iv) {
    const auto& b = edon80::pad_iv(iv).bytes();
    return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
  });

  py::class_<edon80::Edon80>(m, "Edon80")
      .def(py::init([](const edon80::Key80& key, const edon80::IV64& iv,
                       const std::optional<std::vector<qg4::Quasigroup4>>& quad) {
             return edon80::Edon80(key, iv, to_quad(quad));
           }),
           py::arg("key"), py::arg("iv"), py::arg("quad") = py::none())
      .def("next_bits", [](edon80::Edon80& e, std::size_t n) { return e.next_bits(n).to_binary(); },
           "Next n keystream bits as a '0'/'1' string.")
      .def("next_hex", [](edon80::Edon80& e, std::size_t n) { return e.next_bits(n).to_hex(); },
           "Next n keystream bits, packed MSB first, as hex.")
      .def("next_bytes", [](edon80::Edon80& e, std::size_t n) {
        return to_bytes(e.next_bits(8 * n).bytes());
      })
      .def("apply", [](edon80::Edon80& e, const py::bytes& data) {
        std::string s = data;
        std::vector<std::uint8_t> buf(s.begin(), s.end());
        e.apply(buf);
        return to_bytes(buf);
      });

  m.def("xor_seal", [](const edon80::Key80& key, const edon80::IV64& iv, const py::bytes& message,
                       const std::optional<std::vector<qg4::Quasigroup4>>& quad) {
    std::string storage;
    return to_bytes(edon80::xor_seal(key, iv, to_quad(quad), as_span(message, storage)));
  }, py::arg("key"), py::arg("iv"), py::arg("message"), py::arg("quad") = py::none());

  m.def("nist_smoke", [](const py::object& bits) {
    const auto r = edon80::nist_smoke(to_bits(bits));
    py::dict d;
    d["monobit_p"] = r.monobit_p;
    d["runs_p"] = r.runs_p;
    d["passed"] = r.passed();
    return d;
  }, py::arg("bits"), "Accepts a '0'/'1' string or bytes (8 bits per byte, MSB first).");

  // --- wire protocol ---
  py::enum_<wire::FrameKind>(m, "FrameKind")
      .value("CMD", wire::FrameKind::Cmd)
      .value("STQ", wire::FrameKind::Stq)
      .value("STS", wire::FrameKind::Sts);
  py::enum_<wire::DropReason>(m, "DropReason")
      .value("UnauthorizedSender", wire::DropReason::UnauthorizedSender)
      .value("BadSubject", wire::DropReason::BadSubject)
      .value("MalformedBody", wire::DropReason::MalformedBody)
      .value("BadGrammar", wire::DropReason::BadGrammar)
      .value("StaleSequence", wire::DropReason::StaleSequence);

  py::class_<wire::CommandFrame>(m, "CommandFrame")
      .def(py::init([](wire::FrameKind kind, std::string thing, std::optional<std::string> action,
                       std::uint64_t seq) {
             std::optional<wire::Action> a;
             if (action) {
               a = wire::parse_action(*action);
               if (!a) throw py::value_error("action must be 'on' or 'off'");
             }
             return wire::CommandFrame{kind, std::move(thing), a, seq};
           }),
           py::arg("kind"), py::arg("thing"), py::arg("action") = py::none(), py::arg("seq") = 0)
      .def_readwrite("kind", &wire::CommandFrame::kind)
      .def_readwrite("thing", &wire::CommandFrame::thing)
      .def_property_readonly("action", [](const wire::CommandFrame& f) -> std::optional<std::string> {
        if (!f.action) return std::nullopt;
        return std::string(wire::to_string(*f.action));
      })
      .def_readwrite("seq", &wire::CommandFrame::seq)
      .def("__eq__", [](const wire::CommandFrame& a, const wire::CommandFrame& b) { return a == b; })
      .def("__repr__", [](const wire::CommandFrame& f) {
        return "CommandFrame('" + (f.valid() ? wire::encode_frame(f) : std::string("<invalid>")) + "')";
      });

  m.def("encode_frame", &wire::encode_frame);
  m.def("parse_frame", &wire::parse_frame, "None if the line is not a protocol frame.");

  py::class_<wire::IvLog>(m, "IvLog").def(py::init<>()).def("__len__", &wire::IvLog::size);

  m.def("seal_body", [](const wire::CommandFrame& f, const edon80::Key80& key, wire::IvLog& log,
                        const std::optional<edon80::IV64>& iv, const std::optional<std::vector<qg4::Quasigroup4>>& quad) {
    return iv ? wire::seal_body(f, key, to_quad(quad), *iv, log) : wire::seal_body(f, key, to_quad(quad), log);
  }, py::arg("frame"), py::arg("key"), py::arg("log"), py::arg("iv") = py::none(), py::arg("quad") = py::none());
  m.def("open_body", [](const std::string& body, const edon80::Key80& key,
                        const std::optional<std::vector<qg4::Quasigroup4>>& quad) {
    return outcome_to_py(wire::open_body(body, key, to_quad(quad)));
  }, py::arg("body"), py::arg("key"), py::arg("quad") = py::none());
  m.def("subject_for", &wire::subject_for);

  py::class_<Envelope>(m, "Envelope")
      .def(py::init<std::string, std::string, std::string, std::string>(), py::arg("sender"), py::arg("to"),
           py::arg("subject"), py::arg("body"))
      .def_readwrite("sender", &Envelope::from)
      .def_readwrite("to", &Envelope::to)
      .def_readwrite("subject", &Envelope::subject)
      .def_readwrite("body", &Envelope::body)
      .def("__eq__", [](const Envelope& a, const Envelope& b) { return a == b; });

  py::class_<wire::FilterPolicy>(m, "FilterPolicy")
      .def(py::init([](std::set<std::string> senders, std::string subject, const edon80::Key80& key,
                       const std::string& quad_mode) {
             wire::FilterPolicy p;
             p.allowed_senders = std::move(senders);
             p.expected_subject = std::move(subject);
             p.shared_key = key;
             p.quad_mode = wire::parse_quad_mode(quad_mode);
             p.check();
             return p;
           }),
           py::arg("allowed_senders"), py::arg("subject"), py::arg("key"), py::arg("quad_mode") = "fixed")
      .def_readonly("last_seq_per_sender", &wire::FilterPolicy::last_seq_per_sender);

  m.def("filter", [](const Envelope& e, wire::FilterPolicy& p, const std::optional<Ymd>& today) {
    return outcome_to_py(wire::filter(e, p, to_date(today)));
  }, py::arg("envelope"), py::arg("policy"), py::arg("today") = py::none(),
        "Returns the accepted CommandFrame or the DropReason.");

  // --- mail simulator ---
  py::class_<mail::Broker>(m, "Broker")
      .def_static("serve", [](const std::vector<std::pair<std::string, std::string>>& accounts,
                              std::uint16_t smtp_port, std::uint16_t pop3_port) {
        mail::BrokerConfig c;
        c.smtp_port = smtp_port;
        c.pop3_port = pop3_port;
        for (const auto& [a, p] : accounts) c.accounts.push_back({a, p});
        return mail::Broker::serve(c);
      }, py::arg("accounts"), py::arg("smtp_port") = 0, py::arg("pop3_port") = 0)
      .def_property_readonly("smtp_port", &mail::Broker::smtp_port)
      .def_property_readonly("pop3_port", &mail::Broker::pop3_port)
      .def("peek", [](mail::Broker& b, const std::string& address) {
        std::vector<Envelope> out;
        for (const auto& msg : b.store().peek(address)) out.push_back(msg.envelope);
        return out;
      })
      .def("shutdown", &mail::Broker::shutdown, py::call_guard<py::gil_scoped_release>());

  py::class_<mail::TcpTransport>(m, "TcpTransport")
      .def(py::init([](std::string host, std::uint16_t smtp, std::uint16_t pop3) {
             return mail::TcpTransport(mail::Endpoint{std::move(host), smtp, pop3});
           }),
           py::arg("host"), py::arg("smtp_port"), py::arg("pop3_port"))
      .def("send", [](mail::TcpTransport& t, const Envelope& e) {
        py::gil_scoped_release release;
        return std::string(mail::to_string(t.send(e)));
      })
      .def("fetch", [](mail::TcpTransport& t, const std::string& address, const std::string& password) {
        std::vector<mail::StoredMessage> msgs;
        {
          py::gil_scoped_release release;
          msgs = t.fetch({address, password});
        }
        std::vector<std::pair<std::uint64_t, Envelope>> out;
        for (auto& msg : msgs) out.emplace_back(msg.id, std::move(msg.envelope));
        return out;
      })
      .def("remove", [](mail::TcpTransport& t, const std::string& address, const std::string& password,
                        std::uint64_t id) {
        py::gil_scoped_release release;
        return t.remove({address, password}, id);
      });

  // --- node and controller ---
  py::class_<node::Daemon>(m, "NodeDaemon")
      .def_static("start", [](const std::string& config_json) {
        return node::Daemon::start(node::NodeConfig::from_json(nlohmann::json::parse(config_json)));
      }, py::arg("config_json"))
      .def("pin", [](const node::Daemon& d, unsigned pin) {
        return std::string(node::to_string(d.node().pins().level(pin)));
      })
      .def("level_of", [](const node::Daemon& d, const std::string& thing) {
        return std::string(node::to_string(d.node().level_of(thing)));
      })
      .def_property_readonly("cycles", &node::Daemon::cycles)
      .def("stop", &node::Daemon::stop, py::call_guard<py::gil_scoped_release>());

  py::class_<ControllerHandle>(m, "ControllerService")
      .def(py::init<const std::string&>(), py::arg("config_json"))
      .def_property_readonly("port", &ControllerHandle::port)
      .def("send", &ControllerHandle::send, py::arg("node"), py::arg("thing"), py::arg("action"),
           py::call_guard<py::gil_scoped_release>())
      .def("ticket_state", &ControllerHandle::ticket_state)
      .def("stop", &ControllerHandle::stop, py::call_guard<py::gil_scoped_release>());
}
