// unitor-node: the device daemon and a pin inspector.

#include <iostream>

#include "CLI11.hpp"
#include "signals.hpp"
#include "unitor/node.hpp"

using namespace unitor::node;

namespace {

int run(const std::string& config_path) {
  auto config = NodeConfig::load(config_path);
  const auto signals = unitor::tools::block_shutdown_signals();
  auto daemon = Daemon::start(config);
  std::cerr << "unitor-node: " << config.node_id << " polling " << config.mailbox.address << " every "
            << config.poll_interval.count() << " ms\n";
  unitor::tools::wait_for_shutdown(signals);
  daemon->stop();
  const auto totals = daemon->totals();
  std::cerr << "unitor-node: " << daemon->cycles() << " cycles, " << totals.accepted << " accepted, "
            << totals.dropped() << " dropped, " << totals.replies_sent << " replies\n";
  if (const auto err = daemon->last_error()) std::cerr << "unitor-node: last error: " << *err << '\n';
  return 0;
}

int pins(const std::string& config_path, bool as_json) {
  const auto config = NodeConfig::load(config_path);
  const auto levels = read_pin_levels(config);
  if (!config.state_file) std::cerr << "unitor-node: no state_file configured, showing power-on levels\n";
  if (as_json) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& t : config.things) j[t.name] = {{"pin", t.pin}, {"level", to_string(levels[t.pin])}};
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  for (unsigned p = 0; p < kPinCount; ++p) {
    std::string thing = "-";
    for (const auto& t : config.things)
      if (t.pin == p) thing = t.name;
    std::cout << "pin " << p << (p < 10 ? "  " : " ") << to_string(levels[p]) << (levels[p] == PinLevel::High ? " " : "  ")
              << thing << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unitor node daemon"};
  app.require_subcommand(1);
  std::string config_path;
  bool as_json = false;

  auto* run_cmd = app.add_subcommand("run", "Poll the mailbox and act on commands until SIGINT/SIGTERM");
  run_cmd->add_option("--config", config_path, "Node JSON config")->required()->check(CLI::ExistingFile);
  auto* pins_cmd = app.add_subcommand("pins", "Print the virtual pin levels last persisted by the daemon");
  pins_cmd->add_option("--config", config_path, "Node JSON config")->required()->check(CLI::ExistingFile);
  pins_cmd->add_flag("--json", as_json, "Print things as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return run(config_path);
    return pins(config_path, as_json);
  } catch (const std::exception& e) {
    std::cerr << "unitor-node: " << e.what() << '\n';
    return 1;
  }
}
