#pragma once

#include <istream>
#include <string>

#include "json.hpp"
#include "tokengate/netsim/simulation.hpp"

// Scenario files are JSON lines; blank lines and lines starting with '#'
// are skipped. Every object has a "cmd" and may carry "expect": "<CODE>",
// which turns the command into a check that it fails with that code.
// The command set and assert checks are listed in docs/scenarios.md.
namespace tokengate::netsim {

class ScenarioRunner {
 public:
  explicit ScenarioRunner(SimOptions options = {});

  // Throws Error{AssertionFailed} when a check or an "expect" fails, and
  // Error{Usage} for malformed commands. Other errors propagate.
  void execute(const nlohmann::json& command, std::size_t line = 0);
  // Runs every line of a scenario.
  void run(std::istream& in);
  void run_file(const std::string& path);

  Simulation& sim() { return sim_; }
  const Simulation& sim() const { return sim_; }
  std::size_t commands_run() const { return commands_; }
  // Summary printed by `sim run`.
  nlohmann::json report() const;

 private:
  void dispatch(const nlohmann::json& c);
  void check(const nlohmann::json& c);

  Simulation sim_;
  std::size_t commands_ = 0;
  std::size_t line_ = 0;
};

}  // namespace tokengate::netsim
