#pragma once

// YAML scenario files.
//
//   epsilon: 1.0                       # window; all times share one unit
//   banks:                             # K intensity specs
//     - {kind: constant, params: {rate: 0.05}}
//     - {kind: piecewise, params: {grid: [0, 1, 2], values: [1, 3, 3]}}
//     - {kind: affine, params: {betas: [0.1, 0.0]}}
//     - {kind: destructive, params: {K: 10, base: {kind: constant, params: {rate: 0.02}}}}
//   stress: {kind: constant, params: {rate: 0.01}}
//   initial_state: [1.0, 0.5]          # optional X_0
//   atom_at_zero: false                # optional
//   state_path:                        # optional frozen path
//     grid: [0, 1, 2]
//     values: [[1, 0.5], [1.2, 0.4], [1.1, 0.6]]
//     horizon: 2                       # optional, defaults to the last grid point
//   destructive_competition:           # optional: every bank becomes ln(K) + base
//     K_override: 10                   # optional, defaults to the number of banks
//   generator:                         # optional stochastic state for Monte Carlo
//     kind: mean_reverting
//     params: {x0: [1, 0.5], mean: [1, 0.5], speed: [2, 2], vol: [0.3, 0.3], horizon: 10, dt: 0.01}

#include <optional>
#include <stdexcept>
#include <string>

#include "sysrisk/model.hpp"
#include "sysrisk/simulate.hpp"

namespace sysrisk {

/// Parse failure; the message names the source, line and key path.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string key, int line, std::string message, const std::string& source = "");

  const std::string& key() const { return key_; }
  /// 1-based line, 0 when unknown.
  int line() const { return line_; }
  const std::string& message() const { return message_; }

 private:
  std::string key_;
  int line_;
  std::string message_;
};

struct Scenario {
  MarketModel model;
  std::optional<StatePath> path;
  std::optional<simulate::PathGenerator> generator;

  /// The configured generator, else the frozen path or constant initial state.
  simulate::PathGenerator path_generator() const;
};

Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& file);

}  // namespace sysrisk
