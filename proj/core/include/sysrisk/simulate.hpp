#pragma once

// Monte Carlo oracle for the default-time model. Replicate r draws its
// thresholds Z_0..Z_K (and, for stochastic state paths, its Gaussian
// increments) from counter-based substreams keyed by (seed, r, variable), so
// estimates are bit-identical for any number of worker threads.

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "sysrisk/hazard.hpp"
#include "sysrisk/model.hpp"

namespace sysrisk::simulate {

/// The state stays at x0 forever.
struct ConstantStateGenerator {
  std::vector<double> x0;
};

/// Every replicate uses the same fixed path.
struct FrozenGenerator {
  StatePath path;
};

/// Independent Euler scheme per coordinate,
/// x += speed (mean - x) dt + vol sqrt(dt) N(0,1), floored at 0.
struct MeanRevertingGenerator {
  std::vector<double> x0;
  std::vector<double> mean;
  std::vector<double> speed;
  std::vector<double> vol;
  double horizon = 1.0;
  /// 0 selects horizon / 1024.
  double dt = 0.0;
};

using PathGenerator = std::variant<ConstantStateGenerator, FrozenGenerator, MeanRevertingGenerator>;

/// Frozen when a path is given, otherwise the (possibly empty) initial state.
PathGenerator default_generator(const MarketModel& model, const StatePath* path);

/// True when every replicate sees the same path.
bool is_static(const PathGenerator& generator);

/// Path of replicate `replicate`; empty (d = 0) for a ConstantStateGenerator
/// without state.
StatePath sample_path(const PathGenerator& generator, std::uint64_t seed, std::uint64_t replicate);

struct DrawnTimes {
  /// eta_0 (stress) followed by eta_1..eta_K; kNever when never reached.
  std::vector<double> etas;
  /// tau_i = min(eta_0, eta_i), i = 1..K.
  std::vector<double> taus;
};

/// Default times for explicit thresholds z[0..K] (z[0] drives the stress
/// event). With atoms, eta_i = 0 whenever z[i] <= alpha_i(X_0).
DrawnTimes times_from_thresholds(const HazardSet& hazards, std::span<const double> thresholds);

DrawnTimes sample_default_times(const MarketModel& model, const PathGenerator& generator, std::uint64_t seed,
                                std::uint64_t replicate);

struct RunOptions {
  std::uint64_t replications = 100000;
  std::uint64_t seed = 1;
  /// 0 selects std::thread::hardware_concurrency().
  unsigned threads = 0;
};

/// Some pair satisfies |tau_i - tau_j| < epsilon, or two finite default
/// times coincide (the latter only matters at epsilon = 0).
bool market_failure(std::span<const double> taus, double epsilon);

Estimate estimate_failure_prob(const MarketModel& model, const PathGenerator& generator, double epsilon,
                               const RunOptions& options);

/// Frequency of max(tau) <= epsilon.
Estimate estimate_catastrophic(const MarketModel& model, const PathGenerator& generator, double epsilon,
                               const RunOptions& options);

/// Frequency of tau_i > t_i for all i.
Estimate estimate_joint_survival(const MarketModel& model, const PathGenerator& generator,
                                 std::span<const double> times, const RunOptions& options);

/// P(tau_i, tau_j in (t, t+eps] | tau_i, tau_j > t) / eps. The standard
/// error uses the number of conditioning replicates.
Estimate estimate_instantaneous_rate(const MarketModel& model, const PathGenerator& generator, double t,
                                     double epsilon, const RunOptions& options, std::size_t bank_i = 0,
                                     std::size_t bank_j = 1);

/// The base model resized to `banks` banks: bank intensities repeat
/// cyclically; with `destructive` every bank becomes ln(K) + base.
MarketModel with_banks(const MarketModel& base, std::size_t banks, bool destructive);

struct SweepRow {
  std::size_t banks = 0;
  Estimate failure;
  Estimate catastrophic;
};

std::vector<SweepRow> sweep_K(const MarketModel& base, std::span<const std::size_t> bank_counts,
                              const PathGenerator& generator, double epsilon, const RunOptions& options,
                              bool destructive = false);

}  // namespace sysrisk::simulate
