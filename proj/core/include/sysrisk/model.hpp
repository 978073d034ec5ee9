#pragma once

// Domain types for the multivariate Cox-process default model.
//
// Each bank i defaults idiosyncratically at eta_i = inf{s : A_i(s) >= Z_i},
// the market-wide stress event happens at eta_0 (same construction with
// alpha_0), and the observed default time is tau_i = min(eta_0, eta_i).
// Time is dimensionless: every rate and window in a scenario shares one unit.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace sysrisk {

/// Returned for times that are never reached (e.g. a bounded integrated
/// intensity that never crosses its threshold).
inline constexpr double kNever = std::numeric_limits<double>::infinity();

/// A realized trajectory of the d-dimensional state vector X on a grid.
/// Values are linearly interpolated between grid points and frozen at the
/// last grid value beyond it.
struct StatePath {
  std::vector<double> grid;
  std::vector<std::vector<double>> values;
  double horizon = 0.0;

  std::size_t dimension() const { return values.empty() ? 0 : values.front().size(); }
  /// Coordinate j of X at time t.
  double coordinate(std::size_t j, double t) const;
  std::vector<double> state(double t) const;

  static StatePath constant(std::vector<double> x0);
};

/// Violations of the StatePath invariants; empty when valid.
std::vector<std::string> check_path(const StatePath& path);

class IntensitySpec;

struct ConstantRate {
  double rate = 0.0;
};

/// alpha as a function of time along a fixed path, piecewise linear.
struct PiecewiseRate {
  std::vector<double> grid;
  std::vector<double> values;
};

/// alpha(X_r) = sum_j betas[j] * x_j(r).
struct AffineRate {
  std::vector<double> betas;
};

/// alpha(X, K) = ln(K) + b(X): per-bank risk grows with the number of banks.
struct DestructiveRate {
  std::shared_ptr<const IntensitySpec> base;
  int banks = 1;
};

/// How one default intensity alpha(.) is specified.
class IntensitySpec {
 public:
  using Kind = std::variant<ConstantRate, PiecewiseRate, AffineRate, DestructiveRate>;

  IntensitySpec() : kind_(ConstantRate{}) {}
  explicit IntensitySpec(Kind kind) : kind_(std::move(kind)) {}

  static IntensitySpec constant(double rate);
  static IntensitySpec piecewise(std::vector<double> grid, std::vector<double> values);
  static IntensitySpec affine(std::vector<double> betas);
  static IntensitySpec destructive(IntensitySpec base, int banks);

  const Kind& kind() const { return kind_; }

  bool is_constant() const;
  /// True when evaluation needs a StatePath (AffineRate anywhere inside).
  bool needs_state() const;
  /// Rate value when is_constant(); throws otherwise.
  double constant_rate() const;

  /// alpha at time t given the current state x (x may be empty when the
  /// spec does not depend on state).
  double evaluate(std::span<const double> x, double t) const;
  /// d alpha / d x_ell evaluated at state x.
  double state_derivative(std::span<const double> x, std::size_t ell) const;

  std::string describe() const;

 private:
  Kind kind_;
};

/// Violations of a single spec (optionally checked against a path); each
/// message is prefixed with `where`.
std::vector<std::string> check_intensity(const IntensitySpec& spec, const StatePath* path,
                                         const std::string& where);

/// A(t) = integral_0^t alpha(X_r) dr. Beyond the path horizon the intensity
/// is frozen at its final value.
double integrated_intensity(const IntensitySpec& spec, const StatePath* path, double t);

/// inf{s : A(s) >= z}; kNever when A stays below z forever.
double inverse_integrated_intensity(const IntensitySpec& spec, const StatePath* path, double z);

struct MarketModel {
  std::vector<IntensitySpec> bank_intensities;
  IntensitySpec stress_intensity;
  double epsilon = 0.0;
  std::optional<std::vector<double>> initial_state;
  /// Selects the modified model with eta_i = inf{s : alpha_i(X_0) + A_i(s) >= Z_i}.
  bool atom_at_zero = false;

  std::size_t banks() const { return bank_intensities.size(); }
  /// Intensity by index where 0 is the stress intensity and 1..K the banks.
  const IntensitySpec& intensity(std::size_t index) const;
  bool all_constant() const;
  bool needs_state() const;
};

enum class Backend { Analytic, Pathwise, Simulate };

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;
  bool analytic = false;
  bool pathwise = false;
  bool simulate = false;

  bool ok() const { return violations.empty(); }
  bool eligible(Backend backend) const;
};

/// Checks every model invariant and reports backend eligibility: analytic
/// needs all-Constant intensities, pathwise needs a path (or no state
/// dependence), simulate accepts anything structurally valid.
ValidationReport validate(const MarketModel& model, const StatePath* path = nullptr);

/// Monte Carlo result.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t replications = 0;
  std::uint64_t seed = 0;
};

/// Frequency estimate for `hits` successes out of `trials`; the standard
/// error is the unbiased sample standard deviation over sqrt(trials).
Estimate frequency_estimate(std::uint64_t hits, std::uint64_t trials, std::uint64_t seed);

enum class Quantity { MarketFailure, Catastrophic, JointSurvival, InstantRate, ComparativeStatic };

std::string to_string(Quantity quantity);

struct ProbabilityReport {
  Quantity quantity = Quantity::MarketFailure;
  std::optional<double> exact;
  std::optional<double> upper_bound;
  std::optional<double> lower_bound;
  std::optional<Estimate> mc;
  std::string backend;

  /// lower <= exact <= upper up to `slack` whenever all three are present.
  bool consistent(double slack = 1e-10) const;
};

}  // namespace sysrisk
