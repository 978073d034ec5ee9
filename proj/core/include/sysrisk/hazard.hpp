#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sysrisk/model.hpp"

namespace sysrisk {

/// An intensity compiled along one path: alpha(t) is piecewise linear between
/// knots and constant after the last knot, so A(t) and its inverse have
/// closed forms on every segment.
class Hazard {
 public:
  Hazard() : Hazard(0.0) {}
  explicit Hazard(double constant_rate);
  Hazard(std::vector<double> knots, std::vector<double> rates);

  static Hazard compile(const IntensitySpec& spec, const StatePath* path);

  double rate(double t) const;
  /// A(t) = integral_0^t alpha.
  double integral(double t) const;
  /// integral_{t0}^{t1} alpha without forming A(t1) - A(t0).
  double integral(double t0, double t1) const;
  /// inf{s : A(s) >= z}; kNever if A stays below z.
  double inverse(double z) const;

  bool is_constant() const { return knots_.size() == 1; }
  double tail_rate() const { return rates_.back(); }
  std::span<const double> knots() const { return knots_; }
  std::span<const double> rates() const { return rates_; }

  Hazard shifted_rate(double offset) const;

 private:
  std::size_t segment(double t) const;
  double partial(std::size_t seg, double u) const;

  std::vector<double> knots_;
  std::vector<double> rates_;
  std::vector<double> cumulative_;
};

/// Stress hazard plus one hazard per bank, together with the atom masses
/// alpha_i(X_0) when the model has an atom at zero (all zeros otherwise).
struct HazardSet {
  Hazard stress;
  std::vector<Hazard> banks;
  /// atoms[0] for the stress event, atoms[i] for bank i.
  std::vector<double> atoms;

  std::size_t size() const { return banks.size(); }
  const Hazard& operator[](std::size_t index) const { return index == 0 ? stress : banks[index - 1]; }
  double total_atom() const;
};

/// Values alpha_i(X_0) for i = 0..K (0 is the stress intensity).
std::vector<double> initial_intensities(const MarketModel& model, const StatePath* path);

HazardSet compile_hazards(const MarketModel& model, const StatePath* path);

}  // namespace sysrisk
