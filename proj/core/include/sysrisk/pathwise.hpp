#pragma once

// Path-conditional probabilities by nested adaptive quadrature. All
// quantities here are conditional on one fixed realization of the state
// path; outer_expectation averages them over simulated paths.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sysrisk/hazard.hpp"
#include "sysrisk/model.hpp"
#include "sysrisk/quadrature.hpp"
#include "sysrisk/simulate.hpp"

namespace sysrisk::pathwise {

/// Largest K for the nested-quadrature failure probability.
inline constexpr std::size_t kQuadLimit = 4;
/// Integration stops where the relevant integrated intensity reaches this.
inline constexpr double kTruncationMass = 40.0;

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double achieved) : std::runtime_error(what), achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

/// A model with its intensities compiled along one path.
class FrozenModel {
 public:
  explicit FrozenModel(MarketModel model, std::optional<StatePath> path = std::nullopt);

  const MarketModel& model() const { return model_; }
  const StatePath* path() const { return path_ ? &*path_ : nullptr; }
  const HazardSet& hazards() const { return hazards_; }
  std::size_t banks() const { return hazards_.size(); }

  bool constant_hazards() const;
  /// 1e-8 when every compiled hazard is constant, 1e-6 otherwise.
  double default_tolerance() const;

 private:
  MarketModel model_;
  std::optional<StatePath> path_;
  HazardSet hazards_;
};

/// Smallest T with mass(T) >= kTruncationMass for a nondecreasing mass;
/// throws when mass stays bounded.
double truncation_point(const std::function<double(double)>& mass);

/// exp(-sum A_i(t_i) - A_0(max t)), times exp(-sum atoms) for atom models.
double joint_survival_path(const FrozenModel& fm, std::span<const double> times);

/// Probability (without atoms) that the banks default idiosyncratically in
/// the order `perm` with consecutive gaps >= epsilon and no stress event
/// before the last of them plus epsilon.
quad::Result permutation_integral(const FrozenModel& fm, std::span<const std::size_t> perm, double epsilon,
                                  double tolerance);

/// Sum of permutation_integral over all K! orders.
quad::Result separation_prob_path(const FrozenModel& fm, double epsilon, std::optional<double> tolerance = {});

/// Market failure probability. For atom models the no-failure event is
/// either no atom at all (exp(-sum atoms) times the separation integral) or
/// exactly one bank atom with the others separated from eps on. Throws
/// QuadratureError when the achieved error exceeds the tolerance.
quad::Result failure_prob_path(const FrozenModel& fm, double epsilon, std::optional<double> tolerance = {});

/// 1 - exp(-sum atoms) * separation integral: the complement of "no atom
/// and all separated", which is what comparative_static_path differentiates.
/// Equals failure_prob_path when the model has no atoms.
quad::Result failure_prob_atom_form(const FrozenModel& fm, double epsilon, std::optional<double> tolerance = {});

/// 1 + e^{-A_0(eps)} (prod (1 - e^{-A_i(eps)}) - 1), with atoms folded in.
double catastrophic_prob_path(const FrozenModel& fm, double epsilon);

/// P(|tau_i - tau_j| >= epsilon); bank indices are 0-based.
quad::Result pairwise_separation_prob(const FrozenModel& fm, std::size_t i, std::size_t j, double epsilon,
                                      std::optional<double> tolerance = {});

struct PathBounds {
  double upper_pairwise = 0.0;
  double upper_partial = 0.0;
  double lower_spacing = 0.0;
  double lower_pairwise = 0.0;
  /// Accumulated quadrature error of the four bounds.
  double error = 0.0;

  double upper() const;
  double lower() const;
};

/// Integral forms of the two upper and two lower bounds; `subset` lists the
/// permutations for the partial bound (empty means the identity order).
PathBounds bounds_path(const FrozenModel& fm, double epsilon, const std::vector<std::vector<std::size_t>>& subset = {},
                       std::optional<double> tolerance = {});

/// d alpha_i(X_0) / d x_ell(0) for i = 0..K taken from the specs.
std::vector<double> state_gradients(const MarketModel& model, std::size_t ell);

/// (sum_i grads[i]) * exp(-sum alpha_i(X_0)) * separation integral for an
/// atom-at-zero model; grads has K+1 entries (stress first).
double comparative_static_path(const FrozenModel& fm, std::span<const double> grads, double epsilon,
                               std::optional<double> tolerance = {});

/// [ (1 - e^{-I_0}) + e^{-I_0} (1 - e^{-I_i}) (1 - e^{-I_j}) ] / eps with
/// I_k the integral of alpha_k over (t, t+eps], one value per window.
std::vector<double> instantaneous_rate_path(const FrozenModel& fm, std::size_t i, std::size_t j, double t,
                                            std::span<const double> eps_seq);

/// Mean and standard error of fn over `paths` paths drawn from `generator`.
Estimate outer_expectation(const MarketModel& model, const simulate::PathGenerator& generator, std::uint64_t paths,
                           std::uint64_t seed, const std::function<double(const FrozenModel&)>& fn);

}  // namespace sysrisk::pathwise
