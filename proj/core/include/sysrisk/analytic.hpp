#pragma once

// Closed forms for models whose intensities are all constant.
//
// Bank indices are 0-based throughout: alphas[i] is the rate of bank i.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sysrisk/model.hpp"

namespace sysrisk::analytic {

/// Largest K for the K!-term permutation sum.
inline constexpr std::size_t kPermLimit = 9;
/// Largest K for the 2^K subset recursion.
inline constexpr std::size_t kDpLimit = 20;

struct ConstRates {
  double alpha0 = 0.0;
  std::vector<double> alphas;

  std::size_t banks() const { return alphas.size(); }

  /// Throws std::invalid_argument unless every intensity of `model` is
  /// Constant (or destructive competition over a constant base).
  static ConstRates from_model(const MarketModel& model);
};

/// Throws unless alpha0 >= 0 and every alpha_i > 0.
void check_rates(const ConstRates& rates);

/// P(tau_i > t) = exp(-(alpha0 + alpha_i) t).
double marginal_survival(const ConstRates& rates, std::size_t bank, double t);

/// P(tau_1 > t_1, ..., tau_K > t_K) = exp(-sum alpha_i t_i - alpha0 max t).
double joint_survival(const ConstRates& rates, std::span<const double> times);

/// One term of the permutation sum: the probability that the banks default
/// idiosyncratically in the order `perm` with consecutive gaps >= epsilon
/// and the stress event after the last of them.
double permutation_term(const ConstRates& rates, std::span<const std::size_t> perm, double epsilon);

/// 1 minus the sum of permutation_term over all K! orders.
double failure_prob_perm(const ConstRates& rates, double epsilon);

/// Same value as failure_prob_perm via the recursion over suffix sets
/// D(U) = sum_{a in U} alpha_a e^{-eps(alpha0 + S(U\a))} D(U\a) / (alpha0 + S(U)).
double failure_prob_dp(const ConstRates& rates, double epsilon);

/// Identical banks: K! times one permutation term, evaluated in log space so
/// any K works.
double failure_prob_iid(double alpha0, double alpha, std::size_t banks, double epsilon);

/// Dispatches to failure_prob_dp (K <= kDpLimit) or failure_prob_iid for
/// equal rates; throws otherwise.
double failure_prob(const ConstRates& rates, double epsilon);

/// P(max tau <= epsilon) = 1 + e^{-alpha0 eps} (prod (1 - e^{-alpha_i eps}) - 1).
double catastrophic_prob(const ConstRates& rates, double epsilon);

/// P(|tau_i - tau_j| >= epsilon) for two banks.
double pairwise_separation(const ConstRates& rates, std::size_t i, std::size_t j, double epsilon);

/// sum over permutations of exp(-eps sum_{pos} pos * alpha_{perm[pos]}),
/// computed by a subset recursion (K <= kDpLimit).
double spacing_sum(const ConstRates& rates, double epsilon);

struct FailureBounds {
  double upper_pairwise = 0.0;
  double upper_partial = 0.0;
  /// Absent when K exceeds kDpLimit.
  std::optional<double> lower_spacing;
  double lower_pairwise = 0.0;

  double upper() const;
  double lower() const;
};

/// Two upper and two lower bounds. `subset` lists the permutations used by
/// the partial-permutation upper bound; empty means the identity order.
/// Raw values are returned and may leave [0, 1].
FailureBounds failure_bounds(const ConstRates& rates, double epsilon,
                             const std::vector<std::vector<std::size_t>>& subset = {});

/// `count` distinct random permutations of 0..K-1 (capped at K!).
std::vector<std::vector<std::size_t>> random_permutations(std::size_t banks, std::size_t count, std::uint64_t seed);

/// Limit of P(both default in (t, t+eps] | both alive at t) / eps as eps -> 0.
double instantaneous_rate(const ConstRates& rates);

/// The finite-window ratio P(tau_i, tau_j in (t, t+eps] | tau_i, tau_j > t) / eps
/// (independent of t for constant rates).
double co_default_ratio(const ConstRates& rates, std::size_t i, std::size_t j, double epsilon);

/// (sum_{i=0}^{K} betas[i][ell]) * survival_complement for affine intensities
/// alpha_i(x) = sum_j betas[i][j] x_j; row 0 is the stress intensity.
double linear_comparative_static(const std::vector<std::vector<double>>& betas, std::size_t ell,
                                 double survival_complement);

}  // namespace sysrisk::analytic
