#include "sysrisk/analytic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

#include "sysrisk/rng.hpp"
#include "sysrisk/summation.hpp"

namespace sysrisk::analytic {

namespace {

void require_window(double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("epsilon must be finite and >= 0");
}

void require_two_banks(const ConstRates& rates) {
  if (rates.banks() < 2) throw std::invalid_argument("K ≥ 2 required for market failure");
}

}  // namespace

ConstRates ConstRates::from_model(const MarketModel& model) {
  if (!model.all_constant()) throw std::invalid_argument("analytic backend requires all-Constant intensities");
  ConstRates r;
  r.alpha0 = model.stress_intensity.constant_rate();
  r.alphas.reserve(model.banks());
  for (const auto& spec : model.bank_intensities) r.alphas.push_back(spec.constant_rate());
  check_rates(r);
  return r;
}

void check_rates(const ConstRates& rates) {
  if (!(rates.alpha0 >= 0.0) || !std::isfinite(rates.alpha0)) throw std::invalid_argument("alpha0 must be >= 0");
  for (double a : rates.alphas) {
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("bank intensities must be > 0");
  }
}

double marginal_survival(const ConstRates& rates, std::size_t bank, double t) {
  if (bank >= rates.banks()) throw std::out_of_range("bank index out of range");
  if (!(t >= 0.0)) throw std::invalid_argument("t must be >= 0");
  return std::exp(-(rates.alpha0 + rates.alphas[bank]) * t);
}

double joint_survival(const ConstRates& rates, std::span<const double> times) {
  if (times.size() != rates.banks()) throw std::invalid_argument("joint_survival: one time per bank required");
  double exponent = 0.0;
  double latest = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0)) throw std::invalid_argument("joint_survival: times must be >= 0");
    exponent += rates.alphas[i] * times[i];
    latest = std::max(latest, times[i]);
  }
  return std::exp(-exponent - rates.alpha0 * latest);
}

double permutation_term(const ConstRates& rates, std::span<const std::size_t> perm, double epsilon) {
  const std::size_t k = perm.size();
  if (k != rates.banks()) throw std::invalid_argument("permutation length must equal K");
  std::vector<double> suffix(k + 1, 0.0);
  for (std::size_t i = k; i-- > 0;) suffix[i] = suffix[i + 1] + rates.alphas.at(perm[i]);
  double log_term = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    log_term += std::log(rates.alphas[perm[i]] / (rates.alpha0 + suffix[i]));
    log_term -= epsilon * (rates.alpha0 + suffix[i + 1]);
  }
  return std::exp(log_term);
}

double failure_prob_perm(const ConstRates& rates, double epsilon) {
  require_two_banks(rates);
  require_window(epsilon);
  check_rates(rates);
  const std::size_t k = rates.banks();
  if (k > kPermLimit) {
    throw std::invalid_argument("K = " + std::to_string(k) + " exceeds the permutation limit " +
                                std::to_string(kPermLimit) + "; use failure_prob_dp");
  }
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<double> terms;
  do {
    terms.push_back(permutation_term(rates, perm, epsilon));
  } while (std::next_permutation(perm.begin(), perm.end()));
  // Fixed accumulation order independent of enumeration order.
  if (k >= 8) std::sort(terms.begin(), terms.end());
  CompensatedSum sum;
  for (double t : terms) sum += t;
  return 1.0 - sum.value();
}

double failure_prob_dp(const ConstRates& rates, double epsilon) {
  require_two_banks(rates);
  require_window(epsilon);
  check_rates(rates);
  const std::size_t k = rates.banks();
  if (k > kDpLimit) {
    throw std::invalid_argument("K = " + std::to_string(k) + " exceeds the subset-DP limit " +
                                std::to_string(kDpLimit));
  }
  const std::size_t full = (std::size_t{1} << k) - 1;
  std::vector<double> subset_sum(full + 1, 0.0);
  for (std::size_t mask = 1; mask <= full; ++mask) {
    const auto low = static_cast<std::size_t>(std::countr_zero(mask));
    subset_sum[mask] = subset_sum[mask & (mask - 1)] + rates.alphas[low];
  }
  std::vector<double> gap(full + 1);
  for (std::size_t mask = 0; mask <= full; ++mask) gap[mask] = std::exp(-epsilon * (rates.alpha0 + subset_sum[mask]));

  // D(U) for |U| = 1 is 1 (last bank, closed by the stress term).
  std::vector<double> d(full + 1, 0.0);
  for (std::size_t mask = 1; mask <= full; ++mask) {
    if (std::has_single_bit(mask)) {
      d[mask] = 1.0;
      continue;
    }
    CompensatedSum acc;
    for (std::size_t bits = mask; bits != 0; bits &= bits - 1) {
      const auto a = static_cast<std::size_t>(std::countr_zero(bits));
      const std::size_t rest = mask & ~(std::size_t{1} << a);
      acc += rates.alphas[a] * gap[rest] * d[rest];
    }
    d[mask] = acc.value() / (rates.alpha0 + subset_sum[mask]);
  }
  return 1.0 - d[full];
}

double failure_prob_iid(double alpha0, double alpha, std::size_t banks, double epsilon) {
  if (banks < 2) throw std::invalid_argument("K ≥ 2 required for market failure");
  require_window(epsilon);
  if (!(alpha0 >= 0.0) || !(alpha > 0.0)) throw std::invalid_argument("need alpha0 >= 0 and alpha > 0");
  const auto k = static_cast<double>(banks);
  CompensatedSum log_no_failure;
  log_no_failure += std::lgamma(k + 1.0);
  for (std::size_t i = 1; i < banks; ++i) {
    const auto remaining = static_cast<double>(banks - i + 1);
    log_no_failure += std::log(alpha / (alpha0 + remaining * alpha));
    log_no_failure += -epsilon * (alpha0 + (remaining - 1.0) * alpha);
  }
  return -std::expm1(log_no_failure.value());
}

double failure_prob(const ConstRates& rates, double epsilon) {
  if (rates.banks() <= kDpLimit) return failure_prob_dp(rates, epsilon);
  check_rates(rates);
  const bool identical = std::all_of(rates.alphas.begin(), rates.alphas.end(),
                                     [&](double a) { return a == rates.alphas.front(); });
  if (!identical) {
    throw std::invalid_argument("K = " + std::to_string(rates.banks()) +
                                " exceeds the subset-DP limit and rates are not identical");
  }
  return failure_prob_iid(rates.alpha0, rates.alphas.front(), rates.banks(), epsilon);
}

double catastrophic_prob(const ConstRates& rates, double epsilon) {
  require_window(epsilon);
  check_rates(rates);
  double all_banks = 1.0;
  for (double a : rates.alphas) all_banks *= -std::expm1(-a * epsilon);
  return -std::expm1(-rates.alpha0 * epsilon) + std::exp(-rates.alpha0 * epsilon) * all_banks;
}

double pairwise_separation(const ConstRates& rates, std::size_t i, std::size_t j, double epsilon) {
  if (i == j) throw std::invalid_argument("pairwise_separation needs two distinct banks");
  const double ai = rates.alphas.at(i);
  const double aj = rates.alphas.at(j);
  return std::exp(-epsilon * rates.alpha0) * (ai * std::exp(-epsilon * aj) + aj * std::exp(-epsilon * ai)) /
         (ai + aj + rates.alpha0);
}

double spacing_sum(const ConstRates& rates, double epsilon) {
  const std::size_t k = rates.banks();
  if (k > kDpLimit) throw std::invalid_argument("spacing_sum: K exceeds the subset-DP limit");
  const std::size_t full = (std::size_t{1} << k) - 1;
  std::vector<double> p(full + 1, 0.0);
  p[0] = 1.0;
  for (std::size_t mask = 1; mask <= full; ++mask) {
    const auto position = static_cast<double>(std::popcount(mask) - 1);
    CompensatedSum acc;
    for (std::size_t bits = mask; bits != 0; bits &= bits - 1) {
      const auto a = static_cast<std::size_t>(std::countr_zero(bits));
      acc += p[mask & ~(std::size_t{1} << a)] * std::exp(-epsilon * position * rates.alphas[a]);
    }
    p[mask] = acc.value();
  }
  return p[full];
}

double FailureBounds::upper() const { return std::min(upper_pairwise, upper_partial); }

double FailureBounds::lower() const {
  return lower_spacing ? std::max(*lower_spacing, lower_pairwise) : lower_pairwise;
}

FailureBounds failure_bounds(const ConstRates& rates, double epsilon,
                             const std::vector<std::vector<std::size_t>>& subset) {
  require_two_banks(rates);
  require_window(epsilon);
  check_rates(rates);
  const std::size_t k = rates.banks();
  FailureBounds b;

  CompensatedSum pair_fail;
  double min_sep = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double sep = pairwise_separation(rates, i, j, epsilon);
      pair_fail += 1.0 - sep;
      min_sep = std::min(min_sep, sep);
    }
  }
  b.upper_pairwise = pair_fail.value();
  b.lower_pairwise = 1.0 - min_sep;

  CompensatedSum partial;
  if (subset.empty()) {
    std::vector<std::size_t> identity(k);
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    partial += permutation_term(rates, identity, epsilon);
  } else {
    for (const auto& perm : subset) partial += permutation_term(rates, perm, epsilon);
  }
  b.upper_partial = 1.0 - partial.value();

  if (k <= kDpLimit) {
    b.lower_spacing = 1.0 - std::exp(-rates.alpha0 * epsilon * static_cast<double>(k - 1)) * spacing_sum(rates, epsilon);
  }
  return b;
}

std::vector<std::vector<std::size_t>> random_permutations(std::size_t banks, std::size_t count, std::uint64_t seed) {
  double total = 1.0;
  for (std::size_t m = 2; m <= banks; ++m) total *= static_cast<double>(m);
  count = std::min<std::size_t>(count, static_cast<std::size_t>(std::min(total, 1e9)));

  const CounterRng rng(seed);
  std::set<std::vector<std::size_t>> seen;
  std::vector<std::vector<std::size_t>> out;
  for (std::uint64_t draw = 0; out.size() < count; ++draw) {
    std::vector<std::size_t> perm(banks);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = banks; i > 1; --i) {
      const double u = rng.uniform(draw, 0, static_cast<std::uint32_t>(i));
      const auto j = std::min(static_cast<std::size_t>((1.0 - u) * static_cast<double>(i)), i - 1);
      std::swap(perm[i - 1], perm[j]);
    }
    if (seen.insert(perm).second) out.push_back(std::move(perm));
  }
  return out;
}

double instantaneous_rate(const ConstRates& rates) {
  check_rates(rates);
  return rates.alpha0;
}

double co_default_ratio(const ConstRates& rates, std::size_t i, std::size_t j, double epsilon) {
  if (i == j) throw std::invalid_argument("co_default_ratio needs two distinct banks");
  if (!(epsilon > 0.0)) throw std::invalid_argument("co_default_ratio needs epsilon > 0");
  const double ai = rates.alphas.at(i);
  const double aj = rates.alphas.at(j);
  // 1 - e^{-(a0+aj)e} - e^{-(a0+ai)e} + e^{-(a0+ai+aj)e}
  //   = (1 - e^{-a0 e}) + e^{-a0 e}(1 - e^{-ai e})(1 - e^{-aj e}).
  const double both = -std::expm1(-rates.alpha0 * epsilon) +
                      std::exp(-rates.alpha0 * epsilon) * std::expm1(-ai * epsilon) * std::expm1(-aj * epsilon);
  return both / epsilon;
}

double linear_comparative_static(const std::vector<std::vector<double>>& betas, std::size_t ell,
                                 double survival_complement) {
  if (!(survival_complement >= 0.0 && survival_complement <= 1.0)) {
    throw std::invalid_argument("survival_complement must lie in [0, 1]");
  }
  double sum = 0.0;
  for (const auto& row : betas) {
    if (ell >= row.size()) throw std::out_of_range("state coordinate out of range");
    if (row[ell] < 0.0) throw std::invalid_argument("betas must be nonnegative");
    sum += row[ell];
  }
  return sum * survival_complement;
}

}  // namespace sysrisk::analytic
