#include "sysrisk/pathwise.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "sysrisk/analytic.hpp"
#include "sysrisk/summation.hpp"

namespace sysrisk::pathwise {

namespace {

constexpr std::size_t kInnerPanels = 200;
constexpr std::size_t kOuterPanels = 2000;

std::size_t factorial(std::size_t n) {
  std::size_t f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= i;
  return f;
}

// Sum of the two smallest bank integrals plus the stress integral: every
// nested integrand is bounded by a density times exp(-mass).
double failure_mass(const HazardSet& h, double t) {
  double lo1 = kNever;
  double lo2 = kNever;
  for (const Hazard& b : h.banks) {
    const double a = b.integral(t);
    if (a < lo1) {
      lo2 = lo1;
      lo1 = a;
    } else if (a < lo2) {
      lo2 = a;
    }
  }
  return lo1 + lo2 + h.stress.integral(t);
}

double failure_truncation(const HazardSet& h) {
  return truncation_point([&](double t) { return failure_mass(h, t); });
}

// Nested integral for one permutation. Level m integrates
// f_{p[m]}(x) * inner(x + eps) over [lo, T]; the innermost kernel is
// exp(-A_{p[K-1]}(y) - A_0(y)).
class Nested {
 public:
  Nested(const HazardSet& h, std::span<const std::size_t> perm, double eps, double upper, double tol)
      : h_(h), perm_(perm), eps_(eps), upper_(upper), tol_(tol), worst_(perm.size(), 0.0) {}

  quad::Result run(double start = 0.0) {
    if (perm_.size() == 1) return {kernel(start), 0.0, true, 1};
    quad::Result r = level(0, start, kOuterPanels);
    double err = r.error;
    for (std::size_t m = 1; m < worst_.size(); ++m) err += worst_[m];
    r.error = err + std::exp(-kTruncationMass);
    r.converged = r.error <= level_tolerance_total();
    return r;
  }

 private:
  double level_tolerance(std::size_t m) const { return tol_ * std::pow(0.25, static_cast<double>(m)); }
  double level_tolerance_total() const {
    double t = std::exp(-kTruncationMass);
    for (std::size_t m = 0; m + 1 < perm_.size(); ++m) t += level_tolerance(m);
    return t;
  }

  double kernel(double y) const {
    const Hazard& last = h_.banks[perm_.back()];
    return std::exp(-last.integral(y) - h_.stress.integral(y));
  }

  quad::Result level(std::size_t m, double lo, std::size_t panels) {
    if (!(lo < upper_)) return {};
    const Hazard& bank = h_.banks[perm_[m]];
    const bool innermost = m + 2 == perm_.size();
    auto integrand = [&](double x) {
      const double density = bank.rate(x) * std::exp(-bank.integral(x));
      if (density == 0.0) return 0.0;
      if (innermost) return density * kernel(x + eps_);
      const quad::Result inner = level(m + 1, x + eps_, kInnerPanels);
      worst_[m + 1] = std::max(worst_[m + 1], inner.error);
      return density * inner.value;
    };
    return quad::integrate(integrand, lo, upper_, level_tolerance(m), panels);
  }

  const HazardSet& h_;
  std::span<const std::size_t> perm_;
  double eps_;
  double upper_;
  double tol_;
  std::vector<double> worst_;
};

void require_separable(const FrozenModel& fm, const char* what) {
  if (fm.banks() < 2) throw std::invalid_argument(std::string(what) + ": K >= 2 required for market failure");
}

void require_window(double epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be nonnegative");
}

quad::Result permutation_integral_at(const HazardSet& h, std::span<const std::size_t> perm, double eps, double upper,
                                     double tol, double start = 0.0) {
  return Nested(h, perm, eps, upper, tol).run(start);
}

// Sum over all orders of `banks` of the nested integral started at `start`,
// with total tolerance tol.
quad::Result separation_over(const HazardSet& h, std::vector<std::size_t> banks, double eps, double upper, double tol,
                             double start) {
  const std::size_t k = banks.size();
  const double per_perm = tol / static_cast<double>(factorial(k) * std::max<std::size_t>(k - 1, 1));
  std::sort(banks.begin(), banks.end());
  CompensatedSum value;
  double error = 0.0;
  bool converged = true;
  std::size_t evaluations = 0;
  do {
    const quad::Result r = permutation_integral_at(h, banks, eps, upper, per_perm, start);
    value += r.value;
    error += r.error;
    converged = converged && r.converged;
    evaluations += r.evaluations;
  } while (std::next_permutation(banks.begin(), banks.end()));
  return {value.value(), error, converged && error <= tol, evaluations};
}

}  // namespace

FrozenModel::FrozenModel(MarketModel model, std::optional<StatePath> path)
    : model_(std::move(model)), path_(std::move(path)), hazards_(compile_hazards(model_, this->path())) {}

bool FrozenModel::constant_hazards() const {
  if (!hazards_.stress.is_constant()) return false;
  return std::all_of(hazards_.banks.begin(), hazards_.banks.end(), [](const Hazard& h) { return h.is_constant(); });
}

double FrozenModel::default_tolerance() const { return constant_hazards() ? 1e-8 : 1e-6; }

double truncation_point(const std::function<double(double)>& mass) {
  double hi = 1.0;
  while (mass(hi) < kTruncationMass) {
    hi *= 2.0;
    if (hi > 1e300) throw std::domain_error("integrated intensities stay bounded; no truncation point exists");
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) >= kTruncationMass ? hi : lo) = mid;
  }
  return hi;
}

double joint_survival_path(const FrozenModel& fm, std::span<const double> times) {
  const HazardSet& h = fm.hazards();
  if (times.size() != h.size()) throw std::invalid_argument("joint survival: need one time per bank");
  double exponent = h.total_atom();
  double tmax = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0)) throw std::invalid_argument("joint survival: times must be nonnegative");
    exponent += h.banks[i].integral(times[i]);
    tmax = std::max(tmax, times[i]);
  }
  exponent += h.stress.integral(tmax);
  return std::exp(-exponent);
}

quad::Result permutation_integral(const FrozenModel& fm, std::span<const std::size_t> perm, double epsilon,
                                  double tolerance) {
  require_separable(fm, "permutation_integral");
  require_window(epsilon);
  if (perm.size() != fm.banks()) throw std::invalid_argument("permutation_integral: permutation has wrong length");
  return permutation_integral_at(fm.hazards(), perm, epsilon, failure_truncation(fm.hazards()),
                                 tolerance / static_cast<double>(fm.banks() - 1));
}

quad::Result separation_prob_path(const FrozenModel& fm, double epsilon, std::optional<double> tolerance) {
  require_separable(fm, "separation_prob_path");
  require_window(epsilon);
  const std::size_t k = fm.banks();
  if (k > kQuadLimit) {
    throw std::invalid_argument("pathwise quadrature supports K <= " + std::to_string(kQuadLimit) +
                                "; use the Monte Carlo backend");
  }
  const double tol = tolerance.value_or(fm.default_tolerance());
  std::vector<std::size_t> banks(k);
  std::iota(banks.begin(), banks.end(), std::size_t{0});
  return separation_over(fm.hazards(), std::move(banks), epsilon, failure_truncation(fm.hazards()), tol, 0.0);
}

quad::Result failure_prob_path(const FrozenModel& fm, double epsilon, std::optional<double> tolerance) {
  const double tol = tolerance.value_or(fm.default_tolerance());
  const HazardSet& h = fm.hazards();
  const bool atoms = h.total_atom() > 0.0;
  // Without atoms everything is the continuous term; with atoms the budget
  // is split between it and the K single-atom terms.
  const double share = atoms ? tol / static_cast<double>(2 * h.size()) : tol;
  quad::Result sep = separation_prob_path(fm, epsilon, atoms ? 0.5 * tol : tol);
  double error = sep.error;
  bool converged = sep.converged;
  CompensatedSum survival;
  survival += sep.value;
  if (atoms) {
    // Exactly one bank defaults at 0; the others must start at or after eps
    // and stay separated.
    const double upper = failure_truncation(h);
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double weight = std::expm1(h.atoms[i + 1]);
      if (weight == 0.0) continue;
      std::vector<std::size_t> rest;
      for (std::size_t j = 0; j < h.size(); ++j) {
        if (j != i) rest.push_back(j);
      }
      const quad::Result r = separation_over(h, std::move(rest), epsilon, upper, share / weight, epsilon);
      survival += weight * r.value;
      error += weight * r.error;
      converged = converged && r.converged;
    }
  }
  const double scale = std::exp(-h.total_atom());
  error *= scale;
  if (!converged || error > tol) {
    throw QuadratureError("failure_prob_path: quadrature did not reach tolerance " + std::to_string(tol) +
                              " (achieved " + std::to_string(error) + ")",
                          error);
  }
  return {1.0 - scale * survival.value(), error, true, sep.evaluations};
}

quad::Result failure_prob_atom_form(const FrozenModel& fm, double epsilon, std::optional<double> tolerance) {
  const double tol = tolerance.value_or(fm.default_tolerance());
  quad::Result sep = separation_prob_path(fm, epsilon, tol);
  if (!sep.converged) {
    throw QuadratureError("failure_prob_atom_form: quadrature did not reach tolerance " + std::to_string(tol) +
                              " (achieved " + std::to_string(sep.error) + ")",
                          sep.error);
  }
  const double scale = std::exp(-fm.hazards().total_atom());
  sep.value = 1.0 - scale * sep.value;
  sep.error *= scale;
  return sep;
}

double catastrophic_prob_path(const FrozenModel& fm, double epsilon) {
  require_window(epsilon);
  const HazardSet& h = fm.hazards();
  double prod = 1.0;
  for (std::size_t i = 0; i < h.size(); ++i) prod *= -std::expm1(-h.atoms[i + 1] - h.banks[i].integral(epsilon));
  const double stress = h.atoms[0] + h.stress.integral(epsilon);
  return -std::expm1(-stress) + std::exp(-stress) * prod;
}

quad::Result pairwise_separation_prob(const FrozenModel& fm, std::size_t i, std::size_t j, double epsilon,
                                      std::optional<double> tolerance) {
  const HazardSet& h = fm.hazards();
  if (i == j || i >= h.size() || j >= h.size()) {
    throw std::invalid_argument("pairwise_separation_prob: need two distinct bank indices");
  }
  require_window(epsilon);
  const double tol = tolerance.value_or(fm.default_tolerance());
  const Hazard& hi = h.banks[i];
  const Hazard& hj = h.banks[j];
  const double upper =
      truncation_point([&](double t) { return hi.integral(t) + hj.integral(t) + h.stress.integral(t); });
  auto one_side = [&](const Hazard& first, const Hazard& second) {
    auto f = [&](double y) {
      const double r = first.rate(y);
      if (r == 0.0) return 0.0;
      const double z = y + epsilon;
      return r * std::exp(-first.integral(y) - second.integral(z) - h.stress.integral(z));
    };
    return quad::integrate(f, 0.0, upper, 0.5 * tol, kOuterPanels);
  };
  const quad::Result a = one_side(hj, hi);
  const quad::Result b = one_side(hi, hj);
  const double error = a.error + b.error + 2.0 * std::exp(-kTruncationMass);
  const bool converged = a.converged && b.converged;
  if (!converged) {
    throw QuadratureError("pairwise_separation_prob: quadrature did not converge (achieved " +
                              std::to_string(error) + ")",
                          error);
  }
  return {a.value + b.value, error, true, a.evaluations + b.evaluations};
}

double PathBounds::upper() const { return std::min(upper_pairwise, upper_partial); }
double PathBounds::lower() const { return std::max(lower_spacing, lower_pairwise); }

PathBounds bounds_path(const FrozenModel& fm, double epsilon, const std::vector<std::vector<std::size_t>>& subset,
                       std::optional<double> tolerance) {
  require_separable(fm, "bounds_path");
  require_window(epsilon);
  if (fm.model().atom_at_zero) throw std::invalid_argument("bounds_path: not defined for the atom-at-zero model");
  const HazardSet& h = fm.hazards();
  const std::size_t k = h.size();
  if (k > analytic::kDpLimit) {
    throw std::invalid_argument("bounds_path: K <= " + std::to_string(analytic::kDpLimit) + " required");
  }
  const double tol = tolerance.value_or(fm.default_tolerance());
  PathBounds out;

  double min_sep = 1.0;
  double pair_sum = 0.0;
  const std::size_t pairs = k * (k - 1) / 2;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const quad::Result s = pairwise_separation_prob(fm, i, j, epsilon, tol / static_cast<double>(pairs));
      pair_sum += 1.0 - s.value;
      min_sep = std::min(min_sep, s.value);
      out.error += s.error;
    }
  }
  out.upper_pairwise = pair_sum;
  out.lower_pairwise = 1.0 - min_sep;

  std::vector<std::vector<std::size_t>> perms = subset;
  if (perms.empty()) {
    perms.emplace_back(k);
    std::iota(perms.back().begin(), perms.back().end(), std::size_t{0});
  }
  const double upper = failure_truncation(h);
  CompensatedSum partial;
  for (const auto& p : perms) {
    if (p.size() != k) throw std::invalid_argument("bounds_path: permutation has wrong length");
    const quad::Result r =
        permutation_integral_at(h, p, epsilon, upper, tol / static_cast<double>(perms.size() * (k - 1)));
    partial += r.value;
    out.error += r.error;
  }
  out.upper_partial = 1.0 - partial.value();

  // Sum over orders of prod_pos exp(-A_{p[pos]}(pos eps)) via subsets: the
  // size of the placed set fixes the next position.
  const std::size_t states = std::size_t{1} << k;
  std::vector<double> weight(k * k);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t pos = 0; pos < k; ++pos) {
      weight[a * k + pos] = std::exp(-h.banks[a].integral(static_cast<double>(pos) * epsilon));
    }
  }
  std::vector<double> dp(states, 0.0);
  dp[0] = 1.0;
  for (std::size_t u = 0; u < states; ++u) {
    if (dp[u] == 0.0) continue;
    const auto pos = static_cast<std::size_t>(std::popcount(u));
    for (std::size_t a = 0; a < k; ++a) {
      if ((u >> a) & 1u) continue;
      dp[u | (std::size_t{1} << a)] += dp[u] * weight[a * k + pos];
    }
  }
  const double stress = h.stress.integral(static_cast<double>(k - 1) * epsilon);
  out.lower_spacing = 1.0 - std::exp(-stress) * dp[states - 1];
  return out;
}

std::vector<double> state_gradients(const MarketModel& model, std::size_t ell) {
  const std::vector<double> x0 = model.initial_state.value_or(std::vector<double>{});
  std::vector<double> grads(model.banks() + 1);
  for (std::size_t i = 0; i < grads.size(); ++i) grads[i] = model.intensity(i).state_derivative(x0, ell);
  return grads;
}

double comparative_static_path(const FrozenModel& fm, std::span<const double> grads, double epsilon,
                               std::optional<double> tolerance) {
  if (!fm.model().atom_at_zero) {
    throw std::invalid_argument("comparative_static_path: model must have the atom at zero");
  }
  if (grads.size() != fm.banks() + 1) throw std::invalid_argument("comparative_static_path: need K+1 gradients");
  double g = 0.0;
  for (double v : grads) g += v;
  if (g == 0.0) return 0.0;
  const double tol = tolerance.value_or(fm.default_tolerance());
  const quad::Result sep = separation_prob_path(fm, epsilon, tol);
  if (!sep.converged) {
    throw QuadratureError("comparative_static_path: quadrature did not converge (achieved " +
                              std::to_string(sep.error) + ")",
                          sep.error);
  }
  return g * std::exp(-fm.hazards().total_atom()) * sep.value;
}

std::vector<double> instantaneous_rate_path(const FrozenModel& fm, std::size_t i, std::size_t j, double t,
                                            std::span<const double> eps_seq) {
  const HazardSet& h = fm.hazards();
  if (i == j || i >= h.size() || j >= h.size()) {
    throw std::invalid_argument("instantaneous_rate_path: need two distinct bank indices");
  }
  std::vector<double> out;
  out.reserve(eps_seq.size());
  for (const double eps : eps_seq) {
    if (!(eps > 0.0)) throw std::invalid_argument("instantaneous_rate_path: windows must be positive");
    const double i0 = h.stress.integral(t, t + eps);
    const double ii = h.banks[i].integral(t, t + eps);
    const double ij = h.banks[j].integral(t, t + eps);
    const double p = -std::expm1(-i0) + std::exp(-i0) * std::expm1(-ii) * std::expm1(-ij);
    out.push_back(p / eps);
  }
  return out;
}

Estimate outer_expectation(const MarketModel& model, const simulate::PathGenerator& generator, std::uint64_t paths,
                           std::uint64_t seed, const std::function<double(const FrozenModel&)>& fn) {
  if (paths == 0) throw std::invalid_argument("outer_expectation: need at least one path");
  CompensatedSum sum;
  CompensatedSum sum_sq;
  for (std::uint64_t r = 0; r < paths; ++r) {
    StatePath path = simulate::sample_path(generator, seed, r);
    std::optional<StatePath> frozen;
    if (!path.values.empty()) frozen = std::move(path);
    const double v = fn(FrozenModel(model, std::move(frozen)));
    sum += v;
    sum_sq += v * v;
  }
  const double n = static_cast<double>(paths);
  Estimate e;
  e.mean = sum.value() / n;
  e.replications = paths;
  e.seed = seed;
  if (paths > 1) {
    const double var = std::max(sum_sq.value() - n * e.mean * e.mean, 0.0) / (n - 1.0);
    e.std_error = std::sqrt(var / n);
  }
  return e;
}

}  // namespace sysrisk::pathwise
