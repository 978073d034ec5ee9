#include "sysrisk/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sysrisk/hazard.hpp"

namespace sysrisk {

namespace {

double interpolate(std::span<const double> grid, std::span<const double> values, double t) {
  if (grid.size() == 1 || t <= grid.front()) return values.front();
  if (t >= grid.back()) return values.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), t) - grid.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - grid[lo]) / (grid[hi] - grid[lo]);
  return values[lo] + w * (values[hi] - values[lo]);
}

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (!(v[k] > v[k - 1])) return false;
  }
  return true;
}

bool finite_nonnegative(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

double StatePath::coordinate(std::size_t j, double t) const {
  if (values.empty()) throw std::invalid_argument("empty state path");
  if (grid.size() == 1 || t <= grid.front()) return values.front().at(j);
  if (t >= grid.back()) return values.back().at(j);
  const auto hi = static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), t) - grid.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - grid[lo]) / (grid[hi] - grid[lo]);
  return values[lo].at(j) + w * (values[hi].at(j) - values[lo].at(j));
}

std::vector<double> StatePath::state(double t) const {
  std::vector<double> x(dimension());
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = coordinate(j, t);
  return x;
}

StatePath StatePath::constant(std::vector<double> x0) {
  StatePath path;
  path.grid = {0.0};
  path.values = {std::move(x0)};
  path.horizon = 0.0;
  return path;
}

std::vector<std::string> check_path(const StatePath& path) {
  std::vector<std::string> out;
  if (path.grid.empty()) {
    out.emplace_back("state_path: grid must not be empty");
    return out;
  }
  if (path.grid.front() != 0.0) out.emplace_back("state_path: grid must start at 0");
  if (!strictly_increasing(path.grid)) out.emplace_back("state_path: grid must be strictly increasing");
  if (path.values.size() != path.grid.size()) {
    out.emplace_back("state_path: values must have one row per grid point");
  }
  if (path.dimension() == 0) out.emplace_back("state_path: state dimension d must be >= 1");
  for (const auto& row : path.values) {
    if (row.size() != path.dimension()) {
      out.emplace_back("state_path: all value rows must have the same dimension");
      break;
    }
  }
  if (path.grid.back() > path.horizon) out.emplace_back("state_path: grid points must not exceed the horizon");
  return out;
}

IntensitySpec IntensitySpec::constant(double rate) { return IntensitySpec(ConstantRate{rate}); }

IntensitySpec IntensitySpec::piecewise(std::vector<double> grid, std::vector<double> values) {
  return IntensitySpec(PiecewiseRate{std::move(grid), std::move(values)});
}

IntensitySpec IntensitySpec::affine(std::vector<double> betas) { return IntensitySpec(AffineRate{std::move(betas)}); }

IntensitySpec IntensitySpec::destructive(IntensitySpec base, int banks) {
  return IntensitySpec(DestructiveRate{std::make_shared<const IntensitySpec>(std::move(base)), banks});
}

bool IntensitySpec::is_constant() const {
  if (std::holds_alternative<ConstantRate>(kind_)) return true;
  if (const auto* d = std::get_if<DestructiveRate>(&kind_)) return d->base && d->base->is_constant();
  return false;
}

bool IntensitySpec::needs_state() const {
  if (std::holds_alternative<AffineRate>(kind_)) return true;
  if (const auto* d = std::get_if<DestructiveRate>(&kind_)) return d->base && d->base->needs_state();
  return false;
}

double IntensitySpec::constant_rate() const {
  if (const auto* c = std::get_if<ConstantRate>(&kind_)) return c->rate;
  if (const auto* d = std::get_if<DestructiveRate>(&kind_); d && d->base && d->base->is_constant()) {
    return std::log(static_cast<double>(d->banks)) + d->base->constant_rate();
  }
  throw std::logic_error("intensity is not constant: " + describe());
}

double IntensitySpec::evaluate(std::span<const double> x, double t) const {
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, ConstantRate>) {
          return k.rate;
        } else if constexpr (std::is_same_v<T, PiecewiseRate>) {
          return interpolate(k.grid, k.values, t);
        } else if constexpr (std::is_same_v<T, AffineRate>) {
          if (x.size() != k.betas.size()) throw std::invalid_argument("state dimension does not match betas");
          double s = 0.0;
          for (std::size_t j = 0; j < x.size(); ++j) s += k.betas[j] * x[j];
          return s;
        } else {
          return std::log(static_cast<double>(k.banks)) + k.base->evaluate(x, t);
        }
      },
      kind_);
}

double IntensitySpec::state_derivative(std::span<const double> x, std::size_t ell) const {
  if (const auto* a = std::get_if<AffineRate>(&kind_)) {
    if (ell >= a->betas.size()) throw std::out_of_range("state coordinate out of range");
    return a->betas[ell];
  }
  if (const auto* d = std::get_if<DestructiveRate>(&kind_)) return d->base->state_derivative(x, ell);
  return 0.0;
}

std::string IntensitySpec::describe() const {
  std::ostringstream os;
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, ConstantRate>) {
          os << "constant(" << k.rate << ")";
        } else if constexpr (std::is_same_v<T, PiecewiseRate>) {
          os << "piecewise(" << k.grid.size() << " points)";
        } else if constexpr (std::is_same_v<T, AffineRate>) {
          os << "affine(d=" << k.betas.size() << ")";
        } else {
          os << "destructive(K=" << k.banks << ", " << (k.base ? k.base->describe() : "null") << ")";
        }
      },
      kind_);
  return os.str();
}

std::vector<std::string> check_intensity(const IntensitySpec& spec, const StatePath* path, const std::string& where) {
  std::vector<std::string> out;
  const auto add = [&](const std::string& msg) { out.push_back(where + ": " + msg); };
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, ConstantRate>) {
          if (!finite_nonnegative(k.rate)) add("intensity must be nonnegative");
        } else if constexpr (std::is_same_v<T, PiecewiseRate>) {
          if (k.grid.empty() || k.grid.size() != k.values.size()) {
            add("piecewise grid and values must be non-empty and of equal length");
            return;
          }
          if (k.grid.front() != 0.0) add("piecewise grid must start at 0");
          if (!strictly_increasing(k.grid)) add("piecewise grid must be strictly increasing");
          if (!std::all_of(k.values.begin(), k.values.end(), finite_nonnegative)) {
            add("intensity must be nonnegative");
          }
        } else if constexpr (std::is_same_v<T, AffineRate>) {
          if (k.betas.empty()) add("affine betas must not be empty");
          if (!std::all_of(k.betas.begin(), k.betas.end(), finite_nonnegative)) {
            add("intensity must be nonnegative");
          }
          if (path != nullptr && !path->values.empty()) {
            if (path->dimension() != k.betas.size()) {
              add("affine betas length must equal the state dimension d");
            } else {
              for (const auto& row : path->values) {
                if (spec.evaluate(row, 0.0) < 0.0) {
                  add("intensity must be nonnegative along the state path");
                  break;
                }
              }
            }
          }
        } else {
          if (k.banks < 1) add("destructive competition needs K >= 1");
          if (!k.base) {
            add("destructive competition needs a base intensity");
          } else {
            auto inner = check_intensity(*k.base, path, where + ".base");
            out.insert(out.end(), inner.begin(), inner.end());
          }
        }
      },
      spec.kind());
  return out;
}

double integrated_intensity(const IntensitySpec& spec, const StatePath* path, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("integrated_intensity: t must be >= 0");
  if (spec.needs_state() && path == nullptr) {
    throw std::invalid_argument("integrated_intensity: state path required for " + spec.describe());
  }
  return Hazard::compile(spec, path).integral(t);
}

double inverse_integrated_intensity(const IntensitySpec& spec, const StatePath* path, double z) {
  if (!(z >= 0.0)) throw std::invalid_argument("inverse_integrated_intensity: z must be >= 0");
  if (spec.needs_state() && path == nullptr) {
    throw std::invalid_argument("inverse_integrated_intensity: state path required for " + spec.describe());
  }
  return Hazard::compile(spec, path).inverse(z);
}

const IntensitySpec& MarketModel::intensity(std::size_t index) const {
  return index == 0 ? stress_intensity : bank_intensities.at(index - 1);
}

bool MarketModel::all_constant() const {
  return stress_intensity.is_constant() &&
         std::all_of(bank_intensities.begin(), bank_intensities.end(),
                     [](const IntensitySpec& s) { return s.is_constant(); });
}

bool MarketModel::needs_state() const {
  return stress_intensity.needs_state() ||
         std::any_of(bank_intensities.begin(), bank_intensities.end(),
                     [](const IntensitySpec& s) { return s.needs_state(); });
}

bool ValidationReport::eligible(Backend backend) const {
  switch (backend) {
    case Backend::Analytic: return analytic;
    case Backend::Pathwise: return pathwise;
    case Backend::Simulate: return simulate;
  }
  return false;
}

ValidationReport validate(const MarketModel& model, const StatePath* path) {
  ValidationReport report;
  auto& v = report.violations;
  if (model.banks() < 2) v.emplace_back("banks: K ≥ 2 required for market failure");
  if (!(model.epsilon > 0.0) || !std::isfinite(model.epsilon)) v.emplace_back("epsilon: must be positive");

  bool structural = true;
  if (path != nullptr) {
    auto pv = check_path(*path);
    structural = pv.empty();
    v.insert(v.end(), pv.begin(), pv.end());
  }
  const StatePath* usable_path = structural ? path : nullptr;
  for (std::size_t i = 0; i <= model.banks(); ++i) {
    const std::string where = i == 0 ? "stress" : "banks[" + std::to_string(i - 1) + "]";
    auto iv = check_intensity(model.intensity(i), usable_path, where);
    if (!iv.empty()) structural = false;
    v.insert(v.end(), iv.begin(), iv.end());
  }

  const bool state_resolved = !model.needs_state() || path != nullptr || model.initial_state.has_value();
  if (!state_resolved) {
    v.emplace_back("state_path: state-dependent intensity requires a state_path or initial_state");
    structural = false;
  }
  if (model.initial_state) {
    if (path != nullptr && path->dimension() != 0 && model.initial_state->size() != path->dimension()) {
      v.emplace_back("initial_state: dimension must equal the state path dimension");
      structural = false;
    }
    for (std::size_t i = 0; i <= model.banks() && structural; ++i) {
      if (const auto* a = std::get_if<AffineRate>(&model.intensity(i).kind());
          a != nullptr && a->betas.size() != model.initial_state->size()) {
        v.emplace_back("initial_state: dimension must equal the affine betas length");
        structural = false;
      }
    }
  }
  if (model.atom_at_zero && model.needs_state() && !model.initial_state) {
    v.emplace_back("atom_at_zero: requires initial_state");
    structural = false;
  }

  if (structural) {
    const StatePath fallback = model.initial_state ? StatePath::constant(*model.initial_state) : StatePath{};
    const StatePath* p = path != nullptr ? path : (model.initial_state ? &fallback : nullptr);
    for (std::size_t i = 0; i <= model.banks(); ++i) {
      const Hazard h = Hazard::compile(model.intensity(i), p);
      if (!(h.tail_rate() > 0.0)) {
        report.warnings.push_back((i == 0 ? std::string("stress") : "banks[" + std::to_string(i - 1) + "]") +
                                  ": frozen tail intensity is 0, so A(s) stays bounded and the default time may "
                                  "be infinite");
      }
    }
  }

  report.simulate = structural;
  report.analytic = structural && model.all_constant();
  report.pathwise = structural && state_resolved && model.banks() <= 4;
  return report;
}

Estimate frequency_estimate(std::uint64_t hits, std::uint64_t trials, std::uint64_t seed) {
  Estimate e;
  e.replications = trials;
  e.seed = seed;
  if (trials == 0) return e;
  const double n = static_cast<double>(trials);
  e.mean = static_cast<double>(hits) / n;
  if (trials > 1) {
    const double var = e.mean * (1.0 - e.mean) * n / (n - 1.0);
    e.std_error = std::sqrt(std::max(var, 0.0) / n);
  }
  return e;
}

std::string to_string(Quantity quantity) {
  switch (quantity) {
    case Quantity::MarketFailure: return "market_failure";
    case Quantity::Catastrophic: return "catastrophic";
    case Quantity::JointSurvival: return "joint_survival";
    case Quantity::InstantRate: return "instant_rate";
    case Quantity::ComparativeStatic: return "comparative_static";
  }
  return "unknown";
}

bool ProbabilityReport::consistent(double slack) const {
  if (!exact || !lower_bound || !upper_bound) return true;
  return *lower_bound <= *exact + slack && *exact <= *upper_bound + slack;
}

}  // namespace sysrisk
