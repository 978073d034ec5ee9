#include "sysrisk/hazard.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sysrisk {

Hazard::Hazard(double constant_rate) : knots_{0.0}, rates_{constant_rate}, cumulative_{0.0} {
  if (!(constant_rate >= 0.0)) throw std::domain_error("intensity must be nonnegative");
}

Hazard::Hazard(std::vector<double> knots, std::vector<double> rates)
    : knots_(std::move(knots)), rates_(std::move(rates)) {
  if (knots_.empty() || knots_.size() != rates_.size()) {
    throw std::invalid_argument("hazard: knots and rates must be non-empty and of equal length");
  }
  if (knots_.front() != 0.0) throw std::invalid_argument("hazard: first knot must be 0");
  cumulative_.assign(knots_.size(), 0.0);
  for (std::size_t k = 0; k < knots_.size(); ++k) {
    if (!(rates_[k] >= 0.0)) throw std::domain_error("intensity must be nonnegative");
    if (k == 0) continue;
    const double h = knots_[k] - knots_[k - 1];
    if (!(h > 0.0)) throw std::invalid_argument("hazard: knots must be strictly increasing");
    cumulative_[k] = cumulative_[k - 1] + 0.5 * h * (rates_[k - 1] + rates_[k]);
  }
}

Hazard Hazard::compile(const IntensitySpec& spec, const StatePath* path) {
  return std::visit(
      [&](const auto& k) -> Hazard {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, ConstantRate>) {
          return Hazard(k.rate);
        } else if constexpr (std::is_same_v<T, PiecewiseRate>) {
          return Hazard(k.grid, k.values);
        } else if constexpr (std::is_same_v<T, AffineRate>) {
          if (path == nullptr || path->values.empty()) {
            throw std::invalid_argument("state path required for " + spec.describe());
          }
          std::vector<double> rates(path->grid.size());
          for (std::size_t g = 0; g < rates.size(); ++g) rates[g] = spec.evaluate(path->values[g], path->grid[g]);
          return Hazard(path->grid, std::move(rates));
        } else {
          if (!k.base) throw std::invalid_argument("destructive competition needs a base intensity");
          return compile(*k.base, path).shifted_rate(std::log(static_cast<double>(k.banks)));
        }
      },
      spec.kind());
}

std::size_t Hazard::segment(double t) const {
  if (t >= knots_.back()) return knots_.size() - 1;
  return static_cast<std::size_t>(std::upper_bound(knots_.begin(), knots_.end(), t) - knots_.begin()) - 1;
}

double Hazard::partial(std::size_t seg, double u) const {
  if (seg + 1 == knots_.size()) return rates_[seg] * u;
  const double slope = (rates_[seg + 1] - rates_[seg]) / (knots_[seg + 1] - knots_[seg]);
  return u * (rates_[seg] + 0.5 * slope * u);
}

double Hazard::rate(double t) const {
  const std::size_t seg = segment(t);
  if (seg + 1 == knots_.size()) return rates_[seg];
  const double w = (t - knots_[seg]) / (knots_[seg + 1] - knots_[seg]);
  return rates_[seg] + w * (rates_[seg + 1] - rates_[seg]);
}

double Hazard::integral(double t) const {
  if (t <= 0.0) return 0.0;
  if (t == kNever) return rates_.back() > 0.0 ? kNever : cumulative_.back();
  const std::size_t seg = segment(t);
  return cumulative_[seg] + partial(seg, t - knots_[seg]);
}

double Hazard::integral(double t0, double t1) const {
  t0 = std::max(t0, 0.0);
  if (!(t1 > t0)) return 0.0;
  const std::size_t s0 = segment(t0);
  const std::size_t s1 = segment(t1);
  if (s0 == s1) return 0.5 * (t1 - t0) * (rate(t0) + rate(t1));
  double total = 0.5 * (knots_[s0 + 1] - t0) * (rate(t0) + rates_[s0 + 1]);
  total += cumulative_[s1] - cumulative_[s0 + 1];
  total += 0.5 * (t1 - knots_[s1]) * (rates_[s1] + rate(t1));
  return total;
}

double Hazard::inverse(double z) const {
  if (!(z > 0.0)) return 0.0;
  if (z > cumulative_.back()) {
    const double tail = rates_.back();
    if (!(tail > 0.0)) return kNever;
    return knots_.back() + (z - cumulative_.back()) / tail;
  }
  const auto k = static_cast<std::size_t>(std::lower_bound(cumulative_.begin(), cumulative_.end(), z) -
                                          cumulative_.begin());
  const std::size_t seg = k - 1;
  const double h = knots_[seg + 1] - knots_[seg];
  const double a = rates_[seg];
  const double slope = (rates_[seg + 1] - a) / h;
  const double delta = z - cumulative_[seg];
  // Root of a*u + slope*u^2/2 = delta, written to avoid cancellation.
  const double u = 2.0 * delta / (a + std::sqrt(std::max(a * a + 2.0 * slope * delta, 0.0)));
  return knots_[seg] + std::clamp(u, 0.0, h);
}

Hazard Hazard::shifted_rate(double offset) const {
  std::vector<double> r = rates_;
  for (double& x : r) x += offset;
  return Hazard(knots_, std::move(r));
}

double HazardSet::total_atom() const {
  double s = 0.0;
  for (double a : atoms) s += a;
  return s;
}

std::vector<double> initial_intensities(const MarketModel& model, const StatePath* path) {
  std::vector<double> x0;
  if (model.initial_state) {
    x0 = *model.initial_state;
  } else if (path != nullptr && !path->values.empty()) {
    x0 = path->state(0.0);
  }
  std::vector<double> out(model.banks() + 1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = model.intensity(i).evaluate(x0, 0.0);
  return out;
}

HazardSet compile_hazards(const MarketModel& model, const StatePath* path) {
  HazardSet set;
  StatePath fallback;
  if (path == nullptr && model.initial_state && model.needs_state()) {
    fallback = StatePath::constant(*model.initial_state);
    path = &fallback;
  }
  set.stress = Hazard::compile(model.stress_intensity, path);
  set.banks.reserve(model.banks());
  for (const auto& spec : model.bank_intensities) set.banks.push_back(Hazard::compile(spec, path));
  set.atoms = model.atom_at_zero ? initial_intensities(model, path) : std::vector<double>(model.banks() + 1, 0.0);
  return set;
}

}  // namespace sysrisk
