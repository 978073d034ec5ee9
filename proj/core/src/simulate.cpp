#include "sysrisk/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <thread>

#include "sysrisk/rng.hpp"

namespace sysrisk::simulate {

namespace {

// Threshold Z_i uses stream i; coordinate j of a simulated path uses
// stream kPathStream + j with two normals per block.
constexpr std::uint32_t kPathStream = 1u << 20;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

StatePath mean_reverting_path(const MeanRevertingGenerator& g, std::uint64_t seed, std::uint64_t replicate) {
  const std::size_t d = g.x0.size();
  if (d == 0 || g.mean.size() != d || g.speed.size() != d || g.vol.size() != d) {
    throw std::invalid_argument("mean_reverting: x0, mean, speed and vol must share one nonzero dimension");
  }
  if (!(g.horizon > 0.0)) throw std::invalid_argument("mean_reverting: horizon must be positive");
  const double dt_req = g.dt > 0.0 ? g.dt : g.horizon / 1024.0;
  const auto steps = static_cast<std::size_t>(std::ceil(g.horizon / dt_req - 1e-9));
  const double dt = g.horizon / static_cast<double>(steps);
  const double sdt = std::sqrt(dt);
  const CounterRng rng(seed);

  StatePath path;
  path.horizon = g.horizon;
  path.grid.resize(steps + 1);
  path.values.assign(steps + 1, std::vector<double>(d));
  for (std::size_t s = 0; s <= steps; ++s) path.grid[s] = dt * static_cast<double>(s);
  path.grid.back() = g.horizon;
  for (std::size_t j = 0; j < d; ++j) {
    double x = std::max(g.x0[j], 0.0);
    path.values[0][j] = x;
    std::array<double, 2> normals{};
    for (std::size_t s = 0; s < steps; ++s) {
      if (s % 2 == 0) {
        normals = rng.normals(replicate, kPathStream + static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(s / 2));
      }
      x += g.speed[j] * (g.mean[j] - x) * dt + g.vol[j] * sdt * normals[s % 2];
      x = std::max(x, 0.0);
      path.values[s + 1][j] = x;
    }
  }
  return path;
}

unsigned worker_count(unsigned requested, std::uint64_t n) {
  unsigned t = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (n < t) t = static_cast<unsigned>(std::max<std::uint64_t>(n, 1));
  return t;
}

// Runs body(rep, counts) for rep in [0, n) over contiguous blocks of
// replicates and adds the per-block integer counts, so the total does not
// depend on the partition.
template <std::size_t N, class Body>
std::array<std::uint64_t, N> parallel_counts(std::uint64_t n, unsigned threads, const Body& body) {
  const unsigned workers = worker_count(threads, n);
  std::vector<std::array<std::uint64_t, N>> partial(workers, std::array<std::uint64_t, N>{});
  auto run = [&](unsigned w) {
    const std::uint64_t lo = n * w / workers;
    const std::uint64_t hi = n * (w + 1) / workers;
    for (std::uint64_t r = lo; r < hi; ++r) body(r, partial[w]);
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
  }
  std::array<std::uint64_t, N> total{};
  for (const auto& p : partial) {
    for (std::size_t k = 0; k < N; ++k) total[k] += p[k];
  }
  return total;
}

// Hazards for one replicate; compiled once when the generator is static.
class Sampler {
 public:
  Sampler(const MarketModel& model, const PathGenerator& generator, std::uint64_t seed)
      : model_(model), generator_(generator), rng_(seed), seed_(seed) {
    if (is_static(generator_)) {
      const StatePath path = sample_path(generator_, seed_, 0);
      fixed_ = compile_hazards(model_, path.values.empty() ? nullptr : &path);
    }
  }

  DrawnTimes draw(std::uint64_t replicate) const {
    std::vector<double> z(model_.banks() + 1);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = rng_.exponential(replicate, static_cast<std::uint32_t>(i));
    if (fixed_) return times_from_thresholds(*fixed_, z);
    const StatePath path = sample_path(generator_, seed_, replicate);
    return times_from_thresholds(compile_hazards(model_, &path), z);
  }

 private:
  const MarketModel& model_;
  const PathGenerator& generator_;
  CounterRng rng_;
  std::uint64_t seed_;
  std::optional<HazardSet> fixed_;
};

void require_replications(const RunOptions& options) {
  if (options.replications == 0) throw std::invalid_argument("replications must be at least 1");
}

}  // namespace

PathGenerator default_generator(const MarketModel& model, const StatePath* path) {
  if (path != nullptr && !path->values.empty()) return FrozenGenerator{*path};
  return ConstantStateGenerator{model.initial_state.value_or(std::vector<double>{})};
}

bool is_static(const PathGenerator& generator) {
  return !std::holds_alternative<MeanRevertingGenerator>(generator);
}

StatePath sample_path(const PathGenerator& generator, std::uint64_t seed, std::uint64_t replicate) {
  return std::visit(Overloaded{
                        [](const ConstantStateGenerator& g) {
                          return g.x0.empty() ? StatePath{} : StatePath::constant(g.x0);
                        },
                        [](const FrozenGenerator& g) { return g.path; },
                        [&](const MeanRevertingGenerator& g) { return mean_reverting_path(g, seed, replicate); },
                    },
                    generator);
}

DrawnTimes times_from_thresholds(const HazardSet& hazards, std::span<const double> thresholds) {
  const std::size_t k = hazards.size();
  if (thresholds.size() != k + 1) throw std::invalid_argument("thresholds: need K+1 values");
  DrawnTimes out;
  out.etas.resize(k + 1);
  for (std::size_t i = 0; i <= k; ++i) {
    const double atom = hazards.atoms[i];
    const double z = thresholds[i];
    out.etas[i] = z <= atom ? 0.0 : hazards[i].inverse(z - atom);
  }
  out.taus.resize(k);
  for (std::size_t i = 0; i < k; ++i) out.taus[i] = std::min(out.etas[0], out.etas[i + 1]);
  return out;
}

DrawnTimes sample_default_times(const MarketModel& model, const PathGenerator& generator, std::uint64_t seed,
                                std::uint64_t replicate) {
  return Sampler(model, generator, seed).draw(replicate);
}

bool market_failure(std::span<const double> taus, double epsilon) {
  std::vector<double> sorted(taus.begin(), taus.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double a = sorted[i - 1];
    const double b = sorted[i];
    if (b == kNever) break;
    if (b - a < epsilon || a == b) return true;
  }
  return false;
}

Estimate estimate_failure_prob(const MarketModel& model, const PathGenerator& generator, double epsilon,
                               const RunOptions& options) {
  require_replications(options);
  const Sampler sampler(model, generator, options.seed);
  const auto counts = parallel_counts<1>(options.replications, options.threads, [&](std::uint64_t r, auto& c) {
    if (market_failure(sampler.draw(r).taus, epsilon)) ++c[0];
  });
  return frequency_estimate(counts[0], options.replications, options.seed);
}

Estimate estimate_catastrophic(const MarketModel& model, const PathGenerator& generator, double epsilon,
                               const RunOptions& options) {
  require_replications(options);
  const Sampler sampler(model, generator, options.seed);
  const auto counts = parallel_counts<1>(options.replications, options.threads, [&](std::uint64_t r, auto& c) {
    const DrawnTimes t = sampler.draw(r);
    if (*std::max_element(t.taus.begin(), t.taus.end()) <= epsilon) ++c[0];
  });
  return frequency_estimate(counts[0], options.replications, options.seed);
}

Estimate estimate_joint_survival(const MarketModel& model, const PathGenerator& generator,
                                 std::span<const double> times, const RunOptions& options) {
  require_replications(options);
  if (times.size() != model.banks()) throw std::invalid_argument("joint survival: need one time per bank");
  const Sampler sampler(model, generator, options.seed);
  const auto counts = parallel_counts<1>(options.replications, options.threads, [&](std::uint64_t r, auto& c) {
    const DrawnTimes t = sampler.draw(r);
    bool alive = true;
    for (std::size_t i = 0; i < times.size() && alive; ++i) alive = t.taus[i] > times[i];
    if (alive) ++c[0];
  });
  return frequency_estimate(counts[0], options.replications, options.seed);
}

Estimate estimate_instantaneous_rate(const MarketModel& model, const PathGenerator& generator, double t,
                                     double epsilon, const RunOptions& options, std::size_t bank_i,
                                     std::size_t bank_j) {
  require_replications(options);
  if (bank_i == bank_j || bank_i >= model.banks() || bank_j >= model.banks()) {
    throw std::invalid_argument("instantaneous rate: need two distinct bank indices");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("instantaneous rate: epsilon must be positive");
  const Sampler sampler(model, generator, options.seed);
  const auto counts = parallel_counts<2>(options.replications, options.threads, [&](std::uint64_t r, auto& c) {
    const DrawnTimes d = sampler.draw(r);
    const double a = d.taus[bank_i];
    const double b = d.taus[bank_j];
    if (a > t && b > t) {
      ++c[0];
      if (a <= t + epsilon && b <= t + epsilon) ++c[1];
    }
  });
  Estimate e;
  e.replications = options.replications;
  e.seed = options.seed;
  if (counts[0] > 0) {
    const Estimate cond = frequency_estimate(counts[1], counts[0], options.seed);
    e.mean = cond.mean / epsilon;
    e.std_error = cond.std_error / epsilon;
  }
  return e;
}

MarketModel with_banks(const MarketModel& base, std::size_t banks, bool destructive) {
  if (base.bank_intensities.empty()) throw std::invalid_argument("with_banks: base model has no banks");
  MarketModel m = base;
  m.bank_intensities.clear();
  m.bank_intensities.reserve(banks);
  for (std::size_t i = 0; i < banks; ++i) {
    const IntensitySpec& spec = base.bank_intensities[i % base.banks()];
    if (!destructive) {
      m.bank_intensities.push_back(spec);
      continue;
    }
    const auto* d = std::get_if<DestructiveRate>(&spec.kind());
    const IntensitySpec& core = d != nullptr && d->base ? *d->base : spec;
    m.bank_intensities.push_back(IntensitySpec::destructive(core, static_cast<int>(banks)));
  }
  return m;
}

std::vector<SweepRow> sweep_K(const MarketModel& base, std::span<const std::size_t> bank_counts,
                              const PathGenerator& generator, double epsilon, const RunOptions& options,
                              bool destructive) {
  std::vector<SweepRow> rows;
  rows.reserve(bank_counts.size());
  for (const std::size_t k : bank_counts) {
    const MarketModel m = with_banks(base, k, destructive);
    rows.push_back({k, estimate_failure_prob(m, generator, epsilon, options),
                    estimate_catastrophic(m, generator, epsilon, options)});
  }
  return rows;
}

}  // namespace sysrisk::simulate
