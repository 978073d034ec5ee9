#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "sysrisk/analytic.hpp"
#include "sysrisk/pathwise.hpp"
#include "sysrisk/rng.hpp"
#include "sysrisk/scenario.hpp"
#include "sysrisk/simulate.hpp"

namespace sysrisk::cli {

namespace {

using std::optional;

// Bad scenario, flags or backend choice: exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Exact { Analytic, Pathwise, None };

const char* backend_name(Exact e) {
  switch (e) {
    case Exact::Analytic:
      return "analytic";
    case Exact::Pathwise:
      return "pathwise";
    case Exact::None:
      break;
  }
  return "mc";
}

class Csv {
 public:
  explicit Csv(std::initializer_list<const char*> header) {
    bool first = true;
    for (const char* h : header) {
      if (!first) os_ << ',';
      os_ << h;
      first = false;
    }
    os_ << '\n';
  }

  template <class... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
    os_ << '\n';
  }

  std::string str() const { return os_.str(); }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(optional<double> v) { return format_number(v); }
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }

  std::ostringstream os_;
};

struct Loaded {
  Scenario scenario;
  ValidationReport report;

  const StatePath* path() const { return scenario.path ? &*scenario.path : nullptr; }
  pathwise::FrozenModel frozen() const { return pathwise::FrozenModel(scenario.model, scenario.path); }
};

Loaded load(const RunSpec& run) {
  if (run.scenario.empty()) throw InputError("--scenario is required for command '" + run.command + "'");
  Loaded l{load_scenario(run.scenario), {}};
  if (run.epsilon) l.scenario.model.epsilon = *run.epsilon;
  l.report = validate(l.scenario.model, l.path());
  if (!l.report.ok()) {
    std::string msg = "invalid scenario";
    for (const auto& v : l.report.violations) msg += "\n  " + v;
    throw InputError(msg);
  }
  return l;
}

// Rates of a model whose compiled hazards are all constant.
analytic::ConstRates rates_of(const HazardSet& h) {
  analytic::ConstRates r;
  r.alpha0 = h.stress.tail_rate();
  for (const Hazard& b : h.banks) r.alphas.push_back(b.tail_rate());
  return r;
}

bool analytic_feasible(const analytic::ConstRates& r) {
  if (r.banks() <= analytic::kDpLimit) return true;
  return std::all_of(r.alphas.begin(), r.alphas.end(), [&](double a) { return a == r.alphas.front(); });
}

Exact choose(const RunSpec& run, const Loaded& l) {
  const bool analytic_ok = l.report.analytic && analytic_feasible(rates_of(compile_hazards(l.scenario.model, l.path())));
  const bool pathwise_ok = l.report.pathwise;
  if (run.backend == "mc") return Exact::None;
  if (l.scenario.generator && run.backend != "auto") {
    throw InputError("scenario has a stochastic state generator; only the mc backend applies");
  }
  if (run.backend == "analytic") {
    if (!analytic_ok) throw InputError("backend 'analytic' needs all-constant intensities (and K <= 20 or identical rates)");
    return Exact::Analytic;
  }
  if (run.backend == "pathwise") {
    if (!pathwise_ok) throw InputError("backend 'pathwise' needs a resolved state path and K <= 4");
    return Exact::Pathwise;
  }
  if (run.backend != "auto") throw InputError("unknown backend '" + run.backend + "' (auto, analytic, pathwise, mc)");
  // A stochastic state has no single frozen path to evaluate on.
  if (l.scenario.generator) return Exact::None;
  if (analytic_ok) return Exact::Analytic;
  if (pathwise_ok) return Exact::Pathwise;
  return Exact::None;
}

simulate::RunOptions mc_options(const RunSpec& run) { return {run.replications, run.seed, run.threads}; }

struct FailureValue {
  double value;
  double error;
};

double separation_analytic(const analytic::ConstRates& r, double eps) {
  return r.banks() < 2 ? 1.0 : 1.0 - analytic::failure_prob(r, eps);
}

// Market failure probability. With atoms the no-failure event also covers
// exactly one bank defaulting at 0 while the rest survive past eps and stay
// separated, which for constant rates restarts afresh at eps.
FailureValue failure_value(const pathwise::FrozenModel& fm, Exact e, double eps) {
  if (e == Exact::Pathwise) {
    const quad::Result r = pathwise::failure_prob_path(fm, eps);
    return {r.value, r.error};
  }
  const HazardSet& h = fm.hazards();
  const analytic::ConstRates rates = rates_of(h);
  double survival = separation_analytic(rates, eps);
  for (std::size_t i = 0; i < rates.banks(); ++i) {
    const double weight = std::expm1(h.atoms[i + 1]);
    if (weight == 0.0) continue;
    analytic::ConstRates rest{rates.alpha0, {}};
    double mass = rates.alpha0;
    for (std::size_t j = 0; j < rates.banks(); ++j) {
      if (j == i) continue;
      rest.alphas.push_back(rates.alphas[j]);
      mass += rates.alphas[j];
    }
    survival += weight * std::exp(-eps * mass) * separation_analytic(rest, eps);
  }
  return {1.0 - std::exp(-h.total_atom()) * survival, 1e-12};
}

// 1 - exp(-sum atoms) * separation: the expression the comparative static
// differentiates.
double failure_atom_form(const pathwise::FrozenModel& fm, Exact e, double eps) {
  const double scale = std::exp(-fm.hazards().total_atom());
  if (e == Exact::Analytic) return 1.0 - scale * separation_analytic(rates_of(fm.hazards()), eps);
  return pathwise::failure_prob_atom_form(fm, eps).value;
}

std::vector<std::vector<std::size_t>> subset_for(const RunSpec& run, std::size_t banks) {
  if (run.subset_size == 0) return {};
  return analytic::random_permutations(banks, run.subset_size, run.seed);
}

struct Bounds {
  double upper_pairwise;
  double upper_partial;
  optional<double> lower_spacing;
  double lower_pairwise;
  double error;

  double upper() const { return std::min(upper_pairwise, upper_partial); }
  double lower() const { return lower_spacing ? std::max(*lower_spacing, lower_pairwise) : lower_pairwise; }
};

Bounds bounds_value(const pathwise::FrozenModel& fm, Exact e, double eps,
                    const std::vector<std::vector<std::size_t>>& subset) {
  if (e == Exact::Analytic) {
    const auto b = analytic::failure_bounds(rates_of(fm.hazards()), eps, subset);
    return {b.upper_pairwise, b.upper_partial, b.lower_spacing, b.lower_pairwise, 1e-12};
  }
  const auto b = pathwise::bounds_path(fm, eps, subset);
  return {b.upper_pairwise, b.upper_partial, b.lower_spacing, b.lower_pairwise, b.error};
}

bool sandwiched(double lower, double exact, double upper, double slack) {
  return lower <= exact + slack && exact <= upper + slack;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

std::vector<double> figure1_alphas(std::uint64_t seed, std::size_t series, std::size_t banks) {
  const CounterRng rng(seed);
  std::vector<double> out(banks);
  for (std::size_t i = 0; i < banks; ++i) {
    out[i] = 4e-5 + 2e-5 * (1.0 - rng.uniform(series, static_cast<std::uint32_t>(i)));
  }
  return out;
}

std::string format_number(optional<double> value) {
  if (!value) return "";
  if (std::isinf(*value)) return *value > 0 ? "inf" : "-inf";
  if (std::isnan(*value)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.11e", *value);
  return buf;
}

CommandResult cmd_report(const RunSpec& run) {
  const Loaded l = load(run);
  const MarketModel& m = l.scenario.model;
  const double eps = m.epsilon;
  const Exact e = choose(run, l);
  const auto gen = l.scenario.path_generator();
  const auto opts = mc_options(run);
  const bool mc = run.replications > 0;
  const std::string exact_label = backend_name(e);
  const bool atoms = m.atom_at_zero;

  Csv csv({"quantity", "exact", "lower", "upper", "mc_mean", "mc_se", "n", "seed", "backend"});
  CommandResult out;
  auto emit = [&](const std::string& q, optional<double> exact, optional<double> lo, optional<double> hi,
                  optional<Estimate> est) {
    csv.row(q, exact, lo, hi, est ? optional<double>(est->mean) : std::nullopt,
            est ? optional<double>(est->std_error) : std::nullopt, est ? std::to_string(est->replications) : "",
            est ? std::to_string(est->seed) : "", exact ? exact_label : std::string("mc"));
  };

  optional<pathwise::FrozenModel> fm;
  if (e != Exact::None) fm.emplace(l.frozen());

  // Market failure with bounds.
  {
    optional<double> exact, lo, hi;
    double slack = 1e-10;
    if (fm) {
      const FailureValue f = failure_value(*fm, e, eps);
      exact = f.value;
      slack += f.error;
      if (!atoms) {
        const Bounds b = bounds_value(*fm, e, eps, subset_for(run, m.banks()));
        lo = b.lower();
        hi = b.upper();
        slack += b.error;
      }
    }
    const optional<Estimate> est = mc ? optional<Estimate>(simulate::estimate_failure_prob(m, gen, eps, opts))
                                      : std::nullopt;
    ProbabilityReport rep{Quantity::MarketFailure, exact, hi, lo, est, exact_label};
    if (!rep.consistent(slack)) {
      out.exit_code = 1;
      out.diagnostics.push_back("market_failure: bounds do not enclose the exact value");
    }
    emit(to_string(Quantity::MarketFailure), exact, lo, hi, est);
  }

  // Catastrophic failure.
  {
    optional<double> exact;
    if (fm) {
      exact = e == Exact::Analytic && !atoms ? analytic::catastrophic_prob(rates_of(fm->hazards()), eps)
                                             : pathwise::catastrophic_prob_path(*fm, eps);
    }
    const optional<Estimate> est = mc ? optional<Estimate>(simulate::estimate_catastrophic(m, gen, eps, opts))
                                      : std::nullopt;
    emit(to_string(Quantity::Catastrophic), exact, std::nullopt, std::nullopt, est);
  }

  // Joint survival at t_i = i * eps.
  {
    std::vector<double> t(m.banks());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i + 1) * eps;
    optional<double> exact;
    if (fm) {
      exact = e == Exact::Analytic && !atoms ? analytic::joint_survival(rates_of(fm->hazards()), t)
                                             : pathwise::joint_survival_path(*fm, t);
    }
    const optional<Estimate> est = mc ? optional<Estimate>(simulate::estimate_joint_survival(m, gen, t, opts))
                                      : std::nullopt;
    emit(to_string(Quantity::JointSurvival), exact, std::nullopt, std::nullopt, est);
  }

  // Co-default ratio of banks 1 and 2 over the window (eps, eps + eps/100].
  if (eps > 0.0) {
    const double w = eps / 100.0;
    optional<double> exact;
    if (fm) {
      const double win[] = {w};
      exact = pathwise::instantaneous_rate_path(*fm, 0, 1, eps, win).front();
    }
    const optional<Estimate> est =
        mc ? optional<Estimate>(simulate::estimate_instantaneous_rate(m, gen, eps, w, opts)) : std::nullopt;
    emit(to_string(Quantity::InstantRate), exact, std::nullopt, std::nullopt, est);
  }

  // d(failure)/d x_ell(0) for atom models with a state.
  if (fm && atoms && m.initial_state) {
    const double survival = 1.0 - failure_atom_form(*fm, e, eps);
    for (std::size_t ell = 0; ell < m.initial_state->size(); ++ell) {
      const auto grads = pathwise::state_gradients(m, ell);
      double g = 0.0;
      for (double v : grads) g += v;
      emit(to_string(Quantity::ComparativeStatic) + "_x" + std::to_string(ell), g * survival, std::nullopt,
           std::nullopt, std::nullopt);
    }
  }

  out.csv = csv.str();
  return out;
}

CommandResult cmd_figure1(const RunSpec& run) {
  constexpr std::size_t kBanks = 3;
  constexpr std::size_t kSeries = 3;
  const double eps = run.epsilon.value_or(1.0);
  const std::size_t grid = std::max<std::size_t>(run.grid, 2);
  const double lo = 5e-6;
  const double hi = 1e-5;

  Csv csv({"series", "alpha1", "alpha2", "alpha3", "alpha0", "failure_prob", "mc_mean", "mc_se"});
  CommandResult out;
  for (std::size_t s = 0; s < kSeries; ++s) {
    const std::vector<double> alphas = figure1_alphas(run.seed, s, kBanks);
    double previous = -1.0;
    for (std::size_t g = 0; g < grid; ++g) {
      const double a0 = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid - 1);
      const analytic::ConstRates rates{a0, alphas};
      const double p = analytic::failure_prob_dp(rates, eps);
      if (!(p > previous)) {
        out.exit_code = 1;
        out.diagnostics.push_back("figure1: series " + std::to_string(s) + " is not increasing at alpha0 = " +
                                  format_number(a0));
      }
      previous = p;
      optional<Estimate> est;
      if (run.replications > 0) {
        MarketModel m;
        for (double a : alphas) m.bank_intensities.push_back(IntensitySpec::constant(a));
        m.stress_intensity = IntensitySpec::constant(a0);
        m.epsilon = eps;
        const simulate::RunOptions opts{run.replications, run.seed + 1000 * s + g, run.threads};
        est = simulate::estimate_failure_prob(m, simulate::ConstantStateGenerator{}, eps, opts);
      }
      csv.row(s, alphas[0], alphas[1], alphas[2], a0, p, est ? optional<double>(est->mean) : std::nullopt,
              est ? optional<double>(est->std_error) : std::nullopt);
    }
  }
  out.csv = csv.str();
  return out;
}

CommandResult cmd_ksweep(const RunSpec& run) {
  const Loaded l = load(run);
  const MarketModel& base = l.scenario.model;
  const double eps = base.epsilon;
  if (run.k_min < 1 || run.k_max < run.k_min) throw InputError("--k-min/--k-max must satisfy 1 <= k-min <= k-max");
  const auto gen = l.scenario.path_generator();
  const auto opts = mc_options(run);

  Csv csv({"K", "failure", "source", "lower", "upper", "mc_mean", "mc_se", "catastrophic", "catastrophic_limit"});
  CommandResult out;
  for (std::size_t k = run.k_min; k <= run.k_max; ++k) {
    const MarketModel m = simulate::with_banks(base, k, run.destructive);
    const ValidationReport rep = validate(m, l.path());
    optional<double> exact, lo, hi, cat, limit;
    std::string source = "mc";
    optional<Estimate> est;
    const bool resolvable = !m.needs_state() || l.path() != nullptr || m.initial_state;
    if (resolvable) {
      const pathwise::FrozenModel fm(m, l.scenario.path);
      cat = pathwise::catastrophic_prob_path(fm, eps);
      limit = -std::expm1(-fm.hazards().atoms[0] - fm.hazards().stress.integral(eps));
      if (k >= 2 && run.backend != "mc") {
        const bool constant = fm.constant_hazards();
        if (constant && run.backend != "pathwise" && analytic_feasible(rates_of(fm.hazards()))) {
          source = "analytic";
        } else if (rep.pathwise && run.backend != "analytic") {
          source = "pathwise";
        }
        if (source != "mc") {
          const Exact e = source == "analytic" ? Exact::Analytic : Exact::Pathwise;
          const FailureValue f = failure_value(fm, e, eps);
          exact = f.value;
          double slack = 1e-10 + f.error;
          if (!m.atom_at_zero) {
            const Bounds b = bounds_value(fm, e, eps, subset_for(run, k));
            lo = b.lower();
            hi = b.upper();
            slack += b.error;
            if (!sandwiched(*lo, *exact, *hi, slack)) {
              out.exit_code = 1;
              out.diagnostics.push_back("ksweep: bounds do not enclose the exact value at K = " + std::to_string(k));
            }
          }
        }
      }
    }
    if (k >= 2 && (source == "mc" || run.replications > 0) && run.replications > 0) {
      est = simulate::estimate_failure_prob(m, gen, eps, opts);
    }
    const optional<double> failure = exact ? exact : (est ? optional<double>(est->mean) : std::nullopt);
    csv.row(k, failure, failure ? source : std::string(""), lo, hi,
            est ? optional<double>(est->mean) : std::nullopt, est ? optional<double>(est->std_error) : std::nullopt,
            cat, limit);
  }
  out.csv = csv.str();
  return out;
}

CommandResult cmd_bounds(const RunSpec& run) {
  const Loaded l = load(run);
  const MarketModel& m = l.scenario.model;
  if (m.atom_at_zero) throw InputError("bounds are not defined for the atom-at-zero model");
  const Exact e = choose(run, l);
  if (e == Exact::None) throw InputError("bounds need the analytic or pathwise backend");
  const double eps = m.epsilon;
  const pathwise::FrozenModel fm = l.frozen();
  const Bounds b = bounds_value(fm, e, eps, subset_for(run, m.banks()));
  optional<double> exact;
  double slack = 1e-10 + b.error;
  if (e == Exact::Analytic || m.banks() <= pathwise::kQuadLimit) {
    const FailureValue f = failure_value(fm, e, eps);
    exact = f.value;
    slack += f.error;
  }

  Csv csv({"quantity", "raw", "clamped", "backend"});
  const std::string name = backend_name(e);
  auto row = [&](const char* q, optional<double> v) {
    csv.row(q, v, v ? optional<double>(clamp01(*v)) : std::nullopt, name);
  };
  row("upper_pairwise", b.upper_pairwise);
  row("upper_partial", b.upper_partial);
  row("lower_spacing", b.lower_spacing);
  row("lower_pairwise", b.lower_pairwise);
  row("upper", b.upper());
  row("lower", b.lower());
  row("exact", exact);

  CommandResult out;
  if (exact && !sandwiched(b.lower(), *exact, b.upper(), slack)) {
    out.exit_code = 1;
    out.diagnostics.push_back("bounds: lower <= exact <= upper violated");
  }
  out.csv = csv.str();
  return out;
}

CommandResult cmd_cstatics(const RunSpec& run) {
  Loaded l = load(run);
  MarketModel m = l.scenario.model;
  if (!m.initial_state || m.initial_state->empty()) throw InputError("cstatics needs initial_state in the scenario");
  m.atom_at_zero = true;
  const double eps = m.epsilon;
  const double h = 1e-6;
  // The path stays fixed while x(0) moves.
  const StatePath path = l.scenario.path ? *l.scenario.path : StatePath::constant(*m.initial_state);

  const pathwise::FrozenModel fm(m, path);
  Exact e = Exact::Pathwise;
  if (run.backend == "mc") throw InputError("cstatics needs the analytic or pathwise backend");
  if (fm.constant_hazards() && run.backend != "pathwise" && analytic_feasible(rates_of(fm.hazards()))) {
    e = Exact::Analytic;
  } else if (m.banks() > pathwise::kQuadLimit) {
    throw InputError("cstatics with non-constant intensities supports K <= 4");
  }
  const double base_failure = failure_atom_form(fm, e, eps);

  // Linear approximation needs every intensity affine in the state.
  std::vector<std::vector<double>> betas;
  bool linear = true;
  for (std::size_t i = 0; i <= m.banks() && linear; ++i) {
    if (const auto* a = std::get_if<AffineRate>(&m.intensity(i).kind())) {
      betas.push_back(a->betas);
    } else {
      linear = false;
    }
  }

  Csv csv({"coordinate", "derivative", "finite_difference", "rel_gap", "linear_approx", "backend"});
  CommandResult out;
  for (std::size_t ell = 0; ell < m.initial_state->size(); ++ell) {
    const auto grads = pathwise::state_gradients(m, ell);
    double g = 0.0;
    bool nonneg = true;
    for (double v : grads) {
      g += v;
      nonneg = nonneg && v >= 0.0;
    }
    const double survival = 1.0 - base_failure;
    const double deriv = g * survival;

    MarketModel up = m;
    MarketModel dn = m;
    (*up.initial_state)[ell] += h;
    (*dn.initial_state)[ell] -= h;
    const double p_up = failure_atom_form(pathwise::FrozenModel(up, path), e, eps);
    const double p_dn = failure_atom_form(pathwise::FrozenModel(dn, path), e, eps);
    const double fd = (p_up - p_dn) / (2.0 * h);
    const double scale = std::max(std::fabs(deriv), std::fabs(fd));
    const double gap = scale > 1e-14 ? std::fabs(deriv - fd) / scale : 0.0;
    optional<double> lin;
    if (linear) lin = analytic::linear_comparative_static(betas, ell, std::clamp(survival, 0.0, 1.0));

    if (gap > 1e-3) {
      out.exit_code = 1;
      out.diagnostics.push_back("cstatics: coordinate " + std::to_string(ell) + " relative gap " + format_number(gap));
    }
    if (nonneg && deriv < 0.0) {
      out.exit_code = 1;
      out.diagnostics.push_back("cstatics: negative derivative with nonnegative gradients");
    }
    csv.row(ell, deriv, fd, gap, lin, backend_name(e));
  }
  out.csv = csv.str();
  return out;
}

CommandResult cmd_validate(const RunSpec& run) {
  if (run.scenario.empty()) throw InputError("--scenario is required for command 'validate'");
  Scenario s = load_scenario(run.scenario);
  if (run.epsilon) s.model.epsilon = *run.epsilon;
  const ValidationReport rep = validate(s.model, s.path ? &*s.path : nullptr);
  Csv csv({"item", "value"});
  for (const auto& v : rep.violations) csv.row("violation", v);
  for (const auto& w : rep.warnings) csv.row("warning", w);
  csv.row("analytic", rep.analytic ? "yes" : "no");
  csv.row("pathwise", rep.pathwise ? "yes" : "no");
  csv.row("simulate", rep.simulate ? "yes" : "no");
  CommandResult out;
  out.csv = csv.str();
  out.exit_code = rep.ok() ? 0 : 1;
  for (const auto& v : rep.violations) out.diagnostics.push_back(v);
  return out;
}

CommandResult run_command(const RunSpec& run) {
  try {
    if (run.command == "report") return cmd_report(run);
    if (run.command == "figure1") return cmd_figure1(run);
    if (run.command == "ksweep") return cmd_ksweep(run);
    if (run.command == "bounds") return cmd_bounds(run);
    if (run.command == "cstatics") return cmd_cstatics(run);
    if (run.command == "validate") return cmd_validate(run);
    throw InputError("unknown command '" + run.command + "' (report, figure1, ksweep, bounds, cstatics, validate)");
  } catch (const InputError& e) {
    return {"", 2, {e.what()}};
  } catch (const ScenarioError& e) {
    return {"", 2, {e.what()}};
  } catch (const pathwise::QuadratureError& e) {
    return {"", 1, {e.what()}};
  } catch (const std::exception& e) {
    return {"", 2, {e.what()}};
  }
}

}  // namespace sysrisk::cli
