// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "commands.hpp"
#include "sysrisk/analytic.hpp"
#include "sysrisk/pathwise.hpp"
#include "sysrisk/scenario.hpp"
#include "sysrisk/simulate.hpp"

using namespace sysrisk;
namespace sim = sysrisk::simulate;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

MarketModel constant_model(double a0, const std::vector<double>& alphas, double eps) {
  MarketModel m;
  m.stress_intensity = IntensitySpec::constant(a0);
  for (double a : alphas) m.bank_intensities.push_back(IntensitySpec::constant(a));
  m.epsilon = eps;
  return m;
}

analytic::ConstRates random_rates(std::mt19937_64& gen, std::size_t k) {
  std::uniform_real_distribution<double> a(0.01, 0.3);
  std::uniform_real_distribution<double> a0(0.0, 0.05);
  analytic::ConstRates r{a0(gen), {}};
  for (std::size_t i = 0; i < k; ++i) r.alphas.push_back(a(gen));
  return r;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::string scenario(const std::string& name) { return std::string(SYSRISK_SCENARIO_DIR) + "/" + name; }

const sim::PathGenerator kNoState = sim::ConstantStateGenerator{};

// Direct evaluation of one minus the sum over orders, independent of the library.
double hand_failure(double a0, const std::vector<double>& a, double eps) {
  std::vector<std::size_t> p(a.size());
  std::iota(p.begin(), p.end(), std::size_t{0});
  double total = 0.0;
  do {
    double term = 1.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
      double rest = 0.0;
      for (std::size_t k = i; k < p.size(); ++k) rest += a[p[k]];
      term *= a[p[i]] / (a0 + rest) * std::exp(-eps * (a0 + rest - a[p[i]]));
    }
    total += term;
  } while (std::next_permutation(p.begin(), p.end()));
  return 1.0 - total;
}

Outcome criterion1() {
  Outcome o;
  cli::RunSpec run;
  run.command = "figure1";
  run.replications = 0;
  const auto r = cli::cmd_figure1(run);
  if (r.exit_code != 0) return {false, "figure1 reported a non-increasing series"};
  double worst = 0.0;
  for (std::size_t s = 0; s < 3; ++s) {
    const auto alphas = cli::figure1_alphas(run.seed, s);
    double prev = -1.0;
    for (int g = 0; g < 20; ++g) {
      const double a0 = 5e-6 + 5e-6 * g / 19.0;
      const double p = analytic::failure_prob_dp({a0, alphas}, 1.0);
      if (!(p > prev)) o.pass = false;
      prev = p;
    }
    for (double a0 : {5e-6, 1e-5}) {
      const double lib = analytic::failure_prob_dp({a0, alphas}, 1.0);
      const double hand = hand_failure(a0, alphas, 1.0);
      worst = std::max(worst, std::fabs(lib - hand) / hand);
    }
    for (double a : alphas) o.pass = o.pass && a >= 4e-5 && a <= 6e-5;
  }
  o.pass = o.pass && worst <= 1e-12;
  o.detail = fmt("3 series strictly increasing; worst endpoint rel. error %.2e", worst);
  return o;
}

Outcome criterion2() {
  std::mt19937_64 gen(2024);
  int inside = 0;
  for (int i = 0; i < 50; ++i) {
    const auto r = random_rates(gen, 2 + i % 5);
    const double eps = 0.25 + 0.05 * (i % 20);
    const double exact = analytic::failure_prob_dp(r, eps);
    const auto e = sim::estimate_failure_prob(constant_model(r.alpha0, r.alphas, eps), kNoState, eps,
                                              {1000000, 100 + static_cast<std::uint64_t>(i), 0});
    if (std::fabs(e.mean - exact) <= 4.0 * e.std_error) ++inside;
  }
  return {inside >= 48, fmt("%.0f/50 within 4 SE at n = 1e6", inside)};
}

Outcome criterion3() {
  std::mt19937_64 gen(3);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto r = random_rates(gen, 2 + i % 7);
    const double eps = 0.1 + 0.03 * (i % 50);
    const double perm = analytic::failure_prob_perm(r, eps);
    worst = std::max(worst, std::fabs(perm - analytic::failure_prob_dp(r, eps)) / perm);
  }
  return {worst <= 1e-12, fmt("100 instances, K <= 8, worst rel. difference %.2e", worst)};
}

Outcome criterion4() {
  std::mt19937_64 gen(4);
  int violations = 0;
  double k2_gap = 0.0;
  for (int i = 0; i < 500; ++i) {
    const std::size_t k = 2 + i % 5;
    const auto r = random_rates(gen, k);
    const double eps = 0.05 + 0.01 * (i % 300);
    const double exact = analytic::failure_prob_dp(r, eps);
    const auto b = analytic::failure_bounds(r, eps, analytic::random_permutations(k, i % 5, i));
    if (b.lower() > exact + 1e-10 || exact > b.upper() + 1e-10) ++violations;
    if (k == 2) k2_gap = std::max(k2_gap, std::fabs(b.lower_pairwise - exact));
  }
  return {violations == 0 && k2_gap <= 1e-10,
          fmt("%.0f sandwich violations in 500; K = 2 pairwise gap %.2e", violations, k2_gap)};
}

Outcome criterion5() {
  std::mt19937_64 gen(5);
  double worst = 0.0;
  for (std::size_t k = 2; k <= 4; ++k) {
    for (int t = 0; t < 5; ++t) {
      const auto r = random_rates(gen, k);
      const double eps = 0.2 + 0.4 * t;
      const pathwise::FrozenModel fm(constant_model(r.alpha0, r.alphas, eps));
      worst = std::max(worst, std::fabs(pathwise::failure_prob_path(fm, eps).value - analytic::failure_prob_dp(r, eps)));
    }
  }
  const Scenario s = load_scenario(scenario("piecewise_k3.yaml"));
  const pathwise::FrozenModel fm(s.model);
  const double q = pathwise::failure_prob_path(fm, s.model.epsilon).value;
  const auto mc = sim::estimate_failure_prob(s.model, kNoState, s.model.epsilon, {10000000, 55, 0});
  const double z = std::fabs(q - mc.mean) / mc.std_error;
  return {worst <= 1e-8 && z <= 4.0,
          fmt("constant K = 2..4 max |path - dp| %.2e; piecewise K = 3 |path - MC| = %.2f SE", worst, z)};
}

Outcome criterion6() {
  Outcome o;
  const double eps = 0.7;
  const analytic::ConstRates one{0.02, {0.13}};
  const double k1 = analytic::catastrophic_prob(one, eps);
  const double k1_direct = 1.0 - std::exp(-(0.02 + 0.13) * eps);
  const bool k1_ok = std::fabs(k1 - k1_direct) <= 1e-15;

  const analytic::ConstRates three{0.3, {0.5, 0.7, 0.9}};
  const auto mc = sim::estimate_catastrophic(constant_model(three.alpha0, three.alphas, 1.0), kNoState, 1.0,
                                             {1000000, 66, 0});
  const double z = std::fabs(mc.mean - analytic::catastrophic_prob(three, 1.0)) / mc.std_error;

  const double iid = analytic::catastrophic_prob({0.01, std::vector<double>(200, 0.05)}, 1.0);
  const double iid_gap = std::fabs(iid - (1.0 - std::exp(-0.01)));

  const MarketModel base = constant_model(0.01, {0.02}, 0.5);
  const double limit = 1.0 - std::exp(-0.01 * 0.5);
  double prev_gap = 1.0;
  bool monotone = true;
  double last_gap = 0.0;
  for (std::size_t k : {10, 100, 1000}) {
    const pathwise::FrozenModel fm(sim::with_banks(base, k, true));
    const double gap = std::fabs(pathwise::catastrophic_prob_path(fm, 0.5) - limit);
    monotone = monotone && gap < prev_gap;
    prev_gap = last_gap = gap;
  }
  o.pass = k1_ok && z <= 4.0 && iid_gap <= 1e-3 && monotone;
  o.detail = fmt("K = 1 diff %.1e; K = 3 MC %.2f SE; K = 200 iid gap %.2e", std::fabs(k1 - k1_direct), z, iid_gap) +
             fmt("; destructive gap at K = 1000 %.2e (monotone)", last_gap);
  if (!monotone) o.detail += " NOT MONOTONE";
  return o;
}

Outcome criterion7() {
  std::mt19937_64 gen(7);
  int bad = 0;
  for (int i = 0; i < 100; ++i) {
    const auto r = random_rates(gen, 7);
    const double eps = 0.1 + 0.05 * (i % 40);
    double prev = 0.0;
    for (std::size_t k = 2; k <= 7; ++k) {
      const double p = analytic::failure_prob_dp({r.alpha0, {r.alphas.begin(), r.alphas.begin() + k}}, eps);
      if (!(p > prev)) ++bad;
      prev = p;
    }
  }
  std::size_t first = 0;
  for (std::size_t k = 2; k <= 500 && first == 0; ++k) {
    if (analytic::failure_prob_iid(0.01, 0.05, k, 1.0) > 0.99) first = k;
  }
  return {bad == 0 && first > 0,
          fmt("%.0f non-increasing steps in 100 chains; iid failure exceeds 0.99 first at K = %.0f", bad, first)};
}

Outcome criterion8() {
  const analytic::ConstRates r{0.03, {0.2, 0.4, 0.1}};
  const double ratio = analytic::co_default_ratio(r, 0, 1, 1e-6);
  const double rel = std::fabs(ratio - 0.03) / 0.03;
  const Scenario s = load_scenario(scenario("piecewise_k3.yaml"));
  const pathwise::FrozenModel fm(s.model);
  const double t = 3.0;
  const double eps[] = {1e-6};
  const double rate = pathwise::instantaneous_rate_path(fm, 0, 1, t, eps).front();
  const double target = fm.hazards().stress.rate(t);
  const double prel = std::fabs(rate - target) / target;
  return {rel <= 1e-4 && prel <= 1e-2,
          fmt("constant rel. error %.2e at eps = 1e-6; piecewise rel. error %.2e at t = 3", rel, prel)};
}

MarketModel affine_model(std::size_t banks) {
  MarketModel m;
  m.stress_intensity = IntensitySpec::affine({0.01, 0.005});
  const std::vector<std::vector<double>> b = {{0.05, 0.02}, {0.03, 0.04}, {0.08, 0.01}};
  for (std::size_t i = 0; i < banks; ++i) m.bank_intensities.push_back(IntensitySpec::affine(b[i]));
  m.initial_state = std::vector<double>{1.0, 0.5};
  m.atom_at_zero = true;
  m.epsilon = 0.5;
  return m;
}

Outcome criterion9() {
  StatePath moving;
  moving.grid = {0.0, 2.0, 5.0, 10.0};
  moving.values = {{1.0, 0.5}, {1.3, 0.4}, {1.1, 0.8}, {1.5, 0.6}};
  moving.horizon = 10.0;
  double worst_gap = 0.0;
  double worst_linear = 0.0;
  for (std::size_t k : {2, 3}) {
    const MarketModel m = affine_model(k);
    for (const StatePath& path : {moving, StatePath::constant(*m.initial_state)}) {
      const pathwise::FrozenModel fm(m, path);
      const double survival = 1.0 - pathwise::failure_prob_atom_form(fm, m.epsilon).value;
      for (std::size_t ell = 0; ell < 2; ++ell) {
        const auto grads = pathwise::state_gradients(m, ell);
        const double d = pathwise::comparative_static_path(fm, grads, m.epsilon);
        MarketModel up = m;
        MarketModel dn = m;
        (*up.initial_state)[ell] += 1e-6;
        (*dn.initial_state)[ell] -= 1e-6;
        const double fd = (pathwise::failure_prob_atom_form(pathwise::FrozenModel(up, path), m.epsilon).value -
                           pathwise::failure_prob_atom_form(pathwise::FrozenModel(dn, path), m.epsilon).value) /
                          2e-6;
        worst_gap = std::max(worst_gap, std::fabs(d - fd) / std::max(std::fabs(d), std::fabs(fd)));
        if (path.grid.size() == 1) {
          std::vector<std::vector<double>> betas;
          for (std::size_t i = 0; i <= k; ++i) betas.push_back(std::get<AffineRate>(m.intensity(i).kind()).betas);
          const double lin = analytic::linear_comparative_static(betas, ell, survival);
          worst_linear = std::max(worst_linear, std::fabs(lin - d) / d);
        }
      }
    }
  }
  cli::RunSpec run;
  run.scenario = scenario("affine_k2.yaml");
  run.command = "cstatics";
  const bool cli_ok = cli::run_command(run).exit_code == 0;
  return {worst_gap <= 1e-3 && worst_linear <= 1e-12 && cli_ok,
          fmt("K = 2, 3 worst FD rel. gap %.2e; linear approximation rel. diff %.1e", worst_gap, worst_linear)};
}

Outcome criterion10() {
  struct Case {
    const char* file;
    const char* command;
    bool destructive;
  };
  const Case cases[] = {{"constant_k3.yaml", "report", false}, {"piecewise_k3.yaml", "report", false},
                        {"affine_k2.yaml", "report", false},   {"mean_reverting.yaml", "report", false},
                        {"constant_k2.yaml", "ksweep", false}, {"destructive.yaml", "ksweep", true},
                        {"constant_k3.yaml", "bounds", false}, {"affine_k2.yaml", "cstatics", false},
                        {"", "figure1", false}};
  int same = 0;
  int total = 0;
  for (const auto& c : cases) {
    cli::RunSpec a;
    if (*c.file != '\0') a.scenario = scenario(c.file);
    a.command = c.command;
    a.replications = std::string(c.file) == "mean_reverting.yaml" ? 5000 : 20000;
    a.destructive = c.destructive;
    a.k_max = 8;
    a.grid = 5;
    a.seed = 42;
    a.threads = 1;
    cli::RunSpec b = a;
    b.threads = 4;
    const auto ra = cli::run_command(a);
    const auto rb = cli::run_command(b);
    ++total;
    if (ra.exit_code == 0 && !ra.csv.empty() && ra.csv == rb.csv) ++same;
  }
  return {same == total, fmt("%.0f/%.0f commands byte-identical for 1 and 4 threads", same, total)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double budget_s;
  };
  const Criterion criteria[] = {
      {"figure-1 reproduction", criterion1, 1.0},
      {"closed form vs Monte Carlo", criterion2, 120.0},
      {"permutation sum vs subset recursion", criterion3, 60.0},
      {"bound sandwich", criterion4, 0.0},
      {"quadrature vs closed form and Monte Carlo", criterion5, 300.0},
      {"catastrophic failure", criterion6, 0.0},
      {"monotonicity in K", criterion7, 0.0},
      {"eps -> 0 co-default rate", criterion8, 0.0},
      {"comparative statics", criterion9, 0.0},
      {"reproducibility across threads", criterion10, 0.0},
  };
  int failed = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0.0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += fmt(" (over the %.0f s budget)", c.budget_s);
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %2d %-44s %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
