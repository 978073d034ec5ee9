#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "sysrisk/analytic.hpp"

using namespace sysrisk;
using analytic::ConstRates;

namespace {

// Independent oracle: enumerate orders and multiply the factors directly.
double brute_force_failure(const ConstRates& r, double eps) {
  std::vector<std::size_t> p(r.banks());
  std::iota(p.begin(), p.end(), std::size_t{0});
  long double total = 0.0L;
  do {
    long double term = 1.0L;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
      long double rest = 0.0L;
      for (std::size_t k = i; k < p.size(); ++k) rest += r.alphas[p[k]];
      const long double after = rest - r.alphas[p[i]];
      term *= r.alphas[p[i]] / (r.alpha0 + rest) * std::exp(-static_cast<long double>(eps) * (r.alpha0 + after));
    }
    total += term;
  } while (std::next_permutation(p.begin(), p.end()));
  return static_cast<double>(1.0L - total);
}

ConstRates random_rates(std::mt19937_64& gen, std::size_t k) {
  std::uniform_real_distribution<double> a(0.01, 0.3);
  std::uniform_real_distribution<double> a0(0.0, 0.05);
  ConstRates r{a0(gen), {}};
  for (std::size_t i = 0; i < k; ++i) r.alphas.push_back(a(gen));
  return r;
}

// Composite Simpson on [0, T].
template <class F>
double simpson(F f, double upper, int n = 200000) {
  const double h = upper / n;
  double s = f(0.0) + f(upper);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_SUITE("analytic") {
  TEST_CASE("marginal and joint survival examples") {
    const ConstRates r{0.01, {0.05, 0.05}};
    CHECK(analytic::marginal_survival(r, 0, 0.0) == 1.0);
    CHECK(analytic::marginal_survival(r, 0, 10.0) == doctest::Approx(std::exp(-0.6)).epsilon(1e-15));
    CHECK(analytic::marginal_survival(ConstRates{0.0, {0.05, 0.1}}, 0, 20.0) == doctest::Approx(std::exp(-1.0)));
    CHECK_THROWS(analytic::marginal_survival(r, 2, 1.0));
    const double zeros[] = {0.0, 0.0};
    CHECK(analytic::joint_survival(r, zeros) == 1.0);
    const double t12[] = {1.0, 2.0};
    CHECK(analytic::joint_survival(r, t12) == doctest::Approx(std::exp(-0.17)).epsilon(1e-15));
    const double ss[] = {3.0, 3.0};
    CHECK(analytic::joint_survival(r, ss) == doctest::Approx(std::exp(-0.11 * 3.0)).epsilon(1e-15));
    const double one[] = {1.0};
    CHECK_THROWS(analytic::joint_survival(r, one));
  }

  TEST_CASE("joint survival symmetric under simultaneous permutation") {
    const ConstRates r{0.02, {0.1, 0.2, 0.3}};
    const ConstRates s{0.02, {0.3, 0.1, 0.2}};
    const double t[] = {1.0, 2.0, 0.5};
    const double u[] = {0.5, 1.0, 2.0};
    CHECK(analytic::joint_survival(r, t) == doctest::Approx(analytic::joint_survival(s, u)).epsilon(1e-15));
  }

  TEST_CASE("K = 2 failure probability examples") {
    const double a0 = 0.03, a1 = 0.05, a2 = 0.07;
    CHECK(analytic::failure_prob_perm(ConstRates{a0, {a1, a2}}, 0.0) ==
          doctest::Approx(a0 / (a0 + a1 + a2)).epsilon(1e-14));
    const double alpha = 0.2, eps = 0.7;
    CHECK(analytic::failure_prob_perm(ConstRates{0.0, {alpha, alpha}}, eps) ==
          doctest::Approx(1.0 - std::exp(-eps * alpha)).epsilon(1e-14));
    const double expected = 1.0 - 2.0 * (0.05 / 0.11) * std::exp(-0.06);
    CHECK(expected == doctest::Approx(0.143849).epsilon(1e-5));
    for (auto f : {analytic::failure_prob_perm, analytic::failure_prob_dp, analytic::failure_prob}) {
      CHECK(f(ConstRates{0.01, {0.05, 0.05}}, 1.0) == doctest::Approx(expected).epsilon(1e-14));
    }
    CHECK(analytic::failure_prob_iid(0.01, 0.05, 2, 1.0) == doctest::Approx(expected).epsilon(1e-14));
  }

  TEST_CASE("permutation sum and subset recursion agree with brute force") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t k = 2 + trial % 7;
      const ConstRates r = random_rates(gen, k);
      const double eps = 0.1 + 2.0 * (trial % 10) / 10.0;
      const double oracle = brute_force_failure(r, eps);
      const double perm = analytic::failure_prob_perm(r, eps);
      const double dp = analytic::failure_prob_dp(r, eps);
      CHECK(std::fabs(perm - oracle) <= 1e-12 * oracle);
      CHECK(std::fabs(dp - perm) <= 1e-12 * perm);
    }
  }

  TEST_CASE("limits: perm_limit and dp_limit") {
    CHECK_THROWS(analytic::failure_prob_perm(ConstRates{0.01, std::vector<double>(10, 0.1)}, 1.0));
    CHECK_THROWS(analytic::failure_prob_dp(ConstRates{0.01, std::vector<double>(21, 0.1)}, 1.0));
    std::vector<double> mixed(21, 0.1);
    mixed[3] = 0.2;
    CHECK_THROWS(analytic::failure_prob(ConstRates{0.01, mixed}, 1.0));
    CHECK(analytic::failure_prob(ConstRates{0.01, std::vector<double>(40, 0.1)}, 1.0) ==
          doctest::Approx(analytic::failure_prob_iid(0.01, 0.1, 40, 1.0)));
  }

  TEST_CASE("invariant under permuting the rates") {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 50; ++trial) {
      ConstRates r = random_rates(gen, 2 + trial % 6);
      const double base = analytic::failure_prob_dp(r, 1.0);
      std::shuffle(r.alphas.begin(), r.alphas.end(), gen);
      CHECK(analytic::failure_prob_dp(r, 1.0) == doctest::Approx(base).epsilon(1e-13));
      CHECK(analytic::failure_prob_perm(r, 1.0) == doctest::Approx(base).epsilon(1e-13));
    }
  }

  TEST_CASE("identical rates: closed form matches the recursion") {
    for (std::size_t k = 2; k <= 12; ++k) {
      for (double a0 : {0.0, 0.01, 0.2}) {
        const ConstRates r{a0, std::vector<double>(k, 0.05)};
        CHECK(std::fabs(analytic::failure_prob_iid(a0, 0.05, k, 1.0) - analytic::failure_prob_dp(r, 1.0)) <=
              1e-12 * analytic::failure_prob_dp(r, 1.0));
      }
    }
    for (std::size_t k : {2, 3, 5, 9}) CHECK(analytic::failure_prob_iid(0.0, 0.3, k, 0.0) == doctest::Approx(0.0));
    // figure1-type instance: increasing in alpha0 on [5e-6, 1e-5].
    double prev = 0.0;
    for (int g = 0; g <= 20; ++g) {
      const double p = analytic::failure_prob_iid(5e-6 + 2.5e-7 * g, 5e-5, 3, 1.0);
      CHECK(p > prev);
      prev = p;
    }
  }

  TEST_CASE("property: appending a bank strictly increases failure probability") {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 100; ++trial) {
      ConstRates r = random_rates(gen, 8);
      const double eps = 0.2 + (trial % 5) * 0.3;
      double prev = 0.0;
      for (std::size_t k = 2; k <= 8; ++k) {
        const ConstRates sub{r.alpha0, std::vector<double>(r.alphas.begin(), r.alphas.begin() + k)};
        const double p = analytic::failure_prob_dp(sub, eps);
        CHECK(p > prev);
        prev = p;
      }
    }
  }

  TEST_CASE("property: K to infinity drives failure probability to 1") {
    double prev = 0.0;
    std::size_t first = 0;
    for (std::size_t k = 2; k <= 500; ++k) {
      const double p = analytic::failure_prob_iid(0.01, 0.05, k, 1.0);
      // Strict until the value rounds to 1.
      if (prev < 1.0) {
        CHECK(p > prev);
      } else {
        CHECK(p == 1.0);
      }
      prev = p;
      if (first == 0 && p > 0.99) first = k;
    }
    CHECK(first > 0);
  }

  TEST_CASE("property: nondecreasing in epsilon; catastrophic below failure") {
    std::mt19937_64 gen(23);
    for (int trial = 0; trial < 50; ++trial) {
      const ConstRates r = random_rates(gen, 2 + trial % 5);
      double prev = -1.0;
      for (int s = 0; s <= 30; ++s) {
        const double eps = 0.2 * s;
        const double p = analytic::failure_prob_dp(r, eps);
        CHECK(p >= prev - 1e-15);
        CHECK(analytic::catastrophic_prob(r, eps) <= p + 1e-15);
        prev = p;
      }
    }
  }

  TEST_CASE("catastrophic examples") {
    const ConstRates one{0.01, {0.05}};
    CHECK(analytic::catastrophic_prob(one, 2.0) == doctest::Approx(1.0 - std::exp(-0.12)).epsilon(1e-14));
    CHECK(analytic::catastrophic_prob(ConstRates{0.01, {0.05, 0.05, 0.05}}, 0.0) == 0.0);
    const double expected = 1.0 + std::exp(-0.01) * (std::pow(1.0 - std::exp(-0.05), 3) - 1.0);
    CHECK(analytic::catastrophic_prob(ConstRates{0.01, {0.05, 0.05, 0.05}}, 1.0) ==
          doctest::Approx(expected).epsilon(1e-14));
    double prev = 0.0;
    for (int s = 1; s < 50; ++s) {
      const double c = analytic::catastrophic_prob(ConstRates{0.01, {0.05, 0.2, 0.1}}, 0.3 * s);
      CHECK(c >= prev);
      CHECK(c <= 1.0);
      prev = c;
    }
    CHECK(analytic::catastrophic_prob(ConstRates{0.01, std::vector<double>(200, 0.05)}, 1.0) ==
          doctest::Approx(1.0 - std::exp(-0.01)).epsilon(1e-6));
  }

  TEST_CASE("pairwise separation closed form vs numerical integral") {
    const ConstRates r{0.02, {0.1, 0.3}};
    const double eps = 0.8;
    const double ai = 0.1, aj = 0.3, a0 = 0.02;
    auto f = [&](double y) {
      return aj * std::exp(-aj * y - (ai + a0) * (y + eps)) + ai * std::exp(-ai * y - (aj + a0) * (y + eps));
    };
    CHECK(analytic::pairwise_separation(r, 0, 1, eps) == doctest::Approx(simpson(f, 200.0)).epsilon(1e-10));
    CHECK(analytic::pairwise_separation(ConstRates{0.0, {0.1, 0.3}}, 0, 1, 0.0) == doctest::Approx(1.0));
  }

  TEST_CASE("bounds sandwich, K = 2 tightness, eps -> 0") {
    std::mt19937_64 gen(29);
    for (int trial = 0; trial < 500; ++trial) {
      const std::size_t k = 2 + trial % 5;
      const ConstRates r = random_rates(gen, k);
      const double eps = 0.05 + 3.0 * (trial % 13) / 13.0;
      const double exact = analytic::failure_prob_dp(r, eps);
      const auto b = analytic::failure_bounds(r, eps, analytic::random_permutations(k, trial % 4, trial));
      CHECK(b.lower() <= exact + 1e-10);
      CHECK(exact <= b.upper() + 1e-10);
      CHECK(b.upper_pairwise >= exact - 1e-10);
      CHECK(b.upper_partial >= exact - 1e-10);
      CHECK(*b.lower_spacing <= exact + 1e-10);
      CHECK(b.lower_pairwise <= exact + 1e-10);
      if (k == 2) CHECK(std::fabs(b.lower_pairwise - exact) <= 1e-10);
    }
    const auto tiny = analytic::failure_bounds(ConstRates{0.0, {0.1, 0.2, 0.3}}, 1e-9);
    CHECK(tiny.upper() < 1e-8);
    CHECK(tiny.lower() < 1e-8);
  }

  TEST_CASE("random permutations are distinct and seeded") {
    const auto a = analytic::random_permutations(5, 30, 3);
    const auto b = analytic::random_permutations(5, 30, 3);
    CHECK(a == b);
    CHECK(a.size() == 30);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    CHECK(analytic::random_permutations(3, 100, 1).size() == 6);
  }

  TEST_CASE("instantaneous rate and co-default ratio") {
    CHECK(analytic::instantaneous_rate(ConstRates{0.01, {0.2, 0.3}}) == 0.01);
    CHECK(analytic::instantaneous_rate(ConstRates{0.0, {0.2, 0.3}}) == 0.0);
    CHECK(analytic::instantaneous_rate(ConstRates{0.01, {5.0, 7.0}}) == 0.01);
    const ConstRates r{0.01, {0.2, 0.3}};
    CHECK(analytic::co_default_ratio(r, 0, 1, 1e-6) == doctest::Approx(0.01).epsilon(1e-4));
    const double eps = 0.5;
    const double direct = 1.0 - std::exp(-0.31 * eps) - std::exp(-0.21 * eps) + std::exp(-0.51 * eps);
    CHECK(analytic::co_default_ratio(r, 0, 1, eps) == doctest::Approx(direct / eps).epsilon(1e-13));
  }

  TEST_CASE("linear comparative static") {
    CHECK(analytic::linear_comparative_static({{0.0}, {0.0}, {0.0}}, 0, 0.7) == 0.0);
    CHECK(analytic::linear_comparative_static({{0.1, 9.0}, {0.15, 9.0}, {0.05, 9.0}}, 0, 0.5) ==
          doctest::Approx(0.15));
    CHECK_THROWS(analytic::linear_comparative_static({{0.1}}, 1, 0.5));
  }
}
