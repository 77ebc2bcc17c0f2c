#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "loopforge/soup.hpp"
#include "loopforge/stats.hpp"

using namespace loopforge;

namespace {

// Mean of the density proportional to t^{-k-1} on [a, b].
double truncated_power_mean(double k, double a, double b) {
  const double den = (std::pow(a, -k) - std::pow(b, -k)) / k;
  const double num = k == 1.0 ? std::log(b / a) : (std::pow(a, 1 - k) - std::pow(b, 1 - k)) / (k - 1);
  return num / den;
}

RwSoupSampler one_root_sampler(double lambda, std::uint64_t seed = 0) {
  RwSoupConfig cfg;
  cfg.dim = 3;
  cfg.domain_radius = 1.0;
  cfg.lambda = lambda;
  cfg.max_half_length = 200;
  cfg.seed = seed;
  return RwSoupSampler(cfg);
}

}  // namespace

TEST_SUITE("soup") {
  TEST_CASE("loop mass examples") {
    CHECK(loop_mass(3, 1) == doctest::Approx(1.0 / 12).epsilon(1e-14));
    CHECK(loop_mass(2, 1) == doctest::Approx(1.0 / 8).epsilon(1e-14));
    for (int d : {2, 3})
      for (int n = 1; n < 64; ++n) CHECK(loop_mass(d, n + 1) < loop_mass(d, n));
    CHECK_THROWS_AS(loop_mass(3, 0), std::domain_error);
  }

  TEST_CASE("tail bound dominates the omitted mass") {
    for (int d : {1, 2, 3}) {
      double previous = INFINITY;
      for (std::int64_t n_max : {1, 2, 5, 10, 50, 200}) {
        const double bound = tail_mass_bound(d, n_max);
        CHECK(std::isfinite(bound));
        CHECK(bound < previous);
        previous = bound;
        double partial = 0.0;
        for (std::int64_t n = n_max + 1; n <= n_max + 1000; ++n) partial += loop_mass(d, n);
        CHECK(bound >= partial);
      }
    }
  }

  TEST_CASE("default cutoff meets the mass budget") {
    for (int d : {2, 3})
      for (std::int64_t roots : {1, 100, 729}) {
        const auto n = default_max_half_length(d, roots);
        if (n == kMaxReturnSteps) continue;  // d=2 with many roots: the cap binds
        CHECK(static_cast<double>(roots) * tail_mass_bound(d, n) < 1e-4);
      }
    CHECK(default_max_half_length(2, 729) == kMaxReturnSteps);
    RwSoupConfig cfg;
    cfg.dim = 3;
    cfg.domain_radius = 4.0;
    const RwSoupSampler s(cfg);
    CHECK(s.omitted_mass_bound() < 1e-4);
  }

  TEST_CASE("config validation") {
    RwSoupConfig cfg;
    cfg.lambda = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::domain_error);
    cfg.lambda = 1.0;
    cfg.domain_radius = 0.5;
    CHECK_THROWS_AS(cfg.validate(), std::domain_error);
  }

  TEST_CASE("emitted loops are closed, labelled and flagged correctly") {
    RwSoupConfig cfg;
    cfg.dim = 3;
    cfg.domain_radius = 3.0;
    cfg.lambda = 2.0;
    cfg.max_half_length = 100;
    Rng rng(1);
    const RwSoupSampler s(cfg);
    const auto dom = cfg.domain();
    for (int k = 0; k < 50; ++k) {
      const auto soup = s.sample(rng);
      REQUIRE(soup.contained.size() == soup.loops.size());
      for (std::size_t i = 0; i < soup.loops.size(); ++i) {
        const auto& l = soup.loops[i];
        REQUIRE(l.path().front() == l.path().back());
        REQUIRE((l.path().size() - 1) % 2 == 0);
        REQUIRE(l.half_length() >= 1);
        REQUIRE(l.half_length() <= 100);
        REQUIRE(l.label() > 0.0);
        REQUIRE(l.label() <= 2.0);
        const bool inside = std::all_of(l.path().sites().begin(), l.path().sites().end(),
                                        [&](const Site& x) { return dom.contains(x); });
        REQUIRE(inside == (soup.contained[i] == 1));
        REQUIRE(std::abs(l.root()[0]) <= 3);
      }
    }
  }

  TEST_CASE("tiny intensity gives empty soups") {
    RwSoupConfig cfg;
    cfg.dim = 3;
    cfg.domain_radius = 4.0;
    cfg.lambda = 1e-6;
    const RwSoupSampler s(cfg);
    Rng rng(2);
    int empty = 0;
    for (int k = 0; k < 10000; ++k) empty += s.sample(rng).loops.empty();
    CHECK(empty >= 9990);
  }

  TEST_CASE("per-root counts are Poisson with the loop mass") {
    const auto s = one_root_sampler(1.0);
    Rng rng(3);
    const int samples = 1000000;
    std::vector<double> c1(samples), c2(samples);
    std::vector<std::uint64_t> shapes(6, 0);
    const Site z = s.roots()[13];
    for (int k = 0; k < samples; ++k) {
      const auto soup = s.sample_block(13, 14, rng);
      for (const auto& l : soup.loops) {
        REQUIRE(l.root() == z);
        if (l.half_length() == 1) {
          c1[k] += 1;
          for (int dir = 0; dir < 6; ++dir)
            if (l.path()[1] == neighbor(z, dir)) ++shapes[static_cast<std::size_t>(dir)];
        }
        if (l.half_length() == 2) c2[k] += 1;
      }
    }
    for (auto [counts, n] : {std::pair{&c1, 1}, std::pair{&c2, 2}}) {
      const double mu = loop_mass(3, n);
      const auto r = mean_report(*counts);
      CHECK(std::abs(r.estimate - mu) <= 3 * std::sqrt(mu / samples));
      double var = 0.0;
      for (double x : *counts) var += (x - r.estimate) * (x - r.estimate);
      var /= samples - 1;
      // Var of the sample variance of Poisson(mu): (mu + 2 mu^2) / N
      CHECK(std::abs(var - mu) <= 4 * std::sqrt((mu + 2 * mu * mu) / samples));
    }
    CHECK(chi_square_p_value(shapes, std::vector<double>(6, 1.0 / 6)) > 1e-3);
  }

  TEST_CASE("labels are uniform and thin the intensity") {
    const auto s = one_root_sampler(2.0);
    Rng rng(4);
    std::vector<double> labels;
    double low = 0.0;
    const int samples = 200000;
    for (int k = 0; k < samples; ++k)
      for (const auto& l : s.sample_block(0, 27, rng).loops) {
        labels.push_back(l.label());
        low += l.label() <= 0.5;
      }
    CHECK(ks_one_sample_p_value(labels, [](double x) { return std::clamp(x / 2.0, 0.0, 1.0); }) > 1e-3);
    // thinning to labels <= 0.5 leaves intensity 0.5 times the per-root mass
    const double mean = 0.5 * 27 * s.mass_per_root();
    CHECK(std::abs(low / samples - mean) <= 4 * std::sqrt(mean / samples));
  }

  TEST_CASE("blocks concatenate to a full soup") {
    const auto s = one_root_sampler(1.0);
    Rng a(5), b(5);
    CHECK(s.sample(a).loops.size() == s.sample_block(0, s.roots().size(), b).loops.size());
    CHECK_THROWS_AS(s.sample_block(3, 2, a), std::domain_error);
  }

  TEST_CASE("brownian constants") {
    CHECK(duration_offset(3) == doctest::Approx(13.0 / 30).epsilon(1e-15));
    for (int d : {2, 3}) {
      const auto c = BlConstants::compute(d, 64);
      CHECK(c.r_d == duration_offset(d));
      for (std::size_t n = 1; n <= 64; ++n) {
        CHECK(c.q[n] > 0.0);
        CHECK(c.q_discrete[n] > 0.0);
        if (n > 1) {
          CHECK(c.q[n] < c.q[n - 1]);
          CHECK(c.q_discrete[n] < c.q_discrete[n - 1]);
        }
      }
    }
    // q_1 by the closed-form integral of ds / (s (2 pi s)^{3/2})
    const double a = 13.0 / 30, b = 2.0 / 3 + 13.0 / 30;
    const double q1 = std::pow(2 * std::numbers::pi, -1.5) / 1.5 * (std::pow(a, -1.5) - std::pow(b, -1.5));
    CHECK(brownian_count_intensity(3, 1) == doctest::Approx(q1).epsilon(1e-13));
  }

  TEST_CASE("intensity gap decays at the predicted order") {
    for (int d : {2, 3}) {
      const auto c = BlConstants::compute(d, 64);
      double lo = INFINITY, hi = 0.0;
      for (std::size_t n = 4; n <= 64; ++n) {
        const double implied = std::abs(c.q[n] - c.q_discrete[n]) * std::pow(double(n), d / 2.0 + 3);
        lo = std::min(lo, implied);
        hi = std::max(hi, implied);
      }
      CHECK(lo > 0.0);
      CHECK(hi / lo <= 10.0);
    }
  }

  TEST_CASE("duration quantiles") {
    const double r = 13.0 / 30;
    CHECK(duration_quantile(3, 1, 0.0) == doctest::Approx(r));
    CHECK(duration_quantile(3, 1, 1.0) == doctest::Approx(2.0 / 3 + r));
    CHECK(duration_quantile(3, 5, 0.0) == doctest::Approx(8.0 / 3 + r));
    CHECK(duration_quantile(3, 5, 1.0) == doctest::Approx(10.0 / 3 + r));
    for (double u : {0.1, 0.5, 0.9}) CHECK(duration_quantile(2, 3, u) < duration_quantile(2, 3, u + 0.05));
  }

  TEST_CASE("duration sample mean") {
    for (int d : {2, 3}) {
      const double a = duration_offset(d), b = 2.0 / d + duration_offset(d);
      Rng rng(6, static_cast<std::uint64_t>(d));
      std::vector<double> t(1000000);
      for (auto& x : t) {
        x = sample_duration(d, 1, rng);
        REQUIRE(x >= a);
        REQUIRE(x <= b);
      }
      const auto m = mean_report(t);
      CHECK(std::abs(m.estimate - truncated_power_mean(d / 2.0, a, b)) <= 3 * m.std_error);
    }
  }

  TEST_CASE("brownian bridge midpoint variance and endpoints") {
    Rng rng(7);
    const double t = 2.5;
    const int n = 1000000;
    double ss = 0.0;
    for (int k = 0; k < n; ++k) {
      const auto g = sample_brownian_bridge(1, t, 1, rng);
      REQUIRE(g.at(0, 0) == 0.0);
      REQUIRE(g.at(2, 0) == 0.0);
      ss += g.at(1, 0) * g.at(1, 0);
    }
    const double var = ss / n;
    CHECK(std::abs(var - t / 4) <= 3 * (t / 4) * std::sqrt(2.0 / n));
    const auto g = sample_brownian_bridge(3, 1.0, 10, rng);
    CHECK(g.points() == 1025);
    for (int k = 0; k < 3; ++k) {
      CHECK(g.at(0, k) == 0.0);
      CHECK(g.at(1024, k) == 0.0);
    }
  }

  TEST_CASE("refinement keeps coarse marginals") {
    Rng a(8, 1), b(8, 2);
    std::vector<double> coarse, fine;
    for (int k = 0; k < 20000; ++k) {
      coarse.push_back(sample_brownian_bridge(1, 1.0, 2, a).at(1, 0));
      fine.push_back(sample_brownian_bridge(1, 1.0, 6, b).at(16, 0));
    }
    CHECK(ks_two_sample_p_value(coarse, fine) > 1e-3);
    // t = 1/4 of a unit bridge has variance 3/16
    CHECK(ks_one_sample_p_value(fine, [](double x) { return standard_normal_cdf(x / std::sqrt(3.0 / 16)); }) > 1e-3);
  }

  TEST_CASE("brownian soup") {
    BrownianSoupConfig cfg;
    cfg.dim = 3;
    cfg.box_radius = 0.0;
    cfg.lambda = 1.5;
    cfg.max_generation = 8;
    cfg.levels = 3;
    Rng rng(9);
    const int samples = 200000;
    double n1 = 0.0;
    for (int k = 0; k < samples; ++k)
      for (const auto& l : sample_brownian_soup(cfg, rng)) {
        REQUIRE(l.generation >= 1);
        REQUIRE(l.generation <= 8);
        const double lo = 2.0 * (l.generation - 1) / 3 + 13.0 / 30, hi = 2.0 * l.generation / 3 + 13.0 / 30;
        REQUIRE(l.duration >= lo);
        REQUIRE(l.duration <= hi);
        for (double x : l.root) REQUIRE(std::abs(x) <= 0.5);
        REQUIRE(l.displacements.points() == 9);
        n1 += l.generation == 1;
      }
    const double mu = 1.5 * brownian_count_intensity(3, 1);
    CHECK(std::abs(n1 / samples - mu) <= 3 * std::sqrt(mu / samples));
    cfg.lambda = 0.0;
    CHECK(sample_brownian_soup(cfg, rng).empty());
  }

  TEST_CASE("small brownian loops stay below the offset") {
    BrownianSoupConfig cfg;
    cfg.dim = 2;
    cfg.box_radius = 1.0;
    cfg.max_generation = 2;
    cfg.levels = 2;
    cfg.include_small_loops = true;
    cfg.small_loop_bins = 4;
    Rng rng(10);
    int small = 0;
    for (int k = 0; k < 2000; ++k)
      for (const auto& l : sample_brownian_soup(cfg, rng))
        if (l.generation == 0) {
          ++small;
          REQUIRE(l.duration <= duration_offset(2));
          REQUIRE(l.duration > duration_offset(2) / 16);
        }
    CHECK(small > 0);
  }
}
