#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <vector>

#include "doctest.h"
#include "loopforge/decompose.hpp"

using namespace loopforge;

namespace {

bool connected(const SiteSet& s) {
  if (s.empty()) return true;
  SiteSet seen{*s.begin()};
  std::deque<Site> queue{*s.begin()};
  while (!queue.empty()) {
    const Site x = queue.front();
    queue.pop_front();
    for (int k = 0; k < 2 * x.dim; ++k) {
      const Site y = neighbor(x, k);
      if (s.contains(y) && seen.insert(y).second) queue.push_back(y);
    }
  }
  return seen.size() == s.size();
}

std::vector<Site> sorted(const SiteSet& s) {
  std::vector<Site> v(s.begin(), s.end());
  std::sort(v.begin(), v.end());
  return v;
}

// Two-sample chi-square on category counts of equal-size samples; cells with
// fewer than 10 pooled observations are merged.
double two_sample_p(const std::map<std::vector<Site>, std::pair<double, double>>& cells) {
  double stat = 0.0, ra = 0.0, rb = 0.0;
  int df = -1;
  for (const auto& [k, ab] : cells) {
    if (ab.first + ab.second < 10) {
      ra += ab.first;
      rb += ab.second;
      continue;
    }
    stat += (ab.first - ab.second) * (ab.first - ab.second) / (ab.first + ab.second);
    ++df;
  }
  if (ra + rb > 0) {
    stat += (ra - rb) * (ra - rb) / (ra + rb);
    ++df;
  }
  return boost::math::gamma_q(df / 2.0, stat / 2.0);
}

}  // namespace

TEST_SUITE("decompose") {
  TEST_CASE("decomposed traces satisfy the structural invariants") {
    for (auto conv : {BoundaryConvention::open, BoundaryConvention::closed})
      for (int d : {2, 3}) {
        const auto soup = decomposition_soup_sampler(d, 4.0, conv);
        CHECK(soup.config().lambda == 1.0);
        CHECK_FALSE(soup.config().keep_uncontained);
        const Domain dom = Domain::ball(d, 4.0, conv);
        Rng rng(1, static_cast<std::uint64_t>(d));
        std::size_t kept = 0;
        for (int i = 0; i < 2000; ++i) {
          const auto t = sample_decomposed_trace(soup, rng);
          REQUIRE(t.lerw.front() == Site::origin(d));
          REQUIRE_FALSE(dom.contains(t.lerw.back()));
          REQUIRE(t.lerw.is_simple());
          SiteSet base;
          for (const auto& x : t.lerw.sites())
            if (dom.contains(x)) base.insert(x);
          for (const auto& x : base) REQUIRE(t.trace.contains(x));
          const SiteSet lerw_sites = t.lerw.site_set();
          for (const auto& l : t.kept_loops) {
            bool touches = false;
            for (const auto& x : l.path().sites()) {
              REQUIRE(dom.contains(x));
              touches |= lerw_sites.contains(x);
            }
            REQUIRE(touches);
          }
          kept += t.kept_loops.size();
          REQUIRE(t.trace == enlargement(base, t.kept_loops));
          REQUIRE(t.trace.contains(Site::origin(d)));
          REQUIRE(connected(t.trace));
        }
        CHECK(kept > 0);
      }
  }

  TEST_CASE("radius below two is rejected") {
    Rng rng(2);
    CHECK_THROWS_AS(sample_decomposed_trace(2, 1.5, BoundaryConvention::open, rng), std::domain_error);
  }

  TEST_CASE("verifier edge cases") {
    CHECK_THROWS_AS(verify_decomposition(2, 4.0, 0, 1, BoundaryConvention::open), std::domain_error);
    CHECK_THROWS_AS(verify_decomposition(3, 14.0, 10, 1, BoundaryConvention::open), std::domain_error);
    const auto check = verify_decomposition(2, 3.0, 500, 1, BoundaryConvention::open);
    const auto origin = std::find_if(check.sites.begin(), check.sites.end(),
                                     [](const SiteCheck& s) { return s.site == Site::origin(2); });
    REQUIRE(origin != check.sites.end());
    CHECK(origin->estimate == 1.0);
    CHECK(origin->exact == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(origin->z == 0.0);
    CHECK(check.sites.size() == Domain::ball(2, 3.0).interior().size());
    CHECK(std::is_sorted(check.sites.begin(), check.sites.end(),
                         [](const SiteCheck& a, const SiteCheck& b) { return a.site < b.site; }));
  }

  TEST_CASE("oracle is radially non-increasing") {
    for (auto conv : {BoundaryConvention::open, BoundaryConvention::closed}) {
      const auto p = visit_probabilities_exact(3, 6.0, conv);
      const Domain dom = Domain::ball(3, 6.0, conv);
      for (int dir = 0; dir < 6; ++dir) {
        Site x = Site::origin(3);
        double previous = p.at(x);
        for (Site y = neighbor(x, dir); dom.contains(y); y = neighbor(y, dir)) {
          CHECK(p.at(y) <= previous + 1e-12);
          previous = p.at(y);
        }
      }
    }
  }

  TEST_CASE("site marginals match the oracle") {
    for (auto conv : {BoundaryConvention::open, BoundaryConvention::closed}) {
      const auto c = verify_decomposition(2, 4.0, 100000, 3, conv, Executor(2));
      CHECK(c.samples == 100000);
      CHECK(c.fraction_within_4 >= 0.99);
      CHECK(c.max_abs_z <= 6.0);
    }
    const auto c = verify_decomposition(2, 6.0, 50000, 4, BoundaryConvention::open, Executor(2));
    CHECK(c.fraction_within_4 >= 0.99);
    CHECK(c.max_abs_z <= 6.0);
  }

  TEST_CASE("verifier does not depend on the thread count") {
    const auto a = verify_decomposition(3, 3.0, 9000, 5, BoundaryConvention::open, Executor(1));
    const auto b = verify_decomposition(3, 3.0, 9000, 5, BoundaryConvention::open, Executor(3));
    REQUIRE(a.sites.size() == b.sites.size());
    for (std::size_t i = 0; i < a.sites.size(); ++i) CHECK(a.sites[i].estimate == b.sites[i].estimate);
  }

  TEST_CASE("full trace law agrees with the random walk at radius two") {
    for (auto conv : {BoundaryConvention::open, BoundaryConvention::closed}) {
      const auto soup = decomposition_soup_sampler(2, 2.0, conv);
      const Domain dom = Domain::ball(2, 2.0, conv);
      Rng a(6, 1), b(6, 2);
      std::map<std::vector<Site>, std::pair<double, double>> cells;
      for (int i = 0; i < 200000; ++i) {
        cells[sorted(sample_decomposed_trace(soup, a).trace)].first += 1;
        cells[sorted(srw_trace(dom, b))].second += 1;
      }
      CHECK(cells.size() > 20);
      CHECK(two_sample_p(cells) > 1e-3);
    }
  }
}
