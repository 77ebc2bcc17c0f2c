#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "loopforge/lattice.hpp"
#include "loopforge/rng.hpp"
#include "loopforge/walks.hpp"

namespace loopforge {

// ---------------------------------------------------------------------------
// Random walk loop soup
// ---------------------------------------------------------------------------

// Total mass p_{2n}(0,0)/(2n) of rooted loops of length 2n at one root.
double loop_mass(int d, std::int64_t n);

// Upper bound on the per-root mass sum_{n > n_max} p_{2n}(0,0)/(2n), from the
// envelope p_{2n} <= C n^{-d/2} (C calibrated on the computed values and the
// asymptotic constant) and an integral tail.
double tail_mass_bound(int d, std::int64_t n_max);
double tail_mass_bound(int d, std::int64_t n_max, std::span<const double> return_probs);

// Smallest cutoff whose certified omitted mass over `roots` root sites is
// below `budget`.
std::int64_t default_max_half_length(int d, std::int64_t roots, double budget = 1e-4);

struct RwSoupConfig {
  int dim = 3;
  double domain_radius = 4.0;
  double lambda = 1.0;
  std::int64_t max_half_length = 0;  // 0: choose via default_max_half_length
  std::uint64_t seed = 0;
  BoundaryConvention convention = BoundaryConvention::open;
  // false: loops that cannot lie in the domain are not emitted at all.
  bool keep_uncontained = true;

  void validate() const;
  Domain domain() const { return Domain::ball(dim, domain_radius, convention); }
};

struct SoupSample {
  std::vector<DiscreteLoop> loops;
  std::vector<std::uint8_t> contained;  // per loop: every site inside the domain
  double lambda = 0.0;
  std::int64_t max_half_length = 0;
  std::int64_t root_count = 0;
  double mass_per_root = 0.0;        // sum of loop_mass(d, n) for n <= cutoff
  double omitted_mass_bound = 0.0;   // root_count * tail_mass_bound
};

// Precomputes the per-length intensities and samples soups on the bounding
// box [-ceil(R), ceil(R)]^d of the domain.
class RwSoupSampler {
 public:
  explicit RwSoupSampler(RwSoupConfig cfg);

  SoupSample sample(Rng& rng) const;
  // Soup restricted to roots[first, last) of roots(); blocks sampled with
  // independent streams concatenate to a soup on the whole box.
  SoupSample sample_block(std::size_t first, std::size_t last, Rng& rng) const;

  const RwSoupConfig& config() const { return cfg_; }
  const std::vector<Site>& roots() const { return roots_; }
  std::int64_t max_half_length() const { return n_max_; }
  double mass(std::int64_t n) const { return mass_[static_cast<std::size_t>(n)]; }
  double mass_per_root() const { return total_mass_; }
  double omitted_mass_bound() const { return omitted_; }

 private:
  std::int64_t draw_half_length(Rng& rng) const;

  RwSoupConfig cfg_;
  std::int64_t n_max_;
  std::vector<Site> roots_;
  std::vector<double> mass_;        // index n, mass_[0] = 0
  std::vector<double> cumulative_;  // cumulative_[n] = sum_{k <= n} mass_[k]
  double total_mass_;
  double omitted_;
};

// For every root in the bounding box and every 1 <= n <= cutoff: Poisson
// counts with mean lambda * loop_mass, bridge shapes, labels uniform on (0, lambda].
SoupSample sample_rw_soup(const RwSoupConfig& cfg, Rng& rng);

// ---------------------------------------------------------------------------
// Brownian loop soup
// ---------------------------------------------------------------------------

// Dense grid of d-vectors on a uniform time grid; row i is point i.
struct PathGrid {
  int dim = 0;
  std::vector<double> values;

  PathGrid() = default;
  PathGrid(int d, std::size_t points) : dim(d), values(points * static_cast<std::size_t>(d), 0.0) {}
  std::size_t points() const { return dim == 0 ? 0 : values.size() / static_cast<std::size_t>(dim); }
  double& at(std::size_t i, int k) { return values[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(k)]; }
  double at(std::size_t i, int k) const { return values[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(k)]; }
};

struct ContinuousLoop {
  std::vector<double> root;  // d reals
  double duration = 0.0;
  std::int64_t generation = 0;  // n of the duration window; 0 for small loops
  PathGrid displacements;       // from the root; first and last rows are 0
};

// Duration offset making the first two orders of q_n and q~_n agree:
// (3d + 4) / (2d(d + 2)).
double duration_offset(int d);

// q_n: Brownian loop mass per unit root cell with duration in
// [2(n-1)/d + r_d, 2n/d + r_d], i.e. integral of ds / (s (2 pi s)^{d/2}).
double brownian_count_intensity(int d, std::int64_t n);
double brownian_mass_between(int d, double t0, double t1);

struct BlConstants {
  int dim;
  double r_d;
  std::vector<double> q;          // index n >= 1, q[0] = 0
  std::vector<double> q_discrete; // loop_mass, same indexing

  static BlConstants compute(int d, std::int64_t n_max);
};

// Inverse CDF of density proportional to t^{-d/2-1} on [a, b].
double power_law_quantile(int d, double a, double b, double u);
double duration_quantile(int d, std::int64_t n, double u);
double sample_duration(int d, std::int64_t n, Rng& rng);

// Brownian bridge from 0 to 0 over `duration` on 2^levels + 1 grid points by
// breadth-first dyadic midpoint refinement: coarser levels are drawn first,
// so their values do not depend on `levels`.
PathGrid sample_brownian_bridge(int d, double duration, int levels, Rng& rng);

struct BrownianSoupConfig {
  int dim = 3;
  double box_radius = 2.0;  // lattice roots z in [-R, R]^d
  double lambda = 1.0;
  std::int64_t max_generation = 64;
  int levels = 10;
  // Loops of duration <= r_d, discretized into dyadic duration bins
  // (r_d 2^{-j-1}, r_d 2^{-j}] for j < small_loop_bins.
  bool include_small_loops = false;
  int small_loop_bins = 8;

  void validate() const;
};

std::vector<ContinuousLoop> sample_brownian_soup(const BrownianSoupConfig& cfg, Rng& rng);

std::vector<Site> box_roots(int dim, std::int64_t half_width);

}  // namespace loopforge
