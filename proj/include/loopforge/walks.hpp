#pragma once

#include <cstdint>
#include <vector>

#include "loopforge/lattice.hpp"
#include "loopforge/rng.hpp"

namespace loopforge {

enum class BoundaryConvention {
  open,    // interior is |x| < radius
  closed,  // interior is |x| <= radius
};

// Euclidean ball of Z^d used as a walk domain.
struct Domain {
  Site center;
  double radius = 1.0;
  BoundaryConvention convention = BoundaryConvention::open;

  Domain(Site c, double r, BoundaryConvention conv) : center(c), radius(r), convention(conv) {}
  static Domain ball(int dim, double r, BoundaryConvention conv = BoundaryConvention::open) {
    return Domain(Site::origin(dim), r, conv);
  }

  int dim() const { return center.dim; }
  bool contains(const Site& x) const {
    return within_radius(distance2(x, center), radius, convention == BoundaryConvention::closed);
  }
  // Interior sites in lexicographic order.
  std::vector<Site> interior() const;
};

struct WalkConfig {
  int dim = 3;
  double radius = 1.0;
  std::uint64_t seed = 0;
  BoundaryConvention convention = BoundaryConvention::open;

  void validate() const;
  Domain domain() const { return Domain::ball(dim, radius, convention); }
};

inline constexpr std::uint64_t kStepCap = 10'000'000'000ull;

// Simple random walk from `start` until the first step outside `domain`.
// The final site is the exit site. Throws std::runtime_error past kStepCap.
LatticePath sample_srw_until_exit(const Site& start, const Domain& domain, Rng& rng);

// Same walk as sample_srw_until_exit with identical random draws, erased on
// the fly; equals loop_erase of that walk.
LatticePath sample_lerw_until_exit(const Site& start, const Domain& domain, Rng& rng);

LatticePath sample_srw_stopped(const WalkConfig& cfg, Rng& rng);
LatticePath sample_lerw(const WalkConfig& cfg, Rng& rng);

// p_{2n}(0,0) for simple random walk on Z^d.
double return_probability(int d, std::int64_t n);
// p_{2k}(0,0) for k = 0..n_max.
std::vector<double> return_probabilities(int d, std::int64_t n_max);

inline constexpr std::int64_t kMaxReturnSteps = 1'000'000;

// Which coordinate moves at each step of a d-dimensional bridge. The counts
// follow the exact bridge law: conditioning the multinomial sequence on even
// counts alone is not enough, since an allocation must also be weighted by
// the number of closed sign patterns it admits.
struct CoordinateAllocation {
  std::vector<std::uint8_t> coord;
  std::array<std::int64_t, kMaxDim> counts{};
};

CoordinateAllocation sample_coordinate_allocation(int d, std::int64_t m, Rng& rng);

// +1/-1 steps of a uniformly shuffled 1D bridge of even length m.
std::vector<std::int8_t> sample_bridge_steps_1d(std::int64_t m, Rng& rng);

LatticePath sample_bridge_1d(std::int64_t m, Rng& rng);

// Exact d-dimensional random walk bridge from the origin.
LatticePath sample_bridge(int d, std::int64_t m, Rng& rng);

// Bridge composed from an allocation and per-coordinate 1D step sequences.
std::vector<Site> compose_bridge(const Site& root, const CoordinateAllocation& alloc,
                                 const std::vector<std::vector<std::int8_t>>& steps);

// h(y) = P^y[simple random walk visits x before leaving the domain] at every
// interior y: harmonic off x, 1 at x, 0 outside.
absl::flat_hash_map<Site, double> hitting_probabilities(int d, double n, const Site& x, BoundaryConvention conv);

// P^0[simple random walk visits x before leaving the domain], by a direct
// solve of the hitting-probability Dirichlet problem.
double visit_probability_exact(int d, double n, const Site& x, BoundaryConvention conv);

// The same probabilities for every interior site at once, via the killed
// Green's function: P^0[visit x] = G(0,x) / G(x,x).
absl::flat_hash_map<Site, double> visit_probabilities_exact(int d, double n,
                                                            BoundaryConvention conv);

}  // namespace loopforge
