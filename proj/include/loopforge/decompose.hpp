#pragma once

#include <cstdint>
#include <vector>

#include "loopforge/lattice.hpp"
#include "loopforge/parallel.hpp"
#include "loopforge/rng.hpp"
#include "loopforge/soup.hpp"
#include "loopforge/walks.hpp"

namespace loopforge {

// A loop-erased walk to the boundary of D_n together with the soup loops that
// lie in D_n and touch it. Their union has the law of the simple random walk
// trace in D_n.
struct DecomposedTrace {
  LatticePath lerw;
  std::vector<DiscreteLoop> kept_loops;
  SiteSet trace;  // interior sites only
};

// Intensity-one soup on the interior of D_n, emitting contained loops only.
RwSoupSampler decomposition_soup_sampler(int d, double n, BoundaryConvention conv);

DecomposedTrace sample_decomposed_trace(int d, double n, BoundaryConvention conv, Rng& rng);
DecomposedTrace sample_decomposed_trace(const RwSoupSampler& soup, Rng& rng);

// Interior sites visited by a simple random walk from the origin before it
// leaves the domain.
SiteSet srw_trace(const Domain& domain, Rng& rng);

struct SiteCheck {
  Site site;
  double estimate = 0.0;   // Monte Carlo P[x in trace]
  double exact = 0.0;      // P^0[SRW visits x before exit]
  double std_error = 0.0;  // sqrt(exact (1 - exact) / samples)
  double z = 0.0;
};

struct DecompositionCheck {
  std::vector<SiteCheck> sites;  // interior sites, lexicographic
  std::uint64_t samples = 0;
  BoundaryConvention convention = BoundaryConvention::open;
  double max_abs_z = 0.0;
  double fraction_above_3 = 0.0;
  double fraction_within_4 = 0.0;
};

inline constexpr std::size_t kMaxOracleSites = 10'000;

// Per-site comparison of decomposed-trace inclusion frequencies with the
// exact visit probabilities. Chunk c of 4096 samples uses stream
// Rng(seed, c), so the result does not depend on the executor.
DecompositionCheck verify_decomposition(int d, double n, std::uint64_t samples, std::uint64_t seed,
                                        BoundaryConvention conv, const Executor& exec = Executor{});

}  // namespace loopforge
