#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

#include "absl/container/flat_hash_map.h"
#include "loopforge/lattice.hpp"
#include "loopforge/parallel.hpp"
#include "loopforge/rng.hpp"
#include "loopforge/soup.hpp"

namespace loopforge {

struct CoupledCounts {
  std::uint64_t n_discrete = 0;
  std::uint64_t n_brownian = 0;
  bool agreed = true;
};

// Total variation distance between Poisson(a) and Poisson(b).
double poisson_tv_distance(double a, double b);

// Maximal coupling of Poisson(a) and Poisson(b): with probability
// sum_k min(p_a(k), p_b(k)) both take a common value drawn from the
// normalized overlap; otherwise each side draws independently from its
// normalized residual. Disagreement probability equals the TV distance.
class PoissonCoupler {
 public:
  PoissonCoupler(double a, double b);
  CoupledCounts sample(Rng& rng) const;
  double tv_distance() const { return 1.0 - overlap_; }

 private:
  static std::uint64_t invert(const std::vector<double>& weights, double total, double u);

  double a_, b_;
  std::vector<double> common_, resid_a_, resid_b_;
  double overlap_ = 1.0;
};

CoupledCounts couple_poisson(double a, double b, Rng& rng);

// Exact conditional law of the midpoint of a 1D random walk bridge segment,
// cached per (segment length, offset of the split point, endpoint gap).
class BridgeQuantileCache {
 public:
  // Increment over the first `left` steps of a `length`-step segment whose
  // total increment is `gap`, at quantile u.
  std::int64_t quantile(std::int64_t length, std::int64_t left, std::int64_t gap, double u);
  std::size_t size() const { return table_.size(); }

 private:
  struct Entry {
    std::int64_t lowest;
    std::vector<double> cdf;  // support lowest, lowest + 2, ...
  };
  absl::flat_hash_map<std::tuple<std::int64_t, std::int64_t, std::int64_t>, Entry> table_;
};

// A 1D bridge pair at shared grid times j/m: discrete positions S_j and
// Brownian values B(j/m) driven by one uniform per dyadic split.
struct BridgeCoupling1D {
  std::vector<std::int64_t> discrete;  // m + 1 positions
  std::vector<double> brownian;        // m + 1 values at times j/m
};

BridgeCoupling1D couple_bridge_core_1d(std::int64_t m, Rng& rng, BridgeQuantileCache& cache);

struct CoupledBridgePair {
  LatticePath discrete;        // m + 1 sites from the origin
  PathGrid continuous;         // standard bridge on [0,1], m * refinement + 1 points
  double sup_distance = 0.0;   // sup_t |X_{mt} / sqrt(m q) - B_t|, q = 1/d
  std::size_t refinement = 1;  // continuous grid points per discrete step
};

// Continuous grid points per discrete step: 2^max(0, levels - ceil(log2 m)).
std::size_t bridge_refinement(std::int64_t m, int levels);

CoupledBridgePair couple_bridge_1d(std::int64_t m, int levels, Rng& rng);
CoupledBridgePair couple_bridge_1d(std::int64_t m, int levels, Rng& rng, BridgeQuantileCache& cache);

// d-dimensional pair: a shared parity-conditioned coordinate allocation time-
// reparametrizes each coordinate's coupled 1D bridge.
CoupledBridgePair couple_bridge(int d, std::int64_t m, int levels, Rng& rng);
CoupledBridgePair couple_bridge(int d, std::int64_t m, int levels, Rng& rng, BridgeQuantileCache& cache);

// Values of a Brownian bridge known at sorted `known_times` (first 0, last 1),
// sampled exactly at sorted `query_times` in [0, 1].
std::vector<double> brownian_bridge_at(const std::vector<double>& known_times,
                                       const std::vector<double>& known_values,
                                       const std::vector<double>& query_times, Rng& rng);

// Both paths are uniform grids over the same time interval; one segment count
// must divide the other. Maximum Euclidean distance on the finer grid with the
// coarser path linearly interpolated.
double sup_distance(const PathGrid& a, const PathGrid& b);

PathGrid lattice_path_grid(const LatticePath& path);

struct CoupledSoupConfig {
  int dim = 3;
  double box_radius = 1.0;  // r: roots z in [-rN, rN]^d
  double lambda = 1.0;
  double scale = 8.0;       // N
  double theta = 1.5;
  int levels = 10;
  std::int64_t max_half_length = 0;  // 0: max(64, ceil(2 N^theta))

  void validate() const;
  std::int64_t cutoff() const;
  std::int64_t root_half_width() const;
};

struct MatchedPair {
  std::size_t discrete_id;
  std::size_t brownian_id;
  Site root;
  std::int64_t half_length;
  double sup_distance;
  double duration_gap;  // T - 2n/d
  bool flagged = false;
};

struct CorrespondenceReport {
  std::vector<MatchedPair> pairs;  // loops with 2n >= N^theta
  std::vector<std::size_t> unmatched_discrete;
  std::vector<std::size_t> unmatched_brownian;
  std::uint64_t small_unmatched = 0;  // residual loops with 2n < N^theta
  double envelope = 0.0;              // N^{3/4} log N
  double fitted_constant = 0.0;       // median of sup_distance / envelope
  std::size_t grid_points_min = 0;    // coarsest continuous grid among pairs
  bool success = true;
};

struct CoupledSoups {
  SoupSample discrete;
  std::vector<ContinuousLoop> brownian;
  CorrespondenceReport report;
};

CoupledSoups couple_soups(const CoupledSoupConfig& cfg, Rng& rng, const Executor& exec = Executor{});

}  // namespace loopforge
