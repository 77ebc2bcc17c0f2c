#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "loopforge/lattice.hpp"
#include "loopforge/parallel.hpp"
#include "loopforge/stats.hpp"
#include "loopforge/walks.hpp"

namespace loopforge {

// (s, r)-quasi-loop geometry: v is a center when some i <= j have g(i), g(j)
// in B(v, s) while g[i, j] leaves B(v, r). Balls are closed.
struct QuasiLoopQuery {
  double s = 1.0;
  double r = 2.0;

  void validate() const;
};

// Every lattice center v of an (s, r)-quasi-loop of `path`. Exact.
SiteSet scan_quasi_loops(const LatticePath& path, const QuasiLoopQuery& q);
// Same scan, stopping at the first center found.
bool has_quasi_loop(const LatticePath& path, const QuasiLoopQuery& q);

struct QuasiLoopEstimate {
  double epsilon;
  QuasiLoopQuery query;  // (eps^M n, sqrt(eps) n)
  EstimatorReport report;
};

// P[LERW to the exit of B(0, n) has an (eps^M n, sqrt(eps) n)-quasi-loop].
// One set of LERW samples (sample i on stream (seed, i)) serves every eps.
std::vector<QuasiLoopEstimate> quasi_loop_probabilities(int d, double n, std::span<const double> epsilons,
                                                        int M, std::uint64_t samples, std::uint64_t seed,
                                                        const Executor& exec = Executor{});
EstimatorReport quasi_loop_probability(int d, double n, double eps, int M, std::uint64_t samples,
                                       std::uint64_t seed, const Executor& exec = Executor{});

// Slope of log E[len LERW] against log n, bootstrap standard error over
// 1000 resamples. The LERW runs to the exit of the ball of radius n.
struct BetaEstimate {
  ExponentFit fit;
  std::vector<double> radii;
  std::vector<EstimatorReport> mean_lengths;
};

BetaEstimate estimate_beta(int d, std::span<const double> radii, std::uint64_t samples_per_n, std::uint64_t seed,
                           BoundaryConvention conv = BoundaryConvention::open,
                           const Executor& exec = Executor{});

// Es(m, n) with R^1 stopped on leaving B(0, K n). Each sample of (R^1, R^2)
// serves every m; Es(m, n) = 1 exactly when m >= n.
std::vector<EstimatorReport> estimate_escape_profile(int d, std::span<const double> ms, double n, double K,
                                                     std::uint64_t samples, std::uint64_t seed,
                                                     const Executor& exec = Executor{});
EstimatorReport estimate_escape(int d, double m, double n, double K, std::uint64_t samples,
                                std::uint64_t seed, const Executor& exec = Executor{});

struct HittabilityConfig {
  int dim = 3;
  double n = 256.0;
  double epsilon = 0.25;
  double eta = 0.1;
  std::uint64_t outer_samples = 100;
  std::uint64_t inner_samples = 64;
  std::int64_t grid_spacing = 0;  // 0: ceil(eps^2 n)
  std::uint64_t seed = 0;

  void validate() const;
  std::int64_t spacing() const;
};

struct HittabilityResult {
  EstimatorReport failing_fraction;  // LERW samples with some x above eps^eta
  std::uint64_t points_tested = 0;
  std::uint64_t inner_walks = 0;
};

HittabilityResult hittability_scan(const HittabilityConfig& cfg, const Executor& exec = Executor{});

// Grid points x (multiples of `spacing`) of the closed ball B(0, n) with
// dist(x, path) <= radius, sorted.
std::vector<Site> points_near_path(const LatticePath& path, double radius, std::int64_t spacing, double n);

// Membership test for a fixed site set: a bitmap over its bounding box when
// that is small enough, a hash set otherwise.
class SiteIndicator {
 public:
  explicit SiteIndicator(std::span<const Site> sites);
  bool contains(const Site& x) const;

 private:
  int dim_ = 0;
  Site lo_, hi_;
  std::array<std::uint64_t, kMaxDim> stride_{};
  std::vector<std::uint64_t> bits_;
  SiteSet fallback_;
  bool dense_ = false;
};

// Escape count of R^2 from x out of B(x, rho) avoiding `target`, with
// early termination once escapes/trials is known to be above or not above
// `threshold` after `trials` walks.
struct EscapeDecision {
  std::uint64_t escapes = 0;
  std::uint64_t walks = 0;
  bool exceeds = false;
};
EscapeDecision escape_exceeds(const Site& x, double rho, const SiteIndicator& target, std::uint64_t trials,
                              double threshold, Rng& rng);

// Occupied axis-aligned boxes (anchored at the origin) at each scale, slope
// of log count against log(1 / scale). Scales must span >= 1.5 decades.
ExponentFit box_dimension(const std::vector<std::vector<double>>& points, std::span<const double> scales);

struct CutPointStats {
  EstimatorReport mean_count;
  std::uint64_t violations = 0;  // cut points missing from the loop erasure
};

CutPointStats cut_point_stats(int d, double n, std::uint64_t samples, std::uint64_t seed,
                              BoundaryConvention conv = BoundaryConvention::open,
                              const Executor& exec = Executor{});

}  // namespace loopforge
