#include "loopforge/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace loopforge {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

std::string fingerprint(std::initializer_list<std::pair<const char*, double>> fields) {
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& [k, v] : fields) {
    if (!first) os << ';';
    os << k << '=' << v;
    first = false;
  }
  return os.str();
}

bool outside(std::int64_t norm2, double r) { return !within_radius(norm2, r, true); }

// Segment tree of axis-aligned bounding boxes over a path, answering "does
// the path leave the closed ball B(v, r) on an index range".
class BoxTree {
 public:
  explicit BoxTree(const LatticePath& path) : path_(path), d_(path.dim()) {
    leaves_ = 1;
    while (leaves_ < path.size()) leaves_ <<= 1;
    lo_.assign(2 * leaves_ * static_cast<std::size_t>(d_), std::numeric_limits<std::int32_t>::max());
    hi_.assign(2 * leaves_ * static_cast<std::size_t>(d_), std::numeric_limits<std::int32_t>::min());
    for (std::size_t i = 0; i < path.size(); ++i)
      for (int k = 0; k < d_; ++k) lo(leaves_ + i, k) = hi(leaves_ + i, k) = path[i][k];
    for (std::size_t node = leaves_ - 1; node >= 1; --node)
      for (int k = 0; k < d_; ++k) {
        lo(node, k) = std::min(lo(2 * node, k), lo(2 * node + 1, k));
        hi(node, k) = std::max(hi(2 * node, k), hi(2 * node + 1, k));
      }
  }

  // Some k in [a, b] with |g(k) - v| > r.
  bool any_outside(std::size_t a, std::size_t b, const Site& v, double r) const {
    return any_outside(1, 0, leaves_ - 1, a, b, v, r);
  }

  // First k >= a with |g(k) - v| > r, or kNone.
  std::size_t first_outside(std::size_t a, const Site& v, double r) const {
    if (a >= path_.size()) return kNone;
    return first_outside(1, 0, leaves_ - 1, a, v, r);
  }

 private:
  std::int32_t& lo(std::size_t node, int k) { return lo_[node * static_cast<std::size_t>(d_) + static_cast<std::size_t>(k)]; }
  std::int32_t& hi(std::size_t node, int k) { return hi_[node * static_cast<std::size_t>(d_) + static_cast<std::size_t>(k)]; }
  std::int32_t lo(std::size_t node, int k) const { return lo_[node * static_cast<std::size_t>(d_) + static_cast<std::size_t>(k)]; }
  std::int32_t hi(std::size_t node, int k) const { return hi_[node * static_cast<std::size_t>(d_) + static_cast<std::size_t>(k)]; }

  std::int64_t far2(std::size_t node, const Site& v) const {
    std::int64_t s = 0;
    for (int k = 0; k < d_; ++k) {
      const std::int64_t a = std::abs(static_cast<std::int64_t>(v[k]) - lo(node, k));
      const std::int64_t b = std::abs(static_cast<std::int64_t>(hi(node, k)) - v[k]);
      const std::int64_t m = std::max(a, b);
      s += m * m;
    }
    return s;
  }

  std::int64_t near2(std::size_t node, const Site& v) const {
    std::int64_t s = 0;
    for (int k = 0; k < d_; ++k) {
      std::int64_t g = 0;
      if (v[k] < lo(node, k)) g = static_cast<std::int64_t>(lo(node, k)) - v[k];
      else if (v[k] > hi(node, k)) g = static_cast<std::int64_t>(v[k]) - hi(node, k);
      s += g * g;
    }
    return s;
  }

  bool empty(std::size_t nl) const { return nl >= path_.size(); }

  bool any_outside(std::size_t node, std::size_t nl, std::size_t nr, std::size_t a, std::size_t b,
                   const Site& v, double r) const {
    if (nr < a || nl > b || empty(nl)) return false;
    if (!outside(far2(node, v), r)) return false;
    if (a <= nl && nr <= b && outside(near2(node, v), r)) return true;
    if (nl == nr) return outside(distance2(path_[nl], v), r);
    const std::size_t mid = nl + (nr - nl) / 2;
    return any_outside(2 * node, nl, mid, a, b, v, r) || any_outside(2 * node + 1, mid + 1, nr, a, b, v, r);
  }

  std::size_t first_outside(std::size_t node, std::size_t nl, std::size_t nr, std::size_t a, const Site& v,
                            double r) const {
    if (nr < a || empty(nl)) return kNone;
    if (!outside(far2(node, v), r)) return kNone;
    if (nl == nr) return outside(distance2(path_[nl], v), r) ? nl : kNone;
    const std::size_t mid = nl + (nr - nl) / 2;
    const std::size_t left = first_outside(2 * node, nl, mid, a, v, r);
    return left != kNone ? left : first_outside(2 * node + 1, mid + 1, nr, a, v, r);
  }

  const LatticePath& path_;
  int d_;
  std::size_t leaves_;
  std::vector<std::int32_t> lo_, hi_;
};

// Path indices bucketed by cubic cells of side h, in increasing index order.
class CellIndex {
 public:
  CellIndex(const LatticePath& path, double h) : path_(path), h_(h) {
    for (std::size_t i = 0; i < path.size(); ++i) cells_[cell_of(path[i])].push_back(static_cast<std::uint32_t>(i));
    const int d = path.dim();
    std::size_t count = 1;
    for (int k = 0; k < d; ++k) count *= 3;
    for (std::size_t c = 0; c < count; ++c) {
      Site off(d);
      std::size_t rem = c;
      for (int k = 0; k < d; ++k) {
        off[k] = static_cast<std::int32_t>(rem % 3) - 1;
        rem /= 3;
      }
      neighbors_.push_back(off);
    }
  }

  // Calls fn(list) for each index list of the 3^d cells around x.
  template <class Fn>
  void for_near(const Site& x, Fn&& fn) const {
    const Site c = cell_of(x);
    for (const auto& off : neighbors_) {
      auto it = cells_.find(c + off);
      if (it != cells_.end()) fn(it->second);
    }
  }

 private:
  Site cell_of(const Site& x) const {
    Site c(x.dim);
    for (int k = 0; k < x.dim; ++k) c[k] = static_cast<std::int32_t>(std::floor(x[k] / h_));
    return c;
  }

  const LatticePath& path_;
  double h_;
  absl::flat_hash_map<Site, std::vector<std::uint32_t>> cells_;
  std::vector<Site> neighbors_;
};

SiteSet scan(const LatticePath& path, const QuasiLoopQuery& q, bool first_only) {
  q.validate();
  SiteSet found;
  const std::size_t len = path.size();
  if (len < 3) return found;
  const BoxTree tree(path);
  const CellIndex cells(path, std::max(2.0 * q.s, 1.0));
  // Pruning radii are nudged so that rounding can only admit extra candidates.
  const double excursion = (q.r - q.s) * (1.0 - 1e-12);
  const double reunion = 2.0 * q.s * (1.0 + 1e-12);

  // F(v) for any center v is an index i whose walk leaves B(g(i), r - s) and
  // later comes back within 2s of g(i).
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < len; ++i) {
    const std::size_t e = tree.first_outside(i + 1, path[i], excursion);
    if (e == kNone) continue;
    bool hit = false;
    cells.for_near(path[i], [&](const std::vector<std::uint32_t>& list) {
      for (auto it = list.rbegin(); !hit && it != list.rend() && *it >= e; ++it)
        hit = within_radius(distance2(path[*it], path[i]), reunion, true);
    });
    if (hit) candidates.push_back(i);
  }

  const auto offsets = ball_offsets(path.dim(), q.s);
  SiteSet tested;
  for (std::size_t i : candidates) {
    for (const auto& o : offsets) {
      const Site v = path[i] + o;
      if (!tested.insert(v).second) continue;
      std::size_t first = kNone, last = 0;
      cells.for_near(v, [&](const std::vector<std::uint32_t>& list) {
        for (auto idx : list)
          if (within_radius(distance2(path[idx], v), q.s, true)) {
            first = std::min<std::size_t>(first, idx);
            break;
          }
        for (auto it = list.rbegin(); it != list.rend(); ++it)
          if (within_radius(distance2(path[*it], v), q.s, true)) {
            last = std::max<std::size_t>(last, *it);
            break;
          }
      });
      if (first == kNone || first >= last) continue;
      if (tree.any_outside(first, last, v, q.r)) {
        found.insert(v);
        if (first_only) return found;
      }
    }
  }
  return found;
}

}  // namespace

void QuasiLoopQuery::validate() const {
  if (!(s > 0.0) || !(r > s) || !std::isfinite(r)) throw std::domain_error("quasi-loop query: need 0 < s < r");
}

SiteSet scan_quasi_loops(const LatticePath& path, const QuasiLoopQuery& q) { return scan(path, q, false); }

bool has_quasi_loop(const LatticePath& path, const QuasiLoopQuery& q) { return !scan(path, q, true).empty(); }

std::vector<QuasiLoopEstimate> quasi_loop_probabilities(int d, double n, std::span<const double> epsilons,
                                                        int M, std::uint64_t samples, std::uint64_t seed,
                                                        const Executor& exec) {
  if (M < 1) throw std::domain_error("quasi_loop_probability: M must be >= 1");
  if (samples == 0) throw std::domain_error("quasi_loop_probability: samples must be positive");
  if (!(n >= 1.0)) throw std::domain_error("quasi_loop_probability: n must be >= 1");
  std::vector<QuasiLoopEstimate> out;
  for (double eps : epsilons) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("quasi_loop_probability: eps must lie in (0, 1)");
    out.push_back({eps, {std::pow(eps, M) * n, std::sqrt(eps) * n}, {}});
  }
  const Domain dom = Domain::ball(d, n, BoundaryConvention::closed);
  std::vector<std::vector<std::uint8_t>> hits(samples);
  exec.for_each(samples, [&](std::size_t i) {
    Rng rng(seed, i);
    const auto lerw = sample_lerw_until_exit(Site::origin(d), dom, rng);
    auto& h = hits[i];
    for (const auto& e : out) h.push_back(has_quasi_loop(lerw, e.query) ? 1 : 0);
  });
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::uint64_t count = 0;
    for (const auto& h : hits) count += h[k];
    out[k].report = binomial_report(
        count, samples,
        fingerprint({{"op_quasi_loop", 1}, {"d", d}, {"n", n}, {"eps", out[k].epsilon}, {"M", M},
                     {"samples", static_cast<double>(samples)}, {"seed", static_cast<double>(seed)}}));
  }
  return out;
}

EstimatorReport quasi_loop_probability(int d, double n, double eps, int M, std::uint64_t samples,
                                       std::uint64_t seed, const Executor& exec) {
  const double e[] = {eps};
  return quasi_loop_probabilities(d, n, e, M, samples, seed, exec).front().report;
}

BetaEstimate estimate_beta(int d, std::span<const double> radii, std::uint64_t samples_per_n, std::uint64_t seed,
                           BoundaryConvention conv, const Executor& exec) {
  if (radii.size() < 3) throw std::domain_error("estimate_beta: need at least 3 radii");
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (!(radii[i] >= 1.0) || (i > 0 && !(radii[i] > radii[i - 1])))
      throw std::domain_error("estimate_beta: radii must be increasing and >= 1");
  if (samples_per_n < 2) throw std::domain_error("estimate_beta: need at least 2 samples per radius");
  const std::size_t groups = radii.size();
  std::vector<std::vector<double>> lengths(groups, std::vector<double>(samples_per_n));
  exec.for_each(groups * samples_per_n, [&](std::size_t task) {
    const std::size_t g = task / samples_per_n, j = task % samples_per_n;
    Rng rng(seed, (static_cast<std::uint64_t>(g) << 32) | j);
    const auto lerw = sample_lerw_until_exit(Site::origin(d), Domain::ball(d, radii[g], conv), rng);
    lengths[g][j] = static_cast<double>(lerw.size() - 1);
  });
  BetaEstimate out;
  out.radii.assign(radii.begin(), radii.end());
  std::vector<double> means;
  for (std::size_t g = 0; g < groups; ++g) {
    out.mean_lengths.push_back(mean_report(
        lengths[g], fingerprint({{"op_lerw_length", 1}, {"d", d}, {"n", radii[g]},
                                 {"samples", static_cast<double>(samples_per_n)}, {"seed", static_cast<double>(seed)}})));
    means.push_back(out.mean_lengths.back().estimate);
  }
  out.fit = fit_exponent(out.radii, means);
  Rng boot(seed, std::numeric_limits<std::uint64_t>::max());
  out.fit.std_error = bootstrap_stderr(lengths, 1000, boot, [&](const std::vector<std::vector<double>>& draw) {
    std::vector<double> m;
    for (const auto& g : draw) {
      double s = 0.0;
      for (double v : g) s += v;
      m.push_back(s / static_cast<double>(g.size()));
    }
    return fit_exponent(out.radii, m).slope;
  });
  return out;
}

std::vector<EstimatorReport> estimate_escape_profile(int d, std::span<const double> ms, double n, double K,
                                                     std::uint64_t samples, std::uint64_t seed,
                                                     const Executor& exec) {
  if (!(n >= 1.0) || !(K > 1.0)) throw std::domain_error("estimate_escape: need n >= 1 and K > 1");
  if (samples == 0) throw std::domain_error("estimate_escape: samples must be positive");
  for (double m : ms)
    if (!(m >= 0.0)) throw std::domain_error("estimate_escape: m must be non-negative");
  const Domain outer = Domain::ball(d, K * n, BoundaryConvention::closed);
  const Domain inner = Domain::ball(d, n, BoundaryConvention::closed);
  std::vector<std::vector<std::uint8_t>> escapes(samples);
  exec.for_each(samples, [&](std::size_t i) {
    Rng rng(seed, i);
    const auto lerw = sample_lerw_until_exit(Site::origin(d), outer, rng);
    std::size_t t_n = 0;
    while (inner.contains(lerw[t_n])) ++t_n;
    const auto r2 = sample_srw_until_exit(Site::origin(d), inner, rng);
    SiteSet visited(r2.sites().begin() + 1, r2.sites().end());
    std::ptrdiff_t last_hit = -1;
    for (std::size_t k = 0; k <= t_n; ++k)
      if (visited.contains(lerw[k])) last_hit = static_cast<std::ptrdiff_t>(k);
    auto& out = escapes[i];
    for (double m : ms) {
      if (m >= n) {
        out.push_back(1);
        continue;
      }
      std::size_t s_m = 0;
      for (std::size_t k = 0; k < t_n; ++k)
        if (within_radius(lerw[k].norm2(), m, true)) s_m = k;
      out.push_back(last_hit < static_cast<std::ptrdiff_t>(s_m) ? 1 : 0);
    }
  });
  std::vector<EstimatorReport> out;
  for (std::size_t k = 0; k < ms.size(); ++k) {
    const auto fp = fingerprint({{"op_escape", 1}, {"d", d}, {"m", ms[k]}, {"n", n}, {"K", K},
                                 {"samples", static_cast<double>(samples)}, {"seed", static_cast<double>(seed)}});
    if (ms[k] >= n) {
      out.push_back({1.0, 0.0, samples, fp});
      continue;
    }
    std::uint64_t count = 0;
    for (const auto& e : escapes) count += e[k];
    out.push_back(binomial_report(count, samples, fp));
  }
  return out;
}

EstimatorReport estimate_escape(int d, double m, double n, double K, std::uint64_t samples, std::uint64_t seed,
                                const Executor& exec) {
  const double ms[] = {m};
  return estimate_escape_profile(d, ms, n, K, samples, seed, exec).front();
}

void HittabilityConfig::validate() const {
  if (dim < 1 || dim > kMaxDim) throw std::domain_error("hittability: dimension out of range");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::domain_error("hittability: eps must lie in (0, 1)");
  if (!(eta > 0.0)) throw std::domain_error("hittability: eta must be positive");
  if (!(n >= 1.0)) throw std::domain_error("hittability: n must be >= 1");
  if (outer_samples == 0 || inner_samples == 0) throw std::domain_error("hittability: samples must be positive");
  if (grid_spacing < 0) throw std::domain_error("hittability: negative grid spacing");
}

std::int64_t HittabilityConfig::spacing() const {
  if (grid_spacing > 0) return grid_spacing;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(epsilon * epsilon * n)));
}

std::vector<Site> points_near_path(const LatticePath& path, double radius, std::int64_t spacing, double n) {
  if (spacing < 1) throw std::domain_error("points_near_path: spacing must be >= 1");
  const int d = path.dim();
  const double h = static_cast<double>(spacing);
  SiteSet found;
  for (const auto& p : path.sites()) {
    Site lo(d), hi(d);
    for (int k = 0; k < d; ++k) {
      lo[k] = static_cast<std::int32_t>(std::ceil((p[k] - radius) / h));
      hi[k] = static_cast<std::int32_t>(std::floor((p[k] + radius) / h));
    }
    Site g = lo;
    for (;;) {
      Site x(d);
      for (int k = 0; k < d; ++k) x[k] = static_cast<std::int32_t>(g[k] * spacing);
      if (within_radius(distance2(x, p), radius, true) && within_radius(x.norm2(), n, true)) found.insert(x);
      int k = 0;
      while (k < d && g[k] == hi[k]) {
        g[k] = lo[k];
        ++k;
      }
      if (k == d) break;
      ++g[k];
    }
  }
  std::vector<Site> out(found.begin(), found.end());
  std::sort(out.begin(), out.end());
  return out;
}

SiteIndicator::SiteIndicator(std::span<const Site> sites) {
  if (sites.empty()) return;
  dim_ = sites.front().dim;
  lo_ = hi_ = sites.front();
  for (const auto& s : sites)
    for (int k = 0; k < dim_; ++k) {
      lo_[k] = std::min(lo_[k], s[k]);
      hi_[k] = std::max(hi_[k], s[k]);
    }
  std::uint64_t volume = 1;
  for (int k = 0; k < dim_ && volume <= (std::uint64_t{1} << 31); ++k) {
    stride_[static_cast<std::size_t>(k)] = volume;
    volume *= static_cast<std::uint64_t>(hi_[k] - lo_[k] + 1);
  }
  dense_ = volume <= (std::uint64_t{1} << 31);
  if (!dense_) {
    fallback_.insert(sites.begin(), sites.end());
    return;
  }
  bits_.assign((volume + 63) / 64, 0);
  for (const auto& s : sites) {
    std::uint64_t at = 0;
    for (int k = 0; k < dim_; ++k) at += static_cast<std::uint64_t>(s[k] - lo_[k]) * stride_[static_cast<std::size_t>(k)];
    bits_[at >> 6] |= std::uint64_t{1} << (at & 63);
  }
}

bool SiteIndicator::contains(const Site& x) const {
  if (!dense_) return fallback_.contains(x);
  std::uint64_t at = 0;
  for (int k = 0; k < dim_; ++k) {
    if (x[k] < lo_[k] || x[k] > hi_[k]) return false;
    at += static_cast<std::uint64_t>(x[k] - lo_[k]) * stride_[static_cast<std::size_t>(k)];
  }
  return (bits_[at >> 6] >> (at & 63)) & 1;
}

EscapeDecision escape_exceeds(const Site& x, double rho, const SiteIndicator& target, std::uint64_t trials,
                              double threshold, Rng& rng) {
  EscapeDecision out;
  const auto need = static_cast<std::uint64_t>(std::floor(threshold * static_cast<double>(trials))) + 1;
  const auto dirs = static_cast<std::uint64_t>(2 * x.dim);
  // Largest squared displacement still inside B(x, rho).
  auto limit = static_cast<std::int64_t>(std::floor(rho * rho));
  while (limit >= 0 && !within_radius(limit, rho, true)) --limit;
  while (within_radius(limit + 1, rho, true)) ++limit;
  for (std::uint64_t k = 0; k < trials; ++k) {
    if (out.escapes >= need || out.escapes + (trials - k) < need) break;
    ++out.walks;
    Site y = x;
    std::int64_t norm2 = 0;
    bool hit = target.contains(y);
    for (std::uint64_t step = 0; !hit; ++step) {
      if (step >= kStepCap) throw std::runtime_error("escape walk exceeded the step cap");
      const auto dir = uniform_below(rng, dirs);
      auto& c = y.c[dir >> 1];
      const std::int64_t before = c - x.c[dir >> 1];
      c += (dir & 1) ? -1 : 1;
      norm2 += (dir & 1) ? 1 - 2 * before : 1 + 2 * before;
      if (target.contains(y)) hit = true;
      else if (norm2 > limit) break;
    }
    if (!hit) ++out.escapes;
  }
  out.exceeds = out.escapes >= need;
  return out;
}

HittabilityResult hittability_scan(const HittabilityConfig& cfg, const Executor& exec) {
  cfg.validate();
  const int d = cfg.dim;
  const Domain dom = Domain::ball(d, cfg.n, BoundaryConvention::closed);
  const double near = cfg.epsilon * cfg.epsilon * cfg.n;
  const double rho = std::sqrt(cfg.epsilon) * cfg.n;
  const double threshold = std::pow(cfg.epsilon, cfg.eta);
  const std::int64_t h = cfg.spacing();
  struct Outcome {
    bool failing = false;
    std::uint64_t points = 0, walks = 0;
  };
  std::vector<Outcome> outcomes(cfg.outer_samples);
  exec.for_each(cfg.outer_samples, [&](std::size_t i) {
    Rng rng(cfg.seed, i);
    const auto lerw = sample_lerw_until_exit(Site::origin(d), dom, rng);
    const SiteIndicator target(lerw.sites());
    auto& o = outcomes[i];
    for (const auto& x : points_near_path(lerw, near, h, cfg.n)) {
      const auto dec = escape_exceeds(x, rho, target, cfg.inner_samples, threshold, rng);
      ++o.points;
      o.walks += dec.walks;
      if (dec.exceeds) {
        o.failing = true;
        break;
      }
    }
  });
  HittabilityResult out;
  std::uint64_t failing = 0;
  for (const auto& o : outcomes) {
    failing += o.failing;
    out.points_tested += o.points;
    out.inner_walks += o.walks;
  }
  out.failing_fraction = binomial_report(
      failing, cfg.outer_samples,
      fingerprint({{"op_hittability", 1}, {"d", d}, {"n", cfg.n}, {"eps", cfg.epsilon}, {"eta", cfg.eta},
                   {"outer", static_cast<double>(cfg.outer_samples)}, {"inner", static_cast<double>(cfg.inner_samples)},
                   {"spacing", static_cast<double>(h)}, {"seed", static_cast<double>(cfg.seed)}}));
  return out;
}

ExponentFit box_dimension(const std::vector<std::vector<double>>& points, std::span<const double> scales) {
  if (scales.size() < 3) throw std::domain_error("box_dimension: need at least 3 scales");
  if (points.empty()) throw std::domain_error("box_dimension: no points");
  const auto [lo, hi] = std::minmax_element(scales.begin(), scales.end());
  if (!(*lo > 0.0)) throw std::domain_error("box_dimension: scales must be positive");
  if (*hi / *lo < std::pow(10.0, 1.5) * (1.0 - 1e-9)) throw std::domain_error("box_dimension: scales span < 1.5 decades");
  const std::size_t d = points.front().size();
  std::vector<double> inv, counts;
  for (double h : scales) {
    absl::flat_hash_set<std::vector<std::int64_t>> boxes;
    std::vector<std::int64_t> key(d);
    for (const auto& p : points) {
      if (p.size() != d) throw std::domain_error("box_dimension: mixed dimensions");
      for (std::size_t k = 0; k < d; ++k) key[k] = static_cast<std::int64_t>(std::floor(p[k] / h));
      boxes.insert(key);
    }
    inv.push_back(1.0 / h);
    counts.push_back(static_cast<double>(boxes.size()));
  }
  ExponentFit fit = fit_exponent(inv, counts);
  if (fit.points.size() > 2) {
    double mx = 0.0, sxx = 0.0, ssr = 0.0;
    for (const auto& p : fit.points) mx += p.log_x;
    mx /= static_cast<double>(fit.points.size());
    for (const auto& p : fit.points) {
      sxx += (p.log_x - mx) * (p.log_x - mx);
      const double r = p.log_y - (fit.intercept + fit.slope * p.log_x);
      ssr += r * r;
    }
    fit.std_error = std::sqrt(ssr / static_cast<double>(fit.points.size() - 2) / sxx);
  }
  return fit;
}

CutPointStats cut_point_stats(int d, double n, std::uint64_t samples, std::uint64_t seed, BoundaryConvention conv,
                              const Executor& exec) {
  if (!(n >= 2.0)) throw std::domain_error("cut_point_stats: n must be >= 2");
  if (samples == 0) throw std::domain_error("cut_point_stats: samples must be positive");
  const Domain dom = Domain::ball(d, n, conv);
  std::vector<double> counts(samples);
  std::vector<std::uint64_t> violations(samples);
  exec.for_each(samples, [&](std::size_t i) {
    Rng rng(seed, i);
    const auto walk = sample_srw_until_exit(Site::origin(d), dom, rng);
    const auto cuts = cut_points(walk, walk.size());
    const auto erased = loop_erase(walk).site_set();
    counts[i] = static_cast<double>(cuts.size());
    for (const auto& c : cuts) violations[i] += !erased.contains(c);
  });
  CutPointStats out;
  out.mean_count = mean_report(counts, fingerprint({{"op_cut_points", 1}, {"d", d}, {"n", n},
                                                    {"samples", static_cast<double>(samples)},
                                                    {"seed", static_cast<double>(seed)}}));
  for (auto v : violations) out.violations += v;
  return out;
}

}  // namespace loopforge
