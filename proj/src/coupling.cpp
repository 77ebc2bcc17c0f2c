#include "loopforge/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "loopforge/walks.hpp"

namespace loopforge {

namespace {

std::vector<double> poisson_pmf(double mean, std::size_t support) {
  std::vector<double> p(support, 0.0);
  if (mean == 0.0) {
    p[0] = 1.0;
    return p;
  }
  const double lm = std::log(mean);
  for (std::size_t k = 0; k < support; ++k)
    p[k] = std::exp(-mean + static_cast<double>(k) * lm - std::lgamma(static_cast<double>(k) + 1.0));
  return p;
}

std::size_t poisson_support(double a, double b) {
  const double m = std::max(a, b);
  return static_cast<std::size_t>(std::ceil(m + 15.0 * std::sqrt(m) + 40.0));
}

}  // namespace

double poisson_tv_distance(double a, double b) { return PoissonCoupler(a, b).tv_distance(); }

PoissonCoupler::PoissonCoupler(double a, double b) : a_(a), b_(b) {
  if (!(a >= 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw std::domain_error("couple_poisson: means must be finite and non-negative");
  const std::size_t support = poisson_support(a, b);
  const auto pa = poisson_pmf(a, support);
  const auto pb = poisson_pmf(b, support);
  common_.resize(support);
  resid_a_.resize(support);
  resid_b_.resize(support);
  overlap_ = 0.0;
  for (std::size_t k = 0; k < support; ++k) {
    common_[k] = std::min(pa[k], pb[k]);
    resid_a_[k] = a == b ? 0.0 : pa[k] - common_[k];
    resid_b_[k] = a == b ? 0.0 : pb[k] - common_[k];
    overlap_ += common_[k];
  }
  if (a == b) overlap_ = 1.0;
  overlap_ = std::min(overlap_, 1.0);
}

std::uint64_t PoissonCoupler::invert(const std::vector<double>& weights, double total, double u) {
  const double target = u * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] > 0.0) last_positive = k;
    acc += weights[k];
    if (target < acc) return k;
  }
  return last_positive;
}

CoupledCounts PoissonCoupler::sample(Rng& rng) const {
  const double u = uniform01(rng);
  CoupledCounts c;
  if (u < overlap_) {
    c.n_discrete = c.n_brownian = invert(common_, overlap_, u / overlap_);
  } else {
    const double mass = 1.0 - overlap_;
    c.n_discrete = invert(resid_a_, mass, uniform01(rng));
    c.n_brownian = invert(resid_b_, mass, uniform01(rng));
  }
  c.agreed = c.n_discrete == c.n_brownian;
  return c;
}

CoupledCounts couple_poisson(double a, double b, Rng& rng) { return PoissonCoupler(a, b).sample(rng); }

std::int64_t BridgeQuantileCache::quantile(std::int64_t length, std::int64_t left, std::int64_t gap, double u) {
  const auto key = std::make_tuple(length, left, gap);
  auto it = table_.find(key);
  if (it == table_.end()) {
    const std::int64_t right = length - left;
    const std::int64_t lo = std::max(-left, gap - right);
    const std::int64_t hi = std::min(left, gap + right);
    if (lo > hi || (left + lo) % 2 != 0) throw std::domain_error("bridge quantile: inconsistent segment");
    auto log_choose = [](std::int64_t n, std::int64_t k) {
      return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
             std::lgamma(static_cast<double>(n - k) + 1.0);
    };
    Entry e{lo, {}};
    std::vector<double> logw;
    double top = -INFINITY;
    for (std::int64_t x = lo; x <= hi; x += 2) {
      logw.push_back(log_choose(left, (left + x) / 2) + log_choose(right, (right + gap - x) / 2));
      top = std::max(top, logw.back());
    }
    double acc = 0.0;
    for (double lw : logw) {
      acc += std::exp(lw - top);
      e.cdf.push_back(acc);
    }
    for (auto& c : e.cdf) c /= acc;
    e.cdf.back() = 1.0;
    it = table_.emplace(key, std::move(e)).first;
  }
  const auto& e = it->second;
  const auto pos = std::lower_bound(e.cdf.begin(), e.cdf.end(), u) - e.cdf.begin();
  return e.lowest + 2 * static_cast<std::int64_t>(std::min<std::ptrdiff_t>(pos, static_cast<std::ptrdiff_t>(e.cdf.size()) - 1));
}

BridgeCoupling1D couple_bridge_core_1d(std::int64_t m, Rng& rng, BridgeQuantileCache& cache) {
  if (m < 2 || m % 2 != 0) throw std::domain_error("couple_bridge_1d: m must be even and >= 2");
  BridgeCoupling1D out;
  out.discrete.assign(static_cast<std::size_t>(m + 1), 0);
  out.brownian.assign(static_cast<std::size_t>(m + 1), 0.0);
  const double md = static_cast<double>(m);
  std::deque<std::pair<std::int64_t, std::int64_t>> queue{{0, m}};
  while (!queue.empty()) {
    const auto [i, j] = queue.front();
    queue.pop_front();
    if (j - i < 2) continue;
    const std::int64_t k = i + (j - i) / 2;
    const double u = uniform_open01(rng);
    const auto si = out.discrete[static_cast<std::size_t>(i)];
    const auto sj = out.discrete[static_cast<std::size_t>(j)];
    out.discrete[static_cast<std::size_t>(k)] = si + cache.quantile(j - i, k - i, sj - si, u);
    const double ti = i / md, tj = j / md, tk = k / md;
    const double bi = out.brownian[static_cast<std::size_t>(i)];
    const double bj = out.brownian[static_cast<std::size_t>(j)];
    const double mean = bi + (tk - ti) / (tj - ti) * (bj - bi);
    const double sd = std::sqrt((tk - ti) * (tj - tk) / (tj - ti));
    out.brownian[static_cast<std::size_t>(k)] = mean + sd * standard_normal_quantile(u);
    queue.emplace_back(i, k);
    queue.emplace_back(k, j);
  }
  return out;
}

std::size_t bridge_refinement(std::int64_t m, int levels) {
  int log2m = 0;
  while ((std::int64_t{1} << log2m) < m) ++log2m;
  return std::size_t{1} << std::max(0, levels - log2m);
}

std::vector<double> brownian_bridge_at(const std::vector<double>& known_times,
                                       const std::vector<double>& known_values,
                                       const std::vector<double>& query_times, Rng& rng) {
  if (known_times.size() < 2 || known_times.size() != known_values.size())
    throw std::domain_error("brownian_bridge_at: need >= 2 known points");
  std::vector<double> out;
  out.reserve(query_times.size());
  std::size_t a = 0;
  double lt = known_times[0], lv = known_values[0];
  for (double t : query_times) {
    while (a + 2 < known_times.size() && known_times[a + 1] < t) {
      ++a;
      lt = known_times[a];
      lv = known_values[a];
    }
    const double rt = known_times[a + 1], rv = known_values[a + 1];
    double v;
    if (t <= lt) {
      v = lv;
    } else if (t >= rt) {
      v = rv;
    } else {
      const double mean = lv + (t - lt) / (rt - lt) * (rv - lv);
      const double var = (t - lt) * (rt - t) / (rt - lt);
      v = mean + std::sqrt(var) * standard_normal(rng);
    }
    out.push_back(v);
    lt = t;
    lv = v;
  }
  return out;
}

PathGrid lattice_path_grid(const LatticePath& path) {
  const int d = path.dim();
  PathGrid g(d, path.size());
  for (std::size_t i = 0; i < path.size(); ++i)
    for (int k = 0; k < d; ++k) g.at(i, k) = path[i][k];
  return g;
}

double sup_distance(const PathGrid& a, const PathGrid& b) {
  if (a.dim != b.dim || a.dim == 0) throw std::domain_error("sup_distance: dimension mismatch");
  if (a.points() < 2 || b.points() < 2) throw std::domain_error("sup_distance: need at least one segment");
  const std::size_t na = a.points() - 1, nb = b.points() - 1;
  const PathGrid* fine = &a;
  const PathGrid* coarse = &b;
  if (nb % na == 0) std::swap(fine, coarse);
  else if (na % nb != 0) throw std::domain_error("sup_distance: incompatible grids");
  const std::size_t nf = fine->points() - 1;
  const std::size_t ratio = nf / (coarse->points() - 1);
  double best = 0.0;
  for (std::size_t k = 0; k <= nf; ++k) {
    const std::size_t c = k / ratio;
    const double frac = static_cast<double>(k % ratio) / static_cast<double>(ratio);
    double s = 0.0;
    for (int i = 0; i < a.dim; ++i) {
      const double lo = coarse->at(c, i);
      const double hi = frac > 0.0 ? coarse->at(c + 1, i) : lo;
      const double diff = fine->at(k, i) - (lo + frac * (hi - lo));
      s += diff * diff;
    }
    best = std::max(best, s);
  }
  return std::sqrt(best);
}

namespace {

PathGrid scaled_grid(const LatticePath& path, double scale) {
  PathGrid g = lattice_path_grid(path);
  for (auto& v : g.values) v *= scale;
  return g;
}

}  // namespace

CoupledBridgePair couple_bridge_1d(std::int64_t m, int levels, Rng& rng, BridgeQuantileCache& cache) {
  if (levels < 1) throw std::domain_error("couple_bridge_1d: levels must be >= 1");
  const auto core = couple_bridge_core_1d(m, rng, cache);
  const std::size_t s = bridge_refinement(m, levels);
  const auto mm = static_cast<std::size_t>(m);
  PathGrid cont(1, mm * s + 1);
  for (std::size_t j = 0; j <= mm; ++j) cont.at(j * s, 0) = core.brownian[j];
  const double dt = 1.0 / (static_cast<double>(m) * static_cast<double>(s));
  for (std::size_t j = 0; j < mm && s > 1; ++j) {
    const std::size_t right = (j + 1) * s;
    for (std::size_t q = j * s + 1; q < right; ++q) {
      const double rem = static_cast<double>(right - q + 1);
      const double prev = cont.at(q - 1, 0);
      const double mean = prev + (cont.at(right, 0) - prev) / rem;
      cont.at(q, 0) = mean + std::sqrt(dt * (rem - 1.0) / rem) * standard_normal(rng);
    }
  }
  std::vector<Site> sites;
  sites.reserve(mm + 1);
  for (auto x : core.discrete) sites.push_back(Site{static_cast<std::int32_t>(x)});
  CoupledBridgePair pair{LatticePath(std::move(sites)), std::move(cont), 0.0, s};
  pair.sup_distance = sup_distance(scaled_grid(pair.discrete, 1.0 / std::sqrt(static_cast<double>(m))), pair.continuous);
  return pair;
}

CoupledBridgePair couple_bridge_1d(std::int64_t m, int levels, Rng& rng) {
  BridgeQuantileCache cache;
  return couple_bridge_1d(m, levels, rng, cache);
}

CoupledBridgePair couple_bridge(int d, std::int64_t m, int levels, Rng& rng, BridgeQuantileCache& cache) {
  if (m < 2 || m % 2 != 0) throw std::domain_error("couple_bridge: m must be even and >= 2");
  if (levels < 1) throw std::domain_error("couple_bridge: levels must be >= 1");
  const auto alloc = sample_coordinate_allocation(d, m, rng);
  const std::size_t s = bridge_refinement(m, levels);
  const std::size_t fine = static_cast<std::size_t>(m) * s;
  std::vector<double> query(fine + 1);
  for (std::size_t k = 0; k <= fine; ++k) query[k] = static_cast<double>(k) / static_cast<double>(fine);
  PathGrid cont(d, fine + 1);
  std::vector<std::vector<std::int8_t>> steps(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    const std::int64_t mi = alloc.counts[static_cast<std::size_t>(i)];
    std::vector<double> kt{0.0, 1.0}, kv{0.0, 0.0};
    if (mi >= 2) {
      const auto core = couple_bridge_core_1d(mi, rng, cache);
      kt.resize(static_cast<std::size_t>(mi + 1));
      for (std::int64_t j = 0; j <= mi; ++j) kt[static_cast<std::size_t>(j)] = static_cast<double>(j) / static_cast<double>(mi);
      kv = core.brownian;
      auto& st = steps[static_cast<std::size_t>(i)];
      for (std::size_t j = 1; j < core.discrete.size(); ++j)
        st.push_back(static_cast<std::int8_t>(core.discrete[j] - core.discrete[j - 1]));
    }
    const auto values = brownian_bridge_at(kt, kv, query, rng);
    for (std::size_t k = 0; k <= fine; ++k) cont.at(k, i) = values[k];
  }
  CoupledBridgePair pair{LatticePath(compose_bridge(Site::origin(d), alloc, steps)), std::move(cont), 0.0, s};
  const double scale = 1.0 / std::sqrt(static_cast<double>(m) / d);
  pair.sup_distance = sup_distance(scaled_grid(pair.discrete, scale), pair.continuous);
  return pair;
}

CoupledBridgePair couple_bridge(int d, std::int64_t m, int levels, Rng& rng) {
  BridgeQuantileCache cache;
  return couple_bridge(d, m, levels, rng, cache);
}

void CoupledSoupConfig::validate() const {
  if (dim < 1 || dim > kMaxDim) throw std::domain_error("couple_soups: dimension out of range");
  const double lo = 2.0 * dim / (dim + 4.0);
  if (!(theta > lo && theta < 2.0)) throw std::domain_error("couple_soups: theta outside (2d/(d+4), 2)");
  if (!(scale >= 1.0)) throw std::domain_error("couple_soups: N must be >= 1");
  if (!(lambda >= 0.0)) throw std::domain_error("couple_soups: negative lambda");
  if (!(box_radius > 0.0)) throw std::domain_error("couple_soups: box radius must be positive");
  if (levels < 1) throw std::domain_error("couple_soups: levels must be >= 1");
  if (max_half_length < 0) throw std::domain_error("couple_soups: negative cutoff");
}

std::int64_t CoupledSoupConfig::cutoff() const {
  if (max_half_length > 0) return max_half_length;
  return std::max<std::int64_t>(64, static_cast<std::int64_t>(std::ceil(2.0 * std::pow(scale, theta))));
}

std::int64_t CoupledSoupConfig::root_half_width() const {
  return static_cast<std::int64_t>(std::floor(box_radius * scale));
}

namespace {

struct BlockResult {
  std::vector<DiscreteLoop> discrete;
  std::vector<ContinuousLoop> brownian;
  std::vector<MatchedPair> pairs;  // ids local to the block
  std::vector<std::size_t> unmatched_discrete, unmatched_brownian;
  std::uint64_t small_unmatched = 0;
};

ContinuousLoop dress_loop(const Site& z, std::int64_t n, const PathGrid& standard, Rng& rng) {
  const int d = z.dim;
  ContinuousLoop loop;
  loop.generation = n;
  loop.duration = sample_duration(d, n, rng);
  loop.root.resize(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) loop.root[static_cast<std::size_t>(i)] = z[i] + uniform01(rng) - 0.5;
  loop.displacements = standard;
  const double sqrt_t = std::sqrt(loop.duration);
  for (auto& v : loop.displacements.values) v *= sqrt_t;
  return loop;
}

}  // namespace

CoupledSoups couple_soups(const CoupledSoupConfig& cfg, Rng& rng, const Executor& exec) {
  cfg.validate();
  const int d = cfg.dim;
  const std::int64_t n_max = cfg.cutoff();
  const double large = std::pow(cfg.scale, cfg.theta);
  CoupledSoups out;
  auto& report = out.report;
  report.envelope = std::pow(cfg.scale, 0.75) * std::max(1.0, std::log(cfg.scale));
  const auto roots = box_roots(d, cfg.root_half_width());
  out.discrete.lambda = cfg.lambda;
  out.discrete.max_half_length = n_max;
  out.discrete.root_count = static_cast<std::int64_t>(roots.size());
  if (cfg.lambda == 0.0) return out;

  const auto consts = BlConstants::compute(d, n_max);
  std::vector<PoissonCoupler> couplers;
  couplers.reserve(static_cast<std::size_t>(n_max));
  for (std::int64_t n = 1; n <= n_max; ++n)
    couplers.emplace_back(cfg.lambda * consts.q_discrete[static_cast<std::size_t>(n)],
                          cfg.lambda * consts.q[static_cast<std::size_t>(n)]);
  for (std::int64_t n = 1; n <= n_max; ++n) out.discrete.mass_per_root += consts.q_discrete[static_cast<std::size_t>(n)];
  out.discrete.omitted_mass_bound = static_cast<double>(roots.size()) * tail_mass_bound(d, n_max);

  constexpr std::size_t kBlock = 64;
  const std::size_t blocks = (roots.size() + kBlock - 1) / kBlock;
  std::vector<BlockResult> results(blocks);
  exec.for_each(blocks, [&](std::size_t b) {
    Rng brng = rng.split(b);
    BridgeQuantileCache cache;
    auto& res = results[b];
    const std::size_t end = std::min(roots.size(), (b + 1) * kBlock);
    for (std::size_t r = b * kBlock; r < end; ++r) {
      const Site& z = roots[r];
      for (std::int64_t n = 1; n <= n_max; ++n) {
        const auto counts = couplers[static_cast<std::size_t>(n - 1)].sample(brng);
        const bool is_large = 2.0 * static_cast<double>(n) >= large;
        const std::uint64_t matched = std::min(counts.n_discrete, counts.n_brownian);
        for (std::uint64_t k = 0; k < matched; ++k) {
          const double label = cfg.lambda * (1.0 - uniform01(brng));
          auto pair = couple_bridge(d, 2 * n, cfg.levels, brng, cache);
          ContinuousLoop loop = dress_loop(z, n, pair.continuous, brng);
          std::vector<Site> sites;
          sites.reserve(pair.discrete.size());
          for (const auto& s : pair.discrete.sites()) sites.push_back(z + s);
          LatticePath dpath(std::move(sites));
          if (is_large) {
            PathGrid bgrid = loop.displacements;
            for (std::size_t p = 0; p < bgrid.points(); ++p)
              for (int i = 0; i < d; ++i) bgrid.at(p, i) += loop.root[static_cast<std::size_t>(i)];
            MatchedPair mp{res.discrete.size(), res.brownian.size(), z, n,
                           sup_distance(lattice_path_grid(dpath), bgrid),
                           loop.duration - 2.0 * static_cast<double>(n) / d};
            res.pairs.push_back(mp);
          }
          res.discrete.emplace_back(std::move(dpath), label);
          res.brownian.push_back(std::move(loop));
        }
        for (std::uint64_t k = matched; k < counts.n_discrete; ++k) {
          const double label = cfg.lambda * (1.0 - uniform01(brng));
          auto bridge = sample_bridge(d, 2 * n, brng);
          std::vector<Site> sites;
          for (const auto& s : bridge.sites()) sites.push_back(z + s);
          if (is_large) res.unmatched_discrete.push_back(res.discrete.size());
          else ++res.small_unmatched;
          res.discrete.emplace_back(LatticePath(std::move(sites)), label);
        }
        for (std::uint64_t k = matched; k < counts.n_brownian; ++k) {
          const double t = sample_duration(d, n, brng);
          ContinuousLoop loop;
          loop.generation = n;
          loop.duration = t;
          loop.root.resize(static_cast<std::size_t>(d));
          for (int i = 0; i < d; ++i) loop.root[static_cast<std::size_t>(i)] = z[i] + uniform01(brng) - 0.5;
          loop.displacements = sample_brownian_bridge(d, t, cfg.levels, brng);
          if (is_large) res.unmatched_brownian.push_back(res.brownian.size());
          else ++res.small_unmatched;
          res.brownian.push_back(std::move(loop));
        }
      }
    }
  });

  for (auto& res : results) {
    const std::size_t doff = out.discrete.loops.size();
    const std::size_t boff = out.brownian.size();
    for (auto mp : res.pairs) {
      mp.discrete_id += doff;
      mp.brownian_id += boff;
      report.pairs.push_back(mp);
    }
    for (auto id : res.unmatched_discrete) report.unmatched_discrete.push_back(id + doff);
    for (auto id : res.unmatched_brownian) report.unmatched_brownian.push_back(id + boff);
    report.small_unmatched += res.small_unmatched;
    for (auto& l : res.discrete) {
      out.discrete.loops.push_back(std::move(l));
      out.discrete.contained.push_back(1);
    }
    for (auto& l : res.brownian) out.brownian.push_back(std::move(l));
  }

  if (!report.pairs.empty()) {
    std::vector<double> ratios;
    for (const auto& p : report.pairs) ratios.push_back(p.sup_distance / report.envelope);
    std::nth_element(ratios.begin(), ratios.begin() + static_cast<std::ptrdiff_t>(ratios.size() / 2), ratios.end());
    report.fitted_constant = ratios[ratios.size() / 2];
    report.grid_points_min = SIZE_MAX;
    for (auto& p : report.pairs) {
      p.flagged = p.sup_distance > 10.0 * report.fitted_constant * report.envelope;
      report.grid_points_min = std::min(report.grid_points_min, out.brownian[p.brownian_id].displacements.points());
    }
  }
  report.success = report.unmatched_discrete.empty() && report.unmatched_brownian.empty() &&
                   std::none_of(report.pairs.begin(), report.pairs.end(), [](const MatchedPair& p) { return p.flagged; });
  return out;
}

}  // namespace loopforge
