#include "loopforge/soup.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace loopforge {

double loop_mass(int d, std::int64_t n) {
  if (n < 1) throw std::domain_error("loop_mass: n must be >= 1");
  return return_probability(d, n) / (2.0 * static_cast<double>(n));
}

namespace {

double lclt_constant(int d) {
  return 2.0 * std::pow(d / (4.0 * std::numbers::pi), d / 2.0);
}

}  // namespace

double tail_mass_bound(int d, std::int64_t n_max, std::span<const double> return_probs) {
  if (n_max < 1) throw std::domain_error("tail_mass_bound: n_max must be >= 1");
  if (return_probs.size() < static_cast<std::size_t>(n_max + 1))
    throw std::domain_error("tail_mass_bound: return probability table too short");
  double c = lclt_constant(d);
  for (std::int64_t n = 1; n <= n_max; ++n)
    c = std::max(c, return_probs[static_cast<std::size_t>(n)] * std::pow(static_cast<double>(n), d / 2.0));
  // sum_{n > N} C n^{-d/2} / (2n) <= (C/2) int_N^inf x^{-d/2-1} dx = (C/d) N^{-d/2}
  return (c / d) * std::pow(static_cast<double>(n_max), -d / 2.0);
}

double tail_mass_bound(int d, std::int64_t n_max) {
  const auto probs = return_probabilities(d, n_max);
  return tail_mass_bound(d, n_max, probs);
}

std::int64_t default_max_half_length(int d, std::int64_t roots, double budget) {
  if (roots < 1 || !(budget > 0.0)) throw std::domain_error("default_max_half_length: bad arguments");
  const double target = budget / static_cast<double>(roots);
  const double n = std::pow(lclt_constant(d) / (d * target), 2.0 / d);
  return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::ceil(n)), 1, kMaxReturnSteps);
}

void RwSoupConfig::validate() const {
  if (dim < 1 || dim > kMaxDim) throw std::domain_error("RwSoupConfig: dimension out of range");
  if (!(domain_radius >= 1.0)) throw std::domain_error("RwSoupConfig: radius must be >= 1");
  if (!(lambda > 0.0)) throw std::domain_error("RwSoupConfig: lambda must be positive");
  if (max_half_length < 0) throw std::domain_error("RwSoupConfig: negative cutoff");
}

std::vector<Site> box_roots(int dim, std::int64_t half_width) {
  std::vector<Site> out;
  Site x(dim);
  const auto w = static_cast<std::int32_t>(half_width);
  for (int i = 0; i < dim; ++i) x[i] = -w;
  for (;;) {
    out.push_back(x);
    int i = 0;
    while (i < dim && x[i] == w) x[i++] = -w;
    if (i == dim) break;
    ++x[i];
  }
  return out;
}

RwSoupSampler::RwSoupSampler(RwSoupConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.keep_uncontained)
    roots_ = box_roots(cfg_.dim, static_cast<std::int64_t>(std::ceil(cfg_.domain_radius)));
  else
    roots_ = cfg_.domain().interior();
  n_max_ = cfg_.max_half_length > 0
               ? cfg_.max_half_length
               : default_max_half_length(cfg_.dim, static_cast<std::int64_t>(roots_.size()));
  const auto probs = return_probabilities(cfg_.dim, n_max_);
  mass_.assign(static_cast<std::size_t>(n_max_ + 1), 0.0);
  cumulative_.assign(static_cast<std::size_t>(n_max_ + 1), 0.0);
  for (std::int64_t n = 1; n <= n_max_; ++n) {
    const auto i = static_cast<std::size_t>(n);
    mass_[i] = probs[i] / (2.0 * static_cast<double>(n));
    cumulative_[i] = cumulative_[i - 1] + mass_[i];
  }
  total_mass_ = cumulative_.back();
  omitted_ = static_cast<double>(roots_.size()) * tail_mass_bound(cfg_.dim, n_max_, probs);
}

std::int64_t RwSoupSampler::draw_half_length(Rng& rng) const {
  const double u = uniform01(rng) * total_mass_;
  auto it = std::upper_bound(cumulative_.begin() + 1, cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return static_cast<std::int64_t>(it - cumulative_.begin());
}

SoupSample RwSoupSampler::sample_block(std::size_t first, std::size_t last, Rng& rng) const {
  if (first > last || last > roots_.size()) throw std::domain_error("sample_block: bad root range");
  SoupSample out;
  out.lambda = cfg_.lambda;
  out.max_half_length = n_max_;
  out.root_count = static_cast<std::int64_t>(last - first);
  out.mass_per_root = total_mass_;
  out.omitted_mass_bound = omitted_ * static_cast<double>(last - first) / static_cast<double>(roots_.size());
  if (first == last) return out;
  // Superposition of the independent per-(z, n) Poisson counts: one Poisson
  // total, then root and length by their intensity shares.
  const double mean = cfg_.lambda * static_cast<double>(last - first) * total_mass_;
  const std::uint64_t count = poisson(rng, mean);
  const Domain dom = cfg_.domain();
  const int d = cfg_.dim;
  std::vector<std::vector<std::int8_t>> steps(static_cast<std::size_t>(d));
  for (std::uint64_t k = 0; k < count; ++k) {
    const Site& root = roots_[first + uniform_below(rng, last - first)];
    const std::int64_t n = draw_half_length(rng);
    const double label = cfg_.lambda * (1.0 - uniform01(rng));
    const auto alloc = sample_coordinate_allocation(d, 2 * n, rng);
    for (int i = 0; i < d; ++i)
      steps[static_cast<std::size_t>(i)] = sample_bridge_steps_1d(alloc.counts[static_cast<std::size_t>(i)], rng);
    auto sites = compose_bridge(root, alloc, steps);
    bool inside = true;
    for (const auto& s : sites)
      if (!dom.contains(s)) {
        inside = false;
        break;
      }
    if (!inside && !cfg_.keep_uncontained) continue;
    out.loops.emplace_back(LatticePath(std::move(sites)), label);
    out.contained.push_back(inside ? 1 : 0);
  }
  return out;
}

SoupSample RwSoupSampler::sample(Rng& rng) const { return sample_block(0, roots_.size(), rng); }

SoupSample sample_rw_soup(const RwSoupConfig& cfg, Rng& rng) { return RwSoupSampler(cfg).sample(rng); }

// ---------------------------------------------------------------------------

double duration_offset(int d) { return (3.0 * d + 4.0) / (2.0 * d * (d + 2.0)); }

double brownian_mass_between(int d, double t0, double t1) {
  if (!(t0 > 0.0) || !(t1 >= t0)) throw std::domain_error("brownian_mass_between: bad interval");
  const double k = d / 2.0;
  // (2 pi)^{-k} / k * (t0^{-k} - t1^{-k}), without cancellation
  const double diff = -std::pow(t0, -k) * std::expm1(-k * std::log(t1 / t0));
  return std::pow(2.0 * std::numbers::pi, -k) / k * diff;
}

double brownian_count_intensity(int d, std::int64_t n) {
  if (n < 1) throw std::domain_error("brownian_count_intensity: n must be >= 1");
  const double r = duration_offset(d);
  return brownian_mass_between(d, 2.0 * static_cast<double>(n - 1) / d + r, 2.0 * static_cast<double>(n) / d + r);
}

BlConstants BlConstants::compute(int d, std::int64_t n_max) {
  BlConstants c{d, duration_offset(d), {}, {}};
  const auto probs = return_probabilities(d, n_max);
  c.q.assign(static_cast<std::size_t>(n_max + 1), 0.0);
  c.q_discrete.assign(static_cast<std::size_t>(n_max + 1), 0.0);
  for (std::int64_t n = 1; n <= n_max; ++n) {
    c.q[static_cast<std::size_t>(n)] = brownian_count_intensity(d, n);
    c.q_discrete[static_cast<std::size_t>(n)] = probs[static_cast<std::size_t>(n)] / (2.0 * static_cast<double>(n));
  }
  return c;
}

double power_law_quantile(int d, double a, double b, double u) {
  const double k = d / 2.0;
  const double fa = std::pow(a, -k);
  const double fb = std::pow(b, -k);
  const double t = std::pow(fa - u * (fa - fb), -1.0 / k);
  return std::clamp(t, a, b);
}

double duration_quantile(int d, std::int64_t n, double u) {
  if (n < 1) throw std::domain_error("duration: n must be >= 1");
  const double r = duration_offset(d);
  return power_law_quantile(d, 2.0 * static_cast<double>(n - 1) / d + r, 2.0 * static_cast<double>(n) / d + r, u);
}

double sample_duration(int d, std::int64_t n, Rng& rng) { return duration_quantile(d, n, uniform01(rng)); }

PathGrid sample_brownian_bridge(int d, double duration, int levels, Rng& rng) {
  if (levels < 1 || levels > 24) throw std::domain_error("brownian bridge: levels out of range");
  if (!(duration > 0.0)) throw std::domain_error("brownian bridge: duration must be positive");
  const std::size_t segments = std::size_t{1} << levels;
  PathGrid grid(d, segments + 1);
  for (int level = 1; level <= levels; ++level) {
    const std::size_t half = segments >> level;  // distance to the segment ends
    const double sd = std::sqrt(duration * static_cast<double>(2 * half) / static_cast<double>(segments) / 4.0);
    for (std::size_t mid = half; mid < segments; mid += 2 * half)
      for (int k = 0; k < d; ++k)
        grid.at(mid, k) = 0.5 * (grid.at(mid - half, k) + grid.at(mid + half, k)) + sd * standard_normal(rng);
  }
  return grid;
}

void BrownianSoupConfig::validate() const {
  if (dim < 1 || dim > kMaxDim) throw std::domain_error("BrownianSoupConfig: dimension out of range");
  if (!(box_radius >= 0.0)) throw std::domain_error("BrownianSoupConfig: negative box radius");
  if (!(lambda >= 0.0)) throw std::domain_error("BrownianSoupConfig: negative lambda");
  if (max_generation < 1) throw std::domain_error("BrownianSoupConfig: max_generation must be >= 1");
  if (include_small_loops && small_loop_bins < 1) throw std::domain_error("BrownianSoupConfig: no small-loop bins");
}

std::vector<ContinuousLoop> sample_brownian_soup(const BrownianSoupConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<ContinuousLoop> out;
  if (cfg.lambda == 0.0) return out;
  const int d = cfg.dim;
  const double r = duration_offset(d);
  // Categories: generations 1..max_generation, then small-loop bins.
  std::vector<double> cumulative{0.0};
  for (std::int64_t n = 1; n <= cfg.max_generation; ++n)
    cumulative.push_back(cumulative.back() + brownian_count_intensity(d, n));
  const int bins = cfg.include_small_loops ? cfg.small_loop_bins : 0;
  for (int j = 0; j < bins; ++j)
    cumulative.push_back(cumulative.back() + brownian_mass_between(d, r * std::ldexp(1.0, -j - 1), r * std::ldexp(1.0, -j)));
  const double per_root = cumulative.back();
  const auto roots = box_roots(d, static_cast<std::int64_t>(std::floor(cfg.box_radius)));
  const std::uint64_t count = poisson(rng, cfg.lambda * static_cast<double>(roots.size()) * per_root);
  out.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    const Site& z = roots[uniform_below(rng, roots.size())];
    const double u = uniform01(rng) * per_root;
    auto it = std::upper_bound(cumulative.begin() + 1, cumulative.end(), u);
    if (it == cumulative.end()) --it;
    const auto category = static_cast<std::int64_t>(it - cumulative.begin());
    ContinuousLoop loop;
    loop.root.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) loop.root[static_cast<std::size_t>(i)] = z[i] + uniform01(rng) - 0.5;
    if (category <= cfg.max_generation) {
      loop.generation = category;
      loop.duration = sample_duration(d, category, rng);
    } else {
      const auto j = static_cast<int>(category - cfg.max_generation - 1);
      loop.generation = 0;
      loop.duration = power_law_quantile(d, r * std::ldexp(1.0, -j - 1), r * std::ldexp(1.0, -j), uniform01(rng));
    }
    loop.displacements = sample_brownian_bridge(d, loop.duration, cfg.levels, rng);
    out.push_back(std::move(loop));
  }
  return out;
}

}  // namespace loopforge
