#include "loopforge/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace loopforge {

RwSoupSampler decomposition_soup_sampler(int d, double n, BoundaryConvention conv) {
  RwSoupConfig cfg;
  cfg.dim = d;
  cfg.domain_radius = n;
  cfg.lambda = 1.0;
  cfg.convention = conv;
  cfg.keep_uncontained = false;
  return RwSoupSampler(cfg);
}

DecomposedTrace sample_decomposed_trace(const RwSoupSampler& soup, Rng& rng) {
  const auto& cfg = soup.config();
  const Domain dom = cfg.domain();
  DecomposedTrace out{sample_lerw_until_exit(Site::origin(cfg.dim), dom, rng), {}, {}};
  for (const auto& s : out.lerw.sites())
    if (dom.contains(s)) out.trace.insert(s);
  const SiteSet lerw_sites = out.trace;
  auto loops = soup.sample(rng).loops;
  for (auto& loop : loops) {
    const auto sites = loop.path().sites();
    if (std::none_of(sites.begin(), sites.end(), [&](const Site& s) { return lerw_sites.contains(s); }))
      continue;
    out.trace.insert(sites.begin(), sites.end());
    out.kept_loops.push_back(std::move(loop));
  }
  return out;
}

DecomposedTrace sample_decomposed_trace(int d, double n, BoundaryConvention conv, Rng& rng) {
  if (!(n >= 2.0)) throw std::domain_error("sample_decomposed_trace: n must be >= 2");
  return sample_decomposed_trace(decomposition_soup_sampler(d, n, conv), rng);
}

SiteSet srw_trace(const Domain& domain, Rng& rng) {
  SiteSet out;
  const auto walk = sample_srw_until_exit(domain.center, domain, rng);
  for (const auto& s : walk.sites())
    if (domain.contains(s)) out.insert(s);
  return out;
}

DecompositionCheck verify_decomposition(int d, double n, std::uint64_t samples, std::uint64_t seed,
                                        BoundaryConvention conv, const Executor& exec) {
  if (samples == 0) throw std::domain_error("verify_decomposition: samples must be positive");
  const Domain dom = Domain::ball(d, n, conv);
  const auto interior = dom.interior();
  if (interior.size() > kMaxOracleSites) throw std::domain_error("verify_decomposition: oracle too large");
  const auto exact = visit_probabilities_exact(d, n, conv);
  absl::flat_hash_map<Site, std::size_t> index;
  for (std::size_t i = 0; i < interior.size(); ++i) index.emplace(interior[i], i);

  const auto soup = decomposition_soup_sampler(d, n, conv);
  constexpr std::uint64_t kChunk = 4096;
  const std::uint64_t chunks = (samples + kChunk - 1) / kChunk;
  std::vector<std::vector<std::uint64_t>> counts(chunks);
  exec.for_each(chunks, [&](std::size_t c) {
    Rng rng(seed, c);
    auto& local = counts[c];
    local.assign(interior.size(), 0);
    const std::uint64_t end = std::min<std::uint64_t>(samples, (c + 1) * kChunk);
    for (std::uint64_t s = c * kChunk; s < end; ++s) {
      const auto t = sample_decomposed_trace(soup, rng);
      for (const auto& x : t.trace) ++local[index.at(x)];
    }
  });

  DecompositionCheck out;
  out.samples = samples;
  out.convention = conv;
  std::size_t above3 = 0, within4 = 0;
  for (std::size_t i = 0; i < interior.size(); ++i) {
    std::uint64_t hits = 0;
    for (const auto& local : counts) hits += local[i];
    SiteCheck sc;
    sc.site = interior[i];
    sc.estimate = static_cast<double>(hits) / static_cast<double>(samples);
    sc.exact = exact.at(interior[i]);
    sc.std_error = std::sqrt(std::max(0.0, sc.exact * (1.0 - sc.exact)) / static_cast<double>(samples));
    const double diff = sc.estimate - sc.exact;
    if (sc.std_error > 0.0) sc.z = diff / sc.std_error;
    else if (std::abs(diff) > 1e-12) sc.z = std::copysign(std::numeric_limits<double>::infinity(), diff);
    out.max_abs_z = std::max(out.max_abs_z, std::abs(sc.z));
    above3 += std::abs(sc.z) > 3.0;
    within4 += std::abs(sc.z) <= 4.0;
    out.sites.push_back(sc);
  }
  out.fraction_above_3 = static_cast<double>(above3) / static_cast<double>(interior.size());
  out.fraction_within_4 = static_cast<double>(within4) / static_cast<double>(interior.size());
  return out;
}

}  // namespace loopforge
